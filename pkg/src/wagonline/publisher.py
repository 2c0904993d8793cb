"""At-least-once cloud publishing with a durable local spool.

A payload is written to the spool before the first delivery attempt and only
removed after a 2xx response, so nothing acknowledged is ever dropped: an
unreachable endpoint leaves the payload queued for a later flush. Endpoint
misconfiguration fails at construction time, not at publish time.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from urllib.parse import urlparse

import requests

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """The endpoint URL is malformed."""


@dataclass(frozen=True)
class DeliveryReceipt:
    payload_id: str
    delivered: bool
    attempts: int
    endpoint: str
    last_error: str | None = None

    def to_dict(self) -> dict:
        return {
            "payload_id": self.payload_id,
            "delivered": self.delivered,
            "attempts": self.attempts,
            "endpoint": self.endpoint,
            "last_error": self.last_error,
        }


class Publisher:
    def __init__(
        self,
        endpoint: str,
        spool_dir: str | Path,
        timeout_s: float = 5.0,
        attempts_per_flush: int = 3,
        backoff_s: float = 0.2,
    ):
        parsed = urlparse(endpoint)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ConfigError(f"not a usable webhook URL: {endpoint!r}")
        self.endpoint = endpoint
        self.spool = Path(spool_dir)
        self.spool.mkdir(parents=True, exist_ok=True)
        self.timeout_s = timeout_s
        self.attempts_per_flush = attempts_per_flush
        self.backoff_s = backoff_s
        self._seq = 0
        self._lock = threading.Lock()

    def enqueue(self, payload: dict) -> str:
        """Durably spool a payload; returns its id."""
        with self._lock:
            self._seq += 1
            payload_id = f"{int(time.time() * 1000):013d}-{self._seq:04d}"
        path = self.spool / f"{payload_id}.json"
        blob = json.dumps({"id": payload_id, "attempts": 0, "payload": payload})
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
        return payload_id

    def pending(self) -> list[str]:
        return sorted(p.stem for p in self.spool.glob("*.json"))

    def _attempt(self, path: Path) -> DeliveryReceipt:
        entry = json.loads(path.read_text(encoding="utf-8"))
        attempts = entry["attempts"]
        last_error: str | None = None
        delay = self.backoff_s
        for _ in range(self.attempts_per_flush):
            attempts += 1
            try:
                response = requests.post(
                    self.endpoint, json=entry["payload"], timeout=self.timeout_s
                )
                if 200 <= response.status_code < 300:
                    path.unlink(missing_ok=True)
                    return DeliveryReceipt(entry["id"], True, attempts, self.endpoint)
                last_error = f"HTTP {response.status_code}"
            except requests.RequestException as exc:
                last_error = type(exc).__name__
            time.sleep(delay)
            delay *= 2
        entry["attempts"] = attempts
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(entry))
            fh.flush()
            os.fsync(fh.fileno())
        logger.warning("delivery of %s failed (%s), kept in spool", entry["id"], last_error)
        return DeliveryReceipt(entry["id"], False, attempts, self.endpoint, last_error)

    def flush(self) -> list[DeliveryReceipt]:
        """Try to deliver everything in the spool, oldest first."""
        receipts = []
        for payload_id in self.pending():
            receipts.append(self._attempt(self.spool / f"{payload_id}.json"))
        return receipts

    def publish(self, payload: dict) -> DeliveryReceipt:
        """Spool a payload and attempt immediate delivery."""
        payload_id = self.enqueue(payload)
        return self._attempt(self.spool / f"{payload_id}.json")


class RetryLoop:
    """Background flusher, independent of request handling."""

    def __init__(self, publisher: Publisher, interval_s: float = 30.0):
        self.publisher = publisher
        self.interval_s = interval_s
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()

    def _run(self) -> None:
        while not self._stop.wait(self.interval_s):
            try:
                self.publisher.flush()
            except Exception:  # keep the loop alive no matter what
                logger.exception("publisher flush failed")
