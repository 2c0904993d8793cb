"""Durable train-record store: append-only JSONL event log per train.

Each train's history (ingested summary + operator corrections) lives in one
log file; the served "current view" is always reproducible by replaying that
log. Writes are fsynced before acknowledgment, so an acknowledged train
survives a process kill. The index file is a rebuildable cache over the
directory, never the source of truth.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from .codes import InvalidPattern, parse, validate
from .mosaic import TrainSummary, compute_stats
from .recognize import Status, WagonRecord

MARK_DAMAGED = "mark_damaged"


class StoreError(Exception):
    pass


class DuplicateTrainId(StoreError):
    """Same train_id ingested again with different content."""


class NotFound(StoreError):
    pass


class InvalidCode(StoreError):
    """Correction code fails the grammar or check digit."""


class StorageFailure(StoreError):
    pass


@dataclass(frozen=True)
class CorrectionRecord:
    train_id: str
    position: int
    old_code: str | None
    new_code: str
    operator: str
    reason: str
    at_ms: int

    def to_dict(self) -> dict:
        return {
            "train_id": self.train_id,
            "position": self.position,
            "old_code": self.old_code,
            "new_code": self.new_code,
            "operator": self.operator,
            "reason": self.reason,
            "at_ms": self.at_ms,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CorrectionRecord":
        return cls(
            train_id=obj["train_id"],
            position=obj["position"],
            old_code=obj.get("old_code"),
            new_code=obj["new_code"],
            operator=obj["operator"],
            reason=obj["reason"],
            at_ms=obj["at_ms"],
        )


def _safe_filename(train_id: str) -> str:
    safe = re.sub(r"[^A-Za-z0-9._-]", "_", train_id)
    if safe != train_id:
        safe += "-" + hashlib.sha1(train_id.encode()).hexdigest()[:8]
    return safe + ".jsonl"


class TrainStore:
    """Single-writer store; reads see a consistent snapshot."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.trains_dir = self.root / "trains"
        self.trains_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._files: dict[str, Path] = {}
        self._scan()

    def _scan(self) -> None:
        for path in sorted(self.trains_dir.glob("*.jsonl")):
            events = self._read_log(path)
            for event in events:
                if event["type"] == "summary":
                    self._files[event["summary"]["train_id"]] = path
                    break
        self._write_index()

    def _write_index(self) -> None:
        index = {
            "v": 1,
            "trains": [
                {"train_id": tid, "file": path.name}
                for tid, path in sorted(self._files.items())
            ],
        }
        (self.root / "index.json").write_text(
            json.dumps(index, indent=2) + "\n", encoding="utf-8"
        )

    @staticmethod
    def _read_log(path: Path) -> list[dict]:
        events: list[dict] = []
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise StorageFailure(f"cannot read {path}: {exc}") from exc
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError as exc:
                # a torn final line means the process died mid-write of an
                # unacknowledged event; anything earlier is corruption
                if i == len(lines) - 1:
                    break
                raise StorageFailure(f"corrupt log {path} at line {i + 1}") from exc
        return events

    def _append(self, path: Path, event: dict) -> None:
        line = json.dumps(event, separators=(",", ":")) + "\n"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())

    # -- ingest ------------------------------------------------------------

    def ingest(self, summary: TrainSummary, at_ms: int | None = None) -> str:
        """Persist a summary durably; idempotent for identical content."""
        with self._lock:
            train_id = summary.train_id
            incoming = summary.to_dict()
            if train_id in self._files:
                stored = self._latest_summary_dict(train_id)
                if stored == incoming:
                    return train_id
                raise DuplicateTrainId(f"{train_id} already stored with different content")
            path = self.trains_dir / _safe_filename(train_id)
            event = {
                "type": "summary",
                "at_ms": at_ms if at_ms is not None else int(time.time() * 1000),
                "summary": incoming,
            }
            self._append(path, event)
            self._files[train_id] = path
            self._write_index()
            return train_id

    def _events(self, train_id: str) -> list[dict]:
        path = self._files.get(train_id)
        if path is None:
            raise NotFound(f"unknown train {train_id}")
        return self._read_log(path)

    def _latest_summary_dict(self, train_id: str) -> dict:
        latest: dict | None = None
        for event in self._events(train_id):
            if event["type"] == "summary":
                latest = event["summary"]
        if latest is None:
            raise StorageFailure(f"log for {train_id} holds no summary")
        return latest

    # -- views -------------------------------------------------------------

    def corrections(self, train_id: str) -> list[CorrectionRecord]:
        with self._lock:
            return [
                CorrectionRecord.from_dict(e["correction"])
                for e in self._events(train_id)
                if e["type"] == "correction"
            ]

    def current_view(self, train_id: str) -> dict:
        """Latest summary with all corrections replayed, plus the audit trail."""
        with self._lock:
            events = self._events(train_id)
        summary_dict: dict | None = None
        corrections: list[dict] = []
        for event in events:
            if event["type"] == "summary":
                summary_dict = event["summary"]
                corrections = []
            else:
                corrections.append(event["correction"])
        if summary_dict is None:
            raise StorageFailure(f"log for {train_id} holds no summary")
        summary = TrainSummary.from_dict(summary_dict)
        for correction in corrections:
            _apply_correction(summary, correction)
        summary.stats = compute_stats(summary.wagons)
        view = summary.to_dict()
        view["corrections"] = corrections
        return view

    def list_trains(self) -> list[dict]:
        with self._lock:
            ids = sorted(self._files)
        items = []
        for train_id in ids:
            view = self.current_view(train_id)
            items.append(
                {
                    "train_id": train_id,
                    "started_ms": view["started_ms"],
                    "wagon_count": view["wagon_count"],
                    "rejection_rate": view["stats"]["rejection_rate"],
                    "unresolved_conflicts": sum(
                        1 for w in view["wagons"] if w.get("conflict")
                    ),
                }
            )
        return items

    # -- corrections ---------------------------------------------------------

    def correct(
        self,
        train_id: str,
        position: int,
        new_code: str,
        operator: str,
        reason: str,
        at_ms: int | None = None,
    ) -> dict:
        """Append an operator correction; returns the updated wagon record."""
        with self._lock:
            view = self.current_view(train_id)  # raises NotFound
            wagons = {w["position"]: w for w in view["wagons"]}
            if position not in wagons:
                raise NotFound(f"train {train_id} has no wagon at position {position}")
            if reason != MARK_DAMAGED:
                try:
                    rid = parse(new_code)
                except InvalidPattern as exc:
                    raise InvalidCode(str(exc)) from exc
                if not validate(rid).valid:
                    raise InvalidCode(f"{new_code!r} fails check-digit validation")
            correction = CorrectionRecord(
                train_id=train_id,
                position=position,
                old_code=wagons[position]["code"],
                new_code=new_code,
                operator=operator,
                reason=reason,
                at_ms=at_ms if at_ms is not None else int(time.time() * 1000),
            )
            self._append(self._files[train_id], {"type": "correction", "correction": correction.to_dict()})
            updated = self.current_view(train_id)
            return next(w for w in updated["wagons"] if w["position"] == position)


def _apply_correction(summary: TrainSummary, correction: dict) -> None:
    for i, wagon in enumerate(summary.wagons):
        if wagon.position != correction["position"]:
            continue
        if correction["reason"] == MARK_DAMAGED:
            summary.wagons[i] = WagonRecord(
                **{**_as_kwargs(wagon), "maintenance_flag": True}
            )
        else:
            summary.wagons[i] = WagonRecord(
                **{
                    **_as_kwargs(wagon),
                    "code": parse(correction["new_code"]),
                    "status": Status.ACCEPTED,
                    "reject_reason": None,
                    "corrected_by": correction["operator"],
                    "conflict": False,
                }
            )
        return


def _as_kwargs(wagon: WagonRecord) -> dict:
    return {
        "position": wagon.position,
        "status": wagon.status,
        "code": wagon.code,
        "reject_reason": wagon.reject_reason,
        "char_confidences": wagon.char_confidences,
        "crop_ref": wagon.crop_ref,
        "camera": wagon.camera,
        "conflict": wagon.conflict,
        "corrected_by": wagon.corrected_by,
        "maintenance_flag": wagon.maintenance_flag,
    }
