"""Detection record schema and sources.

The neural detector lives outside this artifact; it speaks JSON Lines (one
frame per line) or the same schema over an HTTP ``POST /infer`` endpoint.
Streams are replayable, append-friendly and diffable; the schema carries a
``"v": 1`` version field.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import requests

SCHEMA_VERSION = 1

REGION_CLS = "code_region"
_CHAR_CLASSES = set("0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ")
VALID_CLASSES = _CHAR_CLASSES | {REGION_CLS}


class SchemaError(ValueError):
    """A record violates the wire schema; carries line number and field."""

    def __init__(self, message: str, line_no: int | None = None, field_name: str | None = None):
        self.line_no = line_no
        self.field_name = field_name
        where = f" (line {line_no}, field {field_name!r})" if line_no is not None else ""
        super().__init__(f"{message}{where}")


class NonMonotonicFrame(ValueError):
    """Frame indices must strictly increase within one stream."""


class Timeout(ConnectionError):
    pass


class BadResponse(ValueError):
    """The endpoint answered with a schema-violating body."""


class Unavailable(ConnectionError):
    """The endpoint kept failing after the retry budget was exhausted."""


@dataclass(frozen=True)
class Detection:
    """One detected box: a code region or a single character class."""

    cls: str
    x: float
    y: float
    w: float
    h: float
    conf: float

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


@dataclass
class FrameDetections:
    frame: int
    ts_ms: int
    camera: str
    width: int
    height: int
    detections: list[Detection] = field(default_factory=list)
    crop_ref: str | None = None

    def regions(self) -> list[Detection]:
        return [d for d in self.detections if d.cls == REGION_CLS]

    def characters(self) -> list[Detection]:
        return [d for d in self.detections if d.cls != REGION_CLS]


def _require(obj: dict, key: str, types, line_no: int | None) -> object:
    if key not in obj:
        raise SchemaError("missing field", line_no, key)
    value = obj[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise SchemaError(f"bad type {type(value).__name__}", line_no, key)
    return value


def detection_from_dict(obj: dict, line_no: int | None = None) -> Detection:
    if not isinstance(obj, dict):
        raise SchemaError("detection must be an object", line_no, "detections")
    cls = _require(obj, "cls", str, line_no)
    if cls not in VALID_CLASSES:
        raise SchemaError(f"unknown class {cls!r}", line_no, "cls")
    x = float(_require(obj, "x", (int, float), line_no))
    y = float(_require(obj, "y", (int, float), line_no))
    w = float(_require(obj, "w", (int, float), line_no))
    h = float(_require(obj, "h", (int, float), line_no))
    conf = float(_require(obj, "conf", (int, float), line_no))
    if w <= 0 or h <= 0:
        raise SchemaError("box must have positive size", line_no, "w" if w <= 0 else "h")
    if not 0.0 <= conf <= 1.0:
        raise SchemaError(f"confidence {conf} outside [0,1]", line_no, "conf")
    return Detection(cls=cls, x=x, y=y, w=w, h=h, conf=conf)


def frame_from_dict(obj: dict, line_no: int | None = None) -> FrameDetections:
    if not isinstance(obj, dict):
        raise SchemaError("record must be an object", line_no, None)
    version = _require(obj, "v", int, line_no)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema version {version}", line_no, "v")
    frame = _require(obj, "frame", int, line_no)
    ts_ms = _require(obj, "ts_ms", int, line_no)
    camera = _require(obj, "camera", str, line_no)
    width = _require(obj, "width", int, line_no)
    height = _require(obj, "height", int, line_no)
    crop_ref = obj.get("crop_ref")
    if crop_ref is not None and not isinstance(crop_ref, str):
        raise SchemaError("crop_ref must be a string", line_no, "crop_ref")
    raw = _require(obj, "detections", list, line_no)
    dets = [detection_from_dict(d, line_no) for d in raw]
    return FrameDetections(
        frame=frame,
        ts_ms=ts_ms,
        camera=camera,
        width=width,
        height=height,
        detections=dets,
        crop_ref=crop_ref,
    )


def detection_to_dict(det: Detection) -> dict:
    return {"cls": det.cls, "x": det.x, "y": det.y, "w": det.w, "h": det.h, "conf": det.conf}


def frame_to_dict(frame: FrameDetections) -> dict:
    obj: dict = {
        "v": SCHEMA_VERSION,
        "frame": frame.frame,
        "ts_ms": frame.ts_ms,
        "camera": frame.camera,
        "width": frame.width,
        "height": frame.height,
    }
    if frame.crop_ref is not None:
        obj["crop_ref"] = frame.crop_ref
    obj["detections"] = [detection_to_dict(d) for d in frame.detections]
    return obj


def dumps_frame(frame: FrameDetections) -> str:
    return json.dumps(frame_to_dict(frame), separators=(",", ":"))


def read_stream(source: str | Path) -> Iterator[FrameDetections]:
    """Yield validated frames from a JSONL file, in file order.

    Streaming: the file is read line by line, never loaded whole. Raises
    :class:`SchemaError` with the offending line number and field, and
    :class:`NonMonotonicFrame` when frame indices go backwards.
    """
    last_frame: int | None = None
    with open(source, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line_no, None) from exc
            record = frame_from_dict(obj, line_no)
            if last_frame is not None and record.frame <= last_frame:
                raise NonMonotonicFrame(
                    f"frame {record.frame} after {last_frame} at line {line_no}"
                )
            last_frame = record.frame
            yield record


def write_stream(dest: str | Path, frames: Iterable[FrameDetections]) -> int:
    """Write frames as JSON Lines; returns the record count."""
    count = 0
    with open(dest, "w", encoding="utf-8") as fh:
        for frame in frames:
            fh.write(dumps_frame(frame))
            fh.write("\n")
            count += 1
    return count


def poll_endpoint(
    url: str,
    frame_ref: str,
    timeout_s: float = 5.0,
    retries: int = 3,
    backoff_s: float = 0.2,
    max_backoff_s: float = 2.0,
) -> FrameDetections:
    """Ask the detector endpoint for the detections of one frame reference.

    POSTs ``{"crop_ref": frame_ref}`` and expects a frame record back.
    Transient failures (connection errors, 5xx) are retried with bounded
    exponential backoff; after ``retries`` failures :class:`Unavailable` is
    raised. A well-formed HTTP response with a schema-violating body raises
    :class:`BadResponse` immediately (retrying would not help).
    """
    delay = backoff_s
    last_error: Exception | None = None
    for attempt in range(retries):
        if attempt:
            time.sleep(min(delay, max_backoff_s))
            delay *= 2
        try:
            response = requests.post(url, json={"crop_ref": frame_ref}, timeout=timeout_s)
        except requests.Timeout as exc:
            raise Timeout(f"detector endpoint timed out after {timeout_s}s") from exc
        except requests.ConnectionError as exc:
            last_error = exc
            continue
        if response.status_code >= 500:
            last_error = ConnectionError(f"HTTP {response.status_code}")
            continue
        if response.status_code != 200:
            raise BadResponse(f"unexpected HTTP {response.status_code}")
        try:
            obj = response.json()
        except ValueError as exc:
            raise BadResponse("response body is not JSON") from exc
        try:
            return frame_from_dict(obj)
        except SchemaError as exc:
            raise BadResponse(f"response violates frame schema: {exc}") from exc
    raise Unavailable(f"detector endpoint failed {retries} times: {last_error}")
