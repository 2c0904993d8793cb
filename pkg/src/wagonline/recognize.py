"""Aggregate a track's per-frame character detections into one reading and
accept or reject it.

Frames vote per character slot, weighted by detection confidence; the
resulting reading runs through pattern correction, grammar classification,
parsing and check-digit validation. Rejection is a value, not an error: a
wagon is always reported, possibly as rejected or not-located.
"""

from __future__ import annotations

import statistics
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .codes import (
    DEFAULT_SCHEME,
    CharReading,
    CheckDigitScheme,
    InvalidPattern,
    RawReading,
    RollingStockId,
    classify_length,
    parse,
    pattern_correct,
    validate,
)
from .detections import Detection
from .tracking import Box, Track

# A track reads as degraded when frames disagree on how many characters are
# visible, or when the raw detector confidences are consistently weak.
DEGRADED_MODAL_SHARE = 0.6
DEGRADED_MEAN_CONF = 0.7


class NoReading(ValueError):
    """No frame of the track contained any character detection."""


class Status(str, Enum):
    ACCEPTED = "accepted"
    ACCEPTED_DAMAGED = "accepted_damaged"
    REJECTED = "rejected"
    NOT_LOCATED = "not_located"


class RejectReason(str, Enum):
    LOW_CONFIDENCE = "low_confidence"
    CHECK_DIGIT_MISMATCH = "check_digit_mismatch"
    PATTERN_VIOLATION = "pattern_violation"
    NO_READING = "no_reading"


@dataclass
class WagonRecord:
    """Final per-wagon outcome."""

    position: int
    status: Status
    code: RollingStockId | None = None
    reject_reason: RejectReason | None = None
    char_confidences: tuple[float, ...] = ()
    crop_ref: str | None = None
    camera: str = ""
    conflict: bool = False
    corrected_by: str | None = None
    maintenance_flag: bool = False

    def accepted(self) -> bool:
        return self.status in (Status.ACCEPTED, Status.ACCEPTED_DAMAGED)

    def to_dict(self) -> dict:
        return {
            "position": self.position,
            "status": self.status.value,
            "code": self.code.text() if self.code else None,
            "reject_reason": self.reject_reason.value if self.reject_reason else None,
            "char_confidences": list(self.char_confidences),
            "crop_ref": self.crop_ref,
            "camera": self.camera,
            "conflict": self.conflict,
            "corrected_by": self.corrected_by,
            "maintenance_flag": self.maintenance_flag,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "WagonRecord":
        return cls(
            position=obj["position"],
            status=Status(obj["status"]),
            code=parse(obj["code"]) if obj.get("code") else None,
            reject_reason=RejectReason(obj["reject_reason"]) if obj.get("reject_reason") else None,
            char_confidences=tuple(obj.get("char_confidences", ())),
            crop_ref=obj.get("crop_ref"),
            camera=obj.get("camera", ""),
            conflict=obj.get("conflict", False),
            corrected_by=obj.get("corrected_by"),
            maintenance_flag=obj.get("maintenance_flag", False),
        )


def order_characters(chars: tuple[Detection, ...]) -> list[Detection]:
    """Reading order: rows top-first (two-line layouts), left-to-right inside."""
    if not chars:
        return []
    med_h = statistics.median(c.h for c in chars)
    by_y = sorted(chars, key=lambda c: c.center()[1])
    rows: list[list[Detection]] = [[by_y[0]]]
    for c in by_y[1:]:
        if c.center()[1] - rows[-1][-1].center()[1] > 0.6 * med_h:
            rows.append([c])
        else:
            rows[-1].append(c)
    ordered: list[Detection] = []
    for row in rows:
        ordered.extend(sorted(row, key=lambda c: c.center()[0]))
    return ordered


def aggregate_track(track: Track) -> RawReading:
    """Fuse all frames of a track into one reading.

    The slot count is the mode of the per-frame character counts; frames with
    that count vote per slot, weighted by confidence. The winning glyph's
    weight share becomes the slot confidence; runners-up are kept as ranked
    alternatives for pattern correction.
    """
    sequences = [
        order_characters(chars) for _, _, chars in track.char_frames if chars
    ]
    if not sequences:
        raise NoReading(f"track {track.id} never contained characters")
    counts = Counter(len(seq) for seq in sequences)
    slot_count = sorted(counts.items(), key=lambda kv: (-kv[1], -kv[0]))[0][0]
    voting = [seq for seq in sequences if len(seq) == slot_count]
    modal_share = len(voting) / len(sequences)

    chars: list[CharReading] = []
    raw_confs: list[float] = []
    for slot in range(slot_count):
        weights: dict[str, float] = {}
        for seq in voting:
            det = seq[slot]
            weights[det.cls] = weights.get(det.cls, 0.0) + det.conf
            raw_confs.append(det.conf)
        ranked = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))
        glyph, best = ranked[0]
        total = sum(weights.values())
        chars.append(
            CharReading(
                glyph=glyph,
                confidence=best / total if total > 0 else 0.0,
                alternatives=tuple(g for g, _ in ranked[1:]),
            )
        )
    degraded = (
        modal_share < DEGRADED_MODAL_SHARE
        or (statistics.fmean(raw_confs) if raw_confs else 0.0) < DEGRADED_MEAN_CONF
    )
    return RawReading(chars=tuple(chars), source_track=track.id, degraded=degraded)


@dataclass(frozen=True)
class Decision:
    """The grammar verdict on a reading, before position/camera are attached."""

    status: Status
    code: RollingStockId | None
    reject_reason: RejectReason | None
    char_confidences: tuple[float, ...]


def decide(
    reading: RawReading,
    scheme: CheckDigitScheme = DEFAULT_SCHEME,
    tau_conf: float = 0.5,
    max_low: int = 1,
) -> Decision:
    """Accept or reject an aggregated reading.

    Pipeline: pattern correction, length classification, parse, check-digit
    validation. More than ``max_low`` slots below ``tau_conf`` reject as low
    confidence; a degraded track that still validates is accepted as damaged.
    """
    corrected = pattern_correct(reading)
    confs = corrected.confidences()
    if not classify_length(len(corrected.chars)) or any(
        not c.admissible for c in corrected.chars
    ):
        return Decision(Status.REJECTED, None, RejectReason.PATTERN_VIOLATION, confs)
    if sum(1 for c in confs if c < tau_conf) > max_low:
        return Decision(Status.REJECTED, None, RejectReason.LOW_CONFIDENCE, confs)
    try:
        code = parse(corrected.text())
    except InvalidPattern:
        return Decision(Status.REJECTED, None, RejectReason.PATTERN_VIOLATION, confs)
    if not validate(code, scheme).valid:
        return Decision(Status.REJECTED, None, RejectReason.CHECK_DIGIT_MISMATCH, confs)
    status = Status.ACCEPTED_DAMAGED if reading.degraded else Status.ACCEPTED
    return Decision(status, code, None, confs)
