"""Merge the two per-side summaries of one passage.

Opposite-side cameras see wagons in the same temporal order, so equal counts
align by index; a small count drift is repaired by global sequence alignment
over code similarity. The merge exploits redundancy: a wagon unreadable on
one side is taken from the other, and only wagons failing on both sides stay
unresolved.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, replace
from difflib import SequenceMatcher
from enum import Enum

from .mosaic import TrainSummary, build_summary, compute_stats
from .recognize import Status, WagonRecord

GAP_PENALTY = 0.4
MAX_COUNT_DRIFT = 0.05


class CountMismatchTooLarge(ValueError):
    """Per-side wagon counts differ too much; counting failed upstream."""


class Provenance(str, Enum):
    LEFT_ONLY = "left_only"
    RIGHT_ONLY = "right_only"
    AGREE = "agree"
    CONFLICT_RESOLVED = "conflict_resolved"
    BOTH_REJECTED = "both_rejected"


Pair = tuple[int | None, int | None]  # 1-based positions, None = gap


def _pair_score(a: WagonRecord, b: WagonRecord) -> float:
    if not (a.accepted() and b.accepted()):
        return 0.0
    return SequenceMatcher(None, a.code.text(), b.code.text()).ratio()


def sequence_align(
    left: list[WagonRecord], right: list[WagonRecord], gap_penalty: float = GAP_PENALTY
) -> list[Pair]:
    """Needleman-Wunsch over code similarity; returns a monotone pairing."""
    n, m = len(left), len(right)
    score = [[0.0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        score[i][0] = -gap_penalty * i
    for j in range(1, m + 1):
        score[0][j] = -gap_penalty * j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            score[i][j] = max(
                score[i - 1][j - 1] + _pair_score(left[i - 1], right[j - 1]),
                score[i - 1][j] - gap_penalty,
                score[i][j - 1] - gap_penalty,
            )
    pairs: list[Pair] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and score[i][j] == score[i - 1][j - 1] + _pair_score(
            left[i - 1], right[j - 1]
        ):
            pairs.append((i, j))
            i -= 1
            j -= 1
        elif i > 0 and score[i][j] == score[i - 1][j] - gap_penalty:
            pairs.append((i, None))
            i -= 1
        else:
            pairs.append((None, j))
            j -= 1
    pairs.reverse()
    return pairs


def align(left: TrainSummary, right: TrainSummary) -> list[Pair]:
    """Pair up the two sides' positions; identity when counts agree."""
    n, m = len(left.wagons), len(right.wagons)
    if abs(n - m) > MAX_COUNT_DRIFT * max(n, m):
        raise CountMismatchTooLarge(
            f"counts {n} vs {m} differ by more than {MAX_COUNT_DRIFT:.0%}"
        )
    if n == m:
        return [(i, i) for i in range(1, n + 1)]
    return sequence_align(left.wagons, right.wagons)


def _mean_conf(record: WagonRecord) -> float:
    if not record.char_confidences:
        return 0.0
    return statistics.fmean(record.char_confidences)


def _pick(a: WagonRecord, b: WagonRecord) -> WagonRecord:
    """Deterministic, order-symmetric choice between two records."""
    ca, cb = _mean_conf(a), _mean_conf(b)
    if ca != cb:
        return a if ca > cb else b
    ta = a.code.text() if a.code else ""
    tb = b.code.text() if b.code else ""
    if ta != tb:
        return a if ta < tb else b
    return a if a.camera <= b.camera else b


@dataclass
class FusedWagon:
    position: int
    left: WagonRecord | None
    right: WagonRecord | None
    merged: WagonRecord
    provenance: Provenance

    def to_dict(self) -> dict:
        return {
            "position": self.position,
            "provenance": self.provenance.value,
            "left": self.left.to_dict() if self.left else None,
            "right": self.right.to_dict() if self.right else None,
            "merged": self.merged.to_dict(),
        }


@dataclass
class FusedTrain:
    train_id: str
    left_train_id: str
    right_train_id: str
    started_ms: int
    ended_ms: int
    wagons: list[FusedWagon]

    def unresolved(self) -> list[int]:
        return [w.position for w in self.wagons if w.provenance is Provenance.BOTH_REJECTED]

    def conflicts(self) -> list[int]:
        return [w.position for w in self.wagons if w.provenance is Provenance.CONFLICT_RESOLVED]

    def to_dict(self) -> dict:
        return {
            "train_id": self.train_id,
            "left_train_id": self.left_train_id,
            "right_train_id": self.right_train_id,
            "started_ms": self.started_ms,
            "ended_ms": self.ended_ms,
            "wagons": [w.to_dict() for w in self.wagons],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FusedTrain":
        return cls(
            train_id=obj["train_id"],
            left_train_id=obj["left_train_id"],
            right_train_id=obj["right_train_id"],
            started_ms=obj["started_ms"],
            ended_ms=obj["ended_ms"],
            wagons=[
                FusedWagon(
                    position=w["position"],
                    left=WagonRecord.from_dict(w["left"]) if w["left"] else None,
                    right=WagonRecord.from_dict(w["right"]) if w["right"] else None,
                    merged=WagonRecord.from_dict(w["merged"]),
                    provenance=Provenance(w["provenance"]),
                )
                for w in obj["wagons"]
            ],
        )

    def to_summary(self) -> TrainSummary:
        wagons = [w.merged for w in self.wagons]
        summary = build_summary(
            wagons,
            camera="fused",
            started_ms=self.started_ms,
            ended_ms=self.ended_ms,
            train_id=self.train_id,
        )
        summary.stats = compute_stats(wagons)
        return summary


def _merge_pair(
    position: int, a: WagonRecord | None, b: WagonRecord | None
) -> FusedWagon:
    if b is None:
        assert a is not None
        return FusedWagon(position, a, None, replace(a, position=position), Provenance.LEFT_ONLY)
    if a is None:
        return FusedWagon(position, None, b, replace(b, position=position), Provenance.RIGHT_ONLY)
    la, lb = a.accepted(), b.accepted()
    if la and not lb:
        return FusedWagon(position, a, b, replace(a, position=position), Provenance.LEFT_ONLY)
    if lb and not la:
        return FusedWagon(position, a, b, replace(b, position=position), Provenance.RIGHT_ONLY)
    if la and lb:
        if a.code.text() == b.code.text():
            winner = _pick(a, b)
            return FusedWagon(position, a, b, replace(winner, position=position), Provenance.AGREE)
        winner = _pick(a, b)
        merged = replace(winner, position=position, conflict=True)
        return FusedWagon(position, a, b, merged, Provenance.CONFLICT_RESOLVED)
    # neither side readable: prefer the side that at least produced a reading
    ranked = sorted(
        (a, b), key=lambda r: (r.status is Status.NOT_LOCATED, -_mean_conf(r), r.camera)
    )
    merged = replace(ranked[0], position=position)
    return FusedWagon(position, a, b, merged, Provenance.BOTH_REJECTED)


def merge(
    left: TrainSummary, right: TrainSummary, pairs: list[Pair] | None = None
) -> FusedTrain:
    """Fuse two aligned side summaries into one train."""
    if pairs is None:
        pairs = align(left, right)
    wagons = []
    for position, (li, ri) in enumerate(pairs, start=1):
        a = left.wagons[li - 1] if li is not None else None
        b = right.wagons[ri - 1] if ri is not None else None
        wagons.append(_merge_pair(position, a, b))
    return FusedTrain(
        train_id=f"{left.train_id}+fused",
        left_train_id=left.train_id,
        right_train_id=right.train_id,
        started_ms=min(left.started_ms, right.started_ms),
        ended_ms=max(left.ended_ms, right.ended_ms),
        wagons=wagons,
    )
