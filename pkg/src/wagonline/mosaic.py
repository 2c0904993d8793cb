"""Per-train summary artifact: machine-readable manifest plus a static page.

The mosaic is a manifest (one cell per wagon, with a status color) rather
than a stitched bitmap: it is reviewable by the operator console and
diffable in tests. Crop images are opaque file references.
"""

from __future__ import annotations

import html
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .recognize import Status, WagonRecord

logger = logging.getLogger(__name__)

BORDER_BY_STATUS = {
    Status.ACCEPTED: "green",
    Status.ACCEPTED_DAMAGED: "blue",
    Status.REJECTED: "red",
    Status.NOT_LOCATED: "gray",
}


@dataclass(frozen=True)
class SummaryStats:
    accepted: int
    accepted_damaged: int
    rejected: int
    not_located: int
    rejection_rate: float

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "accepted_damaged": self.accepted_damaged,
            "rejected": self.rejected,
            "not_located": self.not_located,
            "rejection_rate": self.rejection_rate,
        }


@dataclass
class TrainSummary:
    train_id: str
    camera: str
    started_ms: int
    ended_ms: int
    wagon_count: int
    wagons: list[WagonRecord] = field(default_factory=list)
    stats: SummaryStats = field(default=None)  # type: ignore[assignment]

    def to_dict(self) -> dict:
        return {
            "train_id": self.train_id,
            "camera": self.camera,
            "started_ms": self.started_ms,
            "ended_ms": self.ended_ms,
            "wagon_count": self.wagon_count,
            "wagons": [w.to_dict() for w in self.wagons],
            "stats": self.stats.to_dict(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainSummary":
        wagons = [WagonRecord.from_dict(w) for w in obj["wagons"]]
        return cls(
            train_id=obj["train_id"],
            camera=obj["camera"],
            started_ms=obj["started_ms"],
            ended_ms=obj["ended_ms"],
            wagon_count=obj["wagon_count"],
            wagons=wagons,
            stats=compute_stats(wagons),
        )


def compute_stats(wagons: list[WagonRecord]) -> SummaryStats:
    accepted = sum(1 for w in wagons if w.status is Status.ACCEPTED)
    damaged = sum(1 for w in wagons if w.status is Status.ACCEPTED_DAMAGED)
    rejected = sum(1 for w in wagons if w.status is Status.REJECTED)
    not_located = sum(1 for w in wagons if w.status is Status.NOT_LOCATED)
    total = len(wagons)
    rate = (rejected + not_located) / total if total else 0.0
    return SummaryStats(accepted, damaged, rejected, not_located, rate)


def build_summary(
    wagons: list[WagonRecord],
    camera: str,
    started_ms: int,
    ended_ms: int,
    train_id: str | None = None,
) -> TrainSummary:
    """Assemble the canonical per-train record, ordered by position."""
    ordered = sorted(wagons, key=lambda w: w.position)
    return TrainSummary(
        train_id=train_id or f"{camera}-{started_ms}",
        camera=camera,
        started_ms=started_ms,
        ended_ms=ended_ms,
        wagon_count=len(ordered),
        wagons=ordered,
        stats=compute_stats(ordered),
    )


def manifest_dict(summary: TrainSummary) -> dict:
    cells = []
    for w in summary.wagons:
        cells.append(
            {
                "pos": w.position,
                "crop_ref": w.crop_ref or "",
                "code": w.code.text() if w.code else None,
                "status": w.status.value,
                "border": BORDER_BY_STATUS[w.status],
            }
        )
    return {"train_id": summary.train_id, "cells": cells}


_PAGE_STYLE = """
body { font-family: sans-serif; background: #222; color: #eee; margin: 1em; }
.grid { display: grid; grid-template-columns: repeat(auto-fill, minmax(180px, 1fr)); gap: 8px; }
.cell { border: 4px solid; border-radius: 4px; padding: 4px; background: #333; }
.cell img { width: 100%; display: block; min-height: 48px; background: #111; }
.cell .slot { width: 100%; min-height: 48px; background: #111; display: flex;
              align-items: center; justify-content: center; color: #777; }
.cell .code { font-family: monospace; font-size: 14px; padding-top: 4px; }
.cell .pos { color: #999; font-size: 12px; }
.border-green { border-color: #2f9e44; }
.border-blue { border-color: #1971c2; }
.border-red { border-color: #e03131; }
.border-gray { border-color: #868e96; }
"""


def render_manifest(
    summary: TrainSummary, out_dir: str | Path, crop_dir: str | Path | None = None
) -> tuple[Path, Path]:
    """Write ``mosaic.json`` and ``mosaic.html`` under ``out_dir``.

    Rendering is deterministic: the same summary produces byte-identical
    files. Unresolvable crops are warned about and rendered as placeholders.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    obj = manifest_dict(summary)

    if crop_dir is not None:
        base = Path(crop_dir)
        for cell in obj["cells"]:
            ref = cell["crop_ref"]
            if ref and not (base / ref).exists():
                logger.warning("missing crop %s for train %s pos %d",
                               ref, summary.train_id, cell["pos"])

    manifest_path = out / "mosaic.json"
    manifest_path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")

    cells_html = []
    for cell in obj["cells"]:
        border = f"border-{cell['border']}"
        code = html.escape(cell["code"] or ("—" if cell["status"] != "not_located" else "?"))
        if cell["crop_ref"]:
            image = f'<img src="{html.escape(cell["crop_ref"], quote=True)}" alt="wagon {cell["pos"]}">'
        else:
            image = '<div class="slot">probable frame</div>'
        cells_html.append(
            f'<div class="cell {border}">{image}'
            f'<div class="code">{code}</div>'
            f'<div class="pos">#{cell["pos"]} · {cell["status"]}</div></div>'
        )
    page = (
        "<!doctype html>\n<html><head><meta charset=\"utf-8\">"
        f"<title>{html.escape(summary.train_id)}</title>"
        f"<style>{_PAGE_STYLE}</style></head>\n<body>"
        f"<h1>{html.escape(summary.train_id)}</h1>\n"
        f"<div class=\"grid\">\n" + "\n".join(cells_html) + "\n</div>\n</body></html>\n"
    )
    html_path = out / "mosaic.html"
    html_path.write_text(page, encoding="utf-8")
    return manifest_path, html_path
