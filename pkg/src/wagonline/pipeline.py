"""End-to-end glue: detection stream in, TrainSummary out."""

from __future__ import annotations

from typing import Iterable

from .codes import DEFAULT_SCHEME, CheckDigitScheme
from .config import AppConfig
from .detections import FrameDetections
from .mosaic import TrainSummary, build_summary
from .recognize import (
    NoReading,
    RejectReason,
    Status,
    WagonRecord,
    aggregate_track,
    decide,
)
from .tracking import CountingState, PlaceholderWagon, Track


def new_state(config: AppConfig | None = None, count_line: float | None = None) -> CountingState:
    config = config or AppConfig()
    return CountingState(
        count_line_x=count_line,
        iou_threshold=config.iou_threshold,
        confirm_frames=config.confirm_frames,
        close_after=config.close_after,
        gap_factor=config.gap_factor,
        min_region_conf=config.min_region_conf,
    )


def recognize_wagon(
    position: int,
    item: Track | PlaceholderWagon,
    camera: str,
    scheme: CheckDigitScheme = DEFAULT_SCHEME,
    tau_conf: float = 0.5,
    max_low: int = 1,
) -> WagonRecord:
    if isinstance(item, PlaceholderWagon):
        return WagonRecord(position=position, status=Status.NOT_LOCATED, camera=camera)
    _, _, crop_ref = item.representative()
    try:
        reading = aggregate_track(item)
    except NoReading:
        return WagonRecord(
            position=position,
            status=Status.REJECTED,
            reject_reason=RejectReason.NO_READING,
            crop_ref=crop_ref,
            camera=camera,
        )
    decision = decide(reading, scheme, tau_conf=tau_conf, max_low=max_low)
    return WagonRecord(
        position=position,
        status=decision.status,
        code=decision.code,
        reject_reason=decision.reject_reason,
        char_confidences=decision.char_confidences,
        crop_ref=crop_ref,
        camera=camera,
    )


def run_stream(
    frames: Iterable[FrameDetections],
    config: AppConfig | None = None,
    count_line: float | None = None,
    scheme: CheckDigitScheme = DEFAULT_SCHEME,
) -> TrainSummary:
    """Track, count and recognize one passage; returns the finished summary."""
    config = config or AppConfig()
    state = new_state(config, count_line)
    camera = ""
    started_ms = 0
    ended_ms = 0
    first = True
    for frame in frames:
        if first:
            camera = frame.camera
            started_ms = frame.ts_ms
            first = False
        ended_ms = frame.ts_ms
        state.update(frame)
    wagons = [
        recognize_wagon(
            position, item, camera,
            scheme=scheme, tau_conf=config.tau_conf, max_low=config.max_low,
        )
        for position, item in state.finalize()
    ]
    return build_summary(wagons, camera=camera, started_ms=started_ms, ended_ms=ended_ms)
