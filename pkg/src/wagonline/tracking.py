"""Frame-to-frame association of code regions and exactly-once wagon counting.

Association is greedy IoU against each open track's last box; a track must be
seen in a few consecutive frames before it is trusted, and emits a single
count when its center crosses the counting line in the direction of travel.
Wagons whose code region was never located are recovered afterwards from
inter-count gap statistics.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

from .detections import Detection, FrameDetections

Box = tuple[float, float, float, float]  # x, y, w, h


class OutOfOrderFrame(ValueError):
    pass


class TrackState(Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    CLOSED = "closed"


class Direction(Enum):
    LEFT_TO_RIGHT = "ltr"
    RIGHT_TO_LEFT = "rtl"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class TrackStarted:
    track_id: int
    frame: int


@dataclass(frozen=True)
class WagonCounted:
    track_id: int
    frame: int


@dataclass(frozen=True)
class TrackClosed:
    track_id: int
    frame: int


Event = Union[TrackStarted, WagonCounted, TrackClosed]


def iou(a: Box, b: Box) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    left = max(ax, bx)
    top = max(ay, by)
    right = min(ax + aw, bx + bw)
    bottom = min(ay + ah, by + bh)
    if right <= left or bottom <= top:
        return 0.0
    inter = (right - left) * (bottom - top)
    return inter / (aw * ah + bw * bh - inter)


@dataclass
class Track:
    id: int
    state: TrackState = TrackState.TENTATIVE
    boxes: list[tuple[int, Box, str | None]] = field(default_factory=list)
    char_frames: list[tuple[int, Box, tuple[Detection, ...]]] = field(default_factory=list)
    velocity: float = 0.0
    counted: bool = False
    counted_frame: int | None = None
    streak: int = 0
    misses: int = 0
    first_cx: float | None = None

    def last_box(self) -> Box:
        return self.boxes[-1][1]

    def center_x(self) -> float:
        x, _, w, _ = self.last_box()
        return x + w / 2.0

    def representative(self) -> tuple[int, Box, str | None]:
        """Observation with the largest region box (closest, most legible)."""
        return max(self.boxes, key=lambda item: item[1][2] * item[1][3])


@dataclass(frozen=True)
class PlaceholderWagon:
    """A counted-but-never-located wagon with its probable frame and box."""

    est_frame: int
    bbox: Box


@dataclass
class CountingState:
    count_line_x: float | None = None
    iou_threshold: float = 0.3
    confirm_frames: int = 3
    close_after: int = 10
    gap_factor: float = 1.75
    min_region_conf: float = 0.25

    open_tracks: list[Track] = field(default_factory=list)
    finished: list[Track] = field(default_factory=list)
    next_track_id: int = 1
    wagons_counted: int = 0
    gap_history: list[int] = field(default_factory=list)
    last_count_frame: int | None = None
    last_frame: int | None = None
    frame_width: int | None = None
    _velocity_samples: list[float] = field(default_factory=list)
    _direction: Direction = Direction.UNKNOWN

    @property
    def direction(self) -> Direction:
        return self._direction

    def _observe_velocity(self, vx: float) -> None:
        if len(self._velocity_samples) >= 30:
            return
        self._velocity_samples.append(vx)
        if len(self._velocity_samples) >= 3:
            med = statistics.median(self._velocity_samples)
            if med > 0:
                self._direction = Direction.LEFT_TO_RIGHT
            elif med < 0:
                self._direction = Direction.RIGHT_TO_LEFT

    def _crossed(self, ref_cx: float, cx: float) -> bool:
        line = self.count_line_x
        assert line is not None
        ltr = ref_cx < line <= cx
        rtl = ref_cx > line >= cx
        if self._direction is Direction.LEFT_TO_RIGHT:
            return ltr
        if self._direction is Direction.RIGHT_TO_LEFT:
            return rtl
        return ltr or rtl

    def _count(self, track: Track, frame_no: int, events: list[Event]) -> None:
        track.counted = True
        track.counted_frame = frame_no
        self.wagons_counted += 1
        if self.last_count_frame is not None:
            self.gap_history.append(frame_no - self.last_count_frame)
        self.last_count_frame = frame_no
        events.append(WagonCounted(track.id, frame_no))

    def _close(self, track: Track, frame_no: int, events: list[Event]) -> None:
        track.state = TrackState.CLOSED
        self.open_tracks.remove(track)
        self.finished.append(track)
        events.append(TrackClosed(track.id, frame_no))

    def _exited(self, track: Track) -> bool:
        if self.frame_width is None:
            return False
        x, _, w, _ = track.last_box()
        vx = track.velocity
        if vx == 0.0:
            return False
        if vx > 0:
            return x + w + vx >= self.frame_width
        return x + vx <= 0

    def update(self, frame: FrameDetections) -> list[Event]:
        """Fold one frame into the state; returns the events it caused."""
        if self.last_frame is not None and frame.frame <= self.last_frame:
            raise OutOfOrderFrame(f"frame {frame.frame} after {self.last_frame}")
        self.last_frame = frame.frame
        if self.frame_width is None:
            self.frame_width = frame.width
            if self.count_line_x is None:
                self.count_line_x = frame.width / 2.0

        events: list[Event] = []
        regions = frame.regions()
        chars = frame.characters()
        boxes: list[Box] = [(d.x, d.y, d.w, d.h) for d in regions]

        candidates = []
        for track in self.open_tracks:
            last_frame_no, last, _ = track.boxes[-1]
            # extrapolate along the estimated velocity so a short miss streak
            # does not drop the overlap below the association threshold
            dt = frame.frame - last_frame_no
            if track.velocity:
                last = (last[0] + track.velocity * dt, last[1], last[2], last[3])
            for di, box in enumerate(boxes):
                score = iou(last, box)
                if score >= self.iou_threshold:
                    candidates.append((score, track.id, di, track))
        # greedy: best IoU first, ties to the older (smaller-id) track
        candidates.sort(key=lambda c: (-c[0], c[1]))
        taken_tracks: set[int] = set()
        taken_dets: set[int] = set()
        for _, track_id, di, track in candidates:
            if track_id in taken_tracks or di in taken_dets:
                continue
            taken_tracks.add(track_id)
            taken_dets.add(di)
            self._advance(track, frame, regions[di], boxes[di], chars, events)

        for di, det in enumerate(regions):
            if di in taken_dets or det.conf < self.min_region_conf:
                continue
            track = Track(id=self.next_track_id)
            self.next_track_id += 1
            box = boxes[di]
            track.boxes.append((frame.frame, box, frame.crop_ref))
            track.char_frames.append((frame.frame, box, _chars_inside(box, chars)))
            track.streak = 1
            track.first_cx = box[0] + box[2] / 2.0
            self.open_tracks.append(track)
            events.append(TrackStarted(track.id, frame.frame))

        for track in list(self.open_tracks):
            if track.id in taken_tracks or track.boxes[-1][0] == frame.frame:
                continue
            track.misses += 1
            track.streak = 0
            if track.misses >= self.close_after or self._exited(track):
                self._close(track, frame.frame, events)
        return events

    def _advance(
        self,
        track: Track,
        frame: FrameDetections,
        det: Detection,
        box: Box,
        chars: list[Detection],
        events: list[Event],
    ) -> None:
        prev_frame, prev_box, _ = track.boxes[-1]
        prev_cx = prev_box[0] + prev_box[2] / 2.0
        cx = box[0] + box[2] / 2.0
        dt = frame.frame - prev_frame
        track.velocity = (cx - prev_cx) / dt
        self._observe_velocity(track.velocity)
        track.boxes.append((frame.frame, box, frame.crop_ref))
        track.char_frames.append((frame.frame, box, _chars_inside(box, chars)))
        track.misses = 0
        track.streak += 1

        just_confirmed = False
        if track.state is TrackState.TENTATIVE and track.streak >= self.confirm_frames:
            track.state = TrackState.CONFIRMED
            just_confirmed = True
        if track.state is TrackState.CONFIRMED and not track.counted:
            # on confirmation, go back to the first observation so a crossing
            # that happened while tentative is still counted exactly once
            ref = track.first_cx if just_confirmed else prev_cx
            if ref is not None and self._crossed(ref, cx):
                self._count(track, frame.frame, events)

    def finalize(self) -> list[tuple[int, Track | PlaceholderWagon]]:
        """Close everything, infer missed wagons and return positioned wagons.

        Wagons are ordered by counting time; positions are 1-based and
        contiguous.
        """
        events: list[Event] = []
        for track in list(self.open_tracks):
            self._close(track, self.last_frame if self.last_frame is not None else 0, events)
        counted = sorted(
            (t for t in self.finished if t.counted),
            key=lambda t: (t.counted_frame, t.id),
        )
        placeholders = infer_missed(self)
        merged: list[tuple[float, Track | PlaceholderWagon]] = [
            (float(t.counted_frame), t) for t in counted  # type: ignore[arg-type]
        ]
        merged.extend((float(p.est_frame), p) for p in placeholders)
        merged.sort(key=lambda item: item[0])
        self.wagons_counted = len(merged)
        return [(i + 1, wagon) for i, (_, wagon) in enumerate(merged)]


def _chars_inside(box: Box, chars: list[Detection]) -> tuple[Detection, ...]:
    x, y, w, h = box
    picked = []
    for c in chars:
        cx, cy = c.center()
        if x <= cx <= x + w and y <= cy <= y + h:
            picked.append(c)
    return tuple(picked)


def infer_missed(state: CountingState) -> list[PlaceholderWagon]:
    """Insert placeholder wagons where inter-count gaps are implausibly long.

    A gap above ``gap_factor`` times the median hides ``round(gap / median) - 1``
    wagons; each gets an interpolated frame and box. No-op while fewer than 4
    wagons have been counted.
    """
    counted = sorted(
        (t for t in state.finished + state.open_tracks if t.counted),
        key=lambda t: (t.counted_frame, t.id),
    )
    if len(counted) < 4:
        return []
    frames = [t.counted_frame for t in counted]
    gaps = [b - a for a, b in zip(frames, frames[1:])]
    median = statistics.median(gaps)
    if median <= 0:
        return []
    placeholders: list[PlaceholderWagon] = []
    for i, gap in enumerate(gaps):
        if gap <= state.gap_factor * median:
            continue
        missing = round(gap / median) - 1
        if missing < 1:
            continue
        before, after = counted[i], counted[i + 1]
        box_a = _box_at_count(before)
        box_b = _box_at_count(after)
        for j in range(1, missing + 1):
            t = j / (missing + 1)
            est_frame = round(frames[i] + gap * t)
            bbox = tuple(a + (b - a) * t for a, b in zip(box_a, box_b))
            placeholders.append(PlaceholderWagon(est_frame=est_frame, bbox=bbox))  # type: ignore[arg-type]
    return placeholders


def _box_at_count(track: Track) -> Box:
    for frame_no, box, _ in track.boxes:
        if frame_no >= (track.counted_frame or 0):
            return box
    return track.boxes[-1][1]
