"""Synthetic train passages with ground truth.

Generates detection streams that mimic a side-view camera watching a train
roll past: one code region per labeled wagon translating across the frame at
constant speed, character boxes inside it, plus configurable noise (dropped
frames, spurious regions, glyph confusions, confidence jitter) and damage
(truncated, occluded or garbled codes). Deterministic for a fixed seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .codes import (
    DIGITS,
    LETTER_TO_DIGIT,
    DIGIT_TO_LETTER,
    LETTERS,
    UNASSIGNABLE,
    CharReading,
    Kind,
    RawReading,
    RollingStockId,
    compute_check_digit,
    parse,
    validate,
)
from .detections import Detection, FrameDetections, REGION_CLS

FPS = 30
BASE_REGION_CONF = 0.9
BASE_CHAR_CONF = 0.92
# Fraction of generated wagons carrying the optional region letter.
REGION_LETTER_RATE = 0.15
# Spacing geometry relative to the region width: wagon bodies are constant
# length, only the coupling gap jitters (+-20%), so a skipped wagon always
# reads as ~2x the median inter-count gap.
WAGON_LEN_FACTOR = 4.5
GAP_FACTOR = 1.25
GAP_JITTER = 0.2


class InvalidConfig(ValueError):
    pass


class DamageMode(Enum):
    TRUNCATE_TAIL = "truncate_tail"
    OCCLUDE_HEAD = "occlude_head"
    GARBLE = "garble"


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    wagons: int
    px_per_frame: float = 18.0
    frame_size: tuple[int, int] = (1920, 1080)
    code_region_size: tuple[int, int] = (160, 60)
    miss_rate: float = 0.0
    false_positive_rate: float = 0.0
    char_confusion_rate: float = 0.0
    confidence_noise: float = 0.0
    damaged_fraction: float = 0.0
    unlabeled_fraction: float = 0.0

    def check(self) -> None:
        if self.wagons < 1:
            raise InvalidConfig("wagons must be >= 1")
        if self.px_per_frame <= 0:
            raise InvalidConfig("px_per_frame must be > 0")
        for name in (
            "miss_rate",
            "false_positive_rate",
            "char_confusion_rate",
            "damaged_fraction",
            "unlabeled_fraction",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidConfig(f"{name} must be in [0,1], got {value}")
        if self.confidence_noise < 0:
            raise InvalidConfig("confidence_noise must be >= 0")
        if self.frame_size[0] <= 0 or self.frame_size[1] <= 0:
            raise InvalidConfig("frame_size must be positive")
        if self.code_region_size[0] <= 0 or self.code_region_size[1] <= 0:
            raise InvalidConfig("code_region_size must be positive")


@dataclass(frozen=True)
class TruthWagon:
    position: int
    code: RollingStockId | None
    damaged: bool


@dataclass(frozen=True)
class GroundTruth:
    wagons: tuple[TruthWagon, ...]
    expected_count: int

    def to_dict(self) -> dict:
        return {
            "expected_count": self.expected_count,
            "wagons": [
                {
                    "position": w.position,
                    "code": w.code.text() if w.code else None,
                    "damaged": w.damaged,
                }
                for w in self.wagons
            ],
        }


def random_wagon_code(rng: random.Random) -> RollingStockId:
    """Uniform random wagon id with a self-consistent check digit."""
    while True:
        serial = f"{rng.randrange(10**6):06d}"
        check = compute_check_digit(serial)
        if check != UNASSIGNABLE:
            break
    letters = "".join(rng.choice(LETTERS) for _ in range(3))
    region = rng.choice(LETTERS) if rng.random() < REGION_LETTER_RATE else None
    return RollingStockId(
        kind=Kind.WAGON, letters=letters, serial=serial, check=check, region=region
    )


def apply_damage(
    code: RollingStockId, mode: DamageMode, rng: random.Random | None = None
) -> RawReading:
    """Turn a painted code into the glyph sequence a camera would see of it.

    TruncateTail drops at least one trailing glyph, OccludeHead the leading
    two; Garble substitutes serial digits so that the check digit no longer
    matches. Damaged glyphs carry depressed confidences.
    """
    rng = rng or random.Random(0)
    glyphs = code.glyphs()
    if mode is DamageMode.TRUNCATE_TAIL:
        drop = rng.randint(1, min(3, len(glyphs) - 1))
        glyphs = glyphs[:-drop]
    elif mode is DamageMode.OCCLUDE_HEAD:
        glyphs = glyphs[2:]
    else:
        glyphs = _garble(code, rng)
    chars = tuple(
        CharReading(glyph=g, confidence=round(rng.uniform(0.45, 0.85), 4)) for g in glyphs
    )
    return RawReading(chars=chars)


def _garble(code: RollingStockId, rng: random.Random) -> str:
    glyphs = list(code.glyphs())
    if code.kind is Kind.LOCOMOTIVE:
        pos = rng.randrange(len(glyphs))
        glyphs[pos] = rng.choice([d for d in DIGITS if d != glyphs[pos]])
        return "".join(glyphs)
    # substitute 1-2 serial digits (glyph offsets 3..8) until validation breaks
    for _ in range(32):
        mutated = glyphs.copy()
        for pos in rng.sample(range(3, 9), rng.randint(1, 2)):
            mutated[pos] = rng.choice([d for d in DIGITS if d != mutated[pos]])
        if not validate(parse("".join(mutated))).valid:
            return "".join(mutated)
    raise AssertionError("unreachable: single-digit substitutions always break the check")


def _confused(glyph: str, rng: random.Random) -> str:
    partner = LETTER_TO_DIGIT.get(glyph) or DIGIT_TO_LETTER.get(glyph)
    if partner is not None:
        return partner
    pool = DIGITS if glyph in DIGITS else LETTERS
    return rng.choice([g for g in pool if g != glyph])


def _poisson(rng: random.Random, lam: float) -> int:
    if lam <= 0:
        return 0
    threshold = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= rng.random()
        if p <= threshold:
            return k
        k += 1


@dataclass
class _SimWagon:
    position: int
    code: RollingStockId | None
    damaged: bool
    glyphs: str
    char_confs: tuple[float, ...]
    offset: float  # distance behind the head wagon's region, px
    y: float
    char_layout: tuple[tuple[float, float, float, float], ...] = field(default=())


@dataclass(frozen=True)
class _Composition:
    codes: tuple[RollingStockId | None, ...]  # None = unlabeled
    offsets: tuple[float, ...]
    ys: tuple[float, ...]


def _draw_composition(rng: random.Random, config: ScenarioConfig,
                      codes: list[str] | None = None) -> _Composition:
    n = config.wagons
    region_w, region_h = config.code_region_size
    frame_h = config.frame_size[1]
    if codes is not None:
        if len(codes) != n:
            raise InvalidConfig(f"{n} wagons but {len(codes)} codes supplied")
        drawn: list[RollingStockId | None] = [parse(c) for c in codes]
    else:
        drawn = [random_wagon_code(rng) for _ in range(n)]
    # unlabeled wagons have no code on either side; only interior positions,
    # since gap statistics cannot see a missing head or tail wagon
    for i in range(n):
        if 0 < i < n - 1 and rng.random() < config.unlabeled_fraction:
            drawn[i] = None
    wagon_len = WAGON_LEN_FACTOR * region_w
    base_gap = GAP_FACTOR * region_w
    offsets = [0.0]
    for _ in range(1, n):
        gap = base_gap * (1.0 + rng.uniform(-GAP_JITTER, GAP_JITTER))
        offsets.append(offsets[-1] + wagon_len + gap)
    y_mid = (frame_h - region_h) / 2.0
    ys = [round(y_mid + rng.uniform(-60.0, 60.0), 2) for _ in range(n)]
    return _Composition(codes=tuple(drawn), offsets=tuple(offsets), ys=tuple(ys))


def _char_layout(n_chars: int, region_w: float, region_h: float):
    if n_chars == 0:
        return ()
    usable = region_w * 0.9
    cell = usable / n_chars
    return tuple(
        (
            region_w * 0.05 + i * cell + 0.1 * cell,
            region_h * 0.15,
            0.8 * cell,
            0.7 * region_h,
        )
        for i in range(n_chars)
    )


def _materialize_side(
    rng: random.Random, config: ScenarioConfig, comp: _Composition
) -> tuple[list[_SimWagon], GroundTruth]:
    region_w, region_h = config.code_region_size
    wagons: list[_SimWagon] = []
    truth: list[TruthWagon] = []
    for i, code in enumerate(comp.codes):
        position = i + 1
        if code is None:
            wagons.append(
                _SimWagon(position, None, False, "", (), comp.offsets[i], comp.ys[i])
            )
            truth.append(TruthWagon(position, None, False))
            continue
        damaged = rng.random() < config.damaged_fraction
        if damaged:
            mode = rng.choice(list(DamageMode))
            reading = apply_damage(code, mode, rng)
            glyphs = reading.text()
            confs = reading.confidences()
        else:
            glyphs = code.glyphs()
            confs = (BASE_CHAR_CONF,) * len(glyphs)
        wagons.append(
            _SimWagon(
                position,
                code,
                damaged,
                glyphs,
                confs,
                comp.offsets[i],
                comp.ys[i],
                _char_layout(len(glyphs), region_w, region_h),
            )
        )
        truth.append(TruthWagon(position, code, damaged))
    return wagons, GroundTruth(wagons=tuple(truth), expected_count=config.wagons)


def _frames(
    rng: random.Random, config: ScenarioConfig, wagons: list[_SimWagon], camera: str
) -> Iterator[FrameDetections]:
    frame_w, frame_h = config.frame_size
    region_w, region_h = config.code_region_size
    speed = config.px_per_frame
    # head wagon region enters at x = -region_w on frame 0; stream ends once
    # the last wagon's region has fully left the frame
    total_travel = wagons[-1].offset + frame_w + 2 * region_w
    n_frames = int(math.ceil(total_travel / speed)) + 1
    labeled = [w for w in wagons if w.code is not None]
    for f in range(n_frames):
        head_x = -region_w + f * speed
        dets: list[Detection] = []
        for w in labeled:
            x = head_x - w.offset
            if x + region_w <= 0 or x >= frame_w:
                continue
            if config.miss_rate and rng.random() < config.miss_rate:
                continue
            cx = max(0.0, x)
            cw = min(frame_w, x + region_w) - cx
            if cw <= 0:
                continue
            conf = BASE_REGION_CONF
            if config.confidence_noise:
                conf += rng.gauss(0.0, config.confidence_noise)
            dets.append(
                Detection(
                    REGION_CLS,
                    round(cx, 2),
                    w.y,
                    round(cw, 2),
                    float(region_h),
                    round(min(1.0, max(0.05, conf)), 4),
                )
            )
            for glyph, base_conf, (dx, dy, cw_, ch_) in zip(
                w.glyphs, w.char_confs, w.char_layout
            ):
                gx = x + dx
                if gx + cw_ / 2 < 0 or gx + cw_ / 2 > frame_w:
                    continue
                gx0 = max(0.0, gx)
                gw = min(frame_w, gx + cw_) - gx0
                if config.char_confusion_rate and rng.random() < config.char_confusion_rate:
                    glyph = _confused(glyph, rng)
                conf = base_conf
                if config.confidence_noise:
                    conf += rng.gauss(0.0, config.confidence_noise)
                dets.append(
                    Detection(
                        glyph,
                        round(gx0, 2),
                        round(w.y + dy, 2),
                        round(gw, 2),
                        round(ch_, 2),
                        round(min(1.0, max(0.05, conf)), 4),
                    )
                )
        for _ in range(_poisson(rng, config.false_positive_rate)):
            fw = region_w * rng.uniform(0.5, 1.5)
            fh = region_h * rng.uniform(0.5, 1.5)
            dets.append(
                Detection(
                    REGION_CLS,
                    round(rng.uniform(0.0, frame_w - fw), 2),
                    round(rng.uniform(0.0, frame_h - fh), 2),
                    round(fw, 2),
                    round(fh, 2),
                    round(rng.uniform(0.25, 0.7), 4),
                )
            )
        yield FrameDetections(
            frame=f,
            ts_ms=f * 1000 // FPS,
            camera=camera,
            width=frame_w,
            height=frame_h,
            detections=dets,
            crop_ref=f"{camera}/{f:06d}.jpg",
        )


def generate(
    config: ScenarioConfig, camera: str = "cam0", codes: list[str] | None = None
) -> tuple[Iterator[FrameDetections], GroundTruth]:
    """Build one passage: a lazy frame stream plus its ground truth.

    Deterministic for a fixed config; ``codes`` optionally pins the painted
    codes instead of drawing them.
    """
    config.check()
    rng = random.Random(config.seed)
    comp = _draw_composition(rng, config, codes)
    wagons, truth = _materialize_side(rng, config, comp)
    return _frames(rng, config, wagons, camera), truth


def generate_pair(
    config: ScenarioConfig, cameras: tuple[str, str] = ("camL", "camR")
) -> tuple[
    tuple[Iterator[FrameDetections], GroundTruth],
    tuple[Iterator[FrameDetections], GroundTruth],
]:
    """Two independent per-side views of the same passage.

    The composition (codes, geometry, unlabeled wagons) is shared; damage and
    frame noise are drawn independently per side, modeling independently
    painted wagon flanks.
    """
    config.check()
    comp = _draw_composition(random.Random(config.seed), config)
    sides = []
    for idx, camera in enumerate(cameras):
        rng = random.Random((config.seed << 2) + idx + 1)
        wagons, truth = _materialize_side(rng, config, comp)
        sides.append((_frames(rng, config, wagons, camera), truth))
    return sides[0], sides[1]
