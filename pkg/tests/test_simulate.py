import io
import random

import pytest

from wagonline.codes import parse, validate
from wagonline.detections import dumps_frame
from wagonline.simulate import (
    DamageMode,
    InvalidConfig,
    ScenarioConfig,
    apply_damage,
    generate,
    generate_pair,
    random_wagon_code,
)


def stream_bytes(frames) -> bytes:
    buf = io.StringIO()
    for f in frames:
        buf.write(dumps_frame(f))
        buf.write("\n")
    return buf.getvalue().encode()


class TestConfig:
    def test_rejects_bad_values(self):
        with pytest.raises(InvalidConfig):
            generate(ScenarioConfig(seed=1, wagons=0))
        with pytest.raises(InvalidConfig):
            generate(ScenarioConfig(seed=1, wagons=5, miss_rate=1.5))
        with pytest.raises(InvalidConfig):
            generate(ScenarioConfig(seed=1, wagons=5, px_per_frame=0))


class TestGenerate:
    def test_truth_structure_zero_noise(self):
        frames, truth = generate(ScenarioConfig(seed=3, wagons=34))
        assert truth.expected_count == 34
        assert len(truth.wagons) == 34
        for w in truth.wagons:
            assert w.code is not None
            assert not w.damaged
            assert validate(w.code).valid
        # stream actually contains region and character detections
        regions = chars = 0
        for f in frames:
            regions += len(f.regions())
            chars += len(f.characters())
        assert regions > 34
        assert chars > regions

    def test_seed_determinism_byte_identical(self):
        cfg = ScenarioConfig(
            seed=7, wagons=20, miss_rate=0.1, false_positive_rate=0.02,
            char_confusion_rate=0.05, confidence_noise=0.05,
            damaged_fraction=0.2, unlabeled_fraction=0.1,
        )
        a, truth_a = generate(cfg)
        b, truth_b = generate(cfg)
        assert stream_bytes(a) == stream_bytes(b)
        assert truth_a == truth_b

    def test_different_seeds_differ(self):
        a, _ = generate(ScenarioConfig(seed=1, wagons=5))
        b, _ = generate(ScenarioConfig(seed=2, wagons=5))
        assert stream_bytes(a) != stream_bytes(b)

    def test_damaged_count_binomial(self):
        # expectation 116 on 1000 wagons; allow 3 sigma = 3*sqrt(1000*.116*.884) ~ 30.4
        _, truth = generate(ScenarioConfig(seed=11, wagons=1000, damaged_fraction=0.116))
        damaged = sum(1 for w in truth.wagons if w.damaged)
        assert abs(damaged - 116) <= 31

    def test_unlabeled_only_interior(self):
        _, truth = generate(ScenarioConfig(seed=5, wagons=12, unlabeled_fraction=0.5))
        missing = [w.position for w in truth.wagons if w.code is None]
        assert missing, "expected some unlabeled wagons at 50%"
        assert all(1 < p < 12 for p in missing)

    def test_pinned_codes(self):
        codes = ["HFE-094063-1", "FHD-643258-1L", "8330"]
        frames, truth = generate(ScenarioConfig(seed=9, wagons=3), codes=codes)
        assert [w.code.text() for w in truth.wagons] == codes
        with pytest.raises(InvalidConfig):
            generate(ScenarioConfig(seed=9, wagons=2), codes=codes)

    def test_frames_monotonic_and_sized(self):
        frames, _ = generate(ScenarioConfig(seed=3, wagons=2))
        last = -1
        for f in frames:
            assert f.frame > last
            last = f.frame
            assert (f.width, f.height) == (1920, 1080)
            for d in f.detections:
                assert 0 <= d.x and d.x + d.w <= 1920.01
                assert d.w > 0 and d.h > 0
                assert 0 <= d.conf <= 1


class TestGeneratePair:
    def test_shared_codes_independent_damage(self):
        cfg = ScenarioConfig(seed=21, wagons=60, damaged_fraction=0.3)
        (frames_l, truth_l), (frames_r, truth_r) = generate_pair(cfg)
        codes_l = [w.code.text() if w.code else None for w in truth_l.wagons]
        codes_r = [w.code.text() if w.code else None for w in truth_r.wagons]
        assert codes_l == codes_r
        flags_l = [w.damaged for w in truth_l.wagons]
        flags_r = [w.damaged for w in truth_r.wagons]
        assert flags_l != flags_r  # independent draws at 30%
        first_l = next(frames_l)
        first_r = next(frames_r)
        assert first_l.camera == "camL"
        assert first_r.camera == "camR"


class TestApplyDamage:
    def test_truncate_tail(self):
        code = parse("HFE-094063-1")
        for seed in range(10):
            reading = apply_damage(code, DamageMode.TRUNCATE_TAIL, random.Random(seed))
            assert 7 <= len(reading.chars) <= 9
            assert reading.text() == code.glyphs()[: len(reading.chars)]

    def test_occlude_head(self):
        reading = apply_damage(parse("FHD-643258-1L"), DamageMode.OCCLUDE_HEAD, random.Random(0))
        assert reading.text() == "D6432581L"

    def test_garble_breaks_check_digit(self):
        for seed in range(20):
            code = random_wagon_code(random.Random(seed))
            reading = apply_damage(code, DamageMode.GARBLE, random.Random(seed))
            assert len(reading.chars) == len(code.glyphs())
            mutated = parse(reading.text())
            assert not validate(mutated).valid

    def test_damaged_confidences_depressed(self):
        reading = apply_damage(parse("HFE-094063-1"), DamageMode.GARBLE, random.Random(1))
        assert all(0.45 <= c <= 0.85 for c in reading.confidences())
