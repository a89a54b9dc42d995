"""Synthetic image generation, turbidity ordering, codecs and dataset IO."""

import io
import json
import logging

import numpy as np
import pytest
from PIL import Image

from aquasight.dataset import (
    CLEAN_TURBIDITY_CEILING,
    IMAGE_SIZE,
    TINTS,
    DatasetError,
    ImageFormatError,
    InvalidImageError,
    dataset_counts,
    decode_and_resize,
    encode_png,
    generate_dataset,
    generate_sample,
    load_dataset,
    luminance,
    normalize_brightness,
    turbidity_score,
    write_dataset,
)
from aquasight import dataset as dataset_module

from oracles import turbidity_naive


@pytest.fixture(scope="module")
def seed7():
    return generate_dataset(7)


class TestTurbidityScore:
    def test_constant_image_scores_zero(self):
        assert turbidity_score(np.full((3, 64, 64), 0.4)) < 1e-30

    def test_matches_per_block_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            img = rng.random((3, 64, 64))
            assert turbidity_score(img) == pytest.approx(
                turbidity_naive(img), abs=1e-12)

    def test_single_block_hand_value(self):
        # Half-zero half-one luminance in one block: variance 0.25 there.
        img = np.zeros((3, 64, 64))
        img[:, 0:8, 0:4] = 1.0
        assert turbidity_score(img) == pytest.approx(0.25 / 64, abs=1e-12)

    def test_luminance_weights(self):
        img = np.zeros((3, 2, 2))
        img[0] = 1.0
        assert np.allclose(luminance(img), 0.299)
        img[0], img[1] = 0.0, 1.0
        assert np.allclose(luminance(img), 0.587)


class TestGenerateSample:
    def test_deterministic_per_seed(self):
        a = generate_sample("green", 3, 0.2, seed=42)
        b = generate_sample("green", 3, 0.2, seed=42)
        assert np.array_equal(a.pixels, b.pixels)

    def test_seed_changes_pixels(self):
        a = generate_sample("none", 2, 0.0, seed=1)
        b = generate_sample("none", 2, 0.0, seed=2)
        assert not np.array_equal(a.pixels, b.pixels)

    def test_shape_range_and_label(self):
        s = generate_sample("none", 0, 0.0, seed=0)
        assert s.pixels.shape == (3, IMAGE_SIZE, IMAGE_SIZE)
        assert s.pixels.min() >= 0.0 and s.pixels.max() <= 1.0
        assert s.label == 0
        assert generate_sample("none", 1, 0.0, seed=0).label == 1

    def test_stages_nest(self):
        # Stage k is stage k-1 plus exactly one more contaminant layer, so
        # re-rendering with the same seed agrees up to the shared layers.
        base = generate_sample("none", 2, 0.0, seed=5)
        more = generate_sample("none", 3, 0.0, seed=5)
        assert not np.array_equal(base.pixels, more.pixels)
        changed = np.any(base.pixels != more.pixels, axis=0)
        assert 0 < changed.sum() < changed.size  # a layer, not a re-render

    def test_darkness_scales_brightness(self):
        bright = generate_sample("none", 0, 0.0, seed=3)
        dark = generate_sample("none", 0, 0.9, seed=3)
        ratio = luminance(dark.pixels).mean() / luminance(bright.pixels).mean()
        assert ratio == pytest.approx(1.0 - 0.7 * 0.9, abs=0.01)

    def test_unknown_tint_rejected(self):
        with pytest.raises(ValueError, match="unknown tint"):
            generate_sample("plaid", 0, 0.0, seed=0)

    @pytest.mark.parametrize("stage", [-1, 5, 99])
    def test_bad_stage_rejected(self, stage):
        with pytest.raises(ValueError, match="stage"):
            generate_sample("none", stage, 0.0, seed=0)

    @pytest.mark.parametrize("darkness", [-0.1, 1.1])
    def test_bad_darkness_rejected(self, darkness):
        with pytest.raises(ValueError, match="darkness"):
            generate_sample("none", 0, darkness, seed=0)


class TestDatasetComposition:
    def test_totals(self, seed7):
        assert len(seed7) == 105
        counts = dataset_counts(seed7)
        assert counts["clean"] == 49
        assert counts["contaminated"] == 56
        assert counts["per_stage"] == {"1": 14, "2": 14, "3": 14, "4": 14}

    def test_clean_breakdown(self, seed7):
        clean = [s for s in seed7 if s.label == 0]
        bright_untinted = [s for s in clean if s.tint == "none" and s.darkness == 0.0]
        lights_off = [s for s in clean if s.tint == "none" and s.darkness == 0.9]
        tinted = [s for s in clean if s.tint != "none"]
        assert len(tinted) == 7
        assert sorted(s.tint for s in tinted) == sorted(t for t in TINTS if t != "none")
        assert len(lights_off) == 14
        assert len(bright_untinted) == 15  # 14 first round + darkness sweep start

    def test_darkness_sweep_covers_range(self, seed7):
        sweep = sorted({s.darkness for s in seed7 if s.label == 0 and s.tint == "none"})
        assert sweep[0] == 0.0
        assert sweep[-1] == 1.0
        assert len(sweep) == 15  # 14-step sweep plus the 0.9 lights-off point

    def test_contaminated_split_by_tint(self, seed7):
        bad = [s for s in seed7 if s.label == 1]
        assert sum(1 for s in bad if s.tint == "none") == 28
        assert sum(1 for s in bad if s.tint != "none") == 28
        for stage in (1, 2, 3, 4):
            tints = [s.tint for s in bad if s.stage == stage]
            assert len(tints) == 14
            assert sum(1 for t in tints if t != "none") == 7

    def test_names_are_sequential(self, seed7):
        assert [s.name for s in seed7] == [f"img_{i:03d}" for i in range(105)]

    def test_master_seed_is_reproducible(self, seed7):
        again = generate_dataset(7)
        for a, b in zip(seed7, again):
            assert np.array_equal(a.pixels, b.pixels)

    def test_master_seeds_differ(self, seed7):
        other = generate_dataset(8)
        assert any(not np.array_equal(a.pixels, b.pixels)
                   for a, b in zip(seed7, other))

    def test_per_sample_seeds_are_distinct(self, seed7):
        seeds = [s.seed for s in seed7]
        assert len(set(seeds)) == len(seeds)


class TestTurbidityOrdering:
    def test_monotone_across_stages_for_200_seeds(self):
        for seed in range(200):
            tint = TINTS[seed % len(TINTS)]
            scores = [turbidity_score(generate_sample(tint, stage, 0.0, seed).pixels)
                      for stage in (0, 1, 2, 3, 4)]
            assert all(a < b for a, b in zip(scores, scores[1:])), \
                f"seed {seed} tint {tint}: {scores}"

    def test_ceiling_matches_its_freeze_protocol(self):
        # The frozen constant is the 99th percentile over 1,000 stage-0
        # renders (seeds 0..999, tints cycled, darkness 0), rounded via
        # float(f"{p99:.3e}").  Re-derive it; a renderer change that moves
        # the percentile must fail here until the constant is re-frozen.
        scores = [
            turbidity_score(
                generate_sample(TINTS[i % len(TINTS)], 0, 0.0, i).pixels)
            for i in range(1000)
        ]
        p99 = float(np.percentile(scores, 99))
        assert float(f"{p99:.3e}") == CLEAN_TURBIDITY_CEILING
        # p99 semantics: at most 1% of that population sits above the line.
        assert sum(1 for v in scores if v > CLEAN_TURBIDITY_CEILING) <= 10

    def test_contaminated_clears_ceiling(self, seed7):
        for s in seed7:
            if s.label == 1:
                assert turbidity_score(s.pixels) > CLEAN_TURBIDITY_CEILING


class TestCodec:
    def test_round_trip_within_quantization(self):
        img = np.random.default_rng(0).random((3, 64, 64))
        back = decode_and_resize(encode_png(img))
        assert back.shape == (3, 64, 64)
        assert np.max(np.abs(back - img)) < 2.0 / 255.0

    def test_solid_red(self):
        img = np.zeros((3, 64, 64))
        img[0] = 1.0
        back = decode_and_resize(encode_png(img))
        assert np.allclose(back[0], 1.0) and np.allclose(back[1:], 0.0)

    def test_resize_preserves_checkerboard_mean(self):
        # 128x128 board of 2x2 tiles; bilinear downsample keeps the mean.
        tile = np.kron([[1, 0] * 32, [0, 1] * 32] * 32, np.ones((2, 2)))[:128, :128]
        arr = (np.stack([tile] * 3, axis=2) * 255).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
        decoded = decode_and_resize(buf.getvalue())
        assert decoded.shape == (3, 64, 64)
        assert abs(decoded.mean() - arr.mean() / 255.0) < 0.01

    def test_jpeg_accepted(self):
        img = generate_sample("brown", 2, 0.0, seed=9).pixels
        arr = np.clip(np.rint(img * 255), 0, 255).astype(np.uint8).transpose(1, 2, 0)
        buf = io.BytesIO()
        Image.fromarray(arr, mode="RGB").save(buf, format="JPEG", quality=95)
        decoded = decode_and_resize(buf.getvalue())
        assert decoded.shape == (3, 64, 64)
        assert np.mean(np.abs(decoded - img)) < 0.02

    def test_garbage_bytes_rejected_with_stable_message(self):
        with pytest.raises(ImageFormatError, match="not a recognized PNG or JPEG"):
            decode_and_resize(b"this is not an image at all")

    def test_truncated_png_rejected(self):
        blob = encode_png(np.random.default_rng(1).random((3, 64, 64)))
        with pytest.raises(ImageFormatError):
            decode_and_resize(blob[:len(blob) // 2])

    def test_zero_dimension_rejected(self, monkeypatch):
        class ZeroImage:
            width, height = 0, 64

            def load(self):
                pass

        monkeypatch.setattr(dataset_module.Image, "open", lambda *_: ZeroImage())
        with pytest.raises(InvalidImageError, match="zero dimension"):
            decode_and_resize(b"ignored")


class TestNormalizeBrightness:
    def test_uniform_gray_hits_target(self):
        out = normalize_brightness(np.full((3, 64, 64), 0.25))
        assert luminance(out).mean() == pytest.approx(0.5, abs=1e-9)

    def test_already_normalized_is_fixed_point(self):
        img = normalize_brightness(np.random.default_rng(2).random((3, 64, 64)) * 0.8)
        again = normalize_brightness(img)
        assert np.array_equal(img, again)

    def test_inverts_uniform_dimming(self, seed7):
        # Dimming by a constant factor then normalizing matches normalizing
        # the original, because the rescale is linear until clipping.
        count = 0
        for s in seed7[:100]:
            norm = normalize_brightness(s.pixels)
            dimmed = normalize_brightness(np.clip(s.pixels * 0.6, 0.0, 1.0))
            assert np.mean(np.abs(norm - dimmed)) < 0.02
            count += 1
        assert count == 100

    def test_all_black_logs_and_returns_unchanged(self, caplog):
        img = np.zeros((3, 8, 8))
        with caplog.at_level(logging.WARNING, logger="aquasight.dataset"):
            out = normalize_brightness(img)
        assert "all-black" in caplog.text
        assert np.array_equal(out, img)
        assert out is not img  # still a defensive copy

    def test_does_not_mutate_input(self):
        img = np.full((3, 8, 8), 0.25)
        snapshot = img.copy()
        normalize_brightness(img)
        assert np.array_equal(img, snapshot)

    def test_rejects_out_of_range_input(self):
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            normalize_brightness(np.full((3, 4, 4), 1.5))

    def test_bright_image_clips_but_converges(self):
        # Most pixels near 1.0: naive rescale clips, iteration still lands
        # close to the target mean.
        rng = np.random.default_rng(3)
        img = np.clip(0.85 + 0.1 * rng.random((3, 64, 64)), 0.0, 1.0)
        out = normalize_brightness(img)
        assert abs(luminance(out).mean() - 0.5) < 1e-3


class TestDatasetIO:
    def test_round_trip(self, seed7, tmp_path):
        write_dataset(seed7[:12], tmp_path / "ds")
        loaded = load_dataset(tmp_path / "ds")
        assert len(loaded) == 12
        for orig, back in zip(seed7[:12], loaded):
            assert back.label == orig.label
            assert back.tint == orig.tint
            assert back.stage == orig.stage
            assert back.darkness == orig.darkness
            assert back.seed == orig.seed
            assert back.name == orig.name
            assert back.source == "file"
            assert np.max(np.abs(back.pixels - orig.pixels)) < 2.0 / 255.0

    def test_write_is_byte_stable(self, seed7, tmp_path):
        first = write_dataset(seed7[:4], tmp_path / "a")
        second = write_dataset(seed7[:4], tmp_path / "b")
        assert first.read_bytes() == second.read_bytes()
        for name in ("img_000.png", "img_003.png"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()

    def test_missing_manifest(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(DatasetError, match="manifest.json"):
            load_dataset(tmp_path / "empty")

    def test_unparseable_manifest(self, tmp_path):
        d = tmp_path / "bad"
        d.mkdir()
        (d / "manifest.json").write_text("{not json")
        with pytest.raises(DatasetError, match="unreadable"):
            load_dataset(d)

    def test_wrong_format_marker(self, seed7, tmp_path):
        path = write_dataset(seed7[:2], tmp_path / "ds")
        manifest = json.loads(path.read_text())
        manifest["format"] = "something-else"
        path.write_text(json.dumps(manifest))
        with pytest.raises(DatasetError, match="not an aquasight dataset"):
            load_dataset(tmp_path / "ds")

    def test_unsupported_version(self, seed7, tmp_path):
        path = write_dataset(seed7[:2], tmp_path / "ds")
        manifest = json.loads(path.read_text())
        manifest["version"] = 99
        path.write_text(json.dumps(manifest))
        with pytest.raises(DatasetError, match="version 99"):
            load_dataset(tmp_path / "ds")

    def test_count_entry_mismatch(self, seed7, tmp_path):
        path = write_dataset(seed7[:3], tmp_path / "ds")
        manifest = json.loads(path.read_text())
        manifest["counts"]["clean"] += 1
        path.write_text(json.dumps(manifest))
        with pytest.raises(DatasetError, match="counts do not match"):
            load_dataset(tmp_path / "ds")

    def test_missing_referenced_file(self, seed7, tmp_path):
        write_dataset(seed7[:3], tmp_path / "ds")
        (tmp_path / "ds" / "img_001.png").unlink()
        with pytest.raises(DatasetError, match="img_001.png"):
            load_dataset(tmp_path / "ds")
