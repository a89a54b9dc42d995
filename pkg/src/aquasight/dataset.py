"""Synthetic water imagery, image decoding, and brightness normalization.

The generator reproduces the structure of the collection protocol the
classifier is meant for: 105 images, 49 clean / 56 contaminated.  Clean
water is rendered as a lightly textured blue-gray surface, optionally
tinted with one of seven food colors; contamination is cumulative, stage k
painting layers 1..k on top of the clean render:

    stage 1  sand         coarse yellow-brown speckle
    stage 2  + salt       fine bright speckle
    stage 3  + pepper     fine dark speckle
    stage 4  + oil paint  low-frequency colored swirl blobs

Layer k draws from its own child stream of the sample seed, so the sand in
a stage-4 render is pixel-identical to the sand in the stage-1 render of
the same seed and turbidity can only grow with the stage.  Darkness d
multiplies luminance by (1 - 0.7*d), modelling photos taken with less and
less light.

The dataset breakdown (historical counts, documented here because the
original collection arithmetic is ambiguous): 35 first-round clean images
= 28 untinted (14 of them shot with the light off) + 7 tinted, one per
color; 14 second-round clean images at evenly spread darkness levels; 28
untinted contaminated + 28 tinted contaminated, 7 per stage each.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from aquasight.rng import derive_seeds, make_rng

log = logging.getLogger(__name__)

IMAGE_SIZE = 64
LABEL_CLEAN = 0
LABEL_CONTAMINATED = 1
STAGES = (0, 1, 2, 3, 4)

TINT_COLORS = {
    "light-blue": (0.60, 0.80, 0.95),
    "green": (0.30, 0.65, 0.40),
    "blue": (0.15, 0.35, 0.75),
    "yellow": (0.85, 0.75, 0.30),
    "brown": (0.48, 0.34, 0.20),
    "orange": (0.90, 0.55, 0.20),
    "red": (0.80, 0.22, 0.20),
}
TINTS = ("none",) + tuple(TINT_COLORS)

_WATER_BASE = (0.42, 0.52, 0.62)
_TINT_ALPHA = 0.35
_LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# 99th percentile of turbidity_score over 1,000 stage-0 renders at darkness 0,
# seeds 0..999 with tints cycled (scripts/turbidity_ceiling.py); frozen here.
CLEAN_TURBIDITY_CEILING = 2.303e-05

MANIFEST_NAME = "manifest.json"
MANIFEST_VERSION = 1


class DatasetError(Exception):
    """Manifest or dataset directory is unusable."""


class ImageFormatError(ValueError):
    """Bytes are not a decodable PNG/JPEG image."""


class InvalidImageError(ValueError):
    """Decodable but degenerate image (zero-sized)."""


@dataclass
class ImageSample:
    """A decoded 3x64x64 pixel grid in [0,1] plus label and generation metadata."""

    pixels: np.ndarray
    label: int
    tint: str = "none"
    stage: int = 0
    darkness: float = 0.0
    source: str = "synthetic"
    seed: Optional[int] = None
    name: str = ""


def luminance(pixels: np.ndarray) -> np.ndarray:
    """Per-pixel luma 0.299R + 0.587G + 0.114B from a [3,H,W] array."""
    r, g, b = _LUMA_WEIGHTS
    return r * pixels[0] + g * pixels[1] + b * pixels[2]


def turbidity_score(pixels: np.ndarray) -> float:
    """Mean luminance variance over non-overlapping 8x8 blocks (test-side
    proxy for visual cloudiness; the classifier never sees it)."""
    lum = luminance(pixels)
    h, w = lum.shape
    blocks = lum[:h - h % 8, :w - w % 8].reshape(h // 8, 8, w // 8, 8)
    return float(blocks.var(axis=(1, 3)).mean())


def _smooth_field(rng: np.random.Generator, cells: int, size: int) -> np.ndarray:
    """Bilinear upsample of a cells x cells uniform(-1,1) grid to size x size."""
    coarse = rng.uniform(-1.0, 1.0, size=(cells, cells))
    pos = (np.arange(size) + 0.5) * cells / size - 0.5
    i0 = np.clip(np.floor(pos).astype(int), 0, cells - 1)
    i1 = np.clip(i0 + 1, 0, cells - 1)
    frac = np.clip(pos - np.floor(pos), 0.0, 1.0)
    rows = coarse[i0, :] * (1.0 - frac)[:, None] + coarse[i1, :] * frac[:, None]
    return rows[:, i0] * (1.0 - frac)[None, :] + rows[:, i1] * frac[None, :]


def _render_clean(tint: str, seed: int) -> np.ndarray:
    rng = make_rng(seed, "base")
    img = np.empty((3, IMAGE_SIZE, IMAGE_SIZE))
    for c, v in enumerate(_WATER_BASE):
        img[c] = v
    # surface lighting: brighter near the top, gentle ripple texture
    img += np.linspace(0.035, -0.035, IMAGE_SIZE)[None, :, None]
    img += 0.018 * _smooth_field(rng, cells=6, size=IMAGE_SIZE)[None]
    if tint != "none":
        color = np.asarray(TINT_COLORS[tint])
        img = (1.0 - _TINT_ALPHA) * img + _TINT_ALPHA * color[:, None, None]
    return img


def _paint_sand(img: np.ndarray, rng: np.random.Generator) -> None:
    yy, xx = np.mgrid[0:IMAGE_SIZE, 0:IMAGE_SIZE]
    for _ in range(int(rng.integers(30, 42))):
        cy, cx = rng.integers(2, IMAGE_SIZE - 2, size=2)
        radius = float(rng.uniform(0.8, 1.9))
        color = np.asarray([0.78, 0.62, 0.36]) + rng.uniform(-0.06, 0.06, size=3)
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius * radius
        img[:, mask] = 0.15 * img[:, mask] + 0.85 * color[:, None]


def _paint_salt(img: np.ndarray, rng: np.random.Generator) -> None:
    n = int(rng.integers(130, 170))
    ys = rng.integers(0, IMAGE_SIZE, size=n)
    xs = rng.integers(0, IMAGE_SIZE, size=n)
    img[:, ys, xs] = rng.uniform(0.80, 0.93, size=n)[None, :]


def _paint_pepper(img: np.ndarray, rng: np.random.Generator) -> None:
    n = int(rng.integers(130, 170))
    ys = rng.integers(0, IMAGE_SIZE, size=n)
    xs = rng.integers(0, IMAGE_SIZE, size=n)
    img[:, ys, xs] = rng.uniform(0.06, 0.16, size=n)[None, :]


_OIL_PALETTE = (
    (0.52, 0.10, 0.12),
    (0.36, 0.14, 0.44),
    (0.06, 0.33, 0.36),
    (0.45, 0.42, 0.10),
)
_SPATTER_PALETTE = _OIL_PALETTE + (
    (0.05, 0.04, 0.06),
    (0.95, 0.85, 0.20),
    (0.90, 0.15, 0.10),
)


def _paint_oil(img: np.ndarray, rng: np.random.Generator) -> None:
    # translucent streaked blobs tint the water; hard-edged spatter droplets
    # carry the variance so this layer always reads cloudier than the last
    yy, xx = np.mgrid[0:IMAGE_SIZE, 0:IMAGE_SIZE]
    for _ in range(int(rng.integers(3, 6))):
        cy, cx = rng.uniform(4, IMAGE_SIZE - 4, size=2)
        sy, sx = rng.uniform(4.0, 10.0, size=2)
        theta = rng.uniform(0.0, np.pi)
        phase = rng.uniform(0.0, 2 * np.pi)
        color = np.asarray(_OIL_PALETTE[int(rng.integers(0, len(_OIL_PALETTE)))])
        dy, dx = yy - cy, xx - cx
        u = np.cos(theta) * dx + np.sin(theta) * dy
        v = -np.sin(theta) * dx + np.cos(theta) * dy
        alpha = 0.22 * np.exp(-(u * u / (2 * sx * sx) + v * v / (2 * sy * sy)))
        streak = 1.0 + 0.5 * np.sin(2 * np.pi * u / 5.0 + phase)
        paint = np.clip(color[:, None, None] * streak[None], 0.0, 1.0)
        img[:] = (1.0 - alpha[None]) * img + alpha[None] * paint
    palette = np.asarray(_SPATTER_PALETTE)
    for _ in range(int(rng.integers(70, 90))):
        cy, cx = rng.integers(1, IMAGE_SIZE - 1, size=2)
        radius = float(rng.uniform(0.8, 1.8))
        color = palette[int(rng.integers(0, len(palette)))]
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius * radius
        img[:, mask] = 0.1 * img[:, mask] + 0.9 * color[:, None]


_CONTAMINANT_LAYERS = {1: _paint_sand, 2: _paint_salt, 3: _paint_pepper, 4: _paint_oil}


def generate_sample(tint: str, stage: int, darkness: float, seed: int) -> ImageSample:
    """Render one sample deterministically from (tint, stage, darkness, seed)."""
    if tint not in TINTS:
        raise ValueError(f"unknown tint {tint!r}, expected one of {TINTS}")
    if stage not in STAGES:
        raise ValueError(f"stage must be 0..4, got {stage!r}")
    if not 0.0 <= darkness <= 1.0:
        raise ValueError(f"darkness must be in [0, 1], got {darkness}")

    img = _render_clean(tint, seed)
    for k in range(1, stage + 1):
        _CONTAMINANT_LAYERS[k](img, make_rng(seed, f"layer{k}"))
    img *= 1.0 - 0.7 * darkness
    np.clip(img, 0.0, 1.0, out=img)
    label = LABEL_CLEAN if stage == 0 else LABEL_CONTAMINATED
    return ImageSample(pixels=img, label=label, tint=tint, stage=stage,
                       darkness=darkness, seed=seed)


def generate_dataset(seed: int) -> list[ImageSample]:
    """The full 105-image dataset for a master seed: 49 clean, 56 contaminated,
    14 contaminated per stage.  Composition is identical for every seed."""
    plan: list[tuple[str, int, float]] = []
    colors = tuple(TINT_COLORS)
    # first round, clean: 28 untinted (14 bright, 14 lights-off) + 7 tinted
    plan += [("none", 0, 0.0)] * 14
    plan += [("none", 0, 0.9)] * 14
    plan += [(color, 0, 0.0) for color in colors]
    # second round, clean: 14 untinted across the darkness range
    plan += [("none", 0, round(i / 13.0, 4)) for i in range(14)]
    # contaminated: 7 untinted + 7 tinted per stage
    for stage in (1, 2, 3, 4):
        plan += [("none", stage, 0.0)] * 7
    for stage in (1, 2, 3, 4):
        plan += [(color, stage, 0.0) for color in colors]

    seeds = derive_seeds(seed, len(plan), "samples")
    samples = []
    for i, ((tint, stage, darkness), sample_seed) in enumerate(zip(plan, seeds)):
        sample = generate_sample(tint, stage, darkness, sample_seed)
        sample.name = f"img_{i:03d}"
        samples.append(sample)
    return samples


def dataset_counts(samples: Sequence[ImageSample]) -> dict:
    per_stage = {str(s): 0 for s in STAGES[1:]}
    clean = contaminated = 0
    for sample in samples:
        if sample.label == LABEL_CLEAN:
            clean += 1
        else:
            contaminated += 1
            per_stage[str(sample.stage)] += 1
    return {"clean": clean, "contaminated": contaminated, "per_stage": per_stage}


def encode_png(pixels: np.ndarray) -> bytes:
    """8-bit RGB PNG of a [3,H,W] float image in [0,1]."""
    arr = np.clip(np.rint(pixels * 255.0), 0, 255).astype(np.uint8)
    image = Image.fromarray(arr.transpose(1, 2, 0), mode="RGB")
    buf = io.BytesIO()
    image.save(buf, format="PNG")
    return buf.getvalue()


def decode_and_resize(data: bytes) -> np.ndarray:
    """Decode PNG/JPEG bytes to a [3,64,64] float array in [0,1], resampling
    bilinearly when the source is not already 64x64."""
    try:
        image = Image.open(io.BytesIO(data))
        image.load()
    except UnidentifiedImageError as exc:
        raise ImageFormatError("cannot decode image: not a recognized PNG or JPEG") from exc
    except Exception as exc:
        raise ImageFormatError(f"cannot decode image: {exc}") from exc
    if image.width == 0 or image.height == 0:
        raise InvalidImageError("image has a zero dimension")
    image = image.convert("RGB")
    if image.size != (IMAGE_SIZE, IMAGE_SIZE):
        image = image.resize((IMAGE_SIZE, IMAGE_SIZE), Image.BILINEAR)
    arr = np.asarray(image, dtype=np.float64) / 255.0
    return arr.transpose(2, 0, 1)


def normalize_brightness(pixels: np.ndarray, target: float = 0.5) -> np.ndarray:
    """Linearly rescale so mean luminance hits `target`, clipping to [0,1].

    When clipping eats part of the rescale the factor is re-derived a few
    times, so ordinary photos land within 1e-3 of the target.  An all-black
    image cannot be rescaled and is returned unchanged with a logged warning.
    """
    if pixels.min() < 0.0 or pixels.max() > 1.0:
        raise ValueError("pixel values must lie in [0, 1]")
    out = np.array(pixels, dtype=np.float64, copy=True)
    mean = float(luminance(out).mean())
    if mean <= 0.0:
        log.warning("normalize_brightness: all-black image left unchanged")
        return out
    if abs(mean - target) <= 1e-6:
        return out
    for _ in range(10):
        out = np.clip(out * (target / mean), 0.0, 1.0)
        mean = float(luminance(out).mean())
        if abs(mean - target) <= 1e-9:
            break
    return out


def write_dataset(samples: Sequence[ImageSample], out_dir) -> Path:
    """Write PNGs plus manifest.json; byte-identical for identical samples."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for sample in samples:
        filename = f"{sample.name}.png"
        (out_dir / filename).write_bytes(encode_png(sample.pixels))
        entries.append({
            "file": filename,
            "label": sample.label,
            "tint": sample.tint,
            "stage": sample.stage,
            "darkness": sample.darkness,
            "seed": sample.seed,
        })
    manifest = {
        "format": "aquasight-dataset",
        "version": MANIFEST_VERSION,
        "counts": dataset_counts(samples),
        "entries": entries,
    }
    manifest_path = out_dir / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def load_dataset(data_dir) -> list[ImageSample]:
    """Load a dataset directory, verifying the manifest and every file."""
    data_dir = Path(data_dir)
    manifest_path = data_dir / MANIFEST_NAME
    if not manifest_path.exists():
        raise DatasetError(f"no {MANIFEST_NAME} in {data_dir}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DatasetError(f"unreadable manifest: {exc}") from exc
    if manifest.get("format") != "aquasight-dataset":
        raise DatasetError("manifest is not an aquasight dataset manifest")
    if manifest.get("version") != MANIFEST_VERSION:
        raise DatasetError(f"unsupported manifest version {manifest.get('version')}")

    entries = manifest.get("entries", [])
    counts = manifest.get("counts", {})
    clean = sum(1 for e in entries if e["label"] == LABEL_CLEAN)
    if counts.get("clean") != clean or counts.get("contaminated") != len(entries) - clean:
        raise DatasetError("manifest counts do not match its entries")

    samples = []
    for entry in entries:
        path = data_dir / entry["file"]
        if not path.exists():
            raise DatasetError(f"manifest references missing file {entry['file']}")
        pixels = decode_and_resize(path.read_bytes())
        samples.append(ImageSample(
            pixels=pixels,
            label=int(entry["label"]),
            tint=entry.get("tint", "none"),
            stage=int(entry.get("stage", 0)),
            darkness=float(entry.get("darkness", 0.0)),
            source="file",
            seed=entry.get("seed"),
            name=Path(entry["file"]).stem,
        ))
    return samples
