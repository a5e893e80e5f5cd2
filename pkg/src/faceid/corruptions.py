"""Reproducible synthetic occlusion and pixel corruption."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataio import resize_nearest
from .errors import ConfigError, GeometryError
from .model import FaceVector, matricize, vectorize


def philox_stream(*entropy) -> np.random.Generator:
    """Counter-based Philox generator keyed by an entropy tuple of ints.

    Philox is stateless-counter based with published test vectors, so the
    same entropy always reproduces the same draws on any platform.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class CorruptionSpec:
    """What was corrupted: parameters, placement, and the exact pixel mask."""

    kind: str
    seed: int
    mask: np.ndarray
    coverage: Optional[float] = None
    pixel_fraction: Optional[float] = None
    block: Optional[tuple] = None

    @property
    def actual_coverage(self) -> float:
        return float(self.mask.mean())

    def to_record(self) -> str:
        """JSON summary (mask omitted; placement and counts identify it)."""
        return json.dumps(
            {
                "kind": self.kind,
                "seed": self.seed,
                "coverage": self.coverage,
                "pixel_fraction": self.pixel_fraction,
                "block": list(self.block) if self.block else None,
                "masked_pixels": int(self.mask.sum()),
                "actual_coverage": self.actual_coverage,
            },
            sort_keys=True,
        )


def _occlude(img: FaceVector, patch, coverage: float, rng: np.random.Generator):
    geom = img.geometry
    rows, cols = geom.shape
    if not 0.0 < coverage < 1.0:
        raise ConfigError(f"block coverage must be in (0, 1), got {coverage}")
    patch = np.asarray(patch, dtype=float)
    if patch.ndim != 2 or patch.size == 0:
        raise GeometryError(f"patch must be a nonempty 2-d grid, got shape {patch.shape}")
    side = int(round(math.sqrt(coverage * geom.d)))
    side = max(1, min(side, rows, cols))
    top = int(rng.integers(0, rows - side + 1))
    left = int(rng.integers(0, cols - side + 1))
    grid = matricize(img).copy()
    grid[top : top + side, left : left + side] = resize_nearest(patch, side, side)
    mask = np.zeros(geom.shape, dtype=bool)
    mask[top : top + side, left : left + side] = True
    return vectorize(grid), mask, (top, left, side)


def _corrupt_pixels(img: FaceVector, fraction: float, rng: np.random.Generator):
    geom = img.geometry
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"pixel fraction must be in [0, 1], got {fraction}")
    count = int(math.floor(fraction * geom.d))
    values = img.values.copy()
    flat_mask = np.zeros(geom.d, dtype=bool)
    if count > 0:  # draw nothing at fraction 0 so the stream is untouched
        idx = rng.choice(geom.d, size=count, replace=False)
        values[idx] = rng.integers(0, 256, size=count) / 255.0
        flat_mask[idx] = True
    mask = flat_mask.reshape(geom.shape, order="F")
    return FaceVector(values, geom), mask


def occlude_block(img: FaceVector, patch, coverage: float, seed: int):
    """Paste a resampled patch over one random square block.

    The block side is round(sqrt(coverage * d)) clamped to the image sides,
    its corner is uniform over feasible placements (top drawn before left),
    and the patch is nearest-neighbor resampled to the block.

    Returns:
        (corrupted FaceVector, CorruptionSpec with the boolean mask grid).
    """
    rng = philox_stream(seed)
    out, mask, block = _occlude(img, patch, coverage, rng)
    return out, CorruptionSpec(kind="block", seed=int(seed), mask=mask, coverage=coverage, block=block)


def corrupt_pixels(img: FaceVector, fraction: float, seed: int):
    """Replace floor(fraction * d) distinct pixels by uniform 8-bit noise.

    Corrupted positions are a uniform draw without replacement; new values
    are integers 0..255 scaled to [0, 1].
    """
    rng = philox_stream(seed)
    out, mask = _corrupt_pixels(img, fraction, rng)
    return out, CorruptionSpec(kind="pixels", seed=int(seed), mask=mask, pixel_fraction=fraction)


def mixture_noise(img: FaceVector, pixel_fraction: float, coverage: float, patch, seed: int):
    """Pixel corruption followed by block occlusion from one Philox stream.

    The pixel stage draws first; with pixel_fraction 0 it draws nothing, so
    the result degenerates to occlude_block with the same seed. The reported
    mask is the union of both stages.
    """
    rng = philox_stream(seed)
    speckled, pixel_mask = _corrupt_pixels(img, pixel_fraction, rng)
    out, block_mask, block = _occlude(speckled, patch, coverage, rng)
    return out, CorruptionSpec(
        kind="mixture",
        seed=int(seed),
        mask=pixel_mask | block_mask,
        coverage=coverage,
        pixel_fraction=pixel_fraction,
        block=block,
    )


def textured_patch(rows: int = 64, cols: int = 64, seed: int = 1234) -> np.ndarray:
    """Deterministic high-frequency occluder texture in [0, 1].

    A fixed mix of fine checkers, oriented stripes, and Philox speckle; keeps
    strong local contrast at any resampled size so occluded pixels look
    nothing like face pixels.
    """
    if rows < 1 or cols < 1:
        raise GeometryError(f"patch shape must be positive, got {rows}x{cols}")
    r = np.arange(rows)[:, None]
    c = np.arange(cols)[None, :]
    checker = ((r // 2 + c // 2) % 2).astype(float)
    stripes = 0.5 + 0.5 * np.sin(2.0 * math.pi * (3.0 * r / rows + 7.0 * c / cols))
    speckle = philox_stream(seed).uniform(0.0, 1.0, size=(rows, cols))
    patch = 0.45 * checker + 0.3 * stripes + 0.25 * speckle
    lo, hi = patch.min(), patch.max()
    return (patch - lo) / (hi - lo)
