"""Synthetic test images with known structure."""

from __future__ import annotations

import numpy as np


def make_checkerboard(res: int, square: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """A res x res checkerboard with ``square``-pixel cells, top-left cell ``low``."""
    if res < 1 or square < 1:
        raise ValueError(f"res and square must be positive, got {res}, {square}")
    idx = np.arange(res) // square
    parity = (idx[:, None] + idx[None, :]) % 2
    return np.where(parity == 0, low, high).astype(np.float64)


def make_ramp(res: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Diagonal linear ramp from ``lo`` at the top-left to ``hi`` at the bottom-right."""
    t = np.arange(res, dtype=np.float64)
    diag = (t[:, None] + t[None, :]) / max(2 * (res - 1), 1)
    return lo + (hi - lo) * diag


def make_test_scene(res: int = 128, seed: int = 7) -> np.ndarray:
    """A natural-ish grayscale target: ramp plus softened checker plus smooth bumps.

    Mixes low-frequency structure (ramp, Gaussian bumps) with mid-frequency
    texture (blurred checkerboard) so multiresolution fits have work to do at
    every level. Values stay inside [0.05, 0.95] before quantization.
    """
    rng = np.random.default_rng(seed)
    img = make_ramp(res, 0.25, 0.75)

    checker = make_checkerboard(res, max(res // 16, 2), -1.0, 1.0)
    k = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
    for axis in (0, 1):
        checker = np.apply_along_axis(
            lambda r: np.convolve(np.pad(r, 2, mode="reflect"), k, mode="valid"),
            axis,
            checker,
        )
    img = img + 0.12 * checker

    yy, xx = np.meshgrid(np.linspace(-1, 1, res), np.linspace(-1, 1, res), indexing="ij")
    for _ in range(4):
        cx, cy = rng.uniform(-0.7, 0.7, size=2)
        amp = rng.uniform(-0.15, 0.15)
        sigma = rng.uniform(0.15, 0.4)
        img = img + amp * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma**2))

    return np.clip(img, 0.05, 0.95)
