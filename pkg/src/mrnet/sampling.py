"""Coordinate grids and training sample sets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import sample_bilinear


def axis_coords(res: int) -> np.ndarray:
    """Pixel-center positions on [-1, 1]: x_j = -1 + (2j + 1) / res."""
    if res < 1:
        raise ValueError(f"res must be >= 1, got {res}")
    return -1.0 + (2.0 * np.arange(res) + 1.0) / res


def coords_grid(res: int, res_y: int | None = None) -> np.ndarray:
    """Row-major (x, y) pairs for a res x res grid (or res_y rows by res columns).

    Row i, column j maps to flat index i * res + j and coordinate
    (x_j, y_i), matching how image arrays flatten.
    """
    res_y = res if res_y is None else res_y
    x = axis_coords(res)
    y = axis_coords(res_y)
    xx, yy = np.meshgrid(x, y)  # xx varies along columns, yy along rows
    return np.stack([xx.ravel(), yy.ravel()], axis=1)


@dataclass
class SampleSet:
    """Flat training pairs: coordinates in [-1, 1]^2 and their target values."""

    coords: np.ndarray  # (n, 2)
    values: np.ndarray  # (n, channels)
    res: tuple[int, int]  # (h, w) of the source grid
    level_index: int = 0

    def __post_init__(self) -> None:
        if self.coords.ndim != 2 or self.coords.shape[1] != 2:
            raise ValueError(f"coords must be (n, 2), got {self.coords.shape}")
        if self.values.ndim != 2 or self.values.shape[0] != self.coords.shape[0]:
            raise ValueError(
                f"values {self.values.shape} do not pair with coords {self.coords.shape}"
            )

    @property
    def size(self) -> int:
        return self.coords.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]


def _flat_values(img: np.ndarray) -> np.ndarray:
    if img.ndim == 2:
        return img.reshape(-1, 1)
    if img.ndim == 3:
        return img.reshape(-1, img.shape[2])
    raise ValueError(f"expected (h, w) or (h, w, c) image, got shape {img.shape}")


def make_samples(
    img: np.ndarray,
    level_index: int = 0,
    sampler: str = "regular",
    stride: int = 2,
    seed: int = 0,
) -> SampleSet:
    """Training pairs from one image.

    ``regular`` takes every pixel center in row-major order; ``subsampled``
    every stride-th pixel along both axes (stride must divide both sides);
    ``stratified`` jitters one point uniformly inside each pixel cell and
    interpolates the target bilinearly.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    if sampler == "regular":
        return SampleSet(
            coords=coords_grid(w, h), values=_flat_values(img), res=(h, w),
            level_index=level_index,
        )
    if sampler == "subsampled":
        if stride < 1 or h % stride or w % stride:
            raise ValueError(f"stride {stride} must divide the {h}x{w} resolution")
        sub = img[::stride, ::stride]
        return SampleSet(
            coords=coords_grid(w // stride, h // stride),
            values=_flat_values(sub),
            res=(h // stride, w // stride),
            level_index=level_index,
        )
    if sampler == "stratified":
        rng = np.random.default_rng(np.random.SeedSequence([seed, level_index]))
        centers = coords_grid(w, h)
        half = np.array([1.0 / w, 1.0 / h])  # half cell size per axis
        jitter = rng.uniform(-1.0, 1.0, size=centers.shape) * half
        coords = centers + jitter
        values = sample_bilinear(img, coords[:, 0], coords[:, 1])
        return SampleSet(
            coords=coords, values=values.reshape(coords.shape[0], -1), res=(h, w),
            level_index=level_index,
        )
    raise ValueError(f"sampler must be regular, subsampled, or stratified, got {sampler!r}")
