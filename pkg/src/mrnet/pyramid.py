"""Gaussian pyramids and towers.

The pyramid halves resolution per level with the binomial (1,4,6,4,1)/16
filter and mirror boundaries, stopping at a base resolution. The tower
keeps every level at full resolution by cascading the same filter with its
scale doubled each step, which tracks the pyramid's blur without the
decimation. Both are ordered coarse to fine.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image import save_image

KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def _blur_axis(img: np.ndarray, axis: int, dilation: int = 1) -> np.ndarray:
    """Separable binomial blur along one axis with mirrored edges.

    ``dilation`` spaces the taps (a filter with holes); the mirror pad
    reflects about the edge sample so the border pixel is not doubled.
    """
    pad = 2 * dilation
    widths = [(0, 0)] * img.ndim
    widths[axis] = (pad, pad)
    padded = np.pad(img, widths, mode="reflect")
    out = np.zeros_like(img)
    n = img.shape[axis]
    idx = [slice(None)] * img.ndim
    for tap, coeff in enumerate(KERNEL):
        start = tap * dilation
        idx[axis] = slice(start, start + n)
        out += coeff * padded[tuple(idx)]
    return out


def blur(img: np.ndarray, dilation: int = 1) -> np.ndarray:
    return _blur_axis(_blur_axis(img, 0, dilation), 1, dilation)


def gaussian_reduce(img: np.ndarray) -> np.ndarray:
    """Blur then keep even-indexed rows and columns; resolution halves exactly."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim not in (2, 3):
        raise ValueError(f"expected (h, w) or (h, w, c) image, got shape {img.shape}")
    h, w = img.shape[:2]
    if h % 2 or w % 2 or h < 2 or w < 2:
        raise ValueError(f"reduction needs even dimensions >= 2, got {h}x{w}")
    return blur(img)[::2, ::2]


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def num_levels(side: int, base_res: int) -> int:
    """Dyadic level count from finest side down to the base resolution."""
    if not _is_pow2(side) or not _is_pow2(base_res):
        raise ValueError(f"side and base_res must be powers of two, got {side}, {base_res}")
    if side < base_res:
        raise ValueError(f"side {side} is below the base resolution {base_res}")
    return side.bit_length() - base_res.bit_length() + 1


@dataclass
class Pyramid:
    """Multiresolution training targets: images coarse to fine."""

    levels: list[np.ndarray]
    kind: str  # "pyramid" (dyadic sizes) or "tower" (all full size)

    def __post_init__(self) -> None:
        if self.kind not in ("pyramid", "tower"):
            raise ValueError(f"kind must be 'pyramid' or 'tower', got {self.kind!r}")
        if not self.levels:
            raise ValueError("a pyramid needs at least one level")
        sizes = [lvl.shape[:2] for lvl in self.levels]
        if self.kind == "pyramid":
            ok = all(
                b == (2 * a[0], 2 * a[1]) for a, b in zip(sizes, sizes[1:])
            )
            if not ok:
                raise ValueError(f"pyramid levels must double in size, got {sizes}")
        elif any(s != sizes[0] for s in sizes):
            raise ValueError(f"tower levels must share one size, got {sizes}")

    @property
    def num_levels(self) -> int:
        return len(self.levels)


def build_pyramid(img: np.ndarray, base_res: int = 8) -> Pyramid:
    """Reduce a square power-of-two image down to ``base_res``, coarsest first.

    A 512 image with base 8 yields 7 levels sized 8 through 512; the finest
    level is the input unchanged.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    if h != w:
        raise ValueError(f"pyramid input must be square, got {h}x{w}")
    count = num_levels(h, base_res)
    out = [img]
    for _ in range(count - 1):
        out.append(gaussian_reduce(out[-1]))
    return Pyramid(levels=out[::-1], kind="pyramid")


def build_tower(img: np.ndarray, levels: int) -> Pyramid:
    """Blur-only counterpart of the pyramid: every level keeps full resolution.

    Moving coarser applies one more pass of the binomial filter with its tap
    spacing doubled each time, so the effective blur width doubles per level
    like the pyramid's. Ordered most-blurred first; the finest level is the
    input unchanged.
    """
    img = np.asarray(img, dtype=np.float64)
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    out = [img]
    for k in range(1, levels):
        out.append(blur(out[-1], dilation=2 ** (k - 1)))
    return Pyramid(levels=out[::-1], kind="tower")


def build_targets(img: np.ndarray, base_res: int = 8, kind: str = "pyramid") -> Pyramid:
    """Pyramid or tower with the dyadic level count implied by ``base_res``."""
    if kind == "pyramid":
        return build_pyramid(img, base_res)
    if kind == "tower":
        img = np.asarray(img, dtype=np.float64)
        h, w = img.shape[:2]
        if h != w:
            raise ValueError(f"tower input must be square, got {h}x{w}")
        return build_tower(img, num_levels(h, base_res))
    raise ValueError(f"kind must be 'pyramid' or 'tower', got {kind!r}")


def prepare_image(img: np.ndarray, policy: str = "pad") -> np.ndarray:
    """Make both sides the same power of two so every reduction lands evenly.

    ``pad`` mirrors out to the next power of two of the longer side;
    ``crop`` center-crops to the previous power of two of the shorter side.
    Images already square with power-of-two sides pass through unchanged.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    if policy == "pad":
        side = 1 << (max(h, w) - 1).bit_length()  # next power of two >= longer side
        if h == w == side:
            return img
        widths = [(0, side - h), (0, side - w)] + [(0, 0)] * (img.ndim - 2)
        return np.pad(img, widths, mode="reflect")
    if policy == "crop":
        side = 1 << (min(h, w).bit_length() - 1)
        if h == w == side:
            return img
        top, left = (h - side) // 2, (w - side) // 2
        return img[top : top + side, left : left + side]
    raise ValueError(f"policy must be 'pad' or 'crop', got {policy!r}")


def save_levels(pyr: Pyramid, out_dir: str | Path, prefix: str = "level") -> list[Path]:
    """Write each level as ``level_0.png`` (coarsest) upward; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, lvl in enumerate(pyr.levels):
        p = out_dir / f"{prefix}_{k}.png"
        save_image(p, lvl)
        paths.append(p)
    return paths
