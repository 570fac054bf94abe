"""Continuous level-of-detail reconstruction and perspective warping.

A trained network reconstructs at any resolution and any fractional level
lambda: stages at or below floor(lambda) contribute fully, the next stage
contributes the fractional part, the rest are off. Perspective rendering
picks lambda per pixel from the projective map's Jacobian (the classic
texel-footprint rule), so minified regions blend toward coarse stages and
aliasing is filtered out by construction.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .model import MRNet, stage_forward
from .sampling import coords_grid

CHUNK = 65536


class HorizonError(RuntimeError):
    """The projective horizon (w = 0) crosses the rendered screen region."""

    def __init__(self, pixels: list[tuple[int, int]], total: int):
        self.pixels = pixels
        self.total = total
        shown = ", ".join(f"({r}, {c})" for r, c in pixels)
        more = "" if total <= len(pixels) else f" and {total - len(pixels)} more"
        super().__init__(f"homography horizon crosses {total} screen pixels: {shown}{more}")


def lod_weights(lambda_level: float, n_stages: int) -> np.ndarray:
    """Stage blend weights for a fractional level.

    lambda is clamped into [1, n_stages]; stage i gets
    clip(lambda - (i - 1), 0, 1), i.e. ones up to floor(lambda), the
    fractional part at the next stage, zeros beyond.
    """
    if n_stages < 1:
        raise ValueError("n_stages must be >= 1")
    lam = float(np.clip(lambda_level, 1.0, n_stages))
    return np.clip(lam - np.arange(n_stages, dtype=np.float64), 0.0, 1.0)


def lod_weight_matrix(lambdas: np.ndarray, n_stages: int) -> np.ndarray:
    """Per-point weight vectors: row k is lod_weights(lambdas[k], n_stages)."""
    if n_stages < 1:
        raise ValueError("n_stages must be >= 1")
    lam = np.clip(np.asarray(lambdas, dtype=np.float64), 1.0, n_stages)
    return np.clip(lam[:, None] - np.arange(n_stages, dtype=np.float64)[None, :], 0.0, 1.0)


def _stage_outputs_nograd(net: MRNet, coords: np.ndarray) -> list[np.ndarray]:
    outs = []
    prev = None
    for i in range(1, net.num_stages + 1):
        st = stage_forward(net, i, coords, prev)
        outs.append(st.output)
        prev = st.hidden_out
    return outs


def evaluate_points(
    net: MRNet,
    coords: np.ndarray,
    weights: np.ndarray | Sequence[float] | None = None,
    chunk: int = CHUNK,
) -> np.ndarray:
    """Blended network output at arbitrary coordinates, evaluated in chunks.

    ``weights`` may be None (all ones), a length-N vector, or an (n, N)
    matrix of per-point vectors. Stages with weight exactly 0 or 1 take
    exact fast paths, so integer levels recompose partial sums bit-for-bit.
    """
    coords = np.ascontiguousarray(coords, dtype=net.dtype)
    if coords.ndim != 2 or coords.shape[1] != net.input_dim:
        raise ValueError(f"coords must be (n, {net.input_dim}), got {coords.shape}")
    n = coords.shape[0]
    n_stages = net.num_stages
    per_point = None
    fixed = None
    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape == (n_stages,):
            fixed = w
        elif w.shape == (n, n_stages):
            per_point = w
        else:
            raise ValueError(
                f"weights must be ({n_stages},) or ({n}, {n_stages}), got {w.shape}"
            )
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("stage weights must lie in [0, 1]")

    out = np.zeros((n, net.channels), dtype=net.dtype)
    for lo in range(0, n, chunk):
        sl = slice(lo, min(lo + chunk, n))
        acc = np.zeros((sl.stop - lo, net.channels), dtype=net.dtype)
        for i, g in enumerate(_stage_outputs_nograd(net, coords[sl])):
            if per_point is not None:
                acc += per_point[sl, i : i + 1] * g
            elif fixed is None or fixed[i] == 1.0:
                acc += g
            elif fixed[i] != 0.0:
                acc += fixed[i] * g
        out[sl] = acc
    return out


def stage_images(net: MRNet, out_res: int) -> list[np.ndarray]:
    """Each stage's detail band rendered on an out_res grid (unclamped)."""
    coords = coords_grid(out_res)
    shape = (out_res, out_res) if net.channels == 1 else (out_res, out_res, net.channels)
    images = [np.zeros(shape, dtype=net.dtype) for _ in range(net.num_stages)]
    n = coords.shape[0]
    for lo in range(0, n, CHUNK):
        sl = slice(lo, min(lo + CHUNK, n))
        for img, g in zip(images, _stage_outputs_nograd(net, coords[sl])):
            img.reshape(n, -1)[sl] = g
    return images


def reconstruct(
    net: MRNet,
    out_res: int,
    lambda_level: float | None = None,
    clamp: bool = True,
) -> np.ndarray:
    """Render the represented signal at ``out_res`` and fractional level lambda.

    lambda defaults to the finest level (full detail) and is clamped into
    [1, N]. The result is an (out_res, out_res[, channels]) image, clipped
    to [0, 1] unless ``clamp`` is False.
    """
    if out_res < 1:
        raise ValueError("out_res must be >= 1")
    lam = net.num_stages if lambda_level is None else lambda_level
    w = lod_weights(lam, net.num_stages)
    flat = evaluate_points(net, coords_grid(out_res), w)
    img = flat.reshape((out_res, out_res)) if net.channels == 1 else flat.reshape(
        (out_res, out_res, net.channels)
    )
    return np.clip(img, 0.0, 1.0) if clamp else img


def validate_homography(H: np.ndarray | Sequence[float]) -> np.ndarray:
    """Coerce to a 3x3 float matrix and reject singular or non-finite input."""
    H = np.asarray(H, dtype=np.float64)
    if H.size == 9:
        H = H.reshape(3, 3)
    if H.shape != (3, 3):
        raise ValueError(f"homography must be 3x3 (or 9 flat values), got shape {H.shape}")
    if not np.all(np.isfinite(H)):
        raise ValueError("homography contains non-finite entries")
    if abs(np.linalg.det(H)) < 1e-12:
        raise ValueError("homography is singular")
    return H


def load_homography(path: str | Path) -> np.ndarray:
    """Read a homography from JSON: either 9 numbers or 3 rows of 3."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        if "H" not in data:
            raise ValueError(f"homography JSON object needs an 'H' key, got {sorted(data)}")
        data = data["H"]
    return validate_homography(np.asarray(data, dtype=np.float64))


def _projective_partials(
    H: np.ndarray, sx: np.ndarray, sy: np.ndarray
) -> tuple[np.ndarray, ...]:
    """u, v and the four partials of the inhomogeneous map at normalized coords."""
    U = H[0, 0] * sx + H[0, 1] * sy + H[0, 2]
    V = H[1, 0] * sx + H[1, 1] * sy + H[1, 2]
    W = H[2, 0] * sx + H[2, 1] * sy + H[2, 2]
    # points on the horizon (W = 0) produce inf/nan here; callers detect and
    # raise before the values are used
    with np.errstate(divide="ignore", invalid="ignore"):
        u = U / W
        v = V / W
        du_dx = (H[0, 0] - u * H[2, 0]) / W
        du_dy = (H[0, 1] - u * H[2, 1]) / W
        dv_dx = (H[1, 0] - v * H[2, 0]) / W
        dv_dy = (H[1, 1] - v * H[2, 1]) / W
    return u, v, W, du_dx, du_dy, dv_dx, dv_dy

HORIZON_EPS = 1e-9


def heckbert_lambda(
    H: np.ndarray,
    x: np.ndarray | float,
    y: np.ndarray | float,
    tex_res: int,
    screen_res: int,
) -> np.ndarray | float:
    """Texel footprint per screen pixel for a projective screen-to-texture map.

    ``x`` and ``y`` are screen pixel indices (column, row) on a
    screen_res-wide grid; ``H`` maps normalized screen coordinates in
    [-1, 1]^2 to normalized texture coordinates. The result is the longer
    side of the pixel's image in texel units: the max of the two Jacobian
    column norms, converted by tex_res/screen_res. Pixels on the projective
    horizon raise :class:`HorizonError`.
    """
    H = validate_homography(H)
    if tex_res < 1 or screen_res < 1:
        raise ValueError("tex_res and screen_res must be >= 1")
    x_arr, y_arr = np.broadcast_arrays(
        np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    )
    sx = -1.0 + (2.0 * x_arr + 1.0) / screen_res
    sy = -1.0 + (2.0 * y_arr + 1.0) / screen_res
    _, _, W, du_dx, du_dy, dv_dx, dv_dy = _projective_partials(H, sx, sy)
    bad = np.abs(W) < HORIZON_EPS
    if np.any(bad):
        rows = np.atleast_1d(y_arr)[np.atleast_1d(bad)][:10]
        cols = np.atleast_1d(x_arr)[np.atleast_1d(bad)][:10]
        pixels = [(int(r), int(c)) for r, c in zip(rows, cols)]
        raise HorizonError(pixels, int(np.count_nonzero(bad)))
    col_x = np.sqrt(du_dx**2 + dv_dx**2)
    col_y = np.sqrt(du_dy**2 + dv_dy**2)
    lam = np.maximum(col_x, col_y) * (tex_res / screen_res)
    return float(lam) if np.isscalar(x) and np.isscalar(y) else lam


def lambda_to_level(lambda_texels: np.ndarray | float, n_stages: int) -> np.ndarray | float:
    """Map texel footprint to a fractional stage level, octave rule.

    One texel per pixel (or finer) selects the finest stage; every doubling
    of the footprint drops one stage; clamped to [1, n_stages].
    """
    if n_stages < 1:
        raise ValueError("n_stages must be >= 1")
    lam = np.maximum(np.asarray(lambda_texels, dtype=np.float64), 1.0)
    level = np.clip(n_stages - np.log2(lam), 1.0, float(n_stages))
    return float(level) if np.isscalar(lambda_texels) else level


def _linear_levels(lambdas: np.ndarray, n_stages: int) -> np.ndarray:
    """Affine rescale of the footprint range onto [0, N], inverted so the
    smallest footprint gets the finest stage. Depends on the global range,
    which is why the octave rule is the default."""
    lo, hi = float(lambdas.min()), float(lambdas.max())
    if hi == lo:
        return np.full_like(lambdas, float(n_stages))
    scaled = (lambdas - lo) / (hi - lo) * n_stages
    return np.clip(n_stages - scaled, 1.0, float(n_stages))


def warp_render(
    net: MRNet,
    H: np.ndarray | Sequence[float],
    out_res: int,
    antialias: bool = True,
    tex_res: int | None = None,
    level_mode: str = "octave",
    background: float = 0.0,
) -> np.ndarray:
    """Render the texture under a projective screen-to-texture map.

    Each screen pixel center maps through ``H`` to texture coordinates;
    pixels landing outside [-1, 1]^2 take the background value. With
    ``antialias`` the per-pixel Heckbert footprint chooses a fractional
    level, so heavily minified regions are reconstructed from coarse stages
    only. ``tex_res`` is the texture's native resolution (defaults to
    out_res). A horizon crossing the screen raises :class:`HorizonError`.
    """
    H = validate_homography(H)
    if out_res < 1:
        raise ValueError("out_res must be >= 1")
    if level_mode not in ("octave", "linear"):
        raise ValueError(f"level_mode must be 'octave' or 'linear', got {level_mode!r}")
    tex_res = out_res if tex_res is None else tex_res

    screen = coords_grid(out_res)
    sx, sy = screen[:, 0], screen[:, 1]
    u, v, W, du_dx, du_dy, dv_dx, dv_dy = _projective_partials(H, sx, sy)
    bad = np.abs(W) < HORIZON_EPS
    if np.any(bad):
        flat = np.flatnonzero(bad)
        pixels = [(int(k // out_res), int(k % out_res)) for k in flat[:10]]
        raise HorizonError(pixels, int(flat.size))

    inside = (np.abs(u) <= 1.0) & (np.abs(v) <= 1.0)
    shape = (out_res, out_res) if net.channels == 1 else (out_res, out_res, net.channels)
    out = np.full(shape, background, dtype=np.float64)
    if not np.any(inside):
        return out

    tex_coords = np.stack([u[inside], v[inside]], axis=1)
    if antialias:
        scale = tex_res / out_res
        lam = np.maximum(np.sqrt(du_dx**2 + dv_dx**2), np.sqrt(du_dy**2 + dv_dy**2)) * scale
        lam = lam[inside]
        levels = lambda_to_level(lam, net.num_stages) if level_mode == "octave" else _linear_levels(lam, net.num_stages)
        weights = lod_weight_matrix(np.asarray(levels), net.num_stages)
        values = evaluate_points(net, tex_coords, weights)
    else:
        values = evaluate_points(net, tex_coords)
    out.reshape(out_res * out_res, -1)[inside] = np.clip(values, 0.0, 1.0)
    return out


def zoom_reconstruct(net: MRNet, source_res: int, out_res: int) -> np.ndarray:
    """Resample the represented image to a new size with matched detail.

    Shrinking below the source resolution lowers the level by the octave
    rule (area-weighted low-pass comes from the coarse stages); enlarging
    keeps full detail and lets the network interpolate.
    """
    if source_res < 1 or out_res < 1:
        raise ValueError("resolutions must be >= 1")
    level = lambda_to_level(source_res / out_res, net.num_stages)
    return reconstruct(net, out_res, level)
