"""Image loading, saving, and sampling.

Images are float64 arrays in [0, 1]: shape (h, w) for grayscale, (h, w, 3)
for color. PGM/PPM binary files are read and written directly (the formats
are a dozen lines and this keeps golden files dependency-free); PNG goes
through Pillow, with 16-bit grayscale support for high-precision targets.
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np
from PIL import Image


class ImageFormatError(ValueError):
    """The file is not a readable image of a supported format."""


def _validate(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
        raise ValueError(f"expected (h, w) or (h, w, 3) image, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("image is empty")
    return arr


def to_unit(arr: np.ndarray, max_value: int) -> np.ndarray:
    return np.asarray(arr, dtype=np.float64) / float(max_value)


def quantize(img: np.ndarray, max_value: int = 255) -> np.ndarray:
    """Clip to [0, 1] and round to integer levels."""
    levels = np.rint(np.clip(img, 0.0, 1.0) * max_value)
    return levels.astype(np.uint8 if max_value < 256 else np.uint16)


_PNM_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _read_pnm_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    tokens = []
    pos = 0
    for _ in range(count):
        m = _PNM_TOKEN.match(data, pos)
        if m is None:
            raise ImageFormatError("truncated PNM header")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens, pos


def read_pnm(path: str | Path) -> np.ndarray:
    """Read a binary PGM (P5) or PPM (P6) file into a unit-range float image."""
    data = Path(path).read_bytes()
    if data[:2] not in (b"P5", b"P6"):
        raise ImageFormatError(f"not a binary PGM/PPM file: starts with {data[:2]!r}")
    tokens, pos = _read_pnm_tokens(data, 4)
    magic, w_tok, h_tok, max_tok = tokens
    try:
        w, h, max_value = int(w_tok), int(h_tok), int(max_tok)
    except ValueError as e:
        raise ImageFormatError(f"non-numeric PNM header field: {e}") from None
    if w < 1 or h < 1 or not 0 < max_value < 65536:
        raise ImageFormatError(f"bad PNM dimensions {w}x{h} max {max_value}")
    pos += 1  # single whitespace byte after maxval
    channels = 1 if magic == b"P5" else 3
    itemsize = 1 if max_value < 256 else 2
    need = w * h * channels * itemsize
    raw = data[pos : pos + need]
    if len(raw) < need:
        raise ImageFormatError(f"PNM pixel data truncated: {len(raw)} of {need} bytes")
    dtype = np.uint8 if itemsize == 1 else np.dtype(">u2")
    arr = np.frombuffer(raw, dtype=dtype).reshape(
        (h, w) if channels == 1 else (h, w, 3)
    )
    return to_unit(arr, max_value)


def write_pnm(path: str | Path, img: np.ndarray, max_value: int = 255) -> None:
    """Write a binary PGM/PPM with the canonical single-spacing header."""
    img = _validate(img)
    if not 0 < max_value < 65536:
        raise ValueError(f"max_value must be in 1..65535, got {max_value}")
    magic = "P5" if img.ndim == 2 else "P6"
    levels = quantize(img, max_value)
    if max_value >= 256:
        levels = levels.astype(">u2")
    h, w = img.shape[:2]
    header = f"{magic}\n{w} {h}\n{max_value}\n".encode("ascii")
    Path(path).write_bytes(header + levels.tobytes())


def load_image(path: str | Path) -> np.ndarray:
    """Read PNG/PGM/PPM (and anything else Pillow knows) to unit-range floats."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input not found: {path}")
    if path.suffix.lower() in (".pgm", ".ppm"):
        return read_pnm(path)
    try:
        with Image.open(path) as im:
            if im.mode in ("I;16", "I;16B", "I"):
                return to_unit(np.asarray(im, dtype=np.uint32), 65535)
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB" if ("A" in im.mode or len(im.getbands()) > 2) else "L")
            return to_unit(np.asarray(im), 255)
    except FileNotFoundError:
        raise
    except Exception as e:
        raise ImageFormatError(f"cannot read {path}: {e}") from e


def save_image(path: str | Path, img: np.ndarray, bit_depth: int = 8) -> None:
    """Write PNG (8- or 16-bit grayscale, 8-bit color) or PGM/PPM by extension."""
    img = _validate(img)
    path = Path(path)
    if path.suffix.lower() in (".pgm", ".ppm"):
        write_pnm(path, img, max_value=255 if bit_depth == 8 else 65535)
        return
    if bit_depth == 8:
        Image.fromarray(quantize(img, 255), mode="L" if img.ndim == 2 else "RGB").save(path)
    elif bit_depth == 16:
        if img.ndim != 2:
            raise ValueError("16-bit output is grayscale only")
        Image.fromarray(quantize(img, 65535).astype(np.uint32), mode="I").convert("I;16").save(path)
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")


def sample_bilinear(img: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sample at normalized coordinates in [-1, 1] with clamp-to-edge bilinear filtering.

    Pixel centers sit at normalized positions -1 + (2j+1)/w, so the mapping
    to continuous pixel space is px = (x+1)*w/2 - 0.5.
    """
    img = _validate(img)
    h, w = img.shape[:2]
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    px = (x + 1.0) * w / 2.0 - 0.5
    py = (y + 1.0) * h / 2.0 - 0.5
    x0 = np.clip(np.floor(px), 0, w - 1).astype(np.intp)
    y0 = np.clip(np.floor(py), 0, h - 1).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = np.clip(px - x0, 0.0, 1.0)
    fy = np.clip(py - y0, 0.0, 1.0)
    if img.ndim == 3:
        fx = fx[..., None]
        fy = fy[..., None]
    top = img[y0, x0] * (1.0 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1.0 - fx) + img[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy
