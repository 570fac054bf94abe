"""Binary model files.

Layout (all integers little-endian, floats IEEE 754):

    magic      4 bytes  b"MRN1"
    version    u8       currently 1
    variant    u8       0 = S, 1 = L, 2 = M
    precision  u8       bytes per weight scalar: 4 or 8
    input_dim  u8
    channels   u8
    width      u16
    num_stages u16
    then per stage, coarse to fine:
        band_limit   f64
        omega_hidden f64
        alpha        f64
        frozen       u8 (0 or 1)
        num_layers   u16 (first + hidden + linear)
        then per layer, evaluation order:
            out_dim u32
            in_dim  u32
            weights out_dim*in_dim scalars, row-major
            bias    out_dim scalars

Layer blobs carry their own dimensions, so a reader can skip or validate
without re-deriving the architecture. The M-variant wiring is recovered from
the shape of stage 2's first hidden layer (input 2*width means concat).
"""

from __future__ import annotations

import io
import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .model import MRNet, StageParams, hidden_in_dim
from .nn import DenseLayer

MAGIC = b"MRN1"
FORMAT_VERSION = 1

_VARIANT_CODE = {"S": 0, "L": 1, "M": 2}
_CODE_VARIANT = {v: k for k, v in _VARIANT_CODE.items()}
_PRECISION_DTYPE = {4: np.dtype("<f4"), 8: np.dtype("<f8")}

_HEADER = struct.Struct("<4sBBBBBHH")
_STAGE_HEADER = struct.Struct("<dddBH")
_LAYER_HEADER = struct.Struct("<II")


class ModelFormatError(ValueError):
    """The bytes are not a model file, or violate the layout."""


class ModelVersionError(ModelFormatError):
    """The file declares a format version this reader does not support."""


class ModelTruncationError(ModelFormatError):
    """The file ends before the declared content does."""


def _write_layer(buf: BinaryIO, layer: DenseLayer, dtype: np.dtype) -> None:
    out_dim, in_dim = layer.weights.shape
    buf.write(_LAYER_HEADER.pack(out_dim, in_dim))
    buf.write(np.ascontiguousarray(layer.weights, dtype=dtype).tobytes())
    buf.write(np.ascontiguousarray(layer.bias, dtype=dtype).tobytes())


def save_model(net: MRNet, path: str | Path) -> None:
    """Write the network to ``path``. Byte-identical for identical networks."""
    precision = net.dtype.itemsize
    if precision not in _PRECISION_DTYPE:
        raise ValueError(f"unsupported parameter dtype {net.dtype}")
    dtype = _PRECISION_DTYPE[precision]

    buf = io.BytesIO()
    buf.write(
        _HEADER.pack(
            MAGIC,
            FORMAT_VERSION,
            _VARIANT_CODE[net.variant],
            precision,
            net.input_dim,
            net.channels,
            net.width,
            net.num_stages,
        )
    )
    for s in net.stages:
        layers = [s.first, *s.hidden, s.linear]
        buf.write(
            _STAGE_HEADER.pack(
                s.band_limit, s.omega_hidden, s.alpha, int(s.frozen), len(layers)
            )
        )
        for layer in layers:
            _write_layer(buf, layer, dtype)
    Path(path).write_bytes(buf.getvalue())


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelTruncationError(
                f"file ends at byte {len(self.data)} but {self.pos + n} are needed"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: struct.Struct) -> tuple:
        return fmt.unpack(self.take(fmt.size))

    def array(self, count: int, dtype: np.dtype) -> np.ndarray:
        raw = self.take(count * dtype.itemsize)
        return np.frombuffer(raw, dtype=dtype).astype(np.float64 if dtype.itemsize == 8 else np.float32)


def _read_layer(r: _Reader, dtype: np.dtype) -> DenseLayer:
    out_dim, in_dim = r.unpack(_LAYER_HEADER)
    if out_dim == 0 or in_dim == 0:
        raise ModelFormatError(f"layer declares degenerate shape ({out_dim}, {in_dim})")
    weights = r.array(out_dim * in_dim, dtype).reshape(out_dim, in_dim)
    bias = r.array(out_dim, dtype)
    return DenseLayer(weights=weights, bias=bias)


def load_model(path: str | Path) -> MRNet:
    """Read a model file back into an :class:`MRNet`.

    Raises :class:`ModelFormatError` for wrong magic or malformed structure,
    :class:`ModelVersionError` for an unknown version byte, and
    :class:`ModelTruncationError` when the file is shorter than its header
    promises.
    """
    data = Path(path).read_bytes()
    r = _Reader(data)
    magic, version, variant_code, precision, input_dim, channels, width, num_stages = r.unpack(
        _HEADER
    )
    if magic != MAGIC:
        raise ModelFormatError(f"not a model file: magic {magic!r} != {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise ModelVersionError(f"unsupported format version {version}")
    if variant_code not in _CODE_VARIANT:
        raise ModelFormatError(f"unknown variant code {variant_code}")
    if precision not in _PRECISION_DTYPE:
        raise ModelFormatError(f"precision must be 4 or 8 bytes, got {precision}")
    if num_stages < 1:
        raise ModelFormatError("file declares zero stages")
    variant = _CODE_VARIANT[variant_code]
    dtype = _PRECISION_DTYPE[precision]

    stages: list[StageParams] = []
    for i in range(1, num_stages + 1):
        band, omega, alpha, frozen, num_layers = r.unpack(_STAGE_HEADER)
        if num_layers < 2:
            raise ModelFormatError(
                f"stage {i} declares {num_layers} layers; need at least first + linear"
            )
        layers = [_read_layer(r, dtype) for _ in range(num_layers)]
        first, hidden, linear = layers[0], layers[1:-1], layers[-1]
        if first.in_dim != input_dim:
            raise ModelFormatError(
                f"stage {i} first layer expects input {first.in_dim}, header says {input_dim}"
            )
        if linear.out_dim != channels:
            raise ModelFormatError(
                f"stage {i} linear layer outputs {linear.out_dim}, header says {channels}"
            )
        stages.append(
            StageParams(
                first=first,
                hidden=hidden,
                linear=linear,
                band_limit=band,
                omega_hidden=omega,
                alpha=alpha,
                frozen=bool(frozen),
            )
        )
    if r.pos != len(data):
        raise ModelFormatError(f"{len(data) - r.pos} trailing bytes after declared content")

    if variant == "S" and any(s.hidden for s in stages):
        raise ModelFormatError("S variant must not contain hidden layers")
    if variant != "S" and any(not s.hidden for s in stages):
        raise ModelFormatError(f"{variant} variant requires hidden layers in every stage")

    wiring = "concat"
    if variant == "M" and num_stages > 1:
        wiring = "concat" if stages[1].hidden[0].in_dim == 2 * width else "add"
    for i, s in enumerate(stages, start=1):
        for j, h in enumerate(s.hidden):
            expect = hidden_in_dim(variant, wiring, width, i, j)
            if h.in_dim != expect:
                raise ModelFormatError(
                    f"stage {i} hidden layer {j} expects input {expect}, file has {h.in_dim}"
                )

    return MRNet(
        variant=variant,
        stages=stages,
        input_dim=input_dim,
        channels=channels,
        width=width,
        wiring=wiring,
    )
