"""Multiresolution sinusoidal networks.

A network is an ordered list of stages, coarse to fine. Each stage is a
small sinusoidal MLP (first layer, optional hidden block, linear output)
whose output is one band of detail; the full signal is the weighted sum of
stage outputs. Three wirings are supported:

* ``S``: first layer + linear layer only, a learned sine transform.
* ``L``: independent full MLP per stage.
* ``M``: hierarchical; each stage's hidden block also consumes the previous
  stage's hidden output, so capacity grows with depth.

The first layer computes ``sin(W x + b)`` with no frequency factor because
its weights are drawn directly from the stage's frequency band; hidden
layers compute ``sin(omega * (W u + b))`` with SIREN-style 1/omega weight
scaling at init.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .nn import DenseLayer

VARIANTS = ("S", "L", "M")
WIRINGS = ("concat", "add")


@dataclass
class StageParams:
    """One stage: first sinusoidal layer, hidden block, linear layer, control scalar."""

    first: DenseLayer
    hidden: list[DenseLayer]
    linear: DenseLayer
    band_limit: float
    omega_hidden: float
    alpha: float = 1.0
    frozen: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not self.band_limit > 0:
            raise ValueError(f"band_limit must be positive, got {self.band_limit}")
        if not self.omega_hidden > 0:
            raise ValueError(f"omega_hidden must be positive, got {self.omega_hidden}")


@dataclass
class MRNet:
    """Variant tag plus ordered stages (coarse to fine) and construction metadata."""

    variant: str
    stages: list[StageParams]
    input_dim: int
    channels: int
    width: int
    seed: int = 0
    wiring: str = "concat"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.wiring not in WIRINGS:
            raise ValueError(f"wiring must be one of {WIRINGS}, got {self.wiring!r}")
        if not self.stages:
            raise ValueError("a network needs at least one stage")
        bands = [s.band_limit for s in self.stages]
        if any(b2 <= b1 for b1, b2 in zip(bands, bands[1:])):
            raise ValueError(f"band limits must be strictly increasing, got {bands}")

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    @property
    def bands(self) -> tuple[float, ...]:
        return tuple(s.band_limit for s in self.stages)

    @property
    def dtype(self) -> np.dtype:
        return self.stages[0].first.weights.dtype

    def stage_layers(self, index: int) -> list[tuple[str, DenseLayer]]:
        """Named layers of 1-based stage ``index``, evaluation order."""
        s = self.stages[index - 1]
        layers = [(f"stage{index}.first", s.first)]
        layers += [(f"stage{index}.hidden{j}", h) for j, h in enumerate(s.hidden)]
        layers.append((f"stage{index}.linear", s.linear))
        return layers

    def param_items(
        self,
        stages: Sequence[int] | None = None,
        trainable_only: bool = False,
    ) -> Iterator[tuple[str, np.ndarray]]:
        """Yield (name, array) pairs in a fixed order. Stage indices are 1-based."""
        indices = range(1, self.num_stages + 1) if stages is None else stages
        for i in indices:
            if trainable_only and self.stages[i - 1].frozen:
                continue
            for name, layer in self.stage_layers(i):
                yield f"{name}.weights", layer.weights
                yield f"{name}.bias", layer.bias

    def params(
        self,
        stages: Sequence[int] | None = None,
        trainable_only: bool = False,
    ) -> dict[str, np.ndarray]:
        return dict(self.param_items(stages=stages, trainable_only=trainable_only))


def hidden_in_dim(variant: str, wiring: str, width: int, stage_index: int, layer_index: int) -> int:
    """Input width of hidden layer ``layer_index`` in 1-based ``stage_index``."""
    if variant == "M" and stage_index > 1 and layer_index == 0 and wiring == "concat":
        return 2 * width
    return width


def init_mrnet(
    variant: str,
    num_stages: int,
    width: int,
    input_dim: int,
    channels: int,
    bands: Sequence[float],
    omega_hidden: float = 30.0,
    seed: int = 0,
    hidden_layers: int = 1,
    wiring: str = "concat",
    dtype: np.dtype | str = np.float64,
) -> MRNet:
    """Build a fresh network with band-limited first layers.

    Stage ``i``'s first-layer weights are drawn uniform on (-bands[i], bands[i])
    so they directly set that stage's frequency band; its bias starts at zero
    (phases are learned). Hidden and linear layers use the uniform
    sqrt(6/fan_in)/omega_hidden range. Deterministic for a given seed.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if num_stages < 1:
        raise ValueError("num_stages must be >= 1")
    if len(bands) != num_stages:
        raise ValueError(f"expected {num_stages} band limits, got {len(bands)}")
    if width < 1:
        raise ValueError("width must be >= 1")
    if hidden_layers < 1 and variant != "S":
        raise ValueError("L and M variants need at least one hidden layer")
    bands = [float(b) for b in bands]
    if any(b2 <= b1 for b1, b2 in zip(bands, bands[1:])):
        raise ValueError(f"band limits must be strictly increasing, got {bands}")
    dtype = np.dtype(dtype)

    rng = np.random.default_rng(seed)
    n_hidden = 0 if variant == "S" else hidden_layers

    def uniform(bound: float, shape: tuple[int, int]) -> np.ndarray:
        return rng.uniform(-bound, bound, size=shape).astype(dtype)

    stages = []
    for i in range(1, num_stages + 1):
        first = DenseLayer(
            weights=uniform(bands[i - 1], (width, input_dim)),
            bias=np.zeros(width, dtype=dtype),
        )
        hidden = []
        for j in range(n_hidden):
            fan_in = hidden_in_dim(variant, wiring, width, i, j)
            hidden.append(
                DenseLayer(
                    weights=uniform(np.sqrt(6.0 / fan_in) / omega_hidden, (width, fan_in)),
                    bias=np.zeros(width, dtype=dtype),
                )
            )
        linear = DenseLayer(
            weights=uniform(np.sqrt(6.0 / width) / omega_hidden, (channels, width)),
            bias=np.zeros(channels, dtype=dtype),
        )
        stages.append(
            StageParams(
                first=first,
                hidden=hidden,
                linear=linear,
                band_limit=bands[i - 1],
                omega_hidden=omega_hidden,
            )
        )
    return MRNet(
        variant=variant,
        stages=stages,
        input_dim=input_dim,
        channels=channels,
        width=width,
        seed=seed,
        wiring=wiring,
    )


@dataclass
class StageTrace:
    """Cached activations of one stage, enough to run the exact backward pass."""

    z_first: np.ndarray          # pre-activation of the first layer
    a_first: np.ndarray          # sin(z_first)
    hidden_in: list[np.ndarray]  # actual input to each hidden layer (post concat/add)
    z_hidden: list[np.ndarray]   # pre-activations, before the omega factor
    hidden_out: np.ndarray       # feeds the linear layer (and the next stage for M)
    output: np.ndarray           # this stage's detail, batch x channels


@dataclass
class Trace:
    """A completed forward pass: input coordinates plus per-stage caches."""

    coords: np.ndarray
    stages: list[StageTrace]


def stage_forward(
    net: MRNet,
    stage_index: int,
    coords: np.ndarray,
    prev_hidden: np.ndarray | None = None,
) -> StageTrace:
    """Evaluate a single 1-based stage.

    For an M variant at stage >= 2, ``prev_hidden`` must be the previous
    stage's hidden output for the same coordinate batch.
    """
    s = net.stages[stage_index - 1]
    z_first = coords @ s.first.weights.T + s.first.bias
    a_first = np.sin(z_first)

    chained = net.variant == "M" and stage_index > 1
    if chained and prev_hidden is None:
        raise ValueError(f"stage {stage_index} of an M network needs the previous hidden output")

    hidden_in: list[np.ndarray] = []
    z_hidden: list[np.ndarray] = []
    act = a_first
    for j, layer in enumerate(s.hidden):
        if j == 0 and chained:
            u = (
                np.concatenate([a_first, prev_hidden], axis=1)
                if net.wiring == "concat"
                else a_first + prev_hidden
            )
        else:
            u = act
        z = u @ layer.weights.T + layer.bias
        act = np.sin(s.omega_hidden * z)
        hidden_in.append(u)
        z_hidden.append(z)

    hidden_out = act  # a_first when the hidden block is empty (S variant)
    output = hidden_out @ s.linear.weights.T + s.linear.bias
    return StageTrace(
        z_first=z_first,
        a_first=a_first,
        hidden_in=hidden_in,
        z_hidden=z_hidden,
        hidden_out=hidden_out,
        output=output,
    )


def forward_pass(net: MRNet, coords: np.ndarray, upto: int | None = None) -> Trace:
    """Evaluate stages 1..upto (default all), caching activations."""
    coords = np.ascontiguousarray(coords, dtype=net.dtype)
    if coords.ndim != 2 or coords.shape[1] != net.input_dim:
        raise ValueError(f"coords must be (n, {net.input_dim}), got {coords.shape}")
    upto = net.num_stages if upto is None else upto
    if not 0 <= upto <= net.num_stages:
        raise ValueError(f"upto must be in [0, {net.num_stages}], got {upto}")
    traces: list[StageTrace] = []
    prev_hidden = None
    for i in range(1, upto + 1):
        st = stage_forward(net, i, coords, prev_hidden)
        traces.append(st)
        prev_hidden = st.hidden_out
    return Trace(coords=coords, stages=traces)


def stage_outputs(net: MRNet, coords: np.ndarray) -> tuple[list[np.ndarray], Trace]:
    """Per-stage detail outputs g_1..g_N (no blending applied), plus the trace."""
    trace = forward_pass(net, coords)
    return [st.output for st in trace.stages], trace


def _check_weights(net: MRNet, weights: Sequence[float] | None, count: int) -> np.ndarray:
    if weights is None:
        return np.ones(count)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (count,):
        raise ValueError(f"expected {count} stage weights, got shape {w.shape}")
    if np.any(w < 0.0) or np.any(w > 1.0):
        raise ValueError(f"stage weights must lie in [0, 1], got {w}")
    return w


def forward(
    net: MRNet,
    coords: np.ndarray,
    weights: Sequence[float] | None = None,
) -> np.ndarray:
    """Weighted sum of stage outputs, coarse to fine.

    ``weights`` defaults to all ones (full detail). Summation order is fixed
    so partial sums recompose exactly.
    """
    outputs, _ = stage_outputs(net, coords)
    w = _check_weights(net, weights, net.num_stages)
    acc = np.zeros_like(outputs[0])
    for wi, g in zip(w, outputs):
        if wi == 1.0:
            acc += g
        elif wi != 0.0:
            acc += wi * g
    return acc


def evaluate_prefix(net: MRNet, coords: np.ndarray, upto: int) -> tuple[np.ndarray, np.ndarray | None]:
    """Sum of stage outputs 1..upto and the last hidden output, without keeping traces.

    Used to cache the frozen prefix during stage training; memory stays at
    one stage's activations.
    """
    coords = np.ascontiguousarray(coords, dtype=net.dtype)
    total = np.zeros((coords.shape[0], net.channels), dtype=net.dtype)
    prev_hidden = None
    for i in range(1, upto + 1):
        st = stage_forward(net, i, coords, prev_hidden)
        total += st.output
        prev_hidden = st.hidden_out
    return total, prev_hidden


def backward(
    net: MRNet,
    trace: Trace,
    grad_output: np.ndarray,
    weights: Sequence[float] | None = None,
    trainable_stages: Sequence[int] | None = None,
) -> dict[str, np.ndarray]:
    """Exact reverse-mode gradients of a scalar loss through the traced forward pass.

    ``grad_output`` is dL/d(blended output), shape batch x channels.
    ``trainable_stages`` (1-based) defaults to every unfrozen traced stage;
    frozen stages receive no gradient entries. For the M variant, gradients
    flow into earlier trainable stages through the hidden-block chaining.
    """
    k = len(trace.stages)
    if k == 0:
        raise ValueError("backward needs a trace with at least one evaluated stage")
    if grad_output.shape != trace.stages[-1].output.shape:
        raise ValueError(
            f"grad_output shape {grad_output.shape} does not match "
            f"traced output shape {trace.stages[-1].output.shape}"
        )
    w = _check_weights(net, weights, k)
    if trainable_stages is None:
        trainable = {i for i in range(1, k + 1) if not net.stages[i - 1].frozen}
    else:
        trainable = set(trainable_stages)
        bad = [i for i in trainable if not 1 <= i <= k]
        if bad:
            raise ValueError(f"trainable stages {bad} outside traced range 1..{k}")
    if not trainable:
        return {}
    lowest = min(trainable)

    grads: dict[str, np.ndarray] = {}
    pending: dict[int, np.ndarray] = {}  # stage index -> dL/d(hidden_out) from later stages
    for i in range(k, lowest - 1, -1):
        s = net.stages[i - 1]
        st = trace.stages[i - 1]
        train = i in trainable

        dg = grad_output if w[i - 1] == 1.0 else w[i - 1] * grad_output
        if train:
            grads[f"stage{i}.linear.weights"] = dg.T @ st.hidden_out
            grads[f"stage{i}.linear.bias"] = dg.sum(axis=0)
        dh = dg @ s.linear.weights
        if i in pending:
            dh = dh + pending.pop(i)

        if s.hidden:
            d_a_first = None
            for j in range(len(s.hidden) - 1, -1, -1):
                layer = s.hidden[j]
                dz = dh * (s.omega_hidden * np.cos(s.omega_hidden * st.z_hidden[j]))
                if train:
                    grads[f"stage{i}.hidden{j}.weights"] = dz.T @ st.hidden_in[j]
                    grads[f"stage{i}.hidden{j}.bias"] = dz.sum(axis=0)
                d_in = dz @ layer.weights
                if j > 0:
                    dh = d_in
                elif net.variant == "M" and i > 1:
                    if net.wiring == "concat":
                        d_a_first = d_in[:, : net.width]
                        d_prev = d_in[:, net.width :]
                    else:
                        d_a_first = d_in
                        d_prev = d_in
                    if i - 1 >= lowest:
                        prev = pending.get(i - 1)
                        pending[i - 1] = d_prev if prev is None else prev + d_prev
                else:
                    d_a_first = d_in
        else:
            d_a_first = dh

        if train:
            dz0 = d_a_first * np.cos(st.z_first)
            grads[f"stage{i}.first.weights"] = dz0.T @ trace.coords
            grads[f"stage{i}.first.bias"] = dz0.sum(axis=0)
    return grads


def stage_backward(
    net: MRNet,
    stage_index: int,
    coords: np.ndarray,
    st: StageTrace,
    grad_output: np.ndarray,
) -> dict[str, np.ndarray]:
    """Gradients for one stage only, holding everything upstream constant.

    This is the progressive-training hot path: earlier stages are frozen, so
    their cached prefix never needs a trace. ``st`` must come from
    :func:`stage_forward` on the same coordinate batch.
    """
    placeholder = [st] * (stage_index - 1)  # never dereferenced below min(trainable)
    trace = Trace(coords=coords, stages=[*placeholder, st])
    return backward(net, trace, grad_output, trainable_stages=[stage_index])


def count_params(net: MRNet) -> int:
    """Total trainable scalars (weights and biases; the control scalar is not trained)."""
    return sum(arr.size for _, arr in net.param_items())
