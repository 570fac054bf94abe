"""Progressive multi-stage training.

Stages are optimized coarse to fine, each against its own resolution level,
with earlier stages frozen. Because the frozen prefix contributes a fixed
offset, stage i effectively learns the residual detail between level i and
the sum of everything before it. A non-default joint mode trains all stages
at once against all levels.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .model import MRNet, evaluate_prefix, forward_pass, backward, stage_backward, stage_forward
from .nn import AdamState, NonFiniteError, adam_step, mse_grad, mse_loss
from .pyramid import Pyramid
from .sampling import coords_grid, make_samples

PSNR_CAP_DB = 200.0


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB for unit-peak images; capped at 200 dB.

    The cap stands in for infinity when the images are identical, keeping the
    value finite for logs and JSON.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 65536
    max_epochs_per_stage: int = 300
    convergence_threshold: float = 1e-3  # percent relative loss change per epoch
    loss: str = "MSE"
    seed: int = 0
    parallel_stages: bool = False
    patience: int = 2  # consecutive sub-threshold epochs required

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_epochs_per_stage < 1:
            raise ValueError("max_epochs_per_stage must be >= 1")
        if self.convergence_threshold <= 0:
            raise ValueError("convergence_threshold must be positive")
        if self.loss != "MSE":
            raise ValueError(f"only MSE loss is supported, got {self.loss!r}")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class StageReport:
    """Training record for one stage (stage 0 means the joint parallel mode)."""

    stage: int
    epochs_run: int
    loss_curve: list[float]
    stop_reason: str  # "converged" or "max_epochs"
    wall_time_s: float

    def __post_init__(self) -> None:
        if len(self.loss_curve) != self.epochs_run:
            raise ValueError("loss curve length must equal epochs_run")


@dataclass
class TrainReport:
    stages: list[StageReport] = field(default_factory=list)
    level_psnr_db: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "stages": [
                {
                    "stage": s.stage,
                    "epochs_run": s.epochs_run,
                    "loss_curve": s.loss_curve,
                    "stop_reason": s.stop_reason,
                    "wall_time_s": s.wall_time_s,
                }
                for s in self.stages
            ],
            "level_psnr_db": self.level_psnr_db,
        }

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def write_train_log_csv(report: TrainReport, path: str | Path) -> None:
    """One row per epoch: stage, epoch, loss, elapsed seconds within the stage."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["stage", "epoch", "loss", "elapsed"])
        for s in report.stages:
            per_epoch = s.wall_time_s / max(s.epochs_run, 1)
            for e, loss in enumerate(s.loss_curve, start=1):
                writer.writerow([s.stage, e, f"{loss:.17g}", f"{per_epoch * e:.6f}"])


def _epoch_permutation(seed: int, stage: int, epoch: int, n: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed, stage, epoch]))
    return rng.permutation(n)


class _Convergence:
    """Stop when the relative epoch-loss change stays under the threshold.

    The threshold is in percent; ``patience`` consecutive sub-threshold epochs
    are required so a single flat epoch does not stop training. An exactly
    zero loss converges immediately.
    """

    def __init__(self, threshold_percent: float, patience: int):
        self.rel_threshold = threshold_percent / 100.0
        self.patience = patience
        self.prev: float | None = None
        self.streak = 0

    def update(self, loss: float) -> bool:
        if not np.isfinite(loss):
            raise NonFiniteError(f"training loss became non-finite: {loss}")
        if loss == 0.0:
            return True
        if self.prev is not None:
            rel = abs(loss - self.prev) / max(self.prev, np.finfo(np.float64).tiny)
            self.streak = self.streak + 1 if rel < self.rel_threshold else 0
        self.prev = loss
        return self.streak >= self.patience


def train_stage(
    net: MRNet,
    stage_index: int,
    target: np.ndarray,
    cfg: TrainConfig,
) -> StageReport:
    """Optimize one stage against ``target``, then freeze it.

    Earlier stages must already be frozen; their outputs (and, for the M
    variant, the previous hidden activations) are computed once and reused
    every epoch. Only the named stage's parameters change.
    """
    if not 1 <= stage_index <= net.num_stages:
        raise ValueError(f"stage_index must be in 1..{net.num_stages}, got {stage_index}")
    unfrozen = [i for i in range(1, stage_index) if not net.stages[i - 1].frozen]
    if unfrozen:
        raise ValueError(f"stages {unfrozen} must be frozen before training stage {stage_index}")
    s = net.stages[stage_index - 1]
    if s.frozen:
        raise ValueError(f"stage {stage_index} is already frozen")
    if s.alpha != 1.0:
        raise ValueError(f"stage {stage_index} must train with alpha = 1, got {s.alpha}")

    samples = make_samples(target)
    if samples.channels != net.channels:
        raise ValueError(f"target has {samples.channels} channels, network has {net.channels}")
    coords = samples.coords.astype(net.dtype)
    values = samples.values.astype(net.dtype)
    n = samples.size
    batch = min(cfg.batch_size, n)

    prefix, prev_hidden = evaluate_prefix(net, coords, stage_index - 1)
    chained = net.variant == "M" and stage_index > 1

    params = net.params(stages=[stage_index])
    state = AdamState.for_params(params)
    conv = _Convergence(cfg.convergence_threshold, cfg.patience)

    t0 = time.perf_counter()
    curve: list[float] = []
    stop_reason = "max_epochs"
    for epoch in range(1, cfg.max_epochs_per_stage + 1):
        perm = _epoch_permutation(cfg.seed, stage_index, epoch, n)
        sq_sum = 0.0
        count = 0
        for lo in range(0, n, batch):
            idx = perm[lo : lo + batch]
            bc = coords[idx]
            bt = values[idx]
            bprev = prev_hidden[idx] if chained else None
            st = stage_forward(net, stage_index, bc, bprev)
            pred = st.output + prefix[idx]
            sq_sum += float(np.sum((pred - bt) ** 2))
            count += pred.size
            grads = stage_backward(net, stage_index, bc, st, mse_grad(pred, bt))
            adam_step(params, grads, state, cfg.learning_rate)
        epoch_loss = sq_sum / count
        curve.append(epoch_loss)
        if conv.update(epoch_loss):
            stop_reason = "converged"
            break

    s.frozen = True
    return StageReport(
        stage=stage_index,
        epochs_run=len(curve),
        loss_curve=curve,
        stop_reason=stop_reason,
        wall_time_s=time.perf_counter() - t0,
    )


def _train_joint(net: MRNet, pyr: Pyramid, cfg: TrainConfig) -> StageReport:
    """All stages at once: summed per-level losses, one optimizer over everything."""
    n_stages = net.num_stages
    level_samples = [make_samples(lvl) for lvl in pyr.levels]
    level_coords = [s.coords.astype(net.dtype) for s in level_samples]
    level_values = [s.values.astype(net.dtype) for s in level_samples]

    params = net.params()
    state = AdamState.for_params(params)
    conv = _Convergence(cfg.convergence_threshold, cfg.patience)

    t0 = time.perf_counter()
    curve: list[float] = []
    stop_reason = "max_epochs"
    for epoch in range(1, cfg.max_epochs_per_stage + 1):
        total_loss = 0.0
        agg: dict[str, np.ndarray] = {}
        for k in range(1, n_stages + 1):
            coords, values = level_coords[k - 1], level_values[k - 1]
            n = coords.shape[0]
            batch = min(cfg.batch_size, n)
            perm = _epoch_permutation(cfg.seed, k, epoch, n)
            idx = perm[:batch]
            trace = forward_pass(net, coords[idx], upto=k)
            pred = sum(st.output for st in trace.stages)
            total_loss += mse_loss(pred, values[idx])
            grads = backward(
                net, trace, mse_grad(pred, values[idx]), trainable_stages=range(1, k + 1)
            )
            for name, g in grads.items():
                agg[name] = agg.get(name, 0) + g
        adam_step(params, agg, state, cfg.learning_rate)
        curve.append(total_loss)
        if conv.update(total_loss):
            stop_reason = "converged"
            break

    for s in net.stages:
        s.frozen = True
    return StageReport(
        stage=0,
        epochs_run=len(curve),
        loss_curve=curve,
        stop_reason=stop_reason,
        wall_time_s=time.perf_counter() - t0,
    )


def level_psnrs(net: MRNet, pyr: Pyramid) -> list[float]:
    """PSNR of the partial sum 1..k against pyramid level k, for every k."""
    out = []
    for k, lvl in enumerate(pyr.levels, start=1):
        h, w = lvl.shape[:2]
        pred, _ = evaluate_prefix(net, coords_grid(w, h), k)
        img = np.clip(pred, 0.0, 1.0).reshape(lvl.shape)
        out.append(psnr(img, lvl))
    return out


def train_schedule(
    net: MRNet,
    pyr: Pyramid,
    cfg: TrainConfig,
    on_stage_start: Callable[[int, MRNet], None] | None = None,
) -> TrainReport:
    """Train stages 1..N coarse to fine against pyramid levels 1..N.

    ``on_stage_start(i, net)`` fires before each stage trains, with all
    earlier stages already frozen; useful for snapshots. Returns the full
    report including per-level PSNRs of the partial reconstructions.
    """
    if pyr.num_levels != net.num_stages:
        raise ValueError(
            f"pyramid has {pyr.num_levels} levels but the network has {net.num_stages} stages"
        )
    report = TrainReport()
    if cfg.parallel_stages:
        report.stages.append(_train_joint(net, pyr, cfg))
    else:
        for i in range(1, net.num_stages + 1):
            if on_stage_start is not None:
                on_stage_start(i, net)
            report.stages.append(train_stage(net, i, pyr.levels[i - 1], cfg))
    report.level_psnr_db = level_psnrs(net, pyr)
    return report
