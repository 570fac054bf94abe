"""Command-line entry points: train, render, warp, eval, info.

Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
Set MRNET_LOG_LEVEL (DEBUG/INFO/WARNING) to control verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .image import ImageFormatError, load_image, save_image
from .model import MRNet, count_params, init_mrnet
from .nn import NonFiniteError
from .pyramid import build_targets, num_levels, prepare_image, save_levels
from .rendering import (
    HorizonError,
    load_homography,
    reconstruct,
    validate_homography,
    warp_render,
)
from .serialization import ModelFormatError, load_model, save_model
from .training import TrainConfig, level_psnrs, psnr, train_schedule, write_train_log_csv

log = logging.getLogger("mrnet")

CONFIG_DEFAULTS: dict = {
    "image": None,              # input image path (required)
    "output_dir": "out",
    "variant": "M",             # S, L, or M
    "width": 96,
    "hidden_layers": 1,
    "wiring": "concat",         # M variant only: concat or add
    "omega_hidden": 30.0,
    "base_band": 4.0,           # first stage's frequency bound; doubles per stage
    "bands": None,              # explicit per-stage bounds, overrides base_band
    "base_res": 8,              # coarsest pyramid side
    "kind": "pyramid",          # pyramid or tower
    "pad_policy": "pad",        # pad or crop to a square power of two
    "precision": "float64",     # float64 or float32
    "export_levels": False,     # also write level_0.png .. level_{N-1}.png
    "learning_rate": 1e-4,
    "batch_size": 65536,
    "max_epochs_per_stage": 300,
    "convergence_threshold": 1e-3,
    "loss": "MSE",
    "seed": 0,
    "parallel_stages": False,
    "patience": 2,
}


class UsageError(ValueError):
    """Configuration or argument problem; maps to exit code 2."""


def load_config(path: str | Path) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"input not found: {path}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"config is not valid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise UsageError("config must be a JSON object")
    unknown = sorted(set(raw) - set(CONFIG_DEFAULTS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    cfg = dict(CONFIG_DEFAULTS)
    cfg.update(raw)
    return cfg


def _train_config(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig(
            learning_rate=cfg["learning_rate"],
            batch_size=cfg["batch_size"],
            max_epochs_per_stage=cfg["max_epochs_per_stage"],
            convergence_threshold=cfg["convergence_threshold"],
            loss=cfg["loss"],
            seed=cfg["seed"],
            parallel_stages=cfg["parallel_stages"],
            patience=cfg["patience"],
        )
    except (ValueError, TypeError) as e:
        raise UsageError(f"bad training config: {e}") from None


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.image is not None:
        cfg["image"] = args.image
    if args.output_dir is not None:
        cfg["output_dir"] = args.output_dir
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.export_levels:
        cfg["export_levels"] = True
    if not cfg["image"]:
        raise UsageError("config needs an 'image' path (or pass --image)")
    if not Path(cfg["image"]).exists():
        raise UsageError(f"input not found: {cfg['image']}")
    if cfg["precision"] not in ("float64", "float32"):
        raise UsageError(f"precision must be float64 or float32, got {cfg['precision']!r}")

    tcfg = _train_config(cfg)
    img = prepare_image(load_image(cfg["image"]), policy=cfg["pad_policy"])
    side = img.shape[0]
    stages = num_levels(side, cfg["base_res"])
    bands = cfg["bands"]
    if bands is None:
        bands = [cfg["base_band"] * 2.0**i for i in range(stages)]
    elif len(bands) != stages:
        raise UsageError(
            f"config lists {len(bands)} bands but a {side} image with base "
            f"{cfg['base_res']} has {stages} levels"
        )
    log.info("image %s -> %dx%d, %d levels (%s)", cfg["image"], side, side, stages, cfg["kind"])

    pyr = build_targets(img, base_res=cfg["base_res"], kind=cfg["kind"])
    channels = 1 if img.ndim == 2 else img.shape[2]
    net = init_mrnet(
        variant=cfg["variant"],
        num_stages=stages,
        width=cfg["width"],
        input_dim=2,
        channels=channels,
        bands=bands,
        omega_hidden=cfg["omega_hidden"],
        seed=cfg["seed"],
        hidden_layers=cfg["hidden_layers"],
        wiring=cfg["wiring"],
        dtype=cfg["precision"],
    )
    log.info("%s network: %d stages, width %d, %d parameters",
             cfg["variant"], stages, cfg["width"], count_params(net))

    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg["export_levels"]:
        save_levels(pyr, out_dir)

    report = train_schedule(net, pyr, tcfg)
    for s in report.stages:
        log.info("stage %d: %d epochs, %s, final loss %.3e",
                 s.stage, s.epochs_run, s.stop_reason, s.loss_curve[-1])
    log.info("per-level PSNR (dB): %s", ["%.2f" % p for p in report.level_psnr_db])

    save_model(net, out_dir / "model.mrn")
    write_train_log_csv(report, out_dir / "train_log.csv")
    report.to_json(out_dir / "train_report.json")
    print(out_dir / "model.mrn")
    return 0


def _load_model_arg(path: str) -> MRNet:
    if not Path(path).exists():
        raise UsageError(f"input not found: {path}")
    try:
        return load_model(path)
    except ModelFormatError as e:
        raise UsageError(f"bad model file {path}: {e}") from None


def cmd_render(args: argparse.Namespace) -> int:
    net = _load_model_arg(args.model)
    lod = args.lod if args.lod is not None else float(net.num_stages)
    if not 1.0 <= lod <= net.num_stages:
        log.warning("lod %.3f outside [1, %d]; clamping", lod, net.num_stages)
        lod = float(np.clip(lod, 1.0, net.num_stages))
    img = reconstruct(net, args.res, lod)
    save_image(args.out, img)
    print(args.out)
    return 0


def cmd_warp(args: argparse.Namespace) -> int:
    net = _load_model_arg(args.model)
    try:
        if args.homography_file is not None:
            H = load_homography(args.homography_file)
        elif args.homography is not None:
            vals = [float(t) for t in args.homography.replace(",", " ").split()]
            if len(vals) != 9:
                raise UsageError(f"--homography needs 9 numbers, got {len(vals)}")
            H = validate_homography(vals)
        else:
            H = np.eye(3)
    except (ValueError, FileNotFoundError) as e:
        raise UsageError(str(e)) from None
    img = warp_render(
        net,
        H,
        args.res,
        antialias=args.antialias,
        tex_res=args.tex_res,
        level_mode=args.level_mode,
    )
    save_image(args.out, img)
    print(args.out)
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    net = _load_model_arg(args.model)
    if not Path(args.reference).exists():
        raise UsageError(f"input not found: {args.reference}")
    ref = prepare_image(load_image(args.reference), policy=args.pad_policy)
    side = ref.shape[0]
    shift = net.num_stages - 1
    if side >> shift < 1 or (side >> shift) << shift != side:
        raise UsageError(
            f"reference resolution {side} cannot carry {net.num_stages} dyadic levels"
        )
    pyr = build_targets(ref, base_res=side >> shift, kind="pyramid")
    final = reconstruct(net, side)
    metrics = {
        "param_count": count_params(net),
        "level_psnr_db": level_psnrs(net, pyr),
        "final_psnr_db": psnr(final, ref),
    }
    text = json.dumps(metrics, indent=2)
    if args.out is not None:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_info(args: argparse.Namespace) -> int:
    net = _load_model_arg(args.model)
    print(f"variant:    {net.variant}" + (f" ({net.wiring})" if net.variant == "M" else ""))
    print(f"stages:     {net.num_stages}")
    print(f"width:      {net.width}")
    print(f"channels:   {net.channels}")
    print(f"precision:  float{net.dtype.itemsize * 8}")
    print(f"parameters: {count_params(net)}")
    print(f"bands:      {[s.band_limit for s in net.stages]}")
    print(f"frozen:     {[s.frozen for s in net.stages]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mrnet", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fit a multiresolution network to an image")
    t.add_argument("config", help="JSON config file")
    t.add_argument("--image", help="override the config's input image")
    t.add_argument("--output-dir", help="override the config's output directory")
    t.add_argument("--seed", type=int, help="override the config's seed")
    t.add_argument("--export-levels", action="store_true", help="write pyramid level PNGs")
    t.set_defaults(fn=cmd_train)

    r = sub.add_parser("render", help="reconstruct an image from a model")
    r.add_argument("model")
    r.add_argument("--res", type=int, required=True, help="output resolution")
    r.add_argument("--lod", type=float, help="fractional detail level (default: finest)")
    r.add_argument("--out", default="render.png", help="output image path")
    r.set_defaults(fn=cmd_render)

    w = sub.add_parser("warp", help="perspective-warp a model's texture")
    w.add_argument("model")
    w.add_argument("--res", type=int, required=True, help="output resolution")
    w.add_argument("--homography", help="9 numbers, row-major screen-to-texture map")
    w.add_argument("--homography-file", help="JSON file with the matrix (or {'H': ...})")
    w.add_argument("--tex-res", type=int, help="texture resolution for footprints (default: --res)")
    w.add_argument("--antialias", action=argparse.BooleanOptionalAction, default=True)
    w.add_argument("--level-mode", choices=("octave", "linear"), default="octave")
    w.add_argument("--out", default="warp.png", help="output image path")
    w.set_defaults(fn=cmd_warp)

    e = sub.add_parser("eval", help="PSNR metrics of a model against a reference image")
    e.add_argument("model")
    e.add_argument("--reference", required=True, help="ground-truth image")
    e.add_argument("--pad-policy", choices=("pad", "crop"), default="pad")
    e.add_argument("--out", help="also write the metrics JSON here")
    e.set_defaults(fn=cmd_eval)

    i = sub.add_parser("info", help="print a model file's structure")
    i.add_argument("model")
    i.set_defaults(fn=cmd_info)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=os.environ.get("MRNET_LOG_LEVEL", "INFO").upper(),
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except UsageError as e:
        log.error("%s", e)
        return 2
    except (ModelFormatError, ImageFormatError, FileNotFoundError, ValueError) as e:
        log.error("%s", e)
        return 2
    except (HorizonError, NonFiniteError, RuntimeError, OSError) as e:
        log.error("%s", e)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
