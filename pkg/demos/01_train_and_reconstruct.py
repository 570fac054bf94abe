# Fit a multiresolution sinusoidal network to an image, coarse to fine.
#
# The image is decomposed into a Gaussian pyramid; stage 1 learns the 8x8
# level, gets frozen, stage 2 learns what the 16x16 level adds on top of it,
# and so on up to full resolution. The finished model is a continuous
# function of (x, y) that can be sampled anywhere, at any amount of detail.
#
# Takes about half a minute on a laptop CPU. Outputs land in demos/out/.

from pathlib import Path

import numpy as np

from mrnet.image import load_image, save_image
from mrnet.model import count_params, init_mrnet
from mrnet.pyramid import build_pyramid
from mrnet.rendering import reconstruct, stage_images
from mrnet.serialization import save_model
from mrnet.training import TrainConfig, psnr, train_schedule

HERE = Path(__file__).resolve().parent
OUT = HERE / "out"
OUT.mkdir(exist_ok=True)

# The repo ships a 128x128 grayscale composite (smooth gradient + softened
# checker + a few blobs) so every pyramid level has something to learn.
img = load_image(HERE.parent / "assets" / "desk128.pgm")
pyr = build_pyramid(img, base_res=8)
print(f"pyramid: {[lvl.shape[0] for lvl in pyr.levels]} px levels")

# One stage per level. Each stage's first layer is band-limited: stage i only
# sees frequencies up to its band, which doubles per stage, so coarse stages
# physically cannot overfit fine detail.
net = init_mrnet(
    variant="M",
    num_stages=pyr.num_levels,
    width=48,
    input_dim=2,
    channels=1,
    bands=[4.0 * 2.0**i for i in range(pyr.num_levels)],
    seed=11,
)
print(f"network: {net.variant} variant, width {net.width}, {count_params(net)} parameters")

report = train_schedule(net, pyr, TrainConfig(seed=11))
for s in report.stages:
    print(
        f"  stage {s.stage}: {s.epochs_run} epochs ({s.stop_reason}), "
        f"final loss {s.loss_curve[-1]:.2e}, {s.wall_time_s:.1f}s"
    )

# Per-level PSNR compares the partial sum of stages 1..k against pyramid
# level k, so it shows how much each stage contributed.
for k, p in enumerate(report.level_psnr_db, start=1):
    print(f"  levels 1..{k}: {p:.1f} dB")

full = reconstruct(net, 128)
print(f"full reconstruction vs source: {psnr(full, img):.1f} dB")

save_image(OUT / "source.png", img)
save_image(OUT / "reconstruction.png", full)

# Each stage's output is a band of detail around zero; shift to mid-gray to
# make the positive/negative structure visible.
for i, band in enumerate(stage_images(net, 128), start=1):
    save_image(OUT / f"detail_stage{i}.png", np.clip(band + 0.5, 0, 1))

save_model(net, OUT / "model.mrn")
print(f"wrote {OUT / 'model.mrn'} and PNGs alongside it")
