# Zooming with matched detail: resampling as a level-of-detail problem.
#
# Enlarging is easy for a coordinate network: evaluate on a denser grid and
# the sines interpolate. Shrinking is where images usually alias; here the
# octave rule lowers the detail level by one per halving, so the coarse
# stages (which learned the low-pass levels of the pyramid) supply exactly
# the pre-filtered signal a downsample needs.
#
# Run demos/01_train_and_reconstruct.py first to reuse its model, or this
# script trains an identical one.

from pathlib import Path

from mrnet.image import load_image, save_image
from mrnet.model import init_mrnet
from mrnet.pyramid import build_pyramid
from mrnet.rendering import lambda_to_level, zoom_reconstruct
from mrnet.serialization import load_model, save_model
from mrnet.training import TrainConfig, train_schedule

HERE = Path(__file__).resolve().parent
OUT = HERE / "out"
OUT.mkdir(exist_ok=True)
MODEL = OUT / "model.mrn"

if MODEL.exists():
    net = load_model(MODEL)
else:
    img = load_image(HERE.parent / "assets" / "desk128.pgm")
    pyr = build_pyramid(img, base_res=8)
    net = init_mrnet(
        variant="M", num_stages=pyr.num_levels, width=48, input_dim=2, channels=1,
        bands=[4.0 * 2.0**i for i in range(pyr.num_levels)], seed=11,
    )
    train_schedule(net, pyr, TrainConfig(seed=11))
    save_model(net, MODEL)

src = 128  # resolution the model was trained at
for out_res in (512, 256, 128, 64, 32, 16):
    level = lambda_to_level(src / out_res, net.num_stages)
    tag = "magnify" if out_res > src else "minify" if out_res < src else "native"
    print(f"{src} -> {out_res:4d} px ({tag:7s}): footprint {src / out_res:5.2f} texels, "
          f"detail level {level:.2f}")
    save_image(OUT / f"zoom_{out_res}.png", zoom_reconstruct(net, src, out_res))

print(f"wrote zoom_*.png to {OUT}")
print("the 4x enlargement stays crisp; the 16px thumbnail is averaged, not aliased")
