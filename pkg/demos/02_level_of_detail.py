# Continuous level of detail from a single trained model.
#
# Because the model is a sum of per-stage detail bands, "how much detail" is
# just a weight vector: stages at or below floor(lambda) contribute fully,
# the next stage fades in with the fractional part. lambda = 1 is the
# coarsest view, lambda = N the full image, and everything in between is a
# smooth blend; no mip chain, no resampling.
#
# Run demos/01_train_and_reconstruct.py first to reuse its model, or this
# script trains an identical one.

from pathlib import Path

from mrnet.image import load_image, save_image
from mrnet.model import init_mrnet
from mrnet.pyramid import build_pyramid
from mrnet.rendering import lod_weights, reconstruct
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

n = net.num_stages

# Integer levels reproduce the pyramid's resolutions in spirit, but all are
# rendered on the same 128px grid: the coarse ones are smooth, not small.
for k in range(1, n + 1):
    save_image(OUT / f"lod_{k:.2f}.png", reconstruct(net, 128, float(k)))

# Fractional levels sit in between. Watch the weight vector as lambda moves
# through the 2..3 transition:
for lam in (2.0, 2.25, 2.5, 2.75, 3.0):
    print(f"lambda {lam:4.2f} -> stage weights {lod_weights(lam, n)}")
    save_image(OUT / f"lod_{lam:.2f}.png", reconstruct(net, 128, lam))

print(f"wrote lod_*.png frames to {OUT}")
print("flipping through them shows detail fading in, never popping")
