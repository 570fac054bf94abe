"""Multiresolution sinusoidal coordinate networks for images.

Train a stack of band-limited sinusoidal stages against a Gaussian pyramid,
then reconstruct at any resolution and any fractional level of detail,
including anti-aliased perspective warps.
"""

from .image import load_image, sample_bilinear, save_image
from .model import (
    MRNet,
    StageParams,
    backward,
    count_params,
    forward,
    forward_pass,
    init_mrnet,
    stage_outputs,
)
from .nn import AdamState, DenseLayer, NonFiniteError, adam_step, mse_grad, mse_loss
from .pyramid import Pyramid, build_pyramid, build_targets, build_tower, gaussian_reduce, prepare_image
from .rendering import (
    HorizonError,
    lambda_to_level,
    heckbert_lambda,
    lod_weights,
    reconstruct,
    warp_render,
    zoom_reconstruct,
)
from .sampling import SampleSet, coords_grid, make_samples
from .serialization import (
    ModelFormatError,
    ModelTruncationError,
    ModelVersionError,
    load_model,
    save_model,
)
from .synth import make_checkerboard, make_test_scene
from .training import TrainConfig, TrainReport, psnr, train_schedule, train_stage

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "DenseLayer",
    "HorizonError",
    "MRNet",
    "ModelFormatError",
    "ModelTruncationError",
    "ModelVersionError",
    "NonFiniteError",
    "Pyramid",
    "SampleSet",
    "StageParams",
    "TrainConfig",
    "TrainReport",
    "adam_step",
    "backward",
    "build_pyramid",
    "build_targets",
    "build_tower",
    "coords_grid",
    "count_params",
    "lambda_to_level",
    "forward",
    "forward_pass",
    "gaussian_reduce",
    "heckbert_lambda",
    "init_mrnet",
    "load_model",
    "lod_weights",
    "make_checkerboard",
    "make_samples",
    "make_test_scene",
    "mse_grad",
    "mse_loss",
    "prepare_image",
    "psnr",
    "load_image",
    "reconstruct",
    "sample_bilinear",
    "save_model",
    "stage_outputs",
    "train_schedule",
    "train_stage",
    "warp_render",
    "save_image",
    "zoom_reconstruct",
]
