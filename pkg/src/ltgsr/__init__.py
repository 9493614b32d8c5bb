"""Reference-based super-resolution for angiogram-like images with a
learnable texture generator.

Training transfers high-resolution texture features from a reference image
by attention-style patch search; a texture generator is supervised on
those searched textures so that inference needs no reference at all.
"""

from .bicubic import bicubic_resize
from .dataset import SampleGroup, load_dataset, make_dataset, save_dataset
from .decoder import DecoderConfig, FusionDecoder
from .encoder import Encoder, EncoderConfig, FeaturePyramid
from .errors import (CostGuardError, DegenerateInputError, InvalidStateError,
                     RegistrationFailedError, TrainingDivergedError)
from .generator import LTGConfig, TextureGenerator, count_params
from .image_io import read_fgrid, read_image, write_fgrid, write_image
from .losses import (LossWeights, critic_loss, generator_adv_loss, gradient_penalty,
                     perceptual_loss, rec_loss, texture_gen_loss, total_loss)
from .metrics import MetricReport, evaluate_model, perceptual_distance, psnr, ref_sensitivity, ssim
from .model import ModelConfig, SRModel, reduced_config
from .phantom import degrade, generate_phantom
from .registration import Shift, phase_correlate, register_crop
from .search import (IndexMap, PatchGrid, RelevanceMap, TextureBundle, brute_force_oracle,
                     gather_textures, oracle_check, relevance_search, search_patches,
                     search_textures, unfold)
from .training import TrainConfig, Trainer, TrainSeeds, load_model

__version__ = "0.1.0"

__all__ = [
    "bicubic_resize", "SampleGroup", "load_dataset", "make_dataset", "save_dataset",
    "DecoderConfig", "FusionDecoder", "Encoder", "EncoderConfig", "FeaturePyramid",
    "CostGuardError", "DegenerateInputError", "InvalidStateError",
    "RegistrationFailedError", "TrainingDivergedError",
    "LTGConfig", "TextureGenerator", "count_params",
    "read_fgrid", "read_image", "write_fgrid", "write_image",
    "LossWeights", "critic_loss", "generator_adv_loss", "gradient_penalty",
    "perceptual_loss", "rec_loss", "texture_gen_loss", "total_loss",
    "MetricReport", "evaluate_model", "perceptual_distance", "psnr",
    "ref_sensitivity", "ssim",
    "ModelConfig", "SRModel", "reduced_config",
    "degrade", "generate_phantom",
    "Shift", "phase_correlate", "register_crop",
    "IndexMap", "PatchGrid", "RelevanceMap", "TextureBundle", "brute_force_oracle",
    "gather_textures", "oracle_check", "relevance_search", "search_patches",
    "search_textures", "unfold",
    "TrainConfig", "Trainer", "TrainSeeds", "load_model",
]
