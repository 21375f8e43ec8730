"""Two-stage high-resolution latent diffusion: attentive training-resolution
denoising followed by progressive pixel-space upsampling and refinement."""
from .attention import (
    GuidanceSchedule,
    attention_weights,
    attentive_guide,
    build_guidance_schedule,
    pfsa,
)
from .metrics import psnr, ssim
from .models import (
    AnalyticGaussianDenoiser,
    Autoencoder,
    ConditioningTag,
    Denoiser,
    OrthogonalPatchAutoencoder,
    analytic_gaussian_denoiser,
    orthogonal_patch_autoencoder,
)
from .noise import (
    NoiseSchedule,
    add_noise,
    build_linear_beta_schedule,
    build_strided_schedule,
    cfg_combine,
    denoise_step,
    diffuse_to,
    make_rng,
)
from .pilot import MetricReport, run_pilot_study, synthetic_corpus
from .pipeline import (
    ConfigError,
    Models,
    PipelineConfig,
    StageTrace,
    generate,
    run_refinement_stage,
    run_stage_one,
)
from .planner import StagePlan, build_stage_plan, initial_shape
from .tensor import Shape2D, bicubic_resample, downsample, flatten, unflatten

__version__ = "0.1.0"
