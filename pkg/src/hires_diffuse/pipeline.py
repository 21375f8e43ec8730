"""Two-stage high-resolution generation.

Stage 0 denoises at the training pixel count with attentive guidance.
Each later stage decodes the previous latent, upsamples it in pixel space,
re-encodes, partially re-noises and denoises for a shorter schedule.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .attention import GuidanceSchedule, attentive_guide, build_guidance_schedule
from .models import Autoencoder, ConditioningTag, Denoiser
from .noise import (
    DEFAULT_BETA_END,
    DEFAULT_BETA_START,
    DEFAULT_TRAIN_STEPS,
    NoiseSchedule,
    build_strided_schedule,
    cfg_combine,
    denoise_step,
    diffuse_to,
    make_rng,
    standard_normal,
)
from .planner import StagePlan, build_stage_plan
from .tensor import Shape2D, bicubic_resample

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    """Every knob of the generation loop. Defaults are the published settings."""

    train: Shape2D = Shape2D(1024, 1024)
    target: Shape2D = Shape2D(2048, 2048)
    t0: int = 50
    gamma: float = 0.004
    eta1: float = 0.06
    beta_decay: float = 3.0
    eta2: tuple[float, ...] = (0.2,)
    cfg_scale: float = 7.5
    seed: int = 0
    pfsa_scaling_override: float | None = None
    label: int = 0
    schedule_train_steps: int = DEFAULT_TRAIN_STEPS
    beta_start: float = DEFAULT_BETA_START
    beta_end: float = DEFAULT_BETA_END

    def __post_init__(self):
        object.__setattr__(self, "train", Shape2D(*self.train))
        object.__setattr__(self, "target", Shape2D(*self.target))
        object.__setattr__(self, "eta2", tuple(float(e) for e in self.eta2))

    def validate(self, f: int = 8) -> None:
        """Raise ``ConfigError`` naming the first offending field."""
        checks = [
            ("t0", self.t0 >= 1),
            ("gamma", 0.0 <= self.gamma <= 1.0),
            ("eta1", 0.0 <= self.eta1 < 1.0),
            ("beta_decay", self.beta_decay > 0),
            ("eta2", all(0.0 < e <= 1.0 for e in self.eta2)),
            ("cfg_scale", self.cfg_scale >= 0),
            ("seed", 0 <= self.seed < 2**64),
            ("pfsa_scaling_override",
             self.pfsa_scaling_override is None or self.pfsa_scaling_override > 0),
            ("train", self.train.height >= 1 and self.train.width >= 1),
            ("target", self.target.height >= 1 and self.target.width >= 1),
        ]
        for name, ok in checks:
            if not ok:
                raise ConfigError(name, f"invalid value {getattr(self, name)!r}")
        for name, build in [
            ("schedule_train_steps", self.noise_schedule),
            ("eta1", self.guidance_schedule),
            ("eta2", lambda: self.plan(f)),
        ]:
            try:
                build()
            except ValueError as exc:
                raise ConfigError(name, str(exc)) from exc

    def noise_schedule(self) -> NoiseSchedule:
        return build_strided_schedule(
            self.t0, self.schedule_train_steps, self.beta_start, self.beta_end
        )

    def guidance_schedule(self) -> GuidanceSchedule:
        return build_guidance_schedule(self.gamma, self.eta1, self.beta_decay, self.t0)

    def plan(self, f: int = 8) -> StagePlan:
        return build_stage_plan(self.train, self.target, self.t0, self.eta2, f)


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class Models:
    denoiser: Denoiser
    autoencoder: Autoencoder


@dataclass
class StepRecord:
    t: int
    gamma_t: float
    guided: bool
    mean: float
    var: float
    min: float
    max: float


@dataclass
class StageRecord:
    stage: int
    shape: Shape2D
    latent_shape: tuple[int, int, int]
    steps: int
    records: list[StepRecord] = field(default_factory=list)


@dataclass
class StageTrace:
    stages: list[StageRecord] = field(default_factory=list)

    @property
    def steps(self) -> list[int]:
        return [s.steps for s in self.stages]

    def to_csv(self) -> str:
        lines = ["stage,height,width,t,gamma_t,guided,mean,var,min,max"]
        for st in self.stages:
            for r in st.records:
                lines.append(
                    f"{st.stage},{st.shape.height},{st.shape.width},{r.t},{r.gamma_t!r},"
                    f"{int(r.guided)},{r.mean!r},{r.var!r},{r.min!r},{r.max!r}"
                )
        return "\n".join(lines) + "\n"


def _record(z: np.ndarray, t: int, gamma_t: float, guided: bool) -> StepRecord:
    z64 = z.astype(np.float64)
    rec = StepRecord(t, gamma_t, guided, float(z64.mean()), float(z64.var()),
                     float(z64.min()), float(z64.max()))
    if not all(math.isfinite(v) for v in (rec.mean, rec.var, rec.min, rec.max)):
        raise FloatingPointError(f"non-finite latent statistics at t={t}")
    return rec


def _guided_eps(denoiser: Denoiser, z: np.ndarray, t: int, cfg: PipelineConfig) -> np.ndarray:
    eps_uncond = denoiser.predict_noise(z, t, ConditioningTag(False, cfg.label))
    eps_cond = denoiser.predict_noise(z, t, ConditioningTag(True, cfg.label))
    return cfg_combine(eps_uncond, eps_cond, cfg.cfg_scale)


def _denoise_loop(
    z: np.ndarray,
    n_steps: int,
    cfg: PipelineConfig,
    denoiser: Denoiser,
    sched: NoiseSchedule,
    gsched: GuidanceSchedule | None,
    record: StageRecord | None,
) -> np.ndarray:
    # guidance window follows the loop form t <= T0 - 1 - k
    window = cfg.t0 - 1 - gsched.delay_steps if gsched is not None else -1
    for t in range(n_steps - 1, -1, -1):
        z = denoise_step(z, _guided_eps(denoiser, z, t + 1, cfg), sched, t + 1)
        guided = t <= window
        gamma_t = gsched[t] if guided else 0.0
        if guided:
            z = attentive_guide(z, gamma_t, cfg.pfsa_scaling_override)
        if record is not None:
            record.records.append(_record(z, t, gamma_t, guided))
    return z


def run_stage_one(
    cfg: PipelineConfig,
    denoiser: Denoiser,
    sched: NoiseSchedule,
    gsched: GuidanceSchedule,
    latent_shape: tuple[int, int, int],
    trace: StageTrace | None = None,
    guidance: bool = True,
    pixel_shape: Shape2D | None = None,
) -> np.ndarray:
    """Denoise fresh noise for ``t0`` steps with attentive guidance.

    ``guidance=False`` removes the guidance hook entirely (used for
    differential testing against ``gamma = 0``).
    """
    z = standard_normal(make_rng(cfg.seed, 0, 0), latent_shape)
    record = None
    if trace is not None:
        shape = pixel_shape or Shape2D(latent_shape[0], latent_shape[1])
        record = StageRecord(0, shape, tuple(latent_shape), cfg.t0)
        trace.stages.append(record)
    return _denoise_loop(z, cfg.t0, cfg, denoiser, sched, gsched if guidance else None, record)


def run_refinement_stage(
    z_prev: np.ndarray,
    stage_i: int,
    plan: StagePlan,
    cfg: PipelineConfig,
    models: Models,
    sched: NoiseSchedule,
    trace: StageTrace | None = None,
) -> np.ndarray:
    """Decode, upsample in pixel space, re-encode, re-noise to ``T_i``, denoise."""
    if not 1 <= stage_i < plan.num_stages:
        raise ValueError(f"stage {stage_i} outside refinement stages 1..{plan.num_stages - 1}")
    n_steps = plan.denoise_steps[stage_i]
    if n_steps < 1:
        raise ValueError(f"stage {stage_i} has no denoising steps")
    ae = models.autoencoder
    shape = plan.shapes[stage_i]
    x = bicubic_resample(ae.decode(z_prev), shape)
    z0_hat = ae.encode(x)
    z = diffuse_to(z0_hat, sched, n_steps, make_rng(cfg.seed, stage_i, 0))
    record = None
    if trace is not None:
        record = StageRecord(stage_i, shape, z.shape, n_steps)
        trace.stages.append(record)
    return _denoise_loop(z, n_steps, cfg, models.denoiser, sched, None, record)


def generate(
    cfg: PipelineConfig,
    models: Models,
    trace: StageTrace | None = None,
    guidance: bool = True,
) -> np.ndarray:
    """Run every stage of the plan and decode the final latent to pixels."""
    ae = models.autoencoder
    f = ae.spatial_factor
    cfg.validate(f)
    sched = cfg.noise_schedule()
    gsched = cfg.guidance_schedule()
    plan = cfg.plan(f)
    first = plan.shapes[0]
    latent_shape = (first.height // f, first.width // f, ae.latent_channels)
    log.info("stage 0: %s (%d steps)", first, plan.denoise_steps[0])
    z = run_stage_one(cfg, models.denoiser, sched, gsched, latent_shape, trace, guidance, first)
    for i in range(1, plan.num_stages):
        log.info("stage %d: %s (%d steps)", i, plan.shapes[i], plan.denoise_steps[i])
        z = run_refinement_stage(z, i, plan, cfg, models, sched, trace)
    return ae.decode(z)


def with_overrides(cfg: PipelineConfig, **changes) -> PipelineConfig:
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})

