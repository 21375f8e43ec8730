"""Cumulative noise schedules, forward diffusion and the deterministic reverse step."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import as_tensor

DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02
DEFAULT_TRAIN_STEPS = 1000


@dataclass(frozen=True)
class NoiseSchedule:
    """``alpha_bar[t]`` for t = 0..total_steps, with ``alpha_bar[0] == 1``."""

    alpha_bar: tuple[float, ...]

    def __post_init__(self):
        ab = np.asarray(self.alpha_bar, dtype=np.float64)
        if ab.ndim != 1 or ab.size < 2:
            raise ValueError("alpha_bar needs at least two entries")
        if ab[0] != 1.0:
            raise ValueError(f"alpha_bar[0] must be 1, got {ab[0]}")
        if not np.all(ab > 0) or not np.all(np.diff(ab) < 0):
            raise ValueError("alpha_bar must be positive and strictly decreasing")

    @property
    def total_steps(self) -> int:
        return len(self.alpha_bar) - 1

    def __getitem__(self, t: int) -> float:
        return self.alpha_bar[t]


def build_linear_beta_schedule(
    t0: int, beta_start: float = DEFAULT_BETA_START, beta_end: float = DEFAULT_BETA_END
) -> NoiseSchedule:
    """``alpha_bar[t] = prod_{s<=t} (1 - beta_s)`` with betas linearly spaced over t0 steps."""
    if t0 < 1:
        raise ValueError(f"t0 must be >= 1, got {t0}")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
    betas = np.linspace(beta_start, beta_end, t0, dtype=np.float64)
    alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    return NoiseSchedule(tuple(float(a) for a in alpha_bar))


def build_strided_schedule(
    t0: int,
    train_steps: int = DEFAULT_TRAIN_STEPS,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """A ``train_steps`` linear-beta schedule sampled at ``t0`` evenly spaced steps.

    Inference step t maps to training step ``round(t * train_steps / t0)``,
    so ``alpha_bar[t0]`` is the fully noised end of the training schedule.
    """
    if not 1 <= t0 <= train_steps:
        raise ValueError(f"need 1 <= t0 <= train_steps, got t0={t0}, train_steps={train_steps}")
    full = build_linear_beta_schedule(train_steps, beta_start, beta_end).alpha_bar
    idx = np.floor(np.arange(t0 + 1) * train_steps / t0 + 0.5).astype(int)
    return NoiseSchedule(tuple(full[i] for i in idx))


def make_rng(seed: int, stage: int = 0, step: int = 0) -> np.random.Generator:
    """Counter-based Philox stream keyed by (seed, stage, step).

    Streams for different keys are independent, so adding a stage never
    shifts the noise drawn by earlier ones.
    """
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stage, step))
    return np.random.Generator(np.random.Philox(ss))


def standard_normal(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.standard_normal(shape, dtype=np.float64).astype(np.float32)


def _check_step(schedule: NoiseSchedule, t: int, lo: int) -> None:
    if not lo <= t <= schedule.total_steps:
        raise ValueError(f"t={t} outside [{lo}, {schedule.total_steps}]")


def diffuse_to(
    z0: np.ndarray, schedule: NoiseSchedule, t: int, rng: np.random.Generator
) -> np.ndarray:
    """Sample ``sqrt(ab_t) z0 + sqrt(1 - ab_t) eps`` with eps ~ N(0, I) from ``rng``."""
    z0 = as_tensor(z0)
    _check_step(schedule, t, 0)
    if t == 0:
        return z0.copy()
    eps = standard_normal(rng, z0.shape)
    return add_noise(z0, eps, schedule, t)


def add_noise(z0: np.ndarray, eps: np.ndarray, schedule: NoiseSchedule, t: int) -> np.ndarray:
    """Forward diffusion with an explicit noise realisation."""
    _check_step(schedule, t, 0)
    ab = schedule[t]
    out = np.sqrt(ab) * z0.astype(np.float64) + np.sqrt(1.0 - ab) * eps.astype(np.float64)
    return out.astype(np.float32)


def denoise_step(
    z_t: np.ndarray, eps_pred: np.ndarray, schedule: NoiseSchedule, t: int
) -> np.ndarray:
    """Deterministic (eta = 0) update from step t to t - 1."""
    z_t = as_tensor(z_t)
    eps_pred = as_tensor(eps_pred)
    if z_t.shape != eps_pred.shape:
        raise ValueError(f"shape mismatch: z_t {z_t.shape} vs eps_pred {eps_pred.shape}")
    _check_step(schedule, t, 1)
    ab_t, ab_prev = schedule[t], schedule[t - 1]
    eps = eps_pred.astype(np.float64)
    z0_hat = (z_t.astype(np.float64) - np.sqrt(1.0 - ab_t) * eps) / np.sqrt(ab_t)
    out = np.sqrt(ab_prev) * z0_hat + np.sqrt(1.0 - ab_prev) * eps
    return out.astype(np.float32)


def cfg_combine(eps_uncond: np.ndarray, eps_cond: np.ndarray, scale: float) -> np.ndarray:
    """Classifier-free guidance: ``uncond + scale * (cond - uncond)``."""
    eps_uncond = as_tensor(eps_uncond)
    eps_cond = as_tensor(eps_cond)
    if eps_uncond.shape != eps_cond.shape:
        raise ValueError(f"shape mismatch: {eps_uncond.shape} vs {eps_cond.shape}")
    u = eps_uncond.astype(np.float64)
    out = u + scale * (eps_cond.astype(np.float64) - u)
    return out.astype(np.float32)
