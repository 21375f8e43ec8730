"""Parameter-free self-attention and the attentive-guidance schedule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import as_tensor, flatten, unflatten


def round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def attention_weights(z: np.ndarray, scaling: float | None = None) -> np.ndarray:
    """Row-stochastic (hw, hw) matrix ``softmax(Z Z^T / scaling)`` of a latent."""
    z = as_tensor(z)
    if scaling is None:
        scaling = math.sqrt(z.shape[2])
    if not scaling > 0:
        raise ValueError(f"scaling must be > 0, got {scaling}")
    tokens = flatten(z).astype(np.float64)
    logits = tokens @ tokens.T / scaling
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    weights /= weights.sum(axis=1, keepdims=True)
    return weights


def pfsa(z: np.ndarray, scaling: float | None = None, block_rows: int = 1024) -> np.ndarray:
    """Self-attention of a latent with itself as query, key and value.

    Args:
        z: (h, w, c) latent.
        scaling: softmax temperature; defaults to ``sqrt(c)``.
        block_rows: query rows processed at once; bounds memory at
            ``block_rows * h * w`` floats.

    Returns:
        Tensor of the same shape, each cell a convex combination of all cells.
    """
    z = as_tensor(z)
    h, w, c = z.shape
    if scaling is None:
        scaling = math.sqrt(c)
    if not scaling > 0:
        raise ValueError(f"scaling must be > 0, got {scaling}")
    tokens = flatten(z).astype(np.float64)
    out = np.empty_like(tokens)
    for start in range(0, tokens.shape[0], block_rows):
        q = tokens[start:start + block_rows]
        logits = q @ tokens.T / scaling
        logits -= logits.max(axis=1, keepdims=True)
        weights = np.exp(logits)
        weights /= weights.sum(axis=1, keepdims=True)
        out[start:start + block_rows] = weights @ tokens
    return unflatten(out, h, w).astype(np.float32)


def attentive_guide(z: np.ndarray, gamma_t: float, scaling: float | None = None) -> np.ndarray:
    """Blend ``gamma_t * pfsa(z) + (1 - gamma_t) * z``."""
    if not 0.0 <= gamma_t <= 1.0:
        raise ValueError(f"gamma_t must lie in [0, 1], got {gamma_t}")
    z = as_tensor(z)
    if gamma_t == 0.0:
        return z.copy()
    attended = pfsa(z, scaling)
    if gamma_t == 1.0:
        return attended
    out = gamma_t * attended.astype(np.float64) + (1.0 - gamma_t) * z.astype(np.float64)
    return out.astype(np.float32)


@dataclass(frozen=True)
class GuidanceSchedule:
    base_scale: float
    delay_rate: float
    decay_factor: float
    total_steps: int
    delay_steps: int
    per_step: tuple[float, ...]

    def __getitem__(self, t: int) -> float:
        return self.per_step[t]

    @property
    def last_guided_step(self) -> int:
        """Largest t with a (possibly) non-zero scale."""
        return self.total_steps - self.delay_steps

    def to_csv(self) -> str:
        lines = ["t,gamma_t"]
        lines += [f"{t},{g!r}" for t, g in enumerate(self.per_step)]
        return "\n".join(lines) + "\n"


def build_guidance_schedule(gamma: float, eta1: float, beta: float, t0: int) -> GuidanceSchedule:
    """Cosine-decayed guidance scales ``gamma_t`` for t = 0..t0.

    The first ``k = round(eta1 * t0)`` denoising steps (t > t0 - k) get no
    guidance. From t = t0 - k the scale starts at ``gamma`` and decays as
    ``[(cos(pi * (t0 - k - t) / (t0 - k)) + 1) / 2] ** beta`` down to 0 at t = 0.
    """
    if t0 < 1:
        raise ValueError(f"t0 must be >= 1, got {t0}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if not 0.0 <= eta1 < 1.0:
        raise ValueError(f"eta1 must lie in [0, 1), got {eta1}")
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    k = round_half_up(eta1 * t0)
    span = t0 - k
    if span <= 0:
        raise ValueError(f"eta1={eta1} delays all {t0} steps; no guidance window left")
    per_step = []
    for t in range(t0 + 1):
        if t <= span:
            phase = (math.cos((span - t) / span * math.pi) + 1.0) / 2.0
            per_step.append(gamma * phase**beta)
        else:
            per_step.append(0.0)
    return GuidanceSchedule(
        base_scale=gamma,
        delay_rate=eta1,
        decay_factor=beta,
        total_steps=t0,
        delay_steps=k,
        per_step=tuple(per_step),
    )
