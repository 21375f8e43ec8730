"""Denoiser and autoencoder contracts with small analytic stand-ins.

The stand-ins are closed-form, so every pipeline property can be checked
against exact expressions instead of a trained network.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Protocol, runtime_checkable

import numpy as np

from .noise import NoiseSchedule, make_rng
from .tensor import as_tensor


@dataclass(frozen=True)
class ConditioningTag:
    """Selects the conditional or unconditional branch, plus a toy class label."""

    conditional: bool = False
    label: int = 0


UNCONDITIONAL = ConditioningTag(conditional=False)


@runtime_checkable
class Denoiser(Protocol):
    def predict_noise(self, z_t: np.ndarray, t: int, cond: ConditioningTag) -> np.ndarray:
        ...


@runtime_checkable
class Autoencoder(Protocol):
    spatial_factor: int
    latent_channels: int

    def encode(self, x: np.ndarray) -> np.ndarray:
        ...

    def decode(self, z: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True)
class AnalyticGaussianDenoiser:
    """Bayes-optimal noise predictor for a N(mu, sigma2 I) data prior.

    For ``z_t = sqrt(ab) z0 + sqrt(1 - ab) eps`` the posterior mean of eps is
    ``(z_t - sqrt(ab) mu) * sqrt(1 - ab) / (ab * sigma2 + 1 - ab)``.

    ``mu`` may be a scalar, a per-channel vector or a full tensor; it is
    broadcast against the latent. ``class_means`` optionally overrides ``mu``
    on the conditional branch for a given label.
    """

    mu: np.ndarray
    sigma2: float
    schedule: NoiseSchedule
    class_means: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be > 0, got {self.sigma2}")

    def prior_mean(self, cond: ConditioningTag) -> np.ndarray:
        if cond.conditional and cond.label in self.class_means:
            return np.asarray(self.class_means[cond.label], dtype=np.float64)
        return np.asarray(self.mu, dtype=np.float64)

    def predict_noise(self, z_t, t, cond=UNCONDITIONAL):
        z_t = as_tensor(z_t)
        if not 0 <= t <= self.schedule.total_steps:
            raise ValueError(f"t={t} outside the schedule")
        ab = self.schedule[t]
        mu = np.broadcast_to(self.prior_mean(cond), z_t.shape)
        eps = (z_t.astype(np.float64) - np.sqrt(ab) * mu) * np.sqrt(1.0 - ab)
        eps /= ab * self.sigma2 + 1.0 - ab
        return eps.astype(np.float32)


def analytic_gaussian_denoiser(mu, sigma2: float, schedule: NoiseSchedule, class_means=None):
    return AnalyticGaussianDenoiser(np.asarray(mu, dtype=np.float64), sigma2, schedule,
                                    dict(class_means or {}))


# orthonormal colour axes: luma first, then two chroma axes
_COLOUR_AXES = np.array([
    [1.0, 1.0, 1.0],
    [1.0, -1.0, 0.0],
    [1.0, 1.0, -2.0],
]) / np.array([[np.sqrt(3.0)], [np.sqrt(2.0)], [np.sqrt(6.0)]])


def _dct_vector(n: int, k: int) -> np.ndarray:
    v = np.cos(np.pi * (np.arange(n) + 0.5) * k / n)
    return v / np.linalg.norm(v)


def patch_frequency_basis(f: int) -> np.ndarray:
    """(3 f^2, 3 f^2) orthogonal basis of f x f x 3 patches, one vector per column.

    Columns are separable DCT-II patterns on a luma/chroma colour axis, ordered
    by total frequency ``u + v``, then colour axis (luma first), then vertical
    frequency. The first three columns are the per-colour patch means.
    """
    keys = sorted(
        (u + v, axis, u, v) for u in range(f) for v in range(f) for axis in range(3)
    )
    cols = [
        np.einsum("i,j,k->ijk", _dct_vector(f, u), _dct_vector(f, v), _COLOUR_AXES[axis]).ravel()
        for _, axis, u, v in keys
    ]
    return np.stack(cols, axis=1)


class OrthogonalPatchAutoencoder:
    """Space-to-depth over f x f patches followed by a fixed orthogonal projection.

    Each f x f x 3 patch (3 f^2 values) is projected onto its ``c``
    lowest-frequency DCT directions (see ``patch_frequency_basis``), then the
    ``c`` coefficients are mixed by a seeded random orthogonal matrix. With
    ``c == 3 f^2`` the map is orthogonal and ``decode`` inverts it exactly.
    With ``3 <= c`` flat patches of any colour survive a round trip.

    Latent codes describe patch content relative to the patch grid, so
    interpolating them does not rescale the content. That is what makes
    latent-space upsampling lossy here, as with a learned VAE.
    """

    def __init__(self, f: int = 8, c: int = 4, seed: int = 0):
        patch_dim = 3 * f * f
        if f < 1:
            raise ValueError(f"spatial factor must be >= 1, got {f}")
        if not 1 <= c <= patch_dim:
            raise ValueError(f"latent channels must lie in [1, {patch_dim}], got {c}")
        self.spatial_factor = f
        self.latent_channels = c
        self.seed = seed
        mix, r = np.linalg.qr(make_rng(seed).standard_normal((c, c)))
        mix *= np.sign(np.diag(r))
        # (patch_dim, c) with orthonormal columns; patch vectors are (row, col, channel)
        self.basis = patch_frequency_basis(f)[:, :c] @ mix

    def _check(self, h: int, w: int) -> None:
        f = self.spatial_factor
        if h % f or w % f:
            raise ValueError(f"image {h}x{w} not divisible by spatial factor {f}")

    def encode(self, x):
        x = as_tensor(x)
        h, w, ch = x.shape
        if ch != 3:
            raise ValueError(f"encoder expects 3 channels, got {ch}")
        self._check(h, w)
        f = self.spatial_factor
        patches = (
            x.astype(np.float64)
            .reshape(h // f, f, w // f, f, 3)
            .transpose(0, 2, 1, 3, 4)
            .reshape(h // f, w // f, 3 * f * f)
        )
        return (patches @ self.basis).astype(np.float32)

    def decode(self, z):
        z = as_tensor(z)
        h, w, c = z.shape
        if c != self.latent_channels:
            raise ValueError(f"decoder expects {self.latent_channels} channels, got {c}")
        f = self.spatial_factor
        patches = z.astype(np.float64) @ self.basis.T
        x = patches.reshape(h, w, f, f, 3).transpose(0, 2, 1, 3, 4).reshape(h * f, w * f, 3)
        return x.astype(np.float32)

    def __repr__(self) -> str:
        return (f"OrthogonalPatchAutoencoder(f={self.spatial_factor}, "
                f"c={self.latent_channels}, seed={self.seed})")


def orthogonal_patch_autoencoder(f: int = 8, c: int = 4, seed: int = 0) -> OrthogonalPatchAutoencoder:
    return OrthogonalPatchAutoencoder(f, c, seed)
