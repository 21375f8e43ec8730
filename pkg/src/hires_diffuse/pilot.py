"""Pixel-space versus latent-space upsampling through an autoencoder.

For each image ``x`` three reconstructions are built::

    ref = D(E(x))
    pix = up(D(E(down(x))))
    lat = D(up(E(down(x))))

and ``pix`` and ``lat`` are scored against ``ref`` with PSNR and SSIM.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .metrics import psnr, ssim
from .models import Autoencoder
from .noise import make_rng
from .tensor import Shape2D, as_tensor, bicubic_resample, downsample, read_png

VARIANTS = ("pix", "lat")


@dataclass(frozen=True)
class MetricReport:
    variant: str
    r: int
    image_ids: tuple[str, ...]
    psnr_db: tuple[float, ...]
    ssim: tuple[float, ...]

    @property
    def corpus_size(self) -> int:
        return len(self.image_ids)

    @property
    def mean_psnr(self) -> float:
        # ordered left-to-right sum; inf propagates
        return math.fsum(self.psnr_db) / self.corpus_size if math.inf not in self.psnr_db else math.inf

    @property
    def mean_ssim(self) -> float:
        return math.fsum(self.ssim) / self.corpus_size


def synthetic_image(rng: np.random.Generator, size: int = 128) -> np.ndarray:
    """Blurred colour noise with a few filled discs and rectangles, values in [0, 1]."""
    base = rng.standard_normal((size, size, 3))
    base = ndimage.gaussian_filter(base, sigma=(size / 32, size / 32, 0), mode="wrap")
    base = 0.5 + 0.15 * base / (base.std() + 1e-12)
    yy, xx = np.mgrid[0:size, 0:size]
    img = base
    for _ in range(rng.integers(2, 6)):
        colour = rng.uniform(0.0, 1.0, size=3)
        cy, cx = rng.uniform(0, size, size=2)
        extent = rng.uniform(size / 12, size / 4)
        if rng.random() < 0.5:
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= extent**2
        else:
            mask = (np.abs(yy - cy) <= extent) & (np.abs(xx - cx) <= extent * rng.uniform(0.4, 1.0))
        img[mask] = colour
    img = ndimage.gaussian_filter(img, sigma=(0.7, 0.7, 0))
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def synthetic_corpus(n: int, seed: int, size: int = 128) -> list[tuple[str, np.ndarray]]:
    return [(f"syn{i:05d}", synthetic_image(make_rng(seed, 0, i), size)) for i in range(n)]


def load_corpus(directory: str | Path) -> list[tuple[str, np.ndarray]]:
    """All ``*.png`` files in ``directory``, sorted by name."""
    paths = sorted(Path(directory).glob("*.png"))
    return [(p.stem, read_png(p)) for p in paths]


def pilot_variants(x: np.ndarray, ae: Autoencoder, r: int) -> dict[str, np.ndarray]:
    """The three reconstructions of ``x`` for downsampling rate ``r``."""
    x = as_tensor(x)
    h, w, _ = x.shape
    f = ae.spatial_factor
    if r < 1:
        raise ValueError(f"rate r must be >= 1, got {r}")
    if h % (r * f) or w % (r * f):
        raise ValueError(f"image {h}x{w} not divisible by r*f = {r * f}")
    ref = ae.decode(ae.encode(x))
    small = downsample(x, r)
    latent_small = ae.encode(small)
    pix = bicubic_resample(ae.decode(latent_small), Shape2D(h, w))
    lat = ae.decode(bicubic_resample(latent_small, Shape2D(h // f, w // f)))
    return {"ref": ref, "pix": pix, "lat": lat}


def _score(x: np.ndarray, ae: Autoencoder, r: int) -> dict[str, tuple[float, float]]:
    v = pilot_variants(x, ae, r)
    return {name: (psnr(v[name], v["ref"]), ssim(v[name], v["ref"])) for name in VARIANTS}


def run_pilot_study(
    corpus: Sequence[tuple[str, np.ndarray]] | Iterable[np.ndarray],
    ae: Autoencoder,
    r: int,
    jobs: int = 1,
) -> tuple[MetricReport, MetricReport]:
    """Score pixel-space and latent-space upsampling against the VAE reconstruction.

    ``corpus`` is a sequence of ``(image_id, image)`` pairs or bare images.
    Results are reduced in corpus order whatever ``jobs`` is.
    """
    items = [it if isinstance(it, tuple) else (f"img{i:05d}", it) for i, it in enumerate(corpus)]
    if not items:
        raise ValueError("pilot study needs a non-empty corpus")
    ids = tuple(i for i, _ in items)
    images = [img for _, img in items]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(lambda x: _score(x, ae, r), images))
    else:
        scores = [_score(x, ae, r) for x in images]
    return tuple(
        MetricReport(
            variant=name,
            r=r,
            image_ids=ids,
            psnr_db=tuple(s[name][0] for s in scores),
            ssim=tuple(s[name][1] for s in scores),
        )
        for name in VARIANTS
    )


def _fmt(x: float) -> str:
    return "inf" if x == math.inf else repr(float(x))


def report_csv(reports: Sequence[MetricReport]) -> str:
    """``image_id,variant,r,psnr_db,ssim`` rows, per image then ``ALL`` aggregates."""
    lines = ["image_id,variant,r,psnr_db,ssim"]
    for i, image_id in enumerate(reports[0].image_ids):
        for rep in reports:
            lines.append(f"{image_id},{rep.variant},{rep.r},{_fmt(rep.psnr_db[i])},{_fmt(rep.ssim[i])}")
    for rep in reports:
        lines.append(f"ALL,{rep.variant},{rep.r},{_fmt(rep.mean_psnr)},{_fmt(rep.mean_ssim)}")
    return "\n".join(lines) + "\n"
