"""Flat ``key = value`` run configuration.

One assignment per line, ``#`` starts a comment. Unknown keys are errors.
Missing keys fall back to the defaults in ``DEFAULTS``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .pipeline import ConfigError, PipelineConfig
from .tensor import Shape2D

SEED_ENV = "HIRES_DIFFUSE_SEED"

DEFAULTS: dict[str, str] = {
    "t0": "50",
    "gamma": "0.004",
    "eta1": "0.06",
    "beta_decay": "3",
    "eta2": "0.2",
    "cfg_scale": "7.5",
    "train": "1024x1024",
    "target": "2048x2048",
    "seed": "0",
    "pfsa_scaling_override": "",
    "label": "0",
    "schedule_train_steps": "1000",
    "beta_start": "0.0001",
    "beta_end": "0.02",
    # toy model knobs
    "toy_gray": "0.5",
    "toy_sigma2": "1.0",
    "ae_factor": "8",
    "ae_channels": "4",
    "ae_seed": "0",
    # paths
    "out_dir": "out",
    "corpus_dir": "",
}


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(",") if p.strip())


_PARSERS = {
    "t0": int,
    "gamma": float,
    "eta1": float,
    "beta_decay": float,
    "eta2": _floats,
    "cfg_scale": float,
    "train": Shape2D.parse,
    "target": Shape2D.parse,
    "seed": int,
    "pfsa_scaling_override": lambda s: float(s) if s else None,
    "label": int,
    "schedule_train_steps": int,
    "beta_start": float,
    "beta_end": float,
}


@dataclass(frozen=True)
class RunSettings:
    pipeline: PipelineConfig
    toy_gray: float = 0.5
    toy_sigma2: float = 1.0
    ae_factor: int = 8
    ae_channels: int = 4
    ae_seed: int = 0
    out_dir: Path = Path("out")
    corpus_dir: Path | None = None
    raw: dict[str, str] = field(default_factory=dict, compare=False)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{source}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(key, f"{source}:{lineno}: unknown key")
        values[key] = value
    return values


def load_config(path: str | Path | None) -> dict[str, str]:
    if path is None:
        return {}
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def resolve(values: dict[str, str], overrides: dict[str, str] | None = None) -> RunSettings:
    """Merge defaults, file values, the seed env var and overrides, then validate.

    The seed comes from an override, else the file, else ``HIRES_DIFFUSE_SEED``.
    """
    merged = dict(DEFAULTS)
    if SEED_ENV in os.environ and "seed" not in values:
        merged["seed"] = os.environ[SEED_ENV]
    merged.update(values)
    for key, value in (overrides or {}).items():
        if key not in DEFAULTS:
            raise ConfigError(key, "unknown key")
        if value is not None:
            merged[key] = str(value)

    def convert(key, fn):
        try:
            return fn(merged[key])
        except ValueError as exc:
            raise ConfigError(key, f"cannot parse {merged[key]!r}: {exc}") from exc

    pipeline = PipelineConfig(**{k: convert(k, fn) for k, fn in _PARSERS.items()})
    settings = RunSettings(
        pipeline=pipeline,
        toy_gray=convert("toy_gray", float),
        toy_sigma2=convert("toy_sigma2", float),
        ae_factor=convert("ae_factor", int),
        ae_channels=convert("ae_channels", int),
        ae_seed=convert("ae_seed", int),
        out_dir=Path(merged["out_dir"]),
        corpus_dir=Path(merged["corpus_dir"]) if merged["corpus_dir"] else None,
        raw=merged,
    )
    if not settings.toy_sigma2 > 0:
        raise ConfigError("toy_sigma2", f"must be > 0, got {settings.toy_sigma2}")
    if settings.ae_factor < 1:
        raise ConfigError("ae_factor", f"must be >= 1, got {settings.ae_factor}")
    if not 1 <= settings.ae_channels <= 3 * settings.ae_factor**2:
        raise ConfigError("ae_channels", f"must lie in [1, 3*f^2], got {settings.ae_channels}")
    pipeline.validate(settings.ae_factor)
    return settings
