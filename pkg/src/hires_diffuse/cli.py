"""Command-line entry point: ``hires-diffuse {generate,schedule-dump,plan-dump,pilot}``.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunSettings, load_config, resolve
from .models import analytic_gaussian_denoiser, orthogonal_patch_autoencoder
from .pilot import load_corpus, report_csv, run_pilot_study, synthetic_corpus
from .pipeline import ConfigError, Models, StageTrace, generate
from .tensor import write_png, write_tf32

log = logging.getLogger("hires_diffuse")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2

_FLAG_KEYS = {
    "seed": "seed",
    "target": "target",
    "gamma": "gamma",
    "eta1": "eta1",
    "eta2": "eta2",
    "t0": "t0",
    "beta": "beta_decay",
    "cfg": "cfg_scale",
    "out": "out_dir",
}


def build_models(settings: RunSettings) -> Models:
    """Toy models: patch autoencoder and a Gaussian prior centred on a flat grey image."""
    ae = orthogonal_patch_autoencoder(settings.ae_factor, settings.ae_channels, settings.ae_seed)
    f = settings.ae_factor
    mu = ae.encode(np.full((f, f, 3), settings.toy_gray, dtype=np.float32))[0, 0]
    denoiser = analytic_gaussian_denoiser(mu, settings.toy_sigma2, settings.pipeline.noise_schedule())
    return Models(denoiser, ae)


def settings_from_args(args: argparse.Namespace) -> RunSettings:
    overrides = {key: getattr(args, flag, None) for flag, key in _FLAG_KEYS.items()}
    return resolve(load_config(args.config), overrides)


def cmd_generate(args: argparse.Namespace) -> int:
    settings = settings_from_args(args)
    models = build_models(settings)
    trace = StageTrace()
    image = generate(settings.pipeline, models, trace)
    out = settings.out_dir
    out.mkdir(parents=True, exist_ok=True)
    write_png(out / "generated.png", image)
    write_tf32(out / "generated.tf32", image)
    if args.trace:
        (out / "trace.csv").write_text(trace.to_csv())
    print(f"wrote {out / 'generated.png'} ({image.shape[0]}x{image.shape[1]}), stages {trace.steps}")
    return EXIT_OK


def cmd_schedule_dump(args: argparse.Namespace) -> int:
    settings = settings_from_args(args)
    sys.stdout.write(settings.pipeline.guidance_schedule().to_csv())
    return EXIT_OK


def cmd_plan_dump(args: argparse.Namespace) -> int:
    settings = settings_from_args(args)
    sys.stdout.write(settings.pipeline.plan(settings.ae_factor).to_csv())
    return EXIT_OK


def cmd_pilot(args: argparse.Namespace) -> int:
    settings = settings_from_args(args)
    if args.r < 1:
        raise ConfigError("r", f"must be >= 1, got {args.r}")
    if args.synthetic is not None:
        n, seed = args.synthetic
        corpus = synthetic_corpus(int(n), int(seed), size=args.size)
    else:
        directory = args.corpus or settings.corpus_dir
        if directory is None:
            raise ConfigError("corpus_dir", "give --corpus DIR or --synthetic N SEED")
        corpus = load_corpus(directory)
    if not corpus:
        raise ConfigError("corpus_dir", "corpus is empty")
    ae = orthogonal_patch_autoencoder(settings.ae_factor, settings.ae_channels, settings.ae_seed)
    reports = run_pilot_study(corpus, ae, args.r, jobs=args.jobs)
    text = report_csv(reports)
    out = settings.out_dir
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"pilot_r{args.r}.csv"
    path.write_text(text)
    for rep in reports:
        print(f"{rep.variant}: mean PSNR {rep.mean_psnr:.3f} dB, mean SSIM {rep.mean_ssim:.4f}")
    print(f"wrote {path}")
    return EXIT_OK


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key = value config file")
    p.add_argument("--seed", help="unsigned 64-bit seed (falls back to $HIRES_DIFFUSE_SEED)")
    p.add_argument("--target", help="target size HxW")
    p.add_argument("--gamma", help="attentive guidance scale")
    p.add_argument("--eta1", help="guidance delay rate")
    p.add_argument("--eta2", help="comma-separated refinement step fractions")
    p.add_argument("--t0", help="stage-one denoising steps")
    p.add_argument("--beta", help="guidance decay exponent")
    p.add_argument("--cfg", help="classifier-free guidance scale")
    p.add_argument("--out", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hires-diffuse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="run the progressive pipeline with toy models")
    _common(p)
    p.add_argument("--trace", action="store_true", help="also write trace.csv")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("schedule-dump", help="print the guidance schedule as t,gamma_t")
    _common(p)
    p.set_defaults(func=cmd_schedule_dump)

    p = sub.add_parser("plan-dump", help="print the stage plan as stage,height,width,steps")
    _common(p)
    p.set_defaults(func=cmd_plan_dump)

    p = sub.add_parser("pilot", help="pixel- vs latent-space upsampling study")
    _common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--corpus", type=Path, help="directory of PNG images")
    src.add_argument("--synthetic", nargs=2, metavar=("N", "SEED"), type=int,
                     help="generate N synthetic images from SEED")
    p.add_argument("--size", type=int, default=128, help="synthetic image size")
    p.add_argument("--r", type=int, default=2, help="down/up-sampling rate")
    p.add_argument("--jobs", type=int, default=1, help="worker threads")
    p.set_defaults(func=cmd_pilot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
