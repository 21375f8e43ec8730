"""Resolution ladder and per-stage step counts for progressive upscaling."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .attention import round_half_up
from .tensor import Shape2D


@dataclass(frozen=True)
class StagePlan:
    shapes: tuple[Shape2D, ...]
    denoise_steps: tuple[int, ...]
    aspect_ratio: float

    @property
    def num_stages(self) -> int:
        return len(self.shapes)

    def to_csv(self) -> str:
        lines = ["stage,height,width,steps"]
        for i, (shape, steps) in enumerate(zip(self.shapes, self.denoise_steps)):
            lines.append(f"{i},{shape.height},{shape.width},{steps}")
        return "\n".join(lines) + "\n"


def _snap_up(x: int, f: int) -> int:
    return -(-x // f) * f


def _ceil_sqrt(x: Fraction) -> int:
    """Smallest n with n*n >= x, computed exactly."""
    n = math.isqrt(x.numerator // x.denominator)
    while n * n < x:
        n += 1
    return n


def _stage_shape(area: Fraction, target: Shape2D, f: int) -> Shape2D:
    # the aspect ratio r = H'/W' is kept as an exact fraction
    h = _ceil_sqrt(area * target.height / target.width)
    w = _ceil_sqrt(area * target.width / target.height)
    return Shape2D(_snap_up(h, f), _snap_up(w, f))


def initial_shape(train: Shape2D, target: Shape2D, f: int = 8) -> Shape2D:
    """Stage-one shape: training-resolution pixel count at the target aspect ratio.

    ``H0 = ceil(sqrt(H*W*r))``, ``W0 = ceil(sqrt(H*W/r))`` with ``r = H'/W'``,
    each snapped up to a multiple of ``f``.
    """
    train, target = Shape2D(*train), Shape2D(*target)
    train.validate()
    target.validate()
    if f < 1:
        raise ValueError(f"spatial factor must be >= 1, got {f}")
    if train.height % f or train.width % f:
        raise ValueError(f"training shape {train} not divisible by f={f}")
    return _stage_shape(Fraction(train.area), target, f)


def stage_steps(t0: int, eta2: Sequence[float]) -> tuple[int, ...]:
    steps = [t0]
    for i, eta in enumerate(eta2):
        if not 0.0 < eta <= 1.0:
            raise ValueError(f"eta2[{i}]={eta} outside (0, 1]")
        n = round_half_up(eta * t0)
        if n < 1:
            raise ValueError(f"eta2[{i}]={eta} gives zero denoising steps at t0={t0}")
        steps.append(n)
    return tuple(steps)


def build_stage_plan(
    train: Shape2D,
    target: Shape2D,
    t0: int,
    eta2: Sequence[float],
    f: int = 8,
) -> StagePlan:
    """Interpolate pixel counts linearly from the stage-one shape to the target.

    Stage i has area ``linspace(A0, H'W', n + 1)[i]``; heights and widths come
    from the target aspect ratio, are ceiled and snapped up to multiples of
    ``f``. The last stage is pinned to the target exactly.
    """
    train, target = Shape2D(*train), Shape2D(*target)
    if t0 < 1:
        raise ValueError(f"t0 must be >= 1, got {t0}")
    if target.height % f or target.width % f:
        raise ValueError(f"target shape {target} not divisible by f={f}")
    steps = stage_steps(t0, eta2)
    first = initial_shape(train, target, f)
    ratio = target.height / target.width
    if first.height > target.height or first.width > target.width:
        raise ValueError(f"target {target} is smaller than the stage-one shape {first}")
    n = len(eta2)
    if n == 0:
        if first != target:
            raise ValueError(
                f"eta2 is empty but target {target} differs from stage-one shape {first}"
            )
        return StagePlan((first,), steps, ratio)
    # linspace(A0, A', n + 1) in exact arithmetic
    step = Fraction(target.area - first.area, n)
    shapes = [first]
    shapes += [_stage_shape(first.area + i * step, target, f) for i in range(1, n)]
    shapes.append(target)
    return StagePlan(tuple(shapes), steps, ratio)
