import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hires_diffuse.planner import build_stage_plan, initial_shape
from hires_diffuse.tensor import Shape2D

SQ = Shape2D(1024, 1024)


@pytest.mark.parametrize("target", [(2048, 2048), (4096, 4096)])
def test_square_target_keeps_training_shape(target):
    assert initial_shape(SQ, Shape2D(*target), 8) == SQ


def test_wide_target_initial_shape():
    # ceil(sqrt(1024^2 * 0.5)) = 725, ceil(sqrt(1024^2 / 0.5)) = 1449
    assert math.ceil(math.sqrt(1024**2 * 0.5)) == 725
    assert math.ceil(math.sqrt(1024**2 / 0.5)) == 1449
    assert initial_shape(SQ, Shape2D(2048, 4096), 8) == Shape2D(728, 1456)


def test_initial_shape_rejects_bad_input():
    with pytest.raises(ValueError):
        initial_shape(SQ, Shape2D(0, 10), 8)
    with pytest.raises(ValueError):
        initial_shape(Shape2D(1020, 1024), Shape2D(2048, 2048), 8)


def test_published_step_counts():
    assert build_stage_plan(SQ, Shape2D(2048, 2048), 50, [0.2]).denoise_steps == (50, 10)
    assert build_stage_plan(SQ, Shape2D(4096, 4096), 50, [0.1, 0.2]).denoise_steps == (50, 5, 10)


def test_4096_ladder():
    plan = build_stage_plan(SQ, Shape2D(4096, 4096), 50, [0.1, 0.2], 8)
    areas = np.linspace(1024 * 1024, 4096 * 4096, 3)
    assert areas.tolist() == [1048576, 8912896, 16777216]
    assert math.isqrt(8912896) == 2985  # ceil -> 2986
    assert [s.height for s in plan.shapes] == [1024, 2992, 4096]
    assert [s.width for s in plan.shapes] == [1024, 2992, 4096]
    assert plan.num_stages == 3


def test_csv():
    plan = build_stage_plan(SQ, Shape2D(2048, 2048), 50, [0.2])
    assert plan.to_csv() == "stage,height,width,steps\n0,1024,1024,50\n1,2048,2048,10\n"


def test_degenerate_plan():
    plan = build_stage_plan(SQ, SQ, 50, [])
    assert plan.shapes == (SQ,) and plan.denoise_steps == (50,)
    with pytest.raises(ValueError):
        build_stage_plan(SQ, Shape2D(2048, 2048), 50, [])


@pytest.mark.parametrize("eta2", [[0.0], [0.001], [1.2], [-0.1]])
def test_rejects_bad_eta2(eta2):
    with pytest.raises(ValueError):
        build_stage_plan(SQ, Shape2D(2048, 2048), 50, eta2)


def test_rejects_indivisible_target():
    with pytest.raises(ValueError):
        build_stage_plan(SQ, Shape2D(2048, 2044), 50, [0.2])


def test_round_half_up():
    # 0.5 * 5 = 2.5 -> 3
    assert build_stage_plan(SQ, Shape2D(2048, 2048), 5, [0.5]).denoise_steps == (5, 3)


dims = st.integers(1, 48).map(lambda k: 8 * k)


@settings(max_examples=200, deadline=None)
@given(dims, dims, st.floats(1.0, 4.0), st.floats(0.25, 4.0),
       st.lists(st.floats(0.02, 1.0), min_size=1, max_size=4))
def test_plan_properties(th, tw, scale, ratio, eta2):
    train = Shape2D(th, tw)
    area = train.area * scale * scale
    target = Shape2D(8 * max(1, round(math.sqrt(area * ratio) / 8)),
                     8 * max(1, round(math.sqrt(area / ratio) / 8)))
    try:
        plan = build_stage_plan(train, target, 50, eta2, 8)
    except ValueError:
        first = initial_shape(train, target, 8)
        assert first.height > target.height or first.width > target.width
        return
    assert plan.shapes[0] == initial_shape(train, target, 8)
    assert plan.shapes[-1] == target
    counts = [s.area for s in plan.shapes]
    assert all(a <= b for a, b in zip(counts, counts[1:]))
    heights = [s.height for s in plan.shapes]
    widths = [s.width for s in plan.shapes]
    assert all(a <= b for a, b in zip(heights, heights[1:]))
    assert all(a <= b for a, b in zip(widths, widths[1:]))
    assert all(s.height % 8 == 0 and s.width % 8 == 0 for s in plan.shapes)
    r = target.height / target.width
    for s in plan.shapes[1:-1]:
        assert abs(s.height / s.width - r) <= 2 * 8 / min(s.height, s.width) * max(1.0, r)
    assert plan.denoise_steps[0] == 50
    assert all(n >= 1 for n in plan.denoise_steps)
    assert build_stage_plan(train, target, 50, eta2, 8) == plan
