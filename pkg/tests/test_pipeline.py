from dataclasses import replace

import numpy as np
import pytest

from hires_diffuse.models import analytic_gaussian_denoiser, orthogonal_patch_autoencoder
from hires_diffuse.noise import denoise_step, make_rng, standard_normal
from hires_diffuse.pipeline import (
    ConfigError,
    Models,
    PipelineConfig,
    StageTrace,
    generate,
    run_refinement_stage,
    run_stage_one,
)
from hires_diffuse.planner import StagePlan
from hires_diffuse.tensor import Shape2D

SMALL = PipelineConfig(train=(32, 32), target=(64, 64), eta2=(0.2,), seed=5)


def flat_grey_models(cfg, c=4, sigma2=0.25):
    ae = orthogonal_patch_autoencoder(8, c, seed=1)
    mu = ae.encode(np.full((8, 8, 3), 0.5, dtype=np.float32))[0, 0]
    return Models(analytic_gaussian_denoiser(mu, sigma2, cfg.noise_schedule()), ae), mu


@pytest.fixture(scope="module")
def small_models():
    return flat_grey_models(SMALL)[0]


def test_config_validation_names_key():
    bad = [
        (dict(eta2=(0.0,)), "eta2"),
        (dict(gamma=-0.1), "gamma"),
        (dict(eta1=1.0), "eta1"),
        (dict(eta1=0.99, t0=50), "eta1"),
        (dict(t0=0), "t0"),
        (dict(cfg_scale=-1.0), "cfg_scale"),
        (dict(beta_decay=0.0), "beta_decay"),
        (dict(pfsa_scaling_override=0.0), "pfsa_scaling_override"),
        (dict(target=(2048, 2044)), "eta2"),
        (dict(seed=-1), "seed"),
    ]
    for changes, key in bad:
        with pytest.raises(ConfigError) as info:
            replace(PipelineConfig(), **changes).validate(8)
        assert info.value.key == key, changes


def test_defaults_are_published_settings():
    cfg = PipelineConfig()
    assert (cfg.t0, cfg.gamma, cfg.eta1, cfg.beta_decay, cfg.cfg_scale) == (50, 0.004, 0.06, 3.0, 7.5)
    cfg.validate()


def test_zero_gamma_equals_no_guidance_hook(small_models):
    cfg = replace(SMALL, gamma=0.0)
    a = generate(cfg, small_models)
    b = generate(cfg, small_models, guidance=False)
    assert a.tobytes() == b.tobytes()


def test_guidance_changes_output(small_models):
    cfg = replace(SMALL, gamma=0.5)
    a = generate(cfg, small_models)
    b = generate(cfg, small_models, guidance=False)
    assert not np.array_equal(a, b)


def test_trace_shows_delay_then_schedule(small_models):
    trace = StageTrace()
    generate(SMALL, small_models, trace)
    assert trace.steps == [50, 10]
    stage0 = trace.stages[0].records
    assert [r.t for r in stage0] == list(range(49, -1, -1))
    assert [r.gamma_t for r in stage0[:3]] == [0.0, 0.0, 0.0]
    assert not any(r.guided for r in stage0[:3])
    gsched = SMALL.guidance_schedule()
    for r in stage0[3:]:
        assert r.guided and r.gamma_t == gsched[r.t]
    assert stage0[3].t == 46
    # guidance only ever runs in stage 0
    assert not any(r.guided for st in trace.stages[1:] for r in st.records)


def test_trace_csv(small_models):
    trace = StageTrace()
    generate(SMALL, small_models, trace)
    lines = trace.to_csv().splitlines()
    assert lines[0] == "stage,height,width,t,gamma_t,guided,mean,var,min,max"
    assert len(lines) == 1 + 50 + 10
    assert lines[1].startswith("0,32,32,49,0.0,0,")
    assert lines[-1].startswith("1,64,64,0,0.0,0,")


def test_single_stage_generation_shape(small_models):
    cfg = replace(SMALL, target=(32, 32), eta2=())
    trace = StageTrace()
    img = generate(cfg, small_models, trace)
    assert img.shape == (32, 32, 3)
    assert trace.steps == [50]


def test_generation_is_deterministic(small_models):
    a = generate(SMALL, small_models)
    b = generate(SMALL, small_models)
    assert a.tobytes() == b.tobytes()
    c = generate(replace(SMALL, seed=6), small_models)
    assert not np.array_equal(a, c)


def test_adding_stage_keeps_earlier_noise(small_models):
    t1, t2 = StageTrace(), StageTrace()
    generate(SMALL, small_models, t1)
    generate(replace(SMALL, target=(96, 96), eta2=(0.2, 0.3)), small_models, t2)
    assert t1.stages[0].records == t2.stages[0].records


def test_refinement_output_shape(small_models):
    cfg = SMALL
    plan = cfg.plan(8)
    sched = cfg.noise_schedule()
    z0 = run_stage_one(cfg, small_models.denoiser, sched, cfg.guidance_schedule(), (4, 4, 4))
    z1 = run_refinement_stage(z0, 1, plan, cfg, small_models, sched)
    assert z1.shape == (8, 8, 4)
    assert small_models.autoencoder.decode(z1).shape == (64, 64, 3)


def test_refinement_rejects_zero_steps(small_models):
    plan = StagePlan((Shape2D(32, 32), Shape2D(64, 64)), (50, 0), 1.0)
    sched = SMALL.noise_schedule()
    with pytest.raises(ValueError):
        run_refinement_stage(np.zeros((4, 4, 4), np.float32), 1, plan, SMALL, small_models, sched)
    with pytest.raises(ValueError):
        run_refinement_stage(np.zeros((4, 4, 4), np.float32), 2, plan, SMALL, small_models, sched)


def test_full_renoise_refinement_is_nearly_fresh_sample():
    # identity-like autoencoder at scale 1 and T_i = T0: the previous latent
    # only enters through sqrt(alpha_bar_T0), about 6e-3 here
    cfg = PipelineConfig(train=(8, 8), target=(8, 8), eta2=(1.0,), gamma=0.0, seed=2)
    sched = cfg.noise_schedule()
    models = Models(analytic_gaussian_denoiser(0.0, 0.25, sched), orthogonal_patch_autoencoder(1, 3))
    plan = StagePlan((Shape2D(8, 8), Shape2D(8, 8)), (50, 50), 1.0)
    z_prev = np.random.default_rng(0).standard_normal((8, 8, 3)).astype(np.float32)
    refined = run_refinement_stage(z_prev, 1, plan, cfg, models, sched)

    z = standard_normal(make_rng(cfg.seed, 1, 0), (8, 8, 3))
    for t in range(50, 0, -1):
        z = denoise_step(z, models.denoiser.predict_noise(z, t), sched, t)
    assert np.max(np.abs(refined - z)) < 0.02 * np.max(np.abs(z_prev))
    assert np.max(np.abs(refined - z)) > 0


def test_multistage_statistics_preserved():
    # grey prior mean survives pixel upsampling; full re-noise restores the variance
    cfg = PipelineConfig(train=(64, 64), target=(128, 128), eta2=(1.0,), t0=1000, gamma=0.0)
    models, mu = flat_grey_models(cfg, c=192)
    sched = cfg.noise_schedule()
    plan = cfg.plan(8)
    stages = [[], []]
    for seed in range(20):
        c = replace(cfg, seed=seed)
        z = run_stage_one(c, models.denoiser, sched, c.guidance_schedule(), (8, 8, 192))
        stages[0].append(z - mu)
        stages[1].append(run_refinement_stage(z, 1, plan, c, models, sched) - mu)
    for centred in stages:
        x = np.stack(centred).astype(np.float64)
        n = x.size
        assert abs(x.mean()) < 5 * np.sqrt(0.25 / n)
        assert abs(x.var() - 0.25) < 5 * 0.25 * np.sqrt(2.0 / n)


def test_partial_renoise_keeps_mean():
    cfg = PipelineConfig(train=(32, 32), target=(64, 64), eta2=(0.2,), t0=200, gamma=0.0)
    models, mu = flat_grey_models(cfg, c=192)
    sched = cfg.noise_schedule()
    plan = cfg.plan(8)
    out = []
    for seed in range(20):
        c = replace(cfg, seed=seed)
        z = run_stage_one(c, models.denoiser, sched, c.guidance_schedule(), (4, 4, 192))
        out.append(run_refinement_stage(z, 1, plan, c, models, sched) - mu)
    x = np.stack(out).astype(np.float64)
    assert abs(x.mean()) < 5 * np.sqrt(0.25 / x.size)
