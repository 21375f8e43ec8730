"""
Attentive guidance schedule
===========================

How the per-step blend weight ramps up once the delay has passed, and what
one guided step does to a latent.
"""

# %%
import numpy as np

from hires_diffuse import attentive_guide, build_guidance_schedule, pfsa

g = build_guidance_schedule(gamma=0.004, eta1=0.06, beta=3.0, t0=50)
print("delay steps:", g.delay_steps, " last guided t:", g.last_guided_step)

# %%
# Steps run from t = 50 down to 1. The weight is zero while t is above the
# window, peaks right after the delay and fades out toward t = 0.
for t in (50, 48, 47, 40, 30, 20, 10, 1, 0):
    print(f"t={t:2d}  gamma_t={g[t]:.6f}")

# %%
# Larger decay factors concentrate guidance in the first few guided steps.
for beta in (1.0, 3.0, 6.0):
    s = build_guidance_schedule(0.004, 0.06, beta, 50)
    print(f"beta={beta}: sum of weights {sum(s[t] for t in range(51)):.5f}")

# %%
# Self-attention with no learned weights pulls every token toward tokens it
# correlates with. The result stays in the per-channel range of the input.
rng = np.random.default_rng(0)
z = rng.standard_normal((8, 8, 4)).astype(np.float32)
out = pfsa(z)
print("input range ", z.min(axis=(0, 1)))
print("output range", out.min(axis=(0, 1)))

# %%
# A guided step is a small convex blend, so the latent barely moves.
guided = attentive_guide(z, g[47])
print("max change at gamma_t = 0.004:", float(np.abs(guided - z).max()))
