"""
Progressive stage plans
=======================

Stage one runs at roughly the training area with the target's aspect
ratio. Later stages grow the image linearly in area up to the target.
"""

# %%
from hires_diffuse import Shape2D, build_stage_plan, initial_shape

train = Shape2D(1024, 1024)
for target in (Shape2D(2048, 2048), Shape2D(4096, 4096), Shape2D(2048, 4096)):
    print(target, "-> stage one", initial_shape(train, target))

# %%
plan = build_stage_plan(train, Shape2D(4096, 4096), t0=50, eta2=[0.1, 0.2])
print(plan.to_csv())

# %%
# Refinement steps are fractions of the base step count, so a larger
# fraction re-noises more of the upsampled image.
for eta2 in ([0.2], [0.1, 0.2], [0.1, 0.1, 0.3]):
    p = build_stage_plan(train, Shape2D(4096, 4096), 50, eta2)
    print(eta2, list(p.denoise_steps), [s.height for s in p.shapes])
