"""
Temporal convergence on graded meshes
=====================================

A manufactured solution that behaves like ``t**mu`` near ``t = 0`` slows
every scheme down on a uniform mesh. Grading the mesh as ``t_n = T (n/M)**r``
recovers the full order once ``mu * r`` reaches it.
"""

from fracac import RunConfig, run_convergence

# Smooth solution first: uniform mesh, the three schemes side by side.
for scheme in ("l1", "l1cn", "l1plus"):
    cfg = RunConfig(experiment="converge1", scheme=scheme, alpha=0.5, nx=16, r=1.0, Ms=(8, 16, 32, 64))
    rows = run_convergence(cfg)
    print(scheme, " ".join(f"{row.order:.2f}" for row in rows[1:]))

# Weak singularity at t = 0 (mu = 0.5). r = 1 stalls near mu, r = 2/mu does not.
for r in (1.0, 4.0):
    cfg = RunConfig(experiment="converge2", scheme="l1plus", alpha=0.5, mu=0.5, nx=8, r=r,
                    Ms=(64, 128, 256, 512))
    rows = run_convergence(cfg)
    print(f"l1plus r={r:g}", " ".join(f"{row.order:.2f}" for row in rows[1:]))
