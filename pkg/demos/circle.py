"""
Shrinking circle
================

A disc of radius 8 shrinks by mean curvature: ``R(t)**2 = 64 - 2 t`` for the
classical equation. Memory (alpha < 1) slows it down.

The full 128^2 runs take a few minutes; pass ``--quick`` for 64^2.
"""

import sys

import numpy as np

from fracac import RunConfig, run_circle

nx = 64 if "--quick" in sys.argv else 128

results = {}
for alpha in (1.0, 0.9):
    cfg = RunConfig(experiment="circle", scheme="l1cn", alpha=alpha, eps2=1.0, C0=1000.0,
                    M=100, T1=1.0, T=30.0, dt=0.01, nx=nx)
    results[alpha] = run_circle(cfg)

print("   t   64-2t  " + "  ".join(f"a={a:<4g}" for a in results))
for t in (0, 5, 10, 15, 20, 25, 30):
    row = "  ".join(f"{np.interp(t, r.t, r.R2):6.2f}" for r in results.values())
    print(f"{t:4d}  {64 - 2 * t:6.1f}  {row}")
