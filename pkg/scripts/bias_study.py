"""Estimator bias of the increment functional as dt and h_grid are halved.

Prints, per resolution, the exact mean of the box-kernel statistic, its gap
to the continuum mean and a Monte Carlo check.

    python scripts/bias_study.py --t 50 --paths 400 --seed 3
"""
import argparse
import math

from levylt.constants import estimator_mean, exact_mean
from levylt.exponent import LevyExponent
from levylt.simulate import run_paths


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--beta", type=float, default=None)
    ap.add_argument("--t", type=float, default=50.0)
    ap.add_argument("--dt", type=float, default=0.02)
    ap.add_argument("--h-grid", type=float, default=0.2)
    ap.add_argument("--levels", type=int, default=4)
    ap.add_argument("--paths", type=int, default=0, help="Monte Carlo paths per level (0 to skip)")
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    exp = LevyExponent.brownian() if a.beta is None else LevyExponent.stable(a.beta)
    target = exact_mean(exp, a.t)
    print(f"{exp.label} t={a.t:g} exact mean {target:.4f}")
    print("dt        h_grid   estimator_mean  gap       MC mean +- SE")
    dt, h = a.dt, a.h_grid
    for _ in range(a.levels):
        em = estimator_mean(exp, a.t, dt, h)
        mc = ""
        if a.paths:
            I, _ = run_paths(exp, a.t, dt, h, a.paths, a.seed)
            mc = f"{I.mean():.3f} +- {I.std(ddof=1) / math.sqrt(len(I)):.3f}"
        print(f"{dt:<9g} {h:<8g} {em:<15.4f} {em - target:<+9.4f} {mc}")
        dt, h = dt / 2, h / 2


if __name__ == "__main__":
    main()
