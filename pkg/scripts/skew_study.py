"""Skewness of the normalized statistic against t (the limit law is symmetric).

    python scripts/skew_study.py --t 1e3 1e4 1e5 --paths 1000 --seed 5
"""
import argparse

import numpy as np
from scipy import stats

from levylt.clt import normalized_statistic
from levylt.constants import estimator_mean
from levylt.exponent import LevyExponent
from levylt.simulate import run_paths


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--beta", type=float, default=None)
    ap.add_argument("--t", type=float, nargs="+", default=[1e3, 1e4])
    ap.add_argument("--steps", type=float, default=2e5, help="time steps per path")
    ap.add_argument("--h-grid", type=float, default=0.1)
    ap.add_argument("--paths", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    exp = LevyExponent.brownian() if a.beta is None else LevyExponent.stable(a.beta)
    print("t         skew     SE      excess kurtosis")
    for t in a.t:
        dt = t / a.steps
        I, _ = run_paths(exp, t, dt, a.h_grid, a.paths, a.seed)
        z = normalized_statistic(I, exp, t, mean=estimator_mean(exp, t, dt, a.h_grid))
        se = np.sqrt(6.0 / len(z))
        print(f"{t:<9g} {stats.skew(z):+.3f}   {se:.3f}   {stats.kurtosis(z):+.3f}")


if __name__ == "__main__":
    main()
