"""Statistic vs limit law for one family, with a short printed summary.

    python scripts/run_clt.py --beta 1.5 --t 1000 --dt 0.01 --paths 2000 --seed 1
"""
import argparse

from levylt.clt import LimitParams, compare_distributions, run_clt
from levylt.exponent import LevyExponent


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--beta", type=float, default=None, help="stable index; Brownian if omitted")
    ap.add_argument("--t", type=float, default=1e4)
    ap.add_argument("--dt", type=float, default=0.05)
    ap.add_argument("--h-grid", type=float, default=0.1)
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--centering", choices=("estimator", "exact"), default="estimator")
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    exp = LevyExponent.brownian() if a.beta is None else LevyExponent.stable(a.beta)
    ss = run_clt(exp, a.t, a.dt, a.h_grid, a.paths, a.seed, limit=LimitParams(),
                 workers=a.workers, centering=a.centering)
    rep = compare_distributions(ss)
    print(f"{exp.label}  t={a.t:g}  M={a.paths}  centering={a.centering}")
    for k, (e, l, z) in enumerate(zip(rep.moments_empirical, rep.moments_limit, rep.moment_z_scores), 1):
        print(f"  m{k}: statistic {e:+.4f}  limit {l:+.4f}  z {z:+.2f}")
    print(f"  KS D={rep.ks_statistic:.4f} p={rep.ks_p_value:.4f}  -> {'pass' if rep.passed else 'fail'}")


if __name__ == "__main__":
    main()
