"""Finite-N bias of the centered free energy against the limit law.

Runs GOE experiments at several N and prints the mean and variance of
``N (F_N - centering)`` next to the limit-law values, plus the KS distance.
A mean gap that shrinks like ``N^-1/2`` is the expansion remainder.

    python3 scripts/transition_bias_vs_n.py --sizes 100,200,400,800 --trials 1000
"""

import argparse
import math

import numpy as np

from sskcw.analytics import TransitionParams, limit_law_moments, sample_transition_limit, transition_law
from sskcw.ensembles import EnsembleConfig
from sskcw.montecarlo import ExperimentPlan, ks_two_sample, run_experiment, transition_statistic


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--sizes", default="100,200,400,800")
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--J", type=float, default=2.0)
    ap.add_argument("--B", type=float, default=0.0)
    ap.add_argument("--seed", type=int, default=31)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    p = TransitionParams(args.J, args.B)
    law = transition_law(p)
    m_lim, v_lim = limit_law_moments(p, law)
    ref = sample_transition_limit(p, law, 10 ** 5, args.seed)
    print(f"limit law: mean {m_lim:.5f} variance {v_lim:.5f}")
    print(f"{'N':>6} {'mean':>9} {'se':>7} {'gap':>9} {'gap*sqrtN':>10} {'var':>8} {'KS D':>7}")
    for N in map(int, args.sizes.split(",")):
        plan = ExperimentPlan(EnsembleConfig(N, args.J), p, args.trials, ("F_exact",), args.seed + N, args.workers)
        x = transition_statistic(run_experiment(plan), p, N)
        gap = x.mean() - m_lim
        D, _ = ks_two_sample(x, ref)
        print(f"{N:6d} {x.mean():9.5f} {x.std(ddof=1) / math.sqrt(x.size):7.4f} {gap:9.5f} "
              f"{gap * math.sqrt(N):10.4f} {x.var(ddof=1):8.5f} {D:7.4f}")


if __name__ == "__main__":
    main()
