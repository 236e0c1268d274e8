#!/usr/bin/env python3
"""Monte Carlo consistency check: sampled ts X^2 against alpha_0 + alpha_1/N^2.

A configurable version of the long-run validation; defaults are sized for a
laptop-minute, not for tight error bars.
"""

import argparse
import json
import sys
from fractions import Fraction

from mme.master import Potential, alpha_series, base_observable
from mme.sampler import ModelConfig, estimate, run_chains, sd_residual


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--lambda", dest="lam", type=str, default="1/50")
    ap.add_argument("--k-cut", type=float, default=6.0)
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--burnin", type=int, default=4000)
    ap.add_argument("--thinning", type=int, default=10)
    ap.add_argument("--chains", type=int, default=2)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--order", type=int, default=3)
    ap.add_argument("--threads", type=int, default=2)
    args = ap.parse_args()

    lam = Fraction(args.lam)
    V = Potential({(1, 1, 1, 1): 1}, 1)
    P = base_observable({(1, 1): 1})
    a0 = alpha_series(0, V, P, args.order)
    a1 = alpha_series(1, V, P, args.order)
    predicted = float(a0.eval(lam) + a1.eval(lam) / args.n ** 2)
    truncation = float(abs(a0.coeffs[-1] * lam ** args.order))

    cfg = ModelConfig(V=V, lam=float(lam), N=args.n, K_cut=args.k_cut,
                      seed=args.seed, n_steps=args.steps, n_burnin=args.burnin,
                      thinning=args.thinning, n_chains=args.chains)
    runs = run_chains(cfg, {"x2": ("ts", {(1, 1): 1}), "sd": ("sd", (1, 1), 1)},
                      threads=args.threads)
    mean, err = estimate(runs, "x2")
    resid, rerr = sd_residual(runs, "sd")
    doc = {
        "predicted": predicted,
        "truncation_last_term": truncation,
        "measured": {"mean": mean, "stderr": err},
        "sd_residual": {"mean": resid, "stderr": rerr, "bound": 5 / args.n ** 2},
        "acceptance": [r.acceptance for r in runs],
        "consistent": abs(mean - predicted) <= 3 * err + 2 * truncation,
    }
    json.dump(doc, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0 if doc["consistent"] else 2


if __name__ == "__main__":
    sys.exit(main())
