"""Acceptance suite: every criterion at its stated tolerance, one line each.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
PASS/FAIL lines as they complete.  Everything symbolic is exact rational
equality; only the Monte Carlo criterion is statistical.
"""

import time
from fractions import Fraction

import pytest

from mme import gausswick, sampler
from mme.expalg import i_k_integral, i_k_sum
from mme.freewick import tau
from mme.master import (LambdaSeries, Potential, alpha_series, base_observable,
                        entropy_series, entropy_series_by_parts, free_entropy)
from mme.ncpoly import base_word

F = Fraction
GEOMETRIC = LambdaSeries([(-2) ** k for k in range(7)])


def _report(num: int, name: str, ok: bool):
    print(f"\n[criterion {num:2d}] {name}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {num} ({name}) failed"


def mono(*colors):
    return base_observable({tuple(colors): 1})


def test_criterion_01_quadratic_exactness():
    ok = True
    for d, vterms, pword in [(1, {(1, 1): 1}, (1, 1)),
                             (2, {(1, 1): 1, (2, 2): 1}, (2, 2))]:
        V = Potential(vterms, d)
        P = base_observable({pword: 1})
        ok &= alpha_series(0, V, P, 6) == GEOMETRIC
        ok &= alpha_series(1, V, P, 4).is_zero()
        ok &= alpha_series(2, V, P, 3).is_zero()
        rs = gausswick.ratio_series(gausswick.Star(pword), V, 6, d)
        ok &= gausswick.genus_coefficient(rs, 0) == GEOMETRIC
        ok &= gausswick.genus_coefficient(rs, 1).is_zero()
        ok &= gausswick.genus_coefficient(rs, 2).is_zero()
    _report(1, "quadratic exactness (d=1 and d=2)", ok)


def test_criterion_02_linear_potential():
    V = Potential({(1,): 1}, 1)
    a_x = alpha_series(0, V, mono(1), 6)
    a_xx = alpha_series(0, V, mono(1, 1), 6)
    ok = a_x == LambdaSeries([0, -1, 0, 0, 0, 0, 0])
    ok &= a_xx == LambdaSeries([1, 0, 1, 0, 0, 0, 0])
    for pword, want in [((1,), a_x), ((1, 1), a_xx)]:
        rs = gausswick.ratio_series(gausswick.Star(pword), V, 6)
        ok &= gausswick.genus_coefficient(rs, 0) == want
        ok &= gausswick.genus_coefficient(rs, 1).is_zero()
    _report(2, "linear potential (shifted Gaussian)", ok)


def test_criterion_03_quartic_cross_path():
    t0 = time.time()
    V = Potential({(1, 1, 1, 1): 1}, 1)
    ok = True
    for pword in ((1, 1), (1, 1, 1, 1)):
        rs = gausswick.ratio_series(gausswick.Star(pword), V, 3)
        P = base_observable({pword: 1})
        for n in (0, 1):
            ok &= alpha_series(n, V, P, 3) == gausswick.genus_coefficient(rs, n)
    _report(3, f"quartic cross-path k<=3, n<=1 ({time.time() - t0:.0f}s)", ok)


def test_criterion_04_two_color_cross_path():
    V = Potential({(1, 1, 1, 1): 1, (2, 2, 2, 2): 1, (1, 2, 1, 2): 1}, 2)
    a0 = alpha_series(0, V, mono(1, 1), 2)
    rs = gausswick.ratio_series(gausswick.Star((1, 1)), V, 2, d=2)
    _report(4, "two-color cross-path", a0 == gausswick.genus_coefficient(rs, 0))


def test_criterion_05_i_k_identity():
    ok = i_k_integral(2) == F(3, 2)
    for k in range(1, 7):
        ok &= i_k_integral(k) == i_k_sum(k)
        ok &= i_k_sum(k) <= 2 ** k * i_k_sum(k, p=2)
    _report(5, "I_k integral == rational sum, k<=6", ok)


def test_criterion_06_schwinger_dyson_suite():
    import numpy as np
    rng = np.random.default_rng(2024)
    ok = True
    for _ in range(200):
        d = int(rng.integers(1, 4))
        degq = int(rng.integers(0, 8))
        w = tuple((int(rng.integers(1, d + 1)), ()) for _ in range(degq))
        i = int(rng.integers(1, d + 1))
        lhs = tau(w + ((i, ()),))
        rhs = sum((tau(w[:p]) * tau(w[p + 1:]) for p, lab in enumerate(w)
                   if lab[0] == i), start=tau(w[:0]).scale(0))
        ok &= lhs == rhs
    _report(6, "Schwinger-Dyson identity, 200 random monomials", ok)


def test_criterion_07_factorization_suite():
    import numpy as np
    t0 = time.time()
    V = Potential({(1, 1, 1, 1): 1}, 2)  # X1^4 viewed with one spare color
    rng = np.random.default_rng(99)
    ok = True
    for _ in range(20):
        p = tuple(1 for _ in range(int(rng.integers(1, 4))))
        q = tuple(1 for _ in range(int(rng.integers(1, 4))))
        big = base_observable({p + (2,) + q + (2,): 1})
        lhs = alpha_series(0, V, big, 3)
        rhs = alpha_series(0, V, mono(*p), 3).mul_truncated(alpha_series(0, V, mono(*q), 3))
        ok &= lhs == rhs
    _report(7, f"alpha_0 factorization, 20 pairs ({time.time() - t0:.0f}s)", ok)


def test_criterion_08_map_corollary():
    t0 = time.time()
    V = Potential({(1, 1, 1, 1): 1}, 1)
    root4 = gausswick.Star((1, 1, 1, 1))
    ok = gausswick.map_count(0, [], root4) == 2
    ok &= gausswick.map_count(1, [], root4) == 1
    ok &= gausswick.gue_mixed_moment([root4]) == gausswick.LaurentN({1: 2, -1: 1})
    for root in (gausswick.Star((1, 1)), root4):
        for g in (0, 1):
            ok &= gausswick.corollary13_check(V, root, g, 3)["ok"]
    _report(8, f"map corollary, roots X^2/X^4, g<=1, K<=3 ({time.time() - t0:.0f}s)", ok)


def test_criterion_09_monte_carlo():
    t0 = time.time()
    V = Potential({(1, 1, 1, 1): 1}, 1)
    N, lam = 32, 0.02
    a0 = alpha_series(0, V, mono(1, 1), 3)
    a1 = alpha_series(1, V, mono(1, 1), 3)
    lamf = F(1, 50)
    predicted = float(a0.eval(lamf) + a1.eval(lamf) / N ** 2)
    slack = 2 * abs(float((a0.coeffs[3] + a1.coeffs[3] / N ** 2) * lamf ** 3))

    cfg = sampler.ModelConfig(V=V, lam=lam, N=N, K_cut=6.0, seed=20260810,
                              n_steps=200_000, n_burnin=20_000, thinning=20,
                              n_chains=4)
    runs = sampler.run_chains(cfg, {"x2": ("ts", {(1, 1): 1}),
                                    "sd": ("sd", (1, 1), 1)}, threads=4)
    mean, err = sampler.estimate(runs, "x2")
    resid, rerr = sampler.sd_residual(runs, "sd")
    ok_mean = abs(mean - predicted) <= 3 * err + slack
    ok_resid = abs(resid) <= 5 / N ** 2 + 3 * rerr
    print(f"\n    ts X^2 = {mean:.5f} +- {err:.5f} vs {predicted:.5f} "
          f"(slack {slack:.5f}); sd = {resid:.5f} +- {rerr:.5f}; "
          f"acceptance {[round(r.acceptance, 2) for r in runs]}; "
          f"{time.time() - t0:.0f}s")
    _report(9, "Monte Carlo vs expansion at N=32", ok_mean and ok_resid)


def test_criterion_10_free_entropy():
    V = Potential({(1, 1, 1, 1): 1}, 1)
    a0 = alpha_series(0, V, V.as_ncpoly(), 4)
    ok = entropy_series(a0) == entropy_series_by_parts(a0)
    ok &= free_entropy(V, 0, 4) == 0
    _report(10, "free entropy identities, V=X^4, K<=4", ok)
