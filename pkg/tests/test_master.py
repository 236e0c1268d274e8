"""Interpolation operators, expansion coefficients, free energy and entropy."""

from fractions import Fraction

import numpy as np
import pytest

from mme.expalg import ExpPoly
from mme.freewick import tau_poly
from mme.master import (BudgetExceeded, LambdaSeries, Potential,
                        SelfAdjointError, alpha_eval, alpha_series,
                        base_observable, entropy_series,
                        entropy_series_by_parts, free_energy_series,
                        free_entropy, initial_state, nabla, op_L)
from mme.ncpoly import NCPoly, base_word, deg, label

F = Fraction


def mono(*colors):
    return base_observable({tuple(colors): 1})


class TestPotential:
    def test_plain_polynomials_accepted(self):
        Potential({(1, 1, 1, 1): 1}, 1)
        Potential({(1,): 1}, 1)
        Potential({(1, 2): F(1, 2), (2, 1): F(1, 2)}, 2)

    def test_cyclic_words_accepted(self):
        # tr(X1 X2) = tr(X2 X1): a single cross term is trace self-adjoint
        Potential({(1, 2): 1}, 2)
        # the reversal of X1X2X1X2 is a rotation of itself
        Potential({(1, 1, 1, 1): 1, (2, 2, 2, 2): 1, (1, 2, 1, 2): 1}, 2)

    def test_rejects_unbalanced_word(self):
        with pytest.raises(SelfAdjointError):
            Potential({(1, 1, 2, 1, 2, 2): 1}, 2)

    def test_rejects_bad_color(self):
        with pytest.raises(ValueError):
            Potential({(3,): 1}, 2)

    def test_cyclic_grad(self):
        V = Potential({(1, 1): 1}, 1)
        assert V.cyclic_grad(1) == ((F(2), (1,)),)
        V4 = Potential({(1, 1, 1, 1): 1}, 1)
        assert V4.cyclic_grad(1) == ((F(4), (1, 1, 1)),)
        Vc = Potential({(1, 2, 1, 2): 1}, 2)
        assert Vc.cyclic_grad(1) == ((F(2), (2, 1, 2)),)


class TestNabla:
    def test_unit_vanishes(self):
        V = Potential({(1, 1): 1}, 1)
        st = initial_state(base_observable({(): 1}))
        assert not nabla(st, V).poly

    def test_quadratic_display(self):
        # nabla(X^2) with V = X^2: 2 e^{-t1/2} X_(1) X_()
        V = Potential({(1, 1): 1}, 1)
        st1 = nabla(initial_state(mono(1, 1)), V)
        want = NCPoly({(label(1, (1,)), label(1)): ExpPoly.exp_half({1: -1}).scale(2)})
        assert st1.poly == want
        assert st1.order == (1,)

    def test_degree_bookkeeping(self):
        # deg(nabla Q) = deg Q + deg V - 2 on monomials with surviving gradient
        V = Potential({(1, 1, 1, 1): 1}, 1)
        for obs, dq in [(mono(1, 1), 2), (mono(1, 1, 1, 1), 4)]:
            out = nabla(initial_state(obs), V)
            assert deg(out.poly) == dq + 4 - 2

    def test_observable_validation(self):
        with pytest.raises(ValueError):
            initial_state(NCPoly.monomial((label(1, (1,)),)))


class TestOpL:
    def test_piece_count(self):
        V = Potential({(1, 1): 1}, 1)
        st = initial_state(mono(1, 1))
        for k in range(3):
            assert len(op_L(st)) == st.history.n + 1
            st = nabla(st, V)

    def test_unit_vanishes(self):
        st = initial_state(base_observable({(): 1}))
        assert all(not p.poly for p in op_L(st))

    def test_low_degree_vanishes(self):
        # L removes four letters: deg < 4 dies
        st = initial_state(mono(1, 1))
        assert all(not p.poly for p in op_L(st))

    def test_quartic_value(self):
        # the lambda^0 coefficient of the genus-one term for P = X^4 is 1,
        # matching E[ts X^4] = 2 + 1/N^2
        from mme.expalg import DomainSpec, integrate_domain
        pieces = op_L(initial_state(mono(1, 1, 1, 1)))
        total = sum((integrate_domain(tau_poly(p.poly, p.order),
                                      DomainSpec(chain=p.order)) for p in pieces),
                    F(0))
        assert total == 1


class TestAlphaSeries:
    def test_order_zero_is_free_moment(self):
        V = Potential({(1, 1, 1, 1): 1}, 1)
        assert alpha_series(0, V, mono(1, 1, 1, 1), 0) == LambdaSeries([2])
        assert alpha_series(0, V, mono(1, 1), 0) == LambdaSeries([1])

    def test_quadratic_geometric(self):
        V = Potential({(1, 1): 1}, 1)
        got = alpha_series(0, V, mono(1, 1), 6)
        assert got == LambdaSeries([(-2) ** k for k in range(7)])

    def test_quadratic_higher_genus_zero(self):
        V = Potential({(1, 1): 1}, 1)
        for n in (1, 2):
            assert alpha_series(n, V, mono(1, 1), 2).is_zero()

    def test_linear_model(self):
        V = Potential({(1,): 1}, 1)
        assert alpha_series(0, V, mono(1), 4) == LambdaSeries([0, -1, 0, 0, 0])
        assert alpha_series(0, V, mono(1, 1), 4) == LambdaSeries([1, 0, 1, 0, 0])

    def test_lambda0_degeneracy(self):
        V = Potential({(1, 1, 1, 1): 1}, 1)
        assert alpha_series(1, V, mono(1, 1), 0).is_zero()
        assert alpha_series(2, V, mono(1, 1), 0).is_zero()

    def test_linearity_in_observable(self):
        V = Potential({(1, 1, 1, 1): 1}, 1)
        P = base_observable({(1, 1): F(2, 3), (1, 1, 1, 1): F(-1, 5)})
        lhs = alpha_series(0, V, P, 2)
        rhs = (alpha_series(0, V, mono(1, 1), 2).scale(F(2, 3))
               + alpha_series(0, V, mono(1, 1, 1, 1), 2).scale(F(-1, 5)))
        assert lhs == rhs

    def test_budget(self):
        V = Potential({(1, 1): 1}, 1)
        with pytest.raises(BudgetExceeded):
            alpha_series(5, V, mono(1, 1), 1)
        with pytest.raises(BudgetExceeded):
            alpha_series(0, V, mono(1, 1), 40)

    def test_alpha_eval(self):
        V = Potential({(1, 1): 1}, 1)
        assert alpha_eval(0, V, mono(1, 1), 0, 4) == 1
        # truncated geometric sum at lambda = 1/2
        got = alpha_eval(0, V, mono(1, 1), F(1, 2), 8)
        assert got == sum(F((-2) ** k) * F(1, 2) ** k for k in range(9))


class TestFactorization:
    def test_product_identity(self):
        V = Potential({(1, 1, 1, 1): 1}, 3)
        rng = np.random.default_rng(5)
        for _ in range(6):
            p = tuple(int(rng.integers(1, 3)) for _ in range(int(rng.integers(1, 4))))
            q = tuple(int(rng.integers(1, 3)) for _ in range(int(rng.integers(1, 4))))
            big = base_observable({p + (3,) + q + (3,): 1})
            lhs = alpha_series(0, V, big, 2)
            rhs = alpha_series(0, V, mono(*p), 2).mul_truncated(
                alpha_series(0, V, mono(*q), 2))
            assert lhs == rhs


class TestCrossPath:
    def test_mixed_color_both_genera(self):
        # colors i != j inside the variance operator's double derivative
        from mme.gausswick import Star, genus_coefficient, ratio_series
        V = Potential({(1, 2, 1, 2): 1}, 2)
        P = mono(1, 1)
        rs = ratio_series(Star((1, 1)), V, 2, d=2)
        assert alpha_series(0, V, P, 2) == genus_coefficient(rs, 0)
        a1 = alpha_series(1, V, P, 2)
        assert a1 == genus_coefficient(rs, 1)
        assert a1 == LambdaSeries([0, -2, 12])

    def test_genus_two_stacked_variance_ops(self):
        # two L applications with interior drop-rank refinements
        from mme.gausswick import Star, genus_coefficient, ratio_series
        V = Potential({(1, 1, 1, 1): 1}, 1)
        P = mono(1, 1, 1, 1)
        a2 = alpha_series(2, V, P, 2)
        rs = ratio_series(Star((1, 1, 1, 1)), V, 2)
        assert a2 == genus_coefficient(rs, 2)
        assert a2 == LambdaSeries([0, 0, 720])

    def test_free_energy_matches_log_partition(self):
        # per-genus free energy against the formal log of the oracle's
        # partition-function series (N^2 and N^0 coefficients)
        from mme.gausswick import partition_series
        V = Potential({(1, 1, 1, 1): 1}, 1)
        z = partition_series(V, 3)
        l1 = z[1]
        l2 = z[2] - z[1] * z[1] * F(1, 2)
        l3 = z[3] - z[1] * z[2] + z[1] * z[1] * z[1] * F(1, 3)
        fe = free_energy_series(V, 1, 2)
        for k, lk in ((1, l1), (2, l2), (3, l3)):
            assert lk.coefficient(2) == fe[0].coeffs[k]
            assert lk.coefficient(0) == fe[1].coeffs[k]


class TestFreeEnergy:
    def test_quadratic_log_series(self):
        # -(1/2) log(1 + 2 lambda) = -lambda + lambda^2 - 4/3 lambda^3 + ...
        V = Potential({(1, 1): 1}, 1)
        fe = free_energy_series(V, 0, 3)[0]
        assert fe == LambdaSeries([0, -1, 1, F(-4, 3), 2])

    def test_leading_coefficient(self):
        V = Potential({(1, 1, 1, 1): 1}, 1)
        fe = free_energy_series(V, 0, 0)[0]
        assert fe == LambdaSeries([0, -2])  # -tau(V) lambda = -2 lambda

    def test_zero_series(self):
        assert LambdaSeries([0, 0]).antiderivative().scale(-1).is_zero()


class TestFreeEntropy:
    def test_zero_at_origin(self):
        V = Potential({(1, 1, 1, 1): 1}, 1)
        assert free_entropy(V, 0, 3) == 0

    def test_quadratic_series_shape(self):
        # alpha0 = [1, -2, 4]; chi series = k/(k+1) a_k lambda^{k+1} = -lambda^2 + ...
        s = entropy_series(LambdaSeries([1, -2, 4]))
        assert s == LambdaSeries([0, 0, -1, F(8, 3)])

    def test_identity_on_random_series(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            a = LambdaSeries([F(int(rng.integers(-9, 10)), int(rng.integers(1, 7)))
                              for _ in range(6)])
            assert entropy_series(a) == entropy_series_by_parts(a)


class TestSeriesType:
    def test_eval_and_last_term(self):
        s = LambdaSeries([1, -2, 4])
        assert s.eval(F(1, 2)) == 1 - 1 + 1
        assert s.last_term(F(1, 2)) == 1

    def test_json(self):
        s = LambdaSeries([F(3, 2), -1])
        assert s.to_json(1) == {"n": 1, "lambda_coeffs": ["3/2", "-1"],
                                "truncation": {"K": 1}}
