"""The interpolation operators and the 1/N^2 expansion coefficients.

Starting from a base observable P, the coefficient of N^{-2n} in the perturbed
Gaussian expectation of ts P is a power series in lambda whose lambda^k term
sums, over compositions k_0 + ... + k_n = k, the exact time integrals of

    tau( nabla_V^{k_n} o L o ... o L o nabla_V^{k_0} (P) (x^T) ),

with one integration time per nabla (a new chain time above all others) and
two per L (a chain time plus a "drop" time pinned below it).  The drop time's
rank among the earlier times is not determined, so applying L splits a state
into one piece per insertion rank s; within a piece the total order of all
times is known, every ordered-time prefactor resolves to a concrete symbol,
and the piece integrates over a plain simplex.

nabla_V rotates one letter out of the word (a cyclic derivative level by
level), pushes all labels one slot up, and multiplies by the cyclic gradient
of the potential in the base variables.  L applies a cyclic derivative, then
three more derivatives split across the two tensor legs, relabels the four
remaining segments through the four insertion maps, and glues them back into a
single word; its prefactor decays in both new times.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .expalg import DomainSpec, ExpPoly, integrate_domain
from .freewick import tau_poly
from .ncpoly import History, LabelMap, NCPoly, Word, base_word

MAX_GENUS = 3
MAX_LAMBDA_ORDER = 16

_HALF = Fraction(1, 2)


class BudgetExceeded(RuntimeError):
    """Requested orders outside the configured symbolic budget."""


class SelfAdjointError(ValueError):
    """The potential's trace is not real on Hermitian tuples."""

    def __init__(self, monomial: str):
        self.monomial = monomial
        super().__init__(f"potential is not trace self-adjoint at monomial {monomial}")


def _cyclic_canon(wd: tuple[int, ...]) -> tuple[int, ...]:
    if not wd:
        return wd
    return min(wd[i:] + wd[:i] for i in range(len(wd)))


class Potential:
    """Self-adjoint perturbation V: rational coefficients on color words.

    Trace self-adjointness means tr V(X) is real for Hermitian X, i.e. for
    every cyclic class of words the total coefficient equals the one of the
    reversed class (coefficients here are real rationals, so conjugation is
    trivial and the check is an equality of cyclic-class sums).
    """

    def __init__(self, terms: Mapping[tuple[int, ...], Fraction | int], d: int):
        self.d = int(d)
        if self.d < 1:
            raise ValueError("arity d must be >= 1")
        self.terms: dict[tuple[int, ...], Fraction] = {}
        for wd, c in terms.items():
            wd = tuple(wd)
            if any(not 1 <= col <= self.d for col in wd):
                raise ValueError(f"monomial {wd} uses a color outside [1, {self.d}]")
            c = Fraction(c)
            if c:
                self.terms[wd] = self.terms.get(wd, Fraction(0)) + c
        self.terms = {w: c for w, c in self.terms.items() if c}
        self._check_selfadjoint()
        self._grad_cache: dict[int, tuple[tuple[Fraction, tuple[int, ...]], ...]] = {}

    def _check_selfadjoint(self):
        sums: dict[tuple[int, ...], Fraction] = {}
        for wd, c in self.terms.items():
            k = _cyclic_canon(wd)
            sums[k] = sums.get(k, Fraction(0)) + c
        for k, s in sums.items():
            rev = _cyclic_canon(k[::-1])
            if sums.get(rev, Fraction(0)) != s:
                name = "".join(f"X{c}" for c in k)
                raise SelfAdjointError(name)

    def cyclic_grad(self, i: int) -> tuple[tuple[Fraction, tuple[int, ...]], ...]:
        """D_i V as (coefficient, color word) pairs."""
        cached = self._grad_cache.get(i)
        if cached is not None:
            return cached
        acc: dict[tuple[int, ...], Fraction] = {}
        for wd, c in self.terms.items():
            for p, col in enumerate(wd):
                if col == i:
                    rot = wd[p + 1:] + wd[:p]
                    acc[rot] = acc.get(rot, Fraction(0)) + c
        out = tuple((c, w) for w, c in sorted(acc.items()) if c)
        self._grad_cache[i] = out
        return out

    def as_ncpoly(self) -> NCPoly:
        return NCPoly({base_word(wd): ExpPoly.const(c) for wd, c in self.terms.items()})

    def deg(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def __repr__(self):
        bits = [f"{c}*" + ("".join(f"X{x}" for x in w) or "1")
                for w, c in sorted(self.terms.items())]
        return "Potential[" + " + ".join(bits) + f"; d={self.d}]"


def base_observable(terms: Mapping[tuple[int, ...], Fraction | int]) -> NCPoly:
    """Observable over the base variables from color words with rational coefficients."""
    return NCPoly({base_word(w): ExpPoly.const(c) for w, c in terms.items()})


class LambdaSeries:
    """Truncated power series in lambda with exact rational coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[Fraction | int]):
        self.coeffs = [Fraction(c) for c in coeffs]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __eq__(self, other):
        return isinstance(other, LambdaSeries) and self.coeffs == other.coeffs

    def __add__(self, other: "LambdaSeries") -> "LambdaSeries":
        k = min(len(self.coeffs), len(other.coeffs))
        return LambdaSeries([self.coeffs[i] + other.coeffs[i] for i in range(k)])

    def __sub__(self, other: "LambdaSeries") -> "LambdaSeries":
        k = min(len(self.coeffs), len(other.coeffs))
        return LambdaSeries([self.coeffs[i] - other.coeffs[i] for i in range(k)])

    def scale(self, c) -> "LambdaSeries":
        c = Fraction(c)
        return LambdaSeries([x * c for x in self.coeffs])

    def mul_truncated(self, other: "LambdaSeries") -> "LambdaSeries":
        k = min(len(self.coeffs), len(other.coeffs))
        out = [Fraction(0)] * k
        for i in range(k):
            for j in range(k - i):
                out[i + j] += self.coeffs[i] * other.coeffs[j]
        return LambdaSeries(out)

    def antiderivative(self) -> "LambdaSeries":
        """Term-by-term primitive with zero constant term (order grows by one)."""
        return LambdaSeries([Fraction(0)] + [c / (k + 1) for k, c in enumerate(self.coeffs)])

    def shift_up(self) -> "LambdaSeries":
        """Multiply by lambda (order grows by one)."""
        return LambdaSeries([Fraction(0)] + self.coeffs)

    def eval(self, lam) -> Fraction:
        lam = Fraction(lam)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * lam + c
        return acc

    def last_term(self, lam) -> Fraction:
        """Magnitude of the last retained term: a truncation diagnostic, not a
        convergence certificate."""
        lam = Fraction(lam)
        return abs(self.coeffs[-1] * lam ** (len(self.coeffs) - 1))

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def to_json(self, n: int) -> dict:
        return {"n": n,
                "lambda_coeffs": [str(c) for c in self.coeffs],
                "truncation": {"K": self.order}}

    def __repr__(self):
        return "LambdaSeries[" + ", ".join(str(c) for c in self.coeffs) + "]"


@dataclass(frozen=True)
class OperatorState:
    """A polynomial over the current universe together with its time context.

    ``order`` lists the state's time symbols sorted increasingly; the h-th
    smallest time of the context is order[h-1] (h = 0 meaning time zero).
    The number of times always equals the universe's slot count.
    """

    poly: NCPoly
    history: History
    order: tuple[int, ...]

    def __post_init__(self):
        if len(self.order) != self.history.n:
            raise ValueError("time context inconsistent with history length")


def initial_state(P: NCPoly) -> OperatorState:
    for w in P.terms:
        for _, idx in w:
            if idx:
                raise ValueError("observables must use base variables only")
    return OperatorState(P, History(), ())


def nabla(state: OperatorState, V: Potential) -> OperatorState:
    """One interpolation step: a new chain time above every existing one.

    For each letter (level h, color i) the word is rotated cyclically, every
    surviving label gains the fresh slot, and the cyclic gradient D_i V in the
    base variables multiplies on the right, all weighted by
    (1/2) e^{(s_h - t_new)/2}.
    """
    n, c = state.history.n, state.history.c
    new_sym = n + 1
    gmap = LabelMap("G+", c=c, n=n)
    acc: dict[Word, ExpPoly] = {}
    grads = {i: V.cyclic_grad(i) for i in range(1, V.d + 1)}
    for w, coeff in state.poly.terms.items():
        for p, (col, idx) in enumerate(w):
            grad = grads.get(col)
            if not grad:
                continue
            h = n - len(idx)
            e2 = {new_sym: -1}
            if h >= 1:
                s = state.order[h - 1]
                e2[s] = e2.get(s, 0) + 1
            pref = coeff * ExpPoly.exp_half(e2)
            rot = gmap.apply_word(w[p + 1:] + w[:p])
            for gc, gw in grad:
                nw = rot + base_word(gw)
                add = pref.scale(gc * _HALF)
                prev = acc.get(nw)
                acc[nw] = add if prev is None else prev + add
    return OperatorState(NCPoly(acc), state.history.extended("G"), state.order + (new_sym,))


def op_L(state: OperatorState) -> list[OperatorState]:
    """The variance operator, split by the rank s of the new drop time.

    Adds a chain time a = t_{n+1} (largest) and a drop time b = t_{n+2};
    in piece s the drop sits between the (s-1)-th and s-th smallest earlier
    times.  Each output word concatenates the four derivative remainders,
    relabeled through the rank-s insertion maps, with the prefactor
    (1/2) e^{(s_h + s_k + s_y + s_x)/2 - a - b}.
    """
    n, c = state.history.n, state.history.c
    a, b = n + 1, n + 2
    hist2 = state.history.extended("F")
    pieces: list[OperatorState] = []
    for s in range(1, n + 2):
        f1 = LabelMap("F1", c, n, s)
        f2 = LabelMap("F2", c, n, s)
        f1t = LabelMap("F1~", c, n, s)
        f2t = LabelMap("F2~", c, n, s)
        order2 = state.order[: s - 1] + (b,) + state.order[s - 1:] + (a,)
        acc: dict[Word, ExpPoly] = {}
        for w, coeff in state.poly.terms.items():
            for p1, (i1, idx1) in enumerate(w):
                h = n - len(idx1)
                rot = w[p1 + 1:] + w[:p1]
                for p2, (i2, idx2) in enumerate(rot):
                    if i2 != i1:
                        continue
                    k = n - len(idx2)
                    left, right = rot[:p2], rot[p2 + 1:]
                    for p3, (j3, idx3) in enumerate(left):
                        x = n - len(idx3)
                        if x > s - 1:
                            continue
                        # position-s entries must agree (vacuous at s = n+1)
                        e3 = idx3[s - x - 1] if s <= n else None
                        for p4, (j4, idx4) in enumerate(right):
                            if j4 != j3:
                                continue
                            y = n - len(idx4)
                            if y > s - 1:
                                continue
                            if s <= n and idx4[s - y - 1] != e3:
                                continue
                            A, B = left[:p3], left[p3 + 1:]
                            C, D = right[:p4], right[p4 + 1:]
                            nw = (f1.apply_word(B) + f1t.apply_word(A)
                                  + f2t.apply_word(D) + f2.apply_word(C))
                            e2 = {a: -2, b: -2}
                            for lvl in (h, k, x, y):
                                if lvl >= 1:
                                    sym = state.order[lvl - 1]
                                    e2[sym] = e2.get(sym, 0) + 1
                            add = coeff.scale(_HALF) * ExpPoly.exp_half(e2)
                            prev = acc.get(nw)
                            acc[nw] = add if prev is None else prev + add
        pieces.append(OperatorState(NCPoly(acc), hist2, order2))
    return pieces


def _piece_value(state: OperatorState) -> Fraction:
    f = tau_poly(state.poly, state.order)
    if f.is_zero():
        return Fraction(0)
    return integrate_domain(f, DomainSpec(chain=state.order))


def alpha_series(n: int, V: Potential, P: NCPoly, K: int,
                 max_genus: int = MAX_GENUS,
                 max_order: int = MAX_LAMBDA_ORDER) -> LambdaSeries:
    """Coefficient of N^{-2n} as a lambda-series up to order K.

    Walks the composition tree of operator applications once, sharing every
    common prefix: from a state list one can either apply L (if fewer than n
    are used) or one more nabla (if the lambda budget allows).
    """
    if n < 0 or K < 0:
        raise ValueError("orders must be non-negative")
    if n > max_genus or K > max_order:
        raise BudgetExceeded(f"requested (n={n}, K={K}) beyond budget "
                             f"(max_genus={max_genus}, max_order={max_order})")
    totals = [Fraction(0)] * (K + 1)

    def rec(states: list[OperatorState], ls_done: int, k_used: int):
        states = [s for s in states if s.poly]
        if not states:
            return
        if ls_done == n:
            totals[k_used] += sum((_piece_value(s) for s in states), Fraction(0))
        else:
            nxt: list[OperatorState] = []
            for s in states:
                nxt.extend(op_L(s))
            rec(nxt, ls_done + 1, k_used)
        if k_used < K:
            rec([nabla(s, V) for s in states], ls_done, k_used + 1)

    rec([initial_state(P)], 0, 0)
    return LambdaSeries([(-1) ** k * totals[k] for k in range(K + 1)])


def alpha_eval(n: int, V: Potential, P: NCPoly, lam, K: int) -> Fraction:
    """Horner evaluation of the truncated alpha series at a rational lambda."""
    return alpha_series(n, V, P, K).eval(Fraction(lam))


def free_energy_series(V: Potential, n_max: int, K: int) -> list[LambdaSeries]:
    """Per-genus free energy: minus the lambda-primitive of alpha_n(., V)."""
    out = []
    for g in range(n_max + 1):
        a = alpha_series(g, V, V.as_ncpoly(), K)
        out.append(a.antiderivative().scale(-1))
    return out


def entropy_series(alpha0: LambdaSeries) -> LambdaSeries:
    """lambda * alpha0(lambda) - int_0^lambda alpha0, as a series."""
    return alpha0.shift_up() - alpha0.antiderivative()


def entropy_series_by_parts(alpha0: LambdaSeries) -> LambdaSeries:
    """int_0^lambda s alpha0'(s) ds; identical to entropy_series term by term."""
    deriv_shift = LambdaSeries([k * c for k, c in enumerate(alpha0.coeffs)])
    return deriv_shift.antiderivative()


def free_entropy(V: Potential, lam, K: int) -> Fraction:
    """Microstates free entropy of the leading-order trace functional.

    Both closed forms are computed as series and must agree coefficient-wise;
    the value at lambda = 0 is 0 by construction.
    """
    a0 = alpha_series(0, V, V.as_ncpoly(), K)
    s1 = entropy_series(a0)
    s2 = entropy_series_by_parts(a0)
    if s1.coeffs != s2.coeffs:
        raise AssertionError("free-entropy series identities disagree")
    return s1.eval(Fraction(lam))


def series_report(name: str, series: LambdaSeries, n: int) -> str:
    return json.dumps(series.to_json(n) | {"name": name}, sort_keys=True)
