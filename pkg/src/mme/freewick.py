"""Semicircular Wick calculus for the time-interpolated variable families.

A universe with n time slots comes with an ordered time context: the tuple of
time symbols sorted increasingly, so the h-th smallest time is a concrete
symbol (h = 0 denoting time 0).  A variable X_{i,I} at level h expands as

    e^{s_h/2} ( sum over its slots l of w_l x_i^{I_l}  +  e^{-s_n/2} x_i )

where s_l is the l-th smallest time, w_l = (e^{-s_{l-1}} - e^{-s_l})^{1/2}
and the x^a are independent free semicircular d-tuples (x = the terminal one).
Square-root weights never appear alone: covariances pair weights slot by slot
(each generator integer lives at a single slot across the universe), so the
products (e^{-s_{l-1}} - e^{-s_l}) stay inside the exponential-polynomial ring.

The trace of a word is the free Wick sum over color-respecting non-crossing
pairings of the pairwise covariances.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expalg import ExpPoly
from .ncpoly import Label, Word, UnknownLabel, level_of

# ascending tuple of time symbols; () for the base (time-free) context
TimeContext = tuple[int, ...]

BASE = 0  # sentinel family id for the terminal semicircular generator

MAX_PAIRING_POINTS = 40


class OddLength(ValueError):
    """Perfect matchings need an even number of points."""


@dataclass(frozen=True)
class GeneratorId:
    color: int
    family: int  # positive integer, or BASE for the terminal generator


@dataclass(frozen=True)
class CovFactor:
    """Symbolic weight descriptor: the slot weight (e^{-s_{l-1}} - e^{-s_l})^(1/2)
    for slot l >= 1, or the terminal weight e^{-s_n/2} for slot None."""

    slot: int | None


def noncrossing_pairings(p: int) -> list[tuple[tuple[int, int], ...]]:
    """All non-crossing perfect matchings of {0, ..., p-1}; Catalan(p/2) many."""
    if p % 2:
        raise OddLength(f"cannot pair {p} points")
    if p > MAX_PAIRING_POINTS:
        raise ValueError(f"pairing bound exceeded: {p} > {MAX_PAIRING_POINTS}")

    def rec(points: tuple[int, ...]):
        if not points:
            return [()]
        out = []
        a = points[0]
        for j in range(1, len(points), 2):
            b = points[j]
            inner = points[1:j]
            outer = points[j + 1:]
            for pi in rec(inner):
                for po in rec(outer):
                    out.append(((a, b),) + pi + po)
        return out

    return rec(tuple(range(p)))


def interpolant(lab: Label, ctx: TimeContext) -> tuple[ExpPoly, list[tuple[GeneratorId, CovFactor]]]:
    """Prefactor and generator decomposition of an interpolated variable."""
    color, idx = lab
    n = len(ctx)
    h = level_of(idx, n)
    pref = ExpPoly.exp_half({ctx[h - 1]: 1}) if h >= 1 else ExpPoly.one()
    gens = [(GeneratorId(color, idx[p - h - 1]), CovFactor(p)) for p in range(h + 1, n + 1)]
    gens.append((GeneratorId(color, BASE), CovFactor(None)))
    return pref, gens


def _slot_weight_product(l: int, ctx: TimeContext) -> ExpPoly:
    # (e^{-s_{l-1}} - e^{-s_l}); s_0 = 0
    hi = ExpPoly.exp_half({ctx[l - 1]: -2})
    lo = ExpPoly.exp_half({ctx[l - 2]: -2}) if l >= 2 else ExpPoly.one()
    return lo - hi


def covariance(u: Label, v: Label, ctx: TimeContext) -> ExpPoly:
    """tau(X_u X_v) for interpolated variables: sum over shared generators of
    the product of their weights.  Distinct colors are free, hence 0."""
    if u[0] != v[0]:
        return ExpPoly.zero()
    n = len(ctx)
    iu, iv = u[1], v[1]
    hu, hv = level_of(iu, n), level_of(iv, n)
    acc = ExpPoly.exp_half({ctx[n - 1]: -2}) if n else ExpPoly.one()  # terminal
    shared = set(iu) & set(iv)
    for fam in shared:
        pu = iu.index(fam) + hu + 1
        pv = iv.index(fam) + hv + 1
        # every generator integer occupies one slot across a universe; a
        # mismatch means the labels came from incompatible constructions
        if pu != pv:
            raise UnknownLabel(
                f"generator {fam} at conflicting slots {pu}/{pv} for {u}, {v}")
        acc = acc + _slot_weight_product(pu, ctx)
    pref2: dict[int, int] = {}
    for h in (hu, hv):
        if h >= 1:
            pref2[ctx[h - 1]] = pref2.get(ctx[h - 1], 0) + 1
    return ExpPoly.exp_half(pref2) * acc if pref2 else acc


class _CovCache:
    __slots__ = ("ctx", "table")

    def __init__(self, ctx: TimeContext):
        self.ctx = ctx
        self.table: dict[tuple[Label, Label], ExpPoly] = {}

    def get(self, u: Label, v: Label) -> ExpPoly:
        k = (u, v) if u <= v else (v, u)
        c = self.table.get(k)
        if c is None:
            c = covariance(k[0], k[1], self.ctx)
            self.table[k] = c
        return c


def tau(w: Word, ctx: TimeContext = ()) -> ExpPoly:
    """Trace of a word: Wick sum over color-respecting non-crossing pairings.

    Pairs the first open point against each admissible partner (even gap,
    matching color) and recurses on the inside/outside segments.
    """
    return _tau(w, _CovCache(ctx))


def _tau(w: Word, cov: _CovCache) -> ExpPoly:
    if not w:
        return ExpPoly.one()
    if len(w) % 2:
        return ExpPoly.zero()
    if len(w) > MAX_PAIRING_POINTS:
        raise ValueError(f"pairing bound exceeded: word of length {len(w)}")
    acc = ExpPoly.zero()
    a = w[0]
    for j in range(1, len(w), 2):
        if w[j][0] != a[0]:
            continue
        c = cov.get(a, w[j])
        if not c:
            continue
        inner = _tau(w[1:j], cov)
        if not inner:
            continue
        outer = _tau(w[j + 1:], cov)
        if not outer:
            continue
        acc = acc + c * inner * outer
    return acc


def tau_poly(P, ctx: TimeContext = ()) -> ExpPoly:
    """Linear extension of tau over an NCPoly (coefficients multiply in)."""
    cov = _CovCache(ctx)
    acc = ExpPoly.zero()
    for w, c in P.terms.items():
        t = _tau(w, cov)
        if t:
            acc = acc + c * t
    return acc


def catalan(k: int) -> int:
    from math import comb
    return comb(2 * k, k) // (k + 1)
