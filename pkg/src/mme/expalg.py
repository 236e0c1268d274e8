"""Exact exponential polynomials in time variables, and their ordered-domain integrals.

The coefficient ring used throughout the symbolic pipeline consists of finite sums

    c * t_{i1}^{p1} * ... * exp((a1/2) t_{j1} + (a2/2) t_{j2} + ...)

with c an exact rational, integer powers p >= 0 and integer doubled exponents a
(every exponent that ever occurs is a half-integer combination of times, so we
store 2x the true coefficient and never touch fractional exponent arithmetic).

Integration is supplied in the two flavours the time domains require:

* ``integrate_drop``    -- a bounded integral int_0^upper dv,
* ``integrate_chain_tail`` -- a convergent tail int_lower^inf du,

and ``integrate_domain`` composes them over a :class:`DomainSpec` (an ordered
chain of times, unbounded above, plus "drop" variables pinned below a chain
time).  Everything is exact; floats only appear in :func:`eval_numeric`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

Sym = int
# sorted ((symbol, value), ...); value is a power or a doubled exponent coefficient
Key = tuple[tuple[int, int], ...]


class DivergentIntegral(ArithmeticError):
    """A tail integral had a non-negative exponent in the integrated variable."""


def _key(d: Mapping[int, int]) -> Key:
    return tuple(sorted((s, v) for s, v in d.items() if v != 0))


def _merge_keys(a: Key, b: Key) -> Key:
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for s, v in b:
        nv = out.get(s, 0) + v
        if nv:
            out[s] = nv
        else:
            del out[s]
    return tuple(sorted(out.items()))


def _key_shift(k: Key, sym: int, delta: int) -> Key:
    return _merge_keys(k, ((sym, delta),)) if delta else k


def _key_get(k: Key, sym: int) -> int:
    for s, v in k:
        if s == sym:
            return v
    return 0


def _key_drop(k: Key, sym: int) -> Key:
    return tuple((s, v) for s, v in k if s != sym)


class ExpPoly:
    """Canonical sum of rational * monomial-in-times * exp(half-integer form).

    Terms are keyed by ``(powers, expo)`` where both keys are sorted tuples of
    ``(symbol, integer)`` pairs; ``expo`` stores doubled coefficients.  No zero
    coefficients and no duplicate keys are ever stored.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[tuple[Key, Key], Fraction] | None = None):
        self.terms: dict[tuple[Key, Key], Fraction] = {}
        if terms:
            for k, c in terms.items():
                if c:
                    self.terms[k] = Fraction(c)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero() -> "ExpPoly":
        return ExpPoly()

    @staticmethod
    def const(c) -> "ExpPoly":
        c = Fraction(c)
        return ExpPoly({((), ()): c}) if c else ExpPoly()

    @staticmethod
    def one() -> "ExpPoly":
        return ExpPoly.const(1)

    @staticmethod
    def term(coeff, powers: Mapping[int, int] | None = None,
             expo2: Mapping[int, int] | None = None) -> "ExpPoly":
        """Single term; ``expo2`` maps symbols to doubled exponent coefficients."""
        coeff = Fraction(coeff)
        if not coeff:
            return ExpPoly()
        return ExpPoly({(_key(powers or {}), _key(expo2 or {})): coeff})

    @staticmethod
    def exp_half(expo2: Mapping[int, int]) -> "ExpPoly":
        return ExpPoly.term(1, None, expo2)

    # -- ring structure ----------------------------------------------------

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if isinstance(other, ExpPoly):
            return self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == ExpPoly.const(other)
        return NotImplemented

    def __add__(self, other: "ExpPoly") -> "ExpPoly":
        if not self.terms:
            return other
        if not other.terms:
            return self
        out = dict(self.terms)
        for k, c in other.terms.items():
            nc = out.get(k, 0) + c
            if nc:
                out[k] = nc
            else:
                out.pop(k, None)
        r = ExpPoly()
        r.terms = out
        return r

    def __neg__(self) -> "ExpPoly":
        r = ExpPoly()
        r.terms = {k: -c for k, c in self.terms.items()}
        return r

    def __sub__(self, other: "ExpPoly") -> "ExpPoly":
        return self + (-other)

    def __mul__(self, other) -> "ExpPoly":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        out: dict[tuple[Key, Key], Fraction] = {}
        for (pa, ea), ca in self.terms.items():
            for (pb, eb), cb in other.terms.items():
                k = (_merge_keys(pa, pb), _merge_keys(ea, eb))
                nc = out.get(k, 0) + ca * cb
                if nc:
                    out[k] = nc
                else:
                    out.pop(k, None)
        r = ExpPoly()
        r.terms = out
        return r

    __rmul__ = __mul__

    def scale(self, c) -> "ExpPoly":
        c = Fraction(c)
        if not c:
            return ExpPoly()
        r = ExpPoly()
        r.terms = {k: v * c for k, v in self.terms.items()}
        return r

    # -- queries -----------------------------------------------------------

    def symbols(self) -> set[int]:
        out: set[int] = set()
        for p, e in self.terms:
            out.update(s for s, _ in p)
            out.update(s for s, _ in e)
        return out

    def constant_value(self) -> Fraction:
        """The value of a constant ExpPoly (raises if any time survives)."""
        if not self.terms:
            return Fraction(0)
        if set(self.terms) != {((), ())}:
            raise ValueError("ExpPoly is not constant: %s" % self.to_text())
        return self.terms[((), ())]

    def eval_numeric(self, assignment: Mapping[int, float]) -> float:
        total = 0.0
        for (p, e), c in self.terms.items():
            v = float(c)
            for s, k in p:
                v *= assignment[s] ** k
            arg = 0.0
            for s, a in e:
                arg += 0.5 * a * assignment[s]
            total += v * math.exp(arg)
        return total

    def to_text(self) -> str:
        """Canonical text form ``c * t1^m * exp((a/2)*t1 + ...)``."""
        if not self.terms:
            return "0"
        bits = []
        for (p, e), c in sorted(self.terms.items()):
            factors = [str(c)]
            for s, k in p:
                factors.append(f"t{s}" + (f"^{k}" if k != 1 else ""))
            if e:
                arg = " + ".join(f"({Fraction(a, 2)})*t{s}" for s, a in e)
                factors.append(f"exp({arg})")
            bits.append(" * ".join(factors))
        return " + ".join(bits)

    def __repr__(self) -> str:
        return f"ExpPoly[{self.to_text()}]"


@dataclass(frozen=True)
class DomainSpec:
    """Integration region: chain times 0 <= u_1 <= ... <= u_M (u_M unbounded)
    plus drop variables, each satisfying 0 <= v <= u_p for a chain anchor p."""

    chain: tuple[Sym, ...]
    drops: tuple[tuple[Sym, int], ...] = ()

    def __post_init__(self):
        seen = list(self.chain) + [v for v, _ in self.drops]
        if len(set(seen)) != len(seen):
            raise ValueError("domain symbols must be distinct")
        for v, p in self.drops:
            if not 0 <= p < len(self.chain):
                raise ValueError(f"drop {v} anchored at invalid chain index {p}")

    def symbols(self) -> set[Sym]:
        return set(self.chain) | {v for v, _ in self.drops}


def _antideriv_terms(p: int, alpha: Fraction) -> list[tuple[int, Fraction]]:
    """Coefficients of the antiderivative of v^p e^{alpha v} (alpha != 0):
    returns [(j, c_j)] meaning sum_j c_j v^{p-j} e^{alpha v}."""
    out = []
    c = Fraction(1)
    for j in range(p + 1):
        c = c / alpha if j == 0 else -c * (p - j + 1) / alpha
        out.append((j, c))
    return out


def integrate_drop(f: ExpPoly, v: Sym, upper: Sym) -> ExpPoly:
    """Exact bounded integral int_0^{upper} f dv.

    Terms with no v-dependence pick up a factor ``upper`` (the exponential
    class is not closed under bounded integration, hence the powers field).
    """
    out = ExpPoly()
    for (p, e), c in f.terms.items():
        pv = _key_get(p, v)
        a2 = _key_get(e, v)
        rest_p = _key_drop(p, v)
        rest_e = _key_drop(e, v)
        if a2 == 0:
            # int_0^upper v^pv dv = upper^{pv+1}/(pv+1)
            np_ = _key_shift(rest_p, upper, pv + 1)
            out = out + ExpPoly({(np_, rest_e): c / (pv + 1)})
        else:
            alpha = Fraction(a2, 2)
            for j, aj in _antideriv_terms(pv, alpha):
                # value at v = upper
                np_ = _key_shift(rest_p, upper, pv - j)
                ne = _key_shift(rest_e, upper, a2)
                out = out + ExpPoly({(np_, ne): c * aj})
            # value at v = 0 survives only for the j = pv (constant) term
            j, aj = _antideriv_terms(pv, alpha)[-1]
            out = out + ExpPoly({(rest_p, rest_e): -c * aj})
    return out


def integrate_chain_tail(f: ExpPoly, u: Sym, lower: Sym | None) -> ExpPoly:
    """Exact tail integral int_lower^inf f du (lower=None means 0).

    Every term must decay strictly in u, otherwise the tail diverges and
    :class:`DivergentIntegral` is raised.
    """
    out = ExpPoly()
    for (p, e), c in f.terms.items():
        pu = _key_get(p, u)
        a2 = _key_get(e, u)
        if a2 >= 0:
            raise DivergentIntegral(
                f"non-decaying term in t{u}: exponent {Fraction(a2, 2)}, power {pu}")
        rest_p = _key_drop(p, u)
        rest_e = _key_drop(e, u)
        alpha = Fraction(a2, 2)
        for j, aj in _antideriv_terms(pu, alpha):
            if lower is None:
                if j == pu:
                    out = out + ExpPoly({(rest_p, rest_e): -c * aj})
            else:
                np_ = _key_shift(rest_p, lower, pu - j)
                ne = _key_shift(rest_e, lower, a2)
                out = out + ExpPoly({(np_, ne): -c * aj})
    return out


def integrate_domain(f: ExpPoly, dom: DomainSpec) -> Fraction:
    """Integrate exactly over the region described by ``dom``.

    Drops go first (any order; the region is a product in them), then the
    chain from the top down, each step a convergent tail integral.
    """
    extra = f.symbols() - dom.symbols()
    if extra:
        raise ValueError(f"integrand depends on symbols outside the domain: {extra}")
    g = f
    for v, p in dom.drops:
        g = integrate_drop(g, v, dom.chain[p])
    for i in range(len(dom.chain) - 1, -1, -1):
        lower = dom.chain[i - 1] if i > 0 else None
        g = integrate_chain_tail(g, dom.chain[i], lower)
    return g.constant_value()


# -- the I_k self-test quantities -------------------------------------------


def e_k_tuples(k: int, p: int | None = None) -> Iterable[tuple[int, ...]]:
    """Tuples (n_1,...,n_k) with 1 <= n_i <= i, optionally with each value
    used at most p times."""
    for t in itertools.product(*(range(1, i + 1) for i in range(1, k + 1))):
        if p is not None:
            if any(t.count(j) > p for j in set(t)):
                continue
        yield t


def i_k_integral(k: int) -> Fraction:
    """I_k computed symbolically: integrate sum over E_k of
    exp(-sum_i (t_i - t_{n_i - 1})) over the chain 0 <= t_1 <= ... <= t_k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    syms = tuple(range(1, k + 1))
    f = ExpPoly()
    for t in e_k_tuples(k):
        expo: dict[int, int] = {}
        for i, ni in enumerate(t, start=1):
            expo[i] = expo.get(i, 0) - 2
            if ni - 1 >= 1:
                expo[ni - 1] = expo.get(ni - 1, 0) + 2
        f = f + ExpPoly.exp_half(expo)
    return integrate_domain(f, DomainSpec(chain=syms))


def i_k_sum(k: int, p: int | None = None) -> Fraction:
    """The closed-form rational sum for I_k (optionally restricted to E_{k,p}):
    sum over tuples of prod_j 1/#{i : n_i <= j <= i}."""
    if k < 1:
        raise ValueError("k must be >= 1")
    total = Fraction(0)
    for t in e_k_tuples(k, p):
        prod = Fraction(1)
        for j in range(1, k + 1):
            cnt = sum(1 for i, ni in enumerate(t, start=1) if ni <= j <= i)
            prod /= cnt
        total += prod
    return total
