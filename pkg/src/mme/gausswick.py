"""Exact finite-N Gaussian trace moments by pairing enumeration with face counting.

Mixed GUE trace moments expand over color-respecting perfect matchings of the
half-edges of a collection of stars (one star per trace factor, half-edges in
cyclic order carrying the colors of the monomial):

    E[ prod_v tr q_v(X^N) ] = sum over matchings  N^{F - E},

where E is the number of matched pairs and F the number of faces of the glued
surface, counted by corner tracing (cycles of rotation-after-matching).  Genus
comes from the Euler relation per connected component.

On top of the enumerator sit the formal ratio series

    E[ts P e^{-lambda N tr V}] / E[e^{-lambda N tr V}]

(with exact Laurent coefficients in N; every lambda order is a polynomial in
N^{-2}), the genus-coefficient extraction, and connected map counts — three
independently-coded views of the same pairing universe that must agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Iterable, Sequence

from .master import BudgetExceeded, LambdaSeries, Potential

MAX_HALF_EDGES = 20


class OddPowerDetected(AssertionError):
    """A ratio-series coefficient exposed an odd or positive power of N."""


@dataclass(frozen=True)
class Star:
    """A trace vertex: half-edges in clockwise order carry the monomial's
    colors; the distinguished half-edge is position 0."""

    colors: tuple[int, ...]

    def __post_init__(self):
        if len(self.colors) < 1:
            raise ValueError("a star needs at least one half-edge")

    @staticmethod
    def from_colors(colors: Iterable[int]) -> "Star":
        return Star(tuple(colors))

    def degree(self) -> int:
        return len(self.colors)


@dataclass(frozen=True)
class PairingDiagram:
    stars: tuple[Star, ...]
    matching: tuple[tuple[int, int], ...]  # pairs of global half-edge ids

    def __post_init__(self):
        total = sum(s.degree() for s in self.stars)
        seen = sorted(x for p in self.matching for x in p)
        if seen != list(range(total)):
            raise ValueError("matching must cover every half-edge exactly once")
        colors = _flat_colors(self.stars)
        for a, b in self.matching:
            if colors[a] != colors[b]:
                raise ValueError(f"pair ({a},{b}) mixes colors")


def _flat_colors(stars: Sequence[Star]) -> list[int]:
    out: list[int] = []
    for s in stars:
        out.extend(s.colors)
    return out


def _star_layout(stars: Sequence[Star]) -> tuple[list[int], list[int]]:
    """(next half-edge in clockwise rotation, owning star) per half-edge."""
    nxt: list[int] = []
    owner: list[int] = []
    base = 0
    for si, s in enumerate(stars):
        d = s.degree()
        for k in range(d):
            nxt.append(base + (k + 1) % d)
            owner.append(si)
        base += d
    return nxt, owner


def faces(diagram: PairingDiagram) -> int:
    """Faces by corner tracing: cycles of half-edge -> rotate(match(h))."""
    nxt, _ = _star_layout(diagram.stars)
    match = {}
    for a, b in diagram.matching:
        match[a] = b
        match[b] = a
    seen = [False] * len(nxt)
    count = 0
    for start in range(len(nxt)):
        if seen[start]:
            continue
        count += 1
        h = start
        while not seen[h]:
            seen[h] = True
            h = nxt[match[h]]
    return count


def components(diagram: PairingDiagram) -> int:
    _, owner = _star_layout(diagram.stars)
    parent = list(range(len(diagram.stars)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in diagram.matching:
        ra, rb = find(owner[a]), find(owner[b])
        if ra != rb:
            parent[ra] = rb
    return sum(1 for i, p in enumerate(parent) if find(i) == i)


def genus(diagram: PairingDiagram) -> Fraction:
    """Total genus, summed over connected components (Euler: per component
    2 - 2g_i = V_i - E_i + F_i)."""
    V = len(diagram.stars)
    E = len(diagram.matching)
    F = faces(diagram)
    c = components(diagram)
    return Fraction(2 * c - (V - E + F), 2)


def _census_key(stars: Sequence[Star]) -> tuple[tuple[int, ...], ...]:
    return tuple(sorted(s.colors for s in stars))


@lru_cache(maxsize=4096)
def _pairing_census(key: tuple[tuple[int, ...], ...]) -> dict[tuple[int, int], int]:
    """Histogram over color-respecting matchings of (components, faces) -> count.

    The census only depends on the multiset of stars: vertices are labeled, so
    counts for a permuted list coincide.
    """
    stars = [Star(c) for c in key]
    total = sum(s.degree() for s in stars)
    if total > MAX_HALF_EDGES:
        raise BudgetExceeded(f"{total} half-edges exceeds budget {MAX_HALF_EDGES}")
    colors = _flat_colors(stars)
    if total % 2:
        return {}
    per_color: dict[int, int] = {}
    for c in colors:
        per_color[c] = per_color.get(c, 0) + 1
    if any(v % 2 for v in per_color.values()):
        return {}

    nxt, owner = _star_layout(stars)
    match = [-1] * total
    census: dict[tuple[int, int], int] = {}

    def count_faces() -> int:
        seen = [False] * total
        f = 0
        for start in range(total):
            if seen[start]:
                continue
            f += 1
            h = start
            while not seen[h]:
                seen[h] = True
                h = nxt[match[h]]
        return f

    def count_components() -> int:
        parent = list(range(len(stars)))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a in range(total):
            b = match[a]
            ra, rb = find(owner[a]), find(owner[b])
            if ra != rb:
                parent[ra] = rb
        return sum(1 for i in range(len(stars)) if find(i) == i)

    def rec(first_open: int):
        while first_open < total and match[first_open] >= 0:
            first_open += 1
        if first_open == total:
            k = (count_components(), count_faces())
            census[k] = census.get(k, 0) + 1
            return
        a = first_open
        ca = colors[a]
        for b in range(a + 1, total):
            if match[b] < 0 and colors[b] == ca:
                match[a] = b
                match[b] = a
                rec(a + 1)
                match[a] = -1
                match[b] = -1

    rec(0)
    return census


class LaurentN:
    """Exact Laurent polynomial in the matrix size N."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: dict[int, Fraction] | None = None):
        self.coeffs: dict[int, Fraction] = {}
        if coeffs:
            for e, c in coeffs.items():
                c = Fraction(c)
                if c:
                    self.coeffs[e] = c

    @staticmethod
    def const(c) -> "LaurentN":
        return LaurentN({0: Fraction(c)})

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, LaurentN):
            return self.coeffs == other.coeffs
        if isinstance(other, (int, Fraction)):
            return self == LaurentN.const(other)
        return NotImplemented

    def __add__(self, other: "LaurentN") -> "LaurentN":
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            nc = out.get(e, 0) + c
            if nc:
                out[e] = nc
            else:
                out.pop(e, None)
        r = LaurentN()
        r.coeffs = out
        return r

    def __neg__(self) -> "LaurentN":
        r = LaurentN()
        r.coeffs = {e: -c for e, c in self.coeffs.items()}
        return r

    def __sub__(self, other: "LaurentN") -> "LaurentN":
        return self + (-other)

    def __mul__(self, other) -> "LaurentN":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        out: dict[int, Fraction] = {}
        for ea, ca in self.coeffs.items():
            for eb, cb in other.coeffs.items():
                e = ea + eb
                nc = out.get(e, 0) + ca * cb
                if nc:
                    out[e] = nc
                else:
                    out.pop(e, None)
        r = LaurentN()
        r.coeffs = out
        return r

    __rmul__ = __mul__

    def scale(self, c) -> "LaurentN":
        c = Fraction(c)
        r = LaurentN()
        if c:
            r.coeffs = {e: v * c for e, v in self.coeffs.items()}
        return r

    def shift(self, k: int) -> "LaurentN":
        r = LaurentN()
        r.coeffs = {e + k: c for e, c in self.coeffs.items()}
        return r

    def coefficient(self, e: int) -> Fraction:
        return self.coeffs.get(e, Fraction(0))

    def __repr__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"{c}*N^{e}" if e else f"{c}"
                          for e, c in sorted(self.coeffs.items(), reverse=True))


def gue_mixed_moment(stars: Sequence[Star], d: int | None = None) -> LaurentN:
    """E[prod_v tr q_v(X^N)] as an exact Laurent polynomial: sum over
    color-respecting matchings of N^{F - E}."""
    if d is not None:
        for s in stars:
            if any(not 1 <= c <= d for c in s.colors):
                raise ValueError(f"star {s} uses a color outside [1, {d}]")
    if not stars:
        return LaurentN.const(1)
    census = _pairing_census(_census_key(stars))
    E = sum(s.degree() for s in stars) // 2
    out = LaurentN()
    for (_, F), cnt in census.items():
        out = out + LaurentN({F - E: Fraction(cnt)})
    return out


def connected_moment(stars: Sequence[Star]) -> LaurentN:
    """Same sum restricted to matchings gluing the stars into one component."""
    if not stars:
        return LaurentN()
    census = _pairing_census(_census_key(stars))
    E = sum(s.degree() for s in stars) // 2
    out = LaurentN()
    for (comp, F), cnt in census.items():
        if comp == 1:
            out = out + LaurentN({F - E: Fraction(cnt)})
    return out


def map_count(g: int, vertex_types: Sequence[Star], root: Star) -> int:
    """Connected color-respecting pairings of the labeled stars (root plus the
    listed vertices) whose glued surface has genus g.

    Vertices are distinguishable and each carries a distinguished half-edge,
    so map counts are raw pairing counts with no automorphism division.
    """
    stars = [root, *vertex_types]
    census = _pairing_census(_census_key(stars))
    V = len(stars)
    E = sum(s.degree() for s in stars) // 2
    total = 0
    for (comp, F), cnt in census.items():
        if comp != 1:
            continue
        gg = Fraction(2 - (V - E + F), 2)
        if gg == g:
            total += cnt
    return total


def _potential_star_terms(V: Potential) -> list[tuple[Fraction, Star]]:
    return [(coeff, Star(colors)) for colors, coeff in sorted(V.terms.items())]


def _series_inverse_mul(num: list[LaurentN], den: list[LaurentN]) -> list[LaurentN]:
    """Coefficients of num/den as formal series; den[0] must be 1."""
    if den[0] != LaurentN.const(1):
        raise ValueError("denominator series must start at 1")
    out: list[LaurentN] = []
    for k in range(len(num)):
        acc = num[k]
        for j in range(k):
            acc = acc - out[j] * den[k - j]
        out.append(acc)
    return out


def partition_series(V: Potential, K: int) -> list[LaurentN]:
    """lambda-coefficients of E[e^{-lambda N tr V}]: order k carries
    (-N)^k / k! times the multinomially-expanded mixed moment of k V-stars."""
    terms = _potential_star_terms(V)
    out = [LaurentN.const(1)]
    for k in range(1, K + 1):
        acc = LaurentN()
        for combo in _weighted_multisets(terms, k):
            weight, stars = combo
            acc = acc + gue_mixed_moment(stars).scale(weight)
        out.append(acc.shift(k).scale(Fraction((-1) ** k)))
    return out


def _weighted_multisets(terms: list[tuple[Fraction, Star]], k: int):
    """Multisets of k stars drawn from the potential's monomials, each with
    weight prod t_i^{k_i} / prod k_i!."""
    m = len(terms)
    for counts in _compositions(k, m):
        weight = Fraction(1)
        stars: list[Star] = []
        for (t, star), ki in zip(terms, counts):
            if ki:
                weight *= t ** ki / factorial(ki)
                stars.extend([star] * ki)
        yield weight, stars


def _compositions(k: int, m: int):
    if m == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, m - 1):
            yield (first,) + rest


def ratio_series(P: Star, V: Potential, K: int, d: int | None = None) -> list[LaurentN]:
    """lambda-coefficients of E[ts P e^{-lambda N tr V}] / E[e^{-lambda N tr V}].

    Numerator and denominator are expanded with exact pairing moments and then
    divided as formal series.  Every coefficient of the ratio must be a
    polynomial in N^{-2}; anything else signals an internal inconsistency.
    """
    if d is not None and any(not 1 <= c <= d for c in P.colors):
        raise ValueError(f"observable {P} uses a color outside [1, {d}]")
    terms = _potential_star_terms(V)
    num: list[LaurentN] = []
    for k in range(K + 1):
        acc = LaurentN()
        if k == 0:
            acc = gue_mixed_moment([P])
        else:
            for weight, stars in _weighted_multisets(terms, k):
                acc = acc + gue_mixed_moment([P, *stars]).scale(weight)
        # ts normalization of the P factor: one 1/N; the k potential factors
        # carry (-N)^k / k! (the k! is inside the multiset weights)
        num.append(acc.shift(k - 1).scale(Fraction((-1) ** k)))
    den = partition_series(V, K)
    out = _series_inverse_mul(num, den)
    for k, c in enumerate(out):
        for e in c.coeffs:
            if e > 0 or e % 2:
                raise OddPowerDetected(
                    f"lambda^{k} coefficient contains N^{e}: {c!r}")
    return out


def genus_coefficient(series: list[LaurentN], g: int) -> LambdaSeries:
    """Extract the N^{-2g} part of each lambda order."""
    return LambdaSeries([c.coefficient(-2 * g) for c in series])


def corollary13_check(V: Potential, root: Star, g: int, K: int) -> dict:
    """Compare the genus-g ratio coefficients against signed map counts.

    Returns a report with both sides per lambda order and any discrepancy
    factors; ``ok`` is True when every order matches exactly.
    """
    lhs = genus_coefficient(ratio_series(root, V, K), g)
    terms = _potential_star_terms(V)
    rows = []
    ok = True
    for k in range(K + 1):
        rhs = Fraction(0)
        for weight, stars in _weighted_multisets(terms, k):
            cnt = map_count(g, stars, root)
            if cnt:
                rhs += Fraction((-1) ** k) * weight * cnt
        match = lhs.coeffs[k] == rhs
        ok = ok and match
        rows.append({"k": k, "ratio": lhs.coeffs[k], "maps": rhs, "match": match})
    return {"ok": ok, "genus": g, "rows": rows}


def map_count_table(roots: Sequence[Star], V: Potential, g_max: int, K: int) -> list[dict]:
    """Rows (genus, vertex multiset, root, count) for the CSV/JSON emitters."""
    terms = _potential_star_terms(V)
    rows = []
    for root in roots:
        for g in range(g_max + 1):
            for k in range(K + 1):
                for counts in _compositions(k, len(terms)):
                    stars = []
                    for (t, star), ki in zip(terms, counts):
                        stars.extend([star] * ki)
                    cnt = map_count(g, stars, root)
                    rows.append({
                        "genus": g,
                        "root": "".join(f"X{c}" for c in root.colors),
                        "vertices": ",".join(
                            "".join(f"X{c}" for c in s.colors) for s in stars) or "-",
                        "count": cnt,
                    })
    return rows
