"""Non-commutative polynomials over indexed variables X_{i,I} and the label calculus.

A variable carries a color ``i`` in [1, d] and an index list ``I`` (a tuple of
positive integers, empty for the base variables).  Index lists live in a
universe built from the empty list by two kinds of construction steps:

* ``G``: append one fresh integer to every list, and re-adjoin the empty list;
* ``F``: the four-fold family of inserted/refreshed/shifted copies used by the
  variance operator, one batch per insertion rank ``s``.

A list's *level* in a universe of maximal cardinality ``n`` is ``n - len(I)``;
its entries occupy positions ``level+1 .. n``, one per time slot.  The key
structural fact (preserved by both constructors) is that every integer value
occurs at a single fixed position across the whole universe, so two lists share
an entry only at a common slot.

Polynomials are maps word -> ExpPoly; derivatives split words into tensor legs
in the usual Leibniz fashion, and the cyclic derivative rotates the word.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

from .expalg import ExpPoly

IndexList = tuple[int, ...]
Label = tuple[int, IndexList]          # (color, index list)
Word = tuple[Label, ...]               # empty tuple = the unit monomial


class UnknownLabel(KeyError):
    """A label fell outside the universe a map or context expected."""


def label(color: int, index: Iterable[int] = ()) -> Label:
    return (color, tuple(index))


def word(*labels: Label) -> Word:
    return tuple(labels)


def base_word(colors: Iterable[int]) -> Word:
    """Word in the base variables X_{i,()} from a sequence of colors."""
    return tuple((c, ()) for c in colors)


def level_of(index: IndexList, n: int) -> int:
    """Level of an index list in a universe of maximal cardinality n."""
    h = n - len(index)
    if h < 0:
        raise UnknownLabel(f"index {index} longer than universe cardinality {n}")
    return h


def entry_at(index: IndexList, pos: int, n: int) -> int:
    """Entry at 1-based position ``pos`` (positions run level+1 .. n)."""
    start = level_of(index, n) + 1
    if not start <= pos <= n:
        raise UnknownLabel(f"index {index} has no position {pos} at cardinality {n}")
    return index[pos - start]


# -- label constructor maps --------------------------------------------------


def gplus_index(index: IndexList, c: int) -> IndexList:
    return index + (c + 1,)


def f_index(index: IndexList, s: int, c: int, n: int,
            variant: int, tilde: bool) -> IndexList:
    """Image of an index list under F_s^variant (variant in {1, 2}) on a
    universe with largest integer ``c`` and maximal cardinality ``n``.

    For s <= n, lists reaching position s get refreshed below s (shift by c or
    2c), a copy of the position-s entry inserted at s, and the tail moved one
    slot up; lists starting above s are only moved up.  Every list gains the
    shared terminal integer 3c+1.  For s = n+1 the whole list is refreshed and
    two terminal integers are appended.  The tilde variants add 3c+3 to every
    integer, producing an independent copy of the whole batch.
    """
    if not 1 <= s <= n + 1:
        raise UnknownLabel(f"insertion rank {s} outside [1, {n + 1}]")
    shift = c if variant == 1 else 2 * c
    if s == n + 1:
        mid = 3 * c + 2 if variant == 1 else 3 * c + 3
        out = tuple(x + shift for x in index) + (mid, 3 * c + 1)
    else:
        m = level_of(index, n) + 1
        if m <= s:
            j = s - m  # 0-based offset of position s
            out = (tuple(x + shift for x in index[: j + 1])
                   + index[j:] + (3 * c + 1,))
        else:
            out = index + (3 * c + 1,)
    if tilde:
        out = tuple(x + 3 * c + 3 for x in out)
    return out


@dataclass(frozen=True)
class LabelMap:
    """A relabeling of a universe into its successor: G+ or one of the four
    F_s variants.  ``c`` and ``n`` describe the source universe."""

    kind: str  # "G+", "F1", "F2", "F1~", "F2~"
    c: int
    n: int
    s: int = 0

    def apply_index(self, index: IndexList) -> IndexList:
        if self.kind == "G+":
            return gplus_index(index, self.c)
        variant = 1 if self.kind.startswith("F1") else 2
        return f_index(index, self.s, self.c, self.n, variant, self.kind.endswith("~"))

    def apply_label(self, lab: Label) -> Label:
        return (lab[0], self.apply_index(lab[1]))

    def apply_word(self, w: Word) -> Word:
        return tuple(self.apply_label(l) for l in w)


# -- histories and universes --------------------------------------------------


@dataclass(frozen=True)
class History:
    """Sequence of universe construction steps: "G" appends a fresh slot,
    "F" performs the four-fold construction over every insertion rank, and a
    single piece ("F", s) keeps rank s only."""

    steps: tuple = ()

    def extended(self, step) -> "History":
        return History(self.steps + (step,))

    @property
    def n(self) -> int:
        """Maximal cardinality of the universe = number of time slots."""
        total = 0
        for st in self.steps:
            total += 1 if st == "G" else 2
        return total

    @property
    def c(self) -> int:
        """Largest integer occurring in the universe."""
        c, n = 0, 0
        for st in self.steps:
            if st == "G":
                c, n = c + 1, n + 1
            elif st == "F":
                # the s = n+1 batch contributes the tilde of 3c+3
                c, n = 6 * c + 6, n + 2
            else:
                _, s = st
                c, n = (6 * c + 6 if s == n + 1 else 6 * c + 4), n + 2
        return c

    def universe(self) -> frozenset[IndexList]:
        return _universe(self.steps)

    def levels(self) -> dict[int, tuple[IndexList, ...]]:
        """Partition of the universe by level h (cardinality n - h)."""
        n = self.n
        out: dict[int, list[IndexList]] = {h: [] for h in range(n + 1)}
        for idx in sorted(self.universe()):
            out[level_of(idx, n)].append(idx)
        return {h: tuple(v) for h, v in out.items()}


@lru_cache(maxsize=None)
def _universe(steps: tuple) -> frozenset[IndexList]:
    current: frozenset[IndexList] = frozenset({()})
    n = 0
    for st in steps:
        c = max((x for idx in current for x in idx), default=0)
        if st == "G":
            current = frozenset(gplus_index(i, c) for i in current) | {()}
            n += 1
        else:
            ranks = range(1, n + 2) if st == "F" else (st[1],)
            nxt = set()
            for s in ranks:
                for variant in (1, 2):
                    for tilde in (False, True):
                        for i in current:
                            nxt.add(f_index(i, s, c, n, variant, tilde))
            current = frozenset(nxt)
            n += 2
    return current


def j_universe(h: History) -> frozenset[IndexList]:
    return h.universe()


# -- polynomials ---------------------------------------------------------------


class NCPoly:
    """Polynomial over indexed variables with ExpPoly coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Word, ExpPoly] | None = None):
        self.terms: dict[Word, ExpPoly] = {}
        if terms:
            for w, c in terms.items():
                if c:
                    self.terms[w] = c

    @staticmethod
    def zero() -> "NCPoly":
        return NCPoly()

    @staticmethod
    def monomial(w: Word, coeff=1) -> "NCPoly":
        c = coeff if isinstance(coeff, ExpPoly) else ExpPoly.const(coeff)
        return NCPoly({w: c})

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, NCPoly) and self.terms == other.terms

    def __add__(self, other: "NCPoly") -> "NCPoly":
        out = dict(self.terms)
        for w, c in other.terms.items():
            nc = out.get(w)
            nc = c if nc is None else nc + c
            if nc:
                out[w] = nc
            else:
                out.pop(w, None)
        r = NCPoly()
        r.terms = out
        return r

    def __sub__(self, other: "NCPoly") -> "NCPoly":
        return self + other.scale(-1)

    def __mul__(self, other: "NCPoly") -> "NCPoly":
        out = NCPoly()
        acc: dict[Word, ExpPoly] = {}
        for wa, ca in self.terms.items():
            for wb, cb in other.terms.items():
                w = wa + wb
                c = ca * cb
                prev = acc.get(w)
                c = c if prev is None else prev + c
                if c:
                    acc[w] = c
                else:
                    acc.pop(w, None)
        out.terms = acc
        return out

    def scale(self, c) -> "NCPoly":
        if isinstance(c, ExpPoly):
            return NCPoly({w: v * c for w, v in self.terms.items()})
        return NCPoly({w: v.scale(c) for w, v in self.terms.items()})

    def relabel(self, m: LabelMap, universe: frozenset[IndexList] | None = None) -> "NCPoly":
        """Label-wise substitution; coefficients unchanged.  If a universe is
        supplied, labels outside it raise UnknownLabel."""
        out: dict[Word, ExpPoly] = {}
        for w, c in self.terms.items():
            if universe is not None:
                for _, idx in w:
                    if idx not in universe:
                        raise UnknownLabel(f"index {idx} not in source universe")
            nw = m.apply_word(w)
            prev = out.get(nw)
            out[nw] = c if prev is None else prev + c
        return NCPoly(out)

    def __repr__(self) -> str:
        if not self.terms:
            return "NCPoly[0]"
        bits = [f"({c.to_text()})*{format_word(w)}" for w, c in sorted(self.terms.items())]
        return "NCPoly[" + " + ".join(bits) + "]"


# tensor legs: (left word, right word) -> ExpPoly
TensorPoly = dict[tuple[Word, Word], ExpPoly]


def partial(P: NCPoly, i: int, index: IndexList) -> TensorPoly:
    """Non-commutative derivative with respect to X_{i,index} (Leibniz into
    the tensor square; the derivative of the matched letter is 1 (x) 1)."""
    out: TensorPoly = {}
    target = (i, tuple(index))
    for w, c in P.terms.items():
        for p, lab in enumerate(w):
            if lab == target:
                k = (w[:p], w[p + 1:])
                prev = out.get(k)
                out[k] = c if prev is None else prev + c
    return {k: v for k, v in out.items() if v}


def partial_level(P: NCPoly, i: int, h: int, n: int) -> TensorPoly:
    """Sum of ``partial`` over every index list at level h (cardinality n-h)."""
    out: TensorPoly = {}
    for w, c in P.terms.items():
        for p, (col, idx) in enumerate(w):
            if col == i and len(idx) == n - h:
                k = (w[:p], w[p + 1:])
                prev = out.get(k)
                out[k] = c if prev is None else prev + c
    return {k: v for k, v in out.items() if v}


def cyclic_D(P: NCPoly, i: int, h: int, n: int) -> NCPoly:
    """Cyclic derivative m (x) partial_{i,h} with m: A (x) B -> BA."""
    out: dict[Word, ExpPoly] = {}
    for w, c in P.terms.items():
        for p, (col, idx) in enumerate(w):
            if col == i and len(idx) == n - h:
                nw = w[p + 1:] + w[:p]
                prev = out.get(nw)
                out[nw] = c if prev is None else prev + c
    return NCPoly(out)


def hash_op(tensor: TensorPoly, C: NCPoly) -> NCPoly:
    """The # operation: (A (x) B) # C = A C B, extended linearly."""
    out = NCPoly()
    for (a, b), coeff in tensor.items():
        for w, c in C.terms.items():
            out = out + NCPoly({a + w + b: coeff * c})
    return out


# -- degree bookkeeping --------------------------------------------------------


def deg(P: NCPoly) -> int:
    """Largest word length appearing in P (0 for constants and for 0)."""
    return max((len(w) for w in P.terms), default=0)


def deg_level(w: Word, h: int, n: int) -> int:
    """Occurrences in the word of variables at level h."""
    return sum(1 for _, idx in w if len(idx) == n - h)


def nb(P: NCPoly) -> int:
    """Number of monomials carried by P."""
    return len(P.terms)


def c_max(P: NCPoly, assignment: Mapping[int, float] | None = None) -> float:
    """max(1, largest |coefficient|) at a numeric time assignment (constant
    coefficients need no assignment)."""
    best = 1.0
    for c in P.terms.values():
        v = abs(c.eval_numeric(assignment or {}))
        best = max(best, v)
    return best


# -- canonical text form ---------------------------------------------------------

_LABEL_RE = re.compile(r"X(\d+)(?:\[([0-9,]*)\])?")


def format_label(lab: Label) -> str:
    col, idx = lab
    if not idx:
        return f"X{col}"
    return f"X{col}[" + ",".join(str(x) for x in idx) + "]"


def format_word(w: Word) -> str:
    if not w:
        return "1"
    return "*".join(format_label(l) for l in w)


def parse_word(text: str) -> Word:
    """Inverse of format_word for golden files ("1" or X<i>[..] factors joined by *)."""
    text = text.strip()
    if text == "1":
        return ()
    out = []
    for part in text.split("*"):
        m = _LABEL_RE.fullmatch(part.strip())
        if not m:
            raise ValueError(f"bad label {part!r}")
        idx = tuple(int(x) for x in m.group(2).split(",")) if m.group(2) else ()
        out.append((int(m.group(1)), idx))
    return tuple(out)
