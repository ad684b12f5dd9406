"""Finitely supported vectors, the sequence spaces l1 / l2 / l_inf, finite-rank operators."""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from . import linalg
from .reals import CertifiedReal, ScalarLike, as_scalar

_ZERO = Fraction(0)


class CoefVector:
    """Immutable finitely supported sequence indexed from 1.

    Stored as a strictly increasing tuple of ``(index, value)`` pairs with no
    zero values.  Used both for vectors of the ambient space and for
    coefficient sequences of functionals.
    """

    __slots__ = ("_items", "_map", "_hash")

    def __init__(self, entries: Mapping[int, ScalarLike] | Iterable[tuple[int, ScalarLike]] = ()):
        data: dict[int, Fraction] = {}
        pairs = entries.items() if isinstance(entries, Mapping) else entries
        for idx, val in pairs:
            if isinstance(idx, bool) or not isinstance(idx, (int, np.integer)):
                raise TypeError(f"index {idx!r} is not an integer")
            idx = int(idx)
            if idx < 1:
                raise ValueError(f"indices are 1-based, got {idx}")
            v = as_scalar(val)
            data[idx] = data.get(idx, _ZERO) + v
        self._items = tuple(sorted((i, v) for i, v in data.items() if v != 0))
        self._map = dict(self._items)
        self._hash = None

    # -- constructors -------------------------------------------------------
    @classmethod
    def unit(cls, i: int, value: ScalarLike = 1) -> CoefVector:
        return cls({i: value})

    @classmethod
    def from_dense(cls, values: Sequence[ScalarLike], start: int = 1) -> CoefVector:
        return cls((start + k, v) for k, v in enumerate(values))

    @classmethod
    def from_json(cls, data: str | list) -> CoefVector:
        """Parse a JSON array of ``[index, numerator, denominator]`` triples."""
        triples = json.loads(data) if isinstance(data, str) else data
        out = []
        for t in triples:
            if len(t) != 3:
                raise ValueError(f"expected [index, numerator, denominator], got {t!r}")
            i, n, d = t
            out.append((int(i), Fraction(int(n), int(d))))
        return cls(out)

    def to_json(self) -> list[list[int]]:
        return [[i, v.numerator, v.denominator] for i, v in self._items]

    # -- container protocol ---------------------------------------------------
    def __getitem__(self, i: int) -> Fraction:
        return self._map.get(i, _ZERO)

    def __iter__(self) -> Iterator[tuple[int, Fraction]]:
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __bool__(self) -> bool:
        return bool(self._items)

    def items(self) -> tuple[tuple[int, Fraction], ...]:
        return self._items

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self._items)

    @property
    def max_index(self) -> int:
        """Largest index in the support (0 for the zero vector)."""
        return self._items[-1][0] if self._items else 0

    @property
    def min_index(self) -> int:
        return self._items[0][0] if self._items else 0

    def is_zero(self) -> bool:
        return not self._items

    # -- algebra ----------------------------------------------------------------
    def __add__(self, other: CoefVector) -> CoefVector:
        if not isinstance(other, CoefVector):
            return NotImplemented
        if not other._items:
            return self
        if not self._items:
            return other
        return CoefVector(self._items + other._items)

    def __sub__(self, other: CoefVector) -> CoefVector:
        if not isinstance(other, CoefVector):
            return NotImplemented
        return self + (-other)

    def __neg__(self) -> CoefVector:
        return CoefVector((i, -v) for i, v in self._items)

    def __mul__(self, c: ScalarLike) -> CoefVector:
        c = as_scalar(c)
        if c == 0:
            return ZERO_VECTOR
        return CoefVector((i, c * v) for i, v in self._items)

    __rmul__ = __mul__

    def __truediv__(self, c: ScalarLike) -> CoefVector:
        return self * (1 / as_scalar(c))

    def restrict(self, lo: int, hi: int | None = None) -> CoefVector:
        """Coordinates with ``lo <= index <= hi`` (``hi=None`` means unbounded)."""
        return CoefVector((i, v) for i, v in self._items if i >= lo and (hi is None or i <= hi))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoefVector):
            return NotImplemented
        return self._items == other._items

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._items)
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join(f"{i}: {v}" for i, v in self._items)
        return f"CoefVector({{{body}}})"


ZERO_VECTOR = CoefVector()


def linear_combination(terms: Iterable[tuple[ScalarLike, CoefVector]]) -> CoefVector:
    """``sum(c * v)`` accumulated in one pass."""
    acc: dict[int, Fraction] = {}
    for c, v in terms:
        c = as_scalar(c)
        if c == 0:
            continue
        for i, x in v:
            acc[i] = acc.get(i, _ZERO) + c * x
    return CoefVector(acc)


def pair(f: CoefVector, x: CoefVector) -> Fraction:
    """Duality pairing ``f(x)``: sum of products over the common support."""
    if len(f) > len(x):
        f, x = x, f
    xm = x._map
    return sum((v * xm[i] for i, v in f if i in xm), _ZERO)


class AmbientSpace(enum.Enum):
    """The sequence spaces supported: l1, l2 and l_inf (= c0 at finite support)."""

    L1 = "L1"
    L2 = "L2"
    LINF = "LINF"

    @classmethod
    def parse(cls, name: str | AmbientSpace) -> AmbientSpace:
        if isinstance(name, AmbientSpace):
            return name
        key = str(name).strip().upper().replace("_", "")
        aliases = {"L1": cls.L1, "ELL1": cls.L1, "L2": cls.L2, "ELL2": cls.L2,
                   "LINF": cls.LINF, "LINFTY": cls.LINF, "C0": cls.LINF, "ELLINF": cls.LINF}
        if key not in aliases:
            raise ValueError(f"unknown ambient space {name!r}")
        return aliases[key]

    @property
    def dual(self) -> AmbientSpace:
        return {AmbientSpace.L1: AmbientSpace.LINF,
                AmbientSpace.LINF: AmbientSpace.L1,
                AmbientSpace.L2: AmbientSpace.L2}[self]

    def norm(self, v: CoefVector) -> CertifiedReal:
        return ambient_norm(v, self)

    def dual_norm(self, f: CoefVector) -> CertifiedReal:
        return ambient_norm(f, self.dual)


def ambient_norm(v: CoefVector, sp: AmbientSpace) -> CertifiedReal:
    """Exact norm for l1/l_inf; for l2 the exact square (enclosure via ``.lo``/``.hi``)."""
    if sp is AmbientSpace.L1:
        return CertifiedReal.exact(sum((abs(x) for _, x in v), _ZERO))
    if sp is AmbientSpace.LINF:
        return CertifiedReal.exact(max((abs(x) for _, x in v), default=_ZERO))
    return CertifiedReal.from_square(sum((x * x for _, x in v), _ZERO))


def dual_norm(f: CoefVector, sp: AmbientSpace) -> CertifiedReal:
    return ambient_norm(f, sp.dual)


@dataclass(frozen=True)
class FiniteRankOperator:
    """``x -> sum_t f_t(x) x_t`` given by rank-one terms ``(f_t, x_t)``."""

    terms: tuple[tuple[CoefVector, CoefVector], ...]
    domain: AmbientSpace = AmbientSpace.L2
    codomain: AmbientSpace | None = None
    _matrix: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple((f, x) for f, x in self.terms
                                                  if not f.is_zero() and not x.is_zero()))
        if self.codomain is None:
            object.__setattr__(self, "codomain", self.domain)

    @classmethod
    def rank_one(cls, f: CoefVector, x: CoefVector, sp: AmbientSpace = AmbientSpace.L2) -> FiniteRankOperator:
        return cls(((f, x),), sp)

    @classmethod
    def from_matrix(cls, rows: Mapping[int, Mapping[int, ScalarLike]],
                    sp: AmbientSpace = AmbientSpace.L2) -> FiniteRankOperator:
        """Operator with ``(A x)_r = sum_c rows[r][c] x_c``."""
        terms = [(CoefVector(cols), CoefVector.unit(r)) for r, cols in rows.items()]
        return cls(tuple(terms), sp)

    @classmethod
    def zero(cls, sp: AmbientSpace = AmbientSpace.L2) -> FiniteRankOperator:
        return cls((), sp)

    def apply(self, x: CoefVector) -> CoefVector:
        return linear_combination((pair(f, x), v) for f, v in self.terms)

    __call__ = apply

    def adjoint_apply(self, g: CoefVector) -> CoefVector:
        """``A* g = g o A`` as a coefficient sequence."""
        return linear_combination((pair(g, v), f) for f, v in self.terms)

    def __add__(self, other: FiniteRankOperator) -> FiniteRankOperator:
        self._check_same(other)
        return FiniteRankOperator(self.terms + other.terms, self.domain, self.codomain)

    def __sub__(self, other: FiniteRankOperator) -> FiniteRankOperator:
        return self + other.scale(-1)

    def scale(self, c: ScalarLike) -> FiniteRankOperator:
        c = as_scalar(c)
        return FiniteRankOperator(tuple((f * c, x) for f, x in self.terms), self.domain, self.codomain)

    def compose(self, inner: FiniteRankOperator) -> FiniteRankOperator:
        """``self o inner``."""
        terms = []
        for f, x in self.terms:
            g = inner.adjoint_apply(f)
            if not g.is_zero():
                terms.append((g, x))
        return FiniteRankOperator(tuple(terms), inner.domain, self.codomain)

    def restrict_domain(self, lo: int, hi: int) -> FiniteRankOperator:
        """Restriction to vectors supported in the coordinate box ``[lo, hi]``."""
        return FiniteRankOperator(tuple((f.restrict(lo, hi), x) for f, x in self.terms),
                                  self.domain, self.codomain)

    def _check_same(self, other: FiniteRankOperator) -> None:
        if (self.domain, self.codomain) != (other.domain, other.codomain):
            raise ValueError("operators act between different spaces")

    def matrix(self) -> tuple[list[int], list[int], linalg.Matrix]:
        """Induced matrix: row coordinates, column coordinates, entries (zero rows/cols dropped)."""
        if "m" not in self._matrix:
            entries: dict[tuple[int, int], Fraction] = {}
            for f, x in self.terms:
                for r, xv in x:
                    for c, fv in f:
                        entries[r, c] = entries.get((r, c), _ZERO) + xv * fv
            entries = {k: v for k, v in entries.items() if v != 0}
            rows = sorted({r for r, _ in entries})
            cols = sorted({c for _, c in entries})
            ri = {r: k for k, r in enumerate(rows)}
            ci = {c: k for k, c in enumerate(cols)}
            m = linalg.zeros(len(rows), len(cols))
            for (r, c), v in entries.items():
                m[ri[r]][ci[c]] = v
            self._matrix["m"] = (rows, cols, m)
            self._matrix["d"] = entries
        return self._matrix["m"]

    def matrix_entries(self) -> dict[tuple[int, int], Fraction]:
        """Nonzero entries ``{(row, col): value}``; equal dicts mean equal operators."""
        self.matrix()
        return dict(self._matrix["d"])

    def is_zero(self) -> bool:
        return not self.matrix_entries()

    def rank(self) -> int:
        return linalg.rank(self.matrix()[2])

    def range_basis(self) -> list[CoefVector]:
        """A basis of ``A(X)`` made of columns of the induced matrix."""
        rows, cols, m = self.matrix()
        cols_as_rows = linalg.transpose(m)
        keep = linalg.independent_rows(cols_as_rows)
        return [CoefVector(zip(rows, cols_as_rows[k])) for k in keep]

    def equals(self, other: FiniteRankOperator) -> bool:
        return self.matrix_entries() == other.matrix_entries()


def precision_mode() -> str:
    """``exact`` (default) or ``float64`` from the FRAMEFORGE_PRECISION variable."""
    mode = os.environ.get("FRAMEFORGE_PRECISION", "exact").strip().lower()
    if mode not in ("exact", "float64"):
        raise ValueError(f"FRAMEFORGE_PRECISION must be 'exact' or 'float64', got {mode!r}")
    return mode


def operator_norm(a: FiniteRankOperator) -> CertifiedReal:
    """Norm of ``a`` as an operator ``l_p -> l_p``.

    l1: largest column l1-sum; l_inf: largest row l1-sum (both exact).
    l2: largest singular value, certified through the Gram matrix.
    """
    if a.domain is not a.codomain:
        raise ValueError(f"operator norm needs matching spaces, got {a.domain.name} -> {a.codomain.name}")
    rows, cols, m = a.matrix()
    if not rows:
        return CertifiedReal.ZERO
    if a.domain is AmbientSpace.L1:
        return CertifiedReal.exact(max(sum((abs(m[r][c]) for r in range(len(rows))), _ZERO)
                                       for c in range(len(cols))))
    if a.domain is AmbientSpace.LINF:
        return CertifiedReal.exact(max(sum((abs(v) for v in row), _ZERO) for row in m))
    if len(rows) < len(cols):
        g = linalg.matmul(m, linalg.transpose(m))
    else:
        mt = linalg.transpose(m)
        g = linalg.matmul(mt, m)
    if precision_mode() == "float64":
        s = float(np.linalg.norm(np.array([[float(x) for x in row] for row in m]), 2))
        lo, hi = Fraction(s * (1 - 1e-12)), Fraction(s * (1 + 1e-12))
        return CertifiedReal(max(lo, _ZERO) ** 2, hi ** 2, certified=False)
    return linalg.certified_lambda_max(g)
