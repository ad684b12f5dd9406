"""Schauder frames as coordinate-computable pairs ``(x_i, f_i)`` with tail certificates.

A frame provider knows its generators, an ``analysis_extent`` (the last
index ``i`` with ``f_i(x) != 0`` for a finitely supported ``x``), and
optionally two monotone tail certificates:

``coef_tail(x, N)``
    bounds ``sup_{N <= m <= n} ||P_[m,n] x||``;
``dual_tail(j, N)``
    bounds ``sup_{N <= m <= n} ||f_j o P_[m,n]|| = ||sum_{i=m}^n f_j(x_i) f_i||``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from . import linalg
from .errors import NoCertificateError, PreconditionError
from .reals import CertifiedReal, as_scalar, cmax
from .spaces import (
    ZERO_VECTOR,
    AmbientSpace,
    CoefVector,
    FiniteRankOperator,
    ambient_norm,
    dual_norm,
    linear_combination,
    operator_norm,
    pair,
)


class FrameProvider:
    """Base class; subclasses supply ``vector_at`` and ``functional_at``."""

    space: AmbientSpace = AmbientSpace.L2
    name: str = "frame"
    #: number of pairs, or None for an infinite frame
    length: int | None = None
    #: certified global bound on the frame constant, if known
    constant_bound: CertifiedReal | None = None
    #: largest N the schedule search may consider
    search_limit: int = 10**12

    def vector_at(self, i: int) -> CoefVector:
        raise NotImplementedError

    def functional_at(self, i: int) -> CoefVector:
        raise NotImplementedError

    def _check_index(self, i: int) -> None:
        if i < 1 or (self.length is not None and i > self.length):
            raise IndexError(f"frame index {i} outside 1..{self.length or 'inf'}")

    # -- certificates ---------------------------------------------------------
    @property
    def has_dual_tail(self) -> bool:
        return False

    @property
    def has_coef_tail(self) -> bool:
        return False

    def dual_tail(self, j: int, n: int) -> CertifiedReal:
        raise NoCertificateError()

    def coef_tail(self, x: CoefVector, n: int) -> CertifiedReal:
        raise NoCertificateError("no coefficient tail certificate")

    def analysis_extent(self, x: CoefVector) -> int:
        """Index ``n*`` with ``f_i(x) = 0`` for every ``i > n*``."""
        if self.length is None:
            raise NotImplementedError
        return max((i for i in range(1, self.length + 1) if pair(self.functional_at(i), x) != 0),
                   default=0)

    def functional_expansion(self, f: CoefVector) -> CoefVector:
        """Coefficients ``c`` with ``f = sum_j c_j f_j``."""
        if self.length is None:
            raise NotImplementedError
        fs = [self.functional_at(j) for j in range(1, self.length + 1)]
        coords = sorted({i for g in fs for i, _ in g} | set(f.support))
        a = [[g[c] for g in fs] for c in coords]
        sol = linalg.solve(a, [f[c] for c in coords])
        if sol is None:
            raise PreconditionError("functional is not in the span of the frame functionals")
        return CoefVector(zip(range(1, self.length + 1), sol))

    def describe(self) -> dict[str, Any]:
        return {"name": self.name, "space": self.space.value, "length": self.length,
                "has_dual_tail": self.has_dual_tail, "has_coef_tail": self.has_coef_tail,
                "constant_bound": None if self.constant_bound is None else self.constant_bound.to_json()}


class CanonicalBasis(FrameProvider):
    """The unit vector basis ``x_i = e_i``, ``f_i = e_i^*``."""

    def __init__(self, space: AmbientSpace | str = AmbientSpace.L2):
        self.space = AmbientSpace.parse(space)
        self.name = f"canonical[{self.space.value}]"
        self.constant_bound = CertifiedReal.exact(1)

    def vector_at(self, i: int) -> CoefVector:
        self._check_index(i)
        return CoefVector.unit(i)

    def functional_at(self, i: int) -> CoefVector:
        self._check_index(i)
        return CoefVector.unit(i)

    has_dual_tail = True
    has_coef_tail = True

    def dual_tail(self, j: int, n: int) -> CertifiedReal:
        return CertifiedReal.exact(1 if n <= j else 0)

    def coef_tail(self, x: CoefVector, n: int) -> CertifiedReal:
        return ambient_norm(x.restrict(n), self.space)

    def analysis_extent(self, x: CoefVector) -> int:
        return x.max_index

    def functional_expansion(self, f: CoefVector) -> CoefVector:
        return f


class Example23(FrameProvider):
    """Redundant frame of l2: ``x_1 = e_1``; ``x_{2i} = e_{i+1}``, ``x_{2i+1} = e_1``.

    Functionals ``f_1 = e_1^*``, ``f_{2i} = e_{i+1}^*`` and ``f_{2i+1} = 0``.
    Every partial reconstruction is a coordinate projection, so the frame
    constant is 1.
    """

    def __init__(self, space: AmbientSpace | str = AmbientSpace.L2):
        self.space = AmbientSpace.parse(space)
        self.name = "example23" if self.space is AmbientSpace.L2 else f"example23[{self.space.value}]"
        self.constant_bound = CertifiedReal.exact(1)

    def vector_at(self, i: int) -> CoefVector:
        self._check_index(i)
        if i % 2 == 1:
            return CoefVector.unit(1)
        return CoefVector.unit(i // 2 + 1)

    def functional_at(self, i: int) -> CoefVector:
        self._check_index(i)
        if i == 1:
            return CoefVector.unit(1)
        if i % 2 == 1:
            return ZERO_VECTOR
        return CoefVector.unit(i // 2 + 1)

    has_dual_tail = True
    has_coef_tail = True

    def dual_tail(self, j: int, n: int) -> CertifiedReal:
        if j == 1:
            return CertifiedReal.exact(1 if n <= 1 else 0)
        if j % 2 == 1:
            return CertifiedReal.ZERO
        return CertifiedReal.exact(1 if n <= j else 0)

    def coef_tail(self, x: CoefVector, n: int) -> CertifiedReal:
        if n <= 1:
            return ambient_norm(x, self.space)
        # even indices 2t >= n carry coordinate t + 1
        return ambient_norm(x.restrict((n + 1) // 2 + 1), self.space)

    @staticmethod
    def index_of_coordinate(c: int) -> int:
        return 1 if c == 1 else 2 * (c - 1)

    def analysis_extent(self, x: CoefVector) -> int:
        return max((self.index_of_coordinate(c) for c in x.support), default=0)

    def functional_expansion(self, f: CoefVector) -> CoefVector:
        return CoefVector((self.index_of_coordinate(c), v) for c, v in f)


# -- tail templates -------------------------------------------------------------

def _cutoff(rule: Any, j: int) -> int:
    if isinstance(rule, int):
        return rule
    if rule == "j":
        return j
    if isinstance(rule, str) and rule.endswith("*j"):
        return int(rule[:-2]) * j
    raise ValueError(f"unsupported cutoff rule {rule!r}")


class TailTemplate:
    """Closed-form tail certificate parsed from a frame spec.

    Kinds: ``enumerate`` (exact, finite frames only), ``geometric``
    (``scale * ratio**N``), ``eventually_zero`` (``scale`` while
    ``N <= cutoff``), ``table`` (explicit per-``j`` values for ``N = 1, 2, ...``).
    """

    def __init__(self, spec: Mapping[str, Any]):
        self.spec = dict(spec)
        self.kind = self.spec.get("type")
        if self.kind not in ("enumerate", "geometric", "eventually_zero", "table"):
            raise ValueError(f"unknown tail template {self.kind!r}")
        if self.kind == "geometric":
            self.scale = as_scalar(self.spec.get("scale", 1))
            self.ratio = as_scalar(self.spec["ratio"])
            if not 0 <= self.ratio <= 1:
                raise ValueError("geometric ratio must lie in [0, 1]")
        elif self.kind == "eventually_zero":
            self.scale = as_scalar(self.spec.get("scale", 1))
            self.cutoff = self.spec.get("cutoff", "j")
        elif self.kind == "table":
            self.rows = {int(j): [as_scalar(v) for v in vals] for j, vals in self.spec["rows"].items()}
            self.beyond = as_scalar(self.spec.get("beyond", 0))

    def to_json(self) -> dict[str, Any]:
        return self.spec


class ExplicitFrame(FrameProvider):
    """A finite frame given by an explicit list of pairs."""

    def __init__(self, pairs: Sequence[tuple[CoefVector, CoefVector]],
                 space: AmbientSpace | str = AmbientSpace.L2, *,
                 dual_tail: Mapping[str, Any] | None = None,
                 coef_tail: Mapping[str, Any] | None = None,
                 constant_bound: CertifiedReal | None = None,
                 name: str = "explicit"):
        self.space = AmbientSpace.parse(space)
        self._pairs = [(x, f) for x, f in pairs]
        for i, (x, _) in enumerate(self._pairs, start=1):
            if x.is_zero():
                raise PreconditionError(f"frame vector x_{i} is zero")
        self.length = len(self._pairs)
        self.search_limit = self.length
        self.name = name
        self.constant_bound = constant_bound
        self._dual = TailTemplate(dual_tail) if dual_tail else None
        self._coef = TailTemplate(coef_tail) if coef_tail else None
        self._dual_cache: dict[int, list[CertifiedReal]] = {}

    def vector_at(self, i: int) -> CoefVector:
        self._check_index(i)
        return self._pairs[i - 1][0]

    def functional_at(self, i: int) -> CoefVector:
        self._check_index(i)
        return self._pairs[i - 1][1]

    @property
    def pairs(self) -> list[tuple[CoefVector, CoefVector]]:
        return list(self._pairs)

    @property
    def has_dual_tail(self) -> bool:
        return self._dual is not None

    @property
    def has_coef_tail(self) -> bool:
        return self._coef is not None

    def exact_dual_tails(self, j: int) -> list[CertifiedReal]:
        """``out[N-1] = sup_{N <= m <= n <= L} ||sum_{i=m}^n f_j(x_i) f_i||`` for N = 1..L+1."""
        if j not in self._dual_cache:
            fj = self.functional_at(j)
            coeffs = [pair(fj, x) for x, _ in self._pairs]
            best_from = [CertifiedReal.ZERO] * (self.length + 2)
            for m in range(self.length, 0, -1):
                acc = ZERO_VECTOR
                best = CertifiedReal.ZERO
                for n in range(m, self.length + 1):
                    c = coeffs[n - 1]
                    if c != 0:
                        acc = acc + self._pairs[n - 1][1] * c
                        best = cmax([best, dual_norm(acc, self.space)])
                best_from[m] = cmax([best, best_from[m + 1]])
            self._dual_cache[j] = best_from[1:]
        return self._dual_cache[j]

    def dual_tail(self, j: int, n: int) -> CertifiedReal:
        if self._dual is None:
            raise NoCertificateError()
        n = max(n, 1)
        t = self._dual
        if n > self.length:
            return CertifiedReal.ZERO
        if t.kind == "enumerate":
            return self.exact_dual_tails(j)[n - 1]
        if t.kind == "geometric":
            return CertifiedReal.exact(t.scale * t.ratio ** n)
        if t.kind == "eventually_zero":
            return CertifiedReal.exact(t.scale if n <= _cutoff(t.cutoff, j) else 0)
        row = t.rows.get(j, [])
        return CertifiedReal.exact(row[n - 1] if n <= len(row) else t.beyond)

    def coef_tail(self, x: CoefVector, n: int) -> CertifiedReal:
        if self._coef is None:
            raise NoCertificateError("no coefficient tail certificate")
        n = max(n, 1)
        if n > self.length:
            return CertifiedReal.ZERO
        t = self._coef
        if t.kind == "enumerate":
            coeffs = [pair(f, x) for _, f in self._pairs]
            best = CertifiedReal.ZERO
            for m in range(n, self.length + 1):
                acc = ZERO_VECTOR
                for i in range(m, self.length + 1):
                    if coeffs[i - 1] != 0:
                        acc = acc + self._pairs[i - 1][0] * coeffs[i - 1]
                        best = cmax([best, ambient_norm(acc, self.space)])
            return best
        norm_x = ambient_norm(x, self.space)
        if t.kind == "geometric":
            return norm_x * (t.scale * t.ratio ** n)
        if t.kind == "eventually_zero":
            return norm_x * t.scale if n <= self.analysis_extent(x) else CertifiedReal.ZERO
        raise ValueError("table templates are only supported for dual tails")

    def to_spec(self) -> dict[str, Any]:
        spec: dict[str, Any] = {
            "space": self.space.value,
            "name": self.name,
            "generators": {"type": "explicit",
                           "pairs": [{"x": x.to_json(), "f": f.to_json()} for x, f in self._pairs]},
        }
        if self._dual is not None:
            spec["dual_tail"] = self._dual.to_json()
        if self._coef is not None:
            spec["coef_tail"] = self._coef.to_json()
        if self.constant_bound is not None:
            spec["frame_constant"] = self.constant_bound.to_json()
        return spec


class OverriddenFrame(FrameProvider):
    """A frame with finitely many generators replaced; certificates are dropped."""

    def __init__(self, base: FrameProvider, *,
                 vectors: Mapping[int, CoefVector] | None = None,
                 functionals: Mapping[int, CoefVector] | None = None):
        self.base = base
        self.space = base.space
        self.length = base.length
        self.vectors = dict(vectors or {})
        self.functionals = dict(functionals or {})
        self.name = f"{base.name}+overrides"
        for i, v in self.vectors.items():
            if v.is_zero():
                raise PreconditionError(f"frame vector x_{i} is zero")

    def vector_at(self, i: int) -> CoefVector:
        return self.vectors[i] if i in self.vectors else self.base.vector_at(i)

    def functional_at(self, i: int) -> CoefVector:
        return self.functionals[i] if i in self.functionals else self.base.functional_at(i)

    def analysis_extent(self, x: CoefVector) -> int:
        extra = [i for i, f in self.functionals.items() if pair(f, x) != 0]
        return max([self.base.analysis_extent(x), *extra])


# -- frame spec JSON ------------------------------------------------------------

def _pairs_from_json(items: Iterable[Mapping[str, Any]]) -> list[tuple[CoefVector, CoefVector]]:
    return [(CoefVector.from_json(p["x"]), CoefVector.from_json(p["f"])) for p in items]


def load_frame(spec: Mapping[str, Any]) -> FrameProvider:
    """Build a provider from a frame spec dictionary (see README for the schema)."""
    space = AmbientSpace.parse(spec.get("space", "L2"))
    gen = spec.get("generators", {"type": "canonical"})
    kind = gen.get("type")
    if kind == "canonical":
        frame: FrameProvider = CanonicalBasis(space)
    elif kind == "example23":
        frame = Example23(space)
    elif kind == "explicit":
        bound = spec.get("frame_constant")
        if isinstance(bound, (str, int)):
            bound = CertifiedReal.exact(as_scalar(bound))
        elif isinstance(bound, Mapping):
            bound = CertifiedReal.from_json(bound)
        frame = ExplicitFrame(_pairs_from_json(gen["pairs"]), space,
                              dual_tail=spec.get("dual_tail"), coef_tail=spec.get("coef_tail"),
                              constant_bound=bound, name=spec.get("name", "explicit"))
    else:
        raise ValueError(f"unknown generator type {kind!r}")
    overrides = spec.get("overrides")
    if overrides:
        frame = OverriddenFrame(
            frame,
            vectors={int(i): CoefVector.from_json(o["x"]) for i, o in overrides.items() if "x" in o},
            functionals={int(i): CoefVector.from_json(o["f"]) for i, o in overrides.items() if "f" in o},
        )
    return frame


def frame_to_spec(frame: FrameProvider) -> dict[str, Any]:
    if isinstance(frame, ExplicitFrame):
        return frame.to_spec()
    if isinstance(frame, OverriddenFrame):
        spec = frame_to_spec(frame.base)
        over: dict[str, dict] = {}
        for i, v in frame.vectors.items():
            over.setdefault(str(i), {})["x"] = v.to_json()
        for i, f in frame.functionals.items():
            over.setdefault(str(i), {})["f"] = f.to_json()
        spec["overrides"] = over
        return spec
    kind = {CanonicalBasis: "canonical", Example23: "example23"}.get(type(frame))
    if kind is None:
        raise ValueError(f"cannot serialise {type(frame).__name__}")
    return {"space": frame.space.value, "generators": {"type": kind}}


# -- operators P, S, T ------------------------------------------------------------

def _check_interval(m: int, n: int) -> None:
    if m < 1:
        raise PreconditionError(f"interval start must be >= 1, got {m}")
    if m > n:
        raise PreconditionError(f"empty interval [{m}, {n}]")


def _clamp(frame: FrameProvider, n: int) -> int:
    return n if frame.length is None else min(n, frame.length)


def partial_reconstruction(frame: FrameProvider, m: int, n: int, x: CoefVector) -> CoefVector:
    """``P_[m,n] x = sum_{i=m}^n f_i(x) x_i``."""
    _check_interval(m, n)
    top = min(_clamp(frame, n), frame.analysis_extent(x))
    return linear_combination((pair(frame.functional_at(i), x), frame.vector_at(i))
                              for i in range(m, top + 1))


def synthesis(frame: FrameProvider, m: int, n: int, a: CoefVector) -> CoefVector:
    """``S_[m,n] a = sum_{i=m}^n a_i x_i``."""
    _check_interval(m, n)
    return linear_combination((v, frame.vector_at(i)) for i, v in a if m <= i <= n)


@dataclass(frozen=True)
class AnalysisResult:
    coefficients: CoefVector
    n_star: int


def analysis(frame: FrameProvider, x: CoefVector, horizon: int | None = None) -> AnalysisResult:
    """Frame coefficients ``(f_i(x))_{i <= horizon}`` and the extent ``n*``.

    With ``horizon=None`` the coefficients are returned up to ``n*``, which is
    the full (finitely supported) analysis vector.
    """
    n_star = frame.analysis_extent(x)
    top = n_star if horizon is None else min(horizon, n_star)
    coefs = CoefVector((i, pair(frame.functional_at(i), x)) for i in range(1, top + 1))
    return AnalysisResult(coefs, n_star)


def interval_operator(frame: FrameProvider, m: int, n: int, box: int | None = None) -> FiniteRankOperator:
    """``P_[m,n]`` as a finite-rank operator, optionally restricted to coordinates ``[1, box]``."""
    _check_interval(m, n)
    terms = []
    for i in range(m, _clamp(frame, n) + 1):
        f = frame.functional_at(i)
        if box is not None:
            f = f.restrict(1, box)
        terms.append((f, frame.vector_at(i)))
    return FiniteRankOperator(tuple(terms), frame.space)


@dataclass(frozen=True)
class FrameConstant:
    lower: CertifiedReal
    upper: CertifiedReal | None
    argmax: tuple[int, int]
    horizon: int


def frame_constant(frame: FrameProvider, horizon: int) -> FrameConstant:
    """Largest ``||P_[m,n]||`` over ``1 <= m <= n <= horizon`` on the box ``[1, horizon]``."""
    if horizon < 1:
        raise PreconditionError("horizon must be >= 1")
    top = _clamp(frame, horizon)
    fs = [frame.functional_at(i).restrict(1, horizon) for i in range(1, top + 1)]
    xs = [frame.vector_at(i) for i in range(1, top + 1)]
    best, arg = CertifiedReal.ZERO, (1, 1)
    for m in range(1, top + 1):
        terms: list[tuple[CoefVector, CoefVector]] = []
        for n in range(m, top + 1):
            if fs[n - 1].is_zero() and n > m:
                continue  # same operator as [m, n-1]
            terms.append((fs[n - 1], xs[n - 1]))
            val = operator_norm(FiniteRankOperator(tuple(terms), frame.space))
            if val.sq_lo > best.sq_lo:
                arg = (m, n)
            best = cmax([best, val])
    upper = frame.constant_bound
    if upper is None and frame.length is not None and horizon >= frame.length:
        box_covers = all(f.max_index <= horizon for f in
                         (frame.functional_at(i) for i in range(1, frame.length + 1)))
        if box_covers:
            upper = best  # every interval operator was evaluated exactly
    return FrameConstant(best, upper, arg, horizon)


def shrinking_tail_bound(frame: FrameProvider, f: CoefVector, n: int) -> CertifiedReal:
    """Upper bound for ``||f o P_[n, inf)||`` from the dual-tail certificates."""
    if n < 1:
        raise PreconditionError("N must be >= 1")
    if not frame.has_dual_tail:
        raise NoCertificateError()
    coeffs = frame.functional_expansion(f)
    total = CertifiedReal.ZERO
    for j, c in coeffs:
        t = frame.dual_tail(j, n)
        if not t.is_zero():
            total = total + t.scale(c)
    return total


def reconstruction_residual(frame: FrameProvider, x: CoefVector, n: int | None = None) -> CoefVector:
    """``x - P_[1,n] x`` (``n`` defaults to ``n*``)."""
    if n is None:
        n = max(frame.analysis_extent(x), 1)
    return x - partial_reconstruction(frame, 1, n, x)


def vector_norm(frame: FrameProvider, v: CoefVector) -> CertifiedReal:
    return ambient_norm(v, frame.space)

