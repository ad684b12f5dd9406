"""Auerbach bases, rank-one splitting of finite-rank operators, and frame assembly.

Given ``A`` of rank ``d`` with an Auerbach basis ``(e_r, e*_r)`` of its range,
the split into ``m`` rounds is ``x_{qd+r} = e_r``, ``f_{qd+r} = A* e*_r / m``
(``0 <= q < m``, ``1 <= r <= d``).  Completed rounds sum to ``(q/m) A``
exactly and a partial round of ``r`` terms has norm at most ``(r/m) ||A||``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog

from . import linalg
from .errors import ApproximationError, PreconditionError
from .frames import ExplicitFrame
from .reals import CertifiedReal, as_scalar, rational_sqrt
from .schedule import eval_int_expr
from .spaces import (ZERO_VECTOR, AmbientSpace, CoefVector, FiniteRankOperator, ambient_norm,
                     dual_norm, operator_norm, pair)

AUERBACH_TOLERANCE = 1e-6
MAX_NUMERIC_DIM = 6


@dataclass(frozen=True)
class AuerbachSystem:
    """Biorthogonal ``(e_r, e*_r)`` spanning a finite-dimensional subspace.

    Biorthogonality ``e*_r(e_s) = delta_rs`` is always exact.  In ``L2`` the
    pair may be stored with reciprocal scaling (``e_r = u``, ``e*_r = u/|u|^2``)
    when ``|u|`` is irrational; the rank-one maps ``e*_r (x) e_r`` are then the
    orthogonal ones and ``||e_r|| * ||e*_r|| = 1`` exactly.  ``tau`` bounds the
    deviation of ``||e_r|| * ||e*_r||`` from 1.
    """

    vectors: tuple[CoefVector, ...]
    functionals: tuple[CoefVector, ...]
    space: AmbientSpace
    tau: Fraction = Fraction(0)
    method: str = "exact"

    @property
    def d(self) -> int:
        return len(self.vectors)

    def pairing_matrix(self) -> list[list[Fraction]]:
        return [[pair(f, e) for e in self.vectors] for f in self.functionals]

    def rank_one_norm(self, r: int) -> CertifiedReal:
        """``||e*_r|| * ||e_r||`` for 1-based ``r``."""
        return (ambient_norm(self.vectors[r - 1], self.space)
                * dual_norm(self.functionals[r - 1], self.space))

    def check(self) -> bool:
        d = self.d
        if self.pairing_matrix() != [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]:
            return False
        bound = (1 + self.tau) ** 2
        return all(self.rank_one_norm(r).sq_hi <= bound and self.rank_one_norm(r) >= 1 - self.tau
                   for r in range(1, d + 1))

    def to_json(self) -> dict[str, Any]:
        return {"space": self.space.value, "tau": str(self.tau), "method": self.method,
                "vectors": [v.to_json() for v in self.vectors],
                "functionals": [f.to_json() for f in self.functionals]}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> AuerbachSystem:
        return cls(tuple(CoefVector.from_json(v) for v in data["vectors"]),
                   tuple(CoefVector.from_json(f) for f in data["functionals"]),
                   AmbientSpace.parse(data["space"]), as_scalar(data.get("tau", 0)),
                   data.get("method", "exact"))


def _check_independent(span: Sequence[CoefVector]) -> list[int]:
    coords = sorted({i for v in span for i in v.support})
    rows = [[v[i] for i in coords] for v in span]
    if not span or any(v.is_zero() for v in span) or linalg.rank(rows) != len(span):
        raise PreconditionError("span vectors must be nonzero and linearly independent")
    return coords


def _gram_schmidt(span: Sequence[CoefVector]) -> AuerbachSystem:
    us: list[CoefVector] = []
    for v in span:
        u = v
        for w in us:
            u = u - w * (pair(v, w) / pair(w, w))
        us.append(u)
    vecs, funcs = [], []
    for u in us:
        sq = pair(u, u)
        root = rational_sqrt(sq)
        if root is not None:
            vecs.append(u / root)
            funcs.append(u / root)
        else:
            vecs.append(u)
            funcs.append(u / sq)
    return AuerbachSystem(tuple(vecs), tuple(funcs), AmbientSpace.L2, Fraction(0), "gram-schmidt")


def _unit_ball_max(w: np.ndarray, basis: np.ndarray, sp: AmbientSpace) -> np.ndarray:
    """Maximise ``w . c`` subject to ``||c @ basis||_sp <= 1``."""
    d, n = basis.shape
    bt = basis.T
    if sp is AmbientSpace.LINF:
        res = linprog(-w, A_ub=np.vstack([bt, -bt]), b_ub=np.ones(2 * n),
                      bounds=[(None, None)] * d, method="highs")
        return res.x
    # L1: variables (c, t) with -t <= bt c <= t, sum t <= 1
    a_ub = np.block([[bt, -np.eye(n)], [-bt, -np.eye(n)], [np.zeros((1, d)), np.ones((1, n))]])
    b_ub = np.concatenate([np.zeros(2 * n), [1.0]])
    res = linprog(np.concatenate([-w, np.zeros(n)]), A_ub=a_ub, b_ub=b_ub,
                  bounds=[(None, None)] * d + [(0, None)] * n, method="highs")
    return res.x[:d]


def _max_det_coefficients(basis: np.ndarray, sp: AmbientSpace, restarts: int, seed: int
                          ) -> np.ndarray:
    """Coordinate ascent for ``max |det C|`` over columns on the unit sphere of the span.

    A coordinatewise maximiser already makes every Cramer functional norm one on
    the span, which is all the Auerbach property needs.
    """
    d = basis.shape[0]
    rng = np.random.default_rng(seed)
    best_c, best_det = None, -1.0
    for _ in range(restarts):
        c = rng.standard_normal((d, d))
        for i in range(d):
            c[:, i] /= np.abs(c[:, i] @ basis).max() if sp is AmbientSpace.LINF \
                else np.abs(c[:, i] @ basis).sum()
        prev = abs(np.linalg.det(c))
        for _sweep in range(200):
            for i in range(d):
                if abs(np.linalg.det(c)) < 1e-300:
                    c[:, i] = rng.standard_normal(d)
                cof = np.linalg.det(c) * np.linalg.inv(c)[i, :]
                c[:, i] = _unit_ball_max(cof, basis, sp)
            cur = abs(np.linalg.det(c))
            if cur - prev <= 1e-14 * max(cur, 1.0):
                break
            prev = cur
        if cur > best_det:
            best_c, best_det = c.copy(), cur
    return best_c


def _min_norm_extension(targets: np.ndarray, vecs: np.ndarray, sp: AmbientSpace) -> np.ndarray:
    """Least dual-norm ``g`` with ``vecs @ g = targets``."""
    d, n = vecs.shape
    if sp is AmbientSpace.LINF:  # dual norm is l1
        c = np.concatenate([np.zeros(n), np.ones(n)])
        a_ub = np.block([[np.eye(n), -np.eye(n)], [-np.eye(n), -np.eye(n)]])
        a_eq = np.hstack([vecs, np.zeros((d, n))])
        res = linprog(c, A_ub=a_ub, b_ub=np.zeros(2 * n), A_eq=a_eq, b_eq=targets,
                      bounds=[(None, None)] * n + [(0, None)] * n, method="highs")
        return res.x[:n]
    # L1 space, dual norm is sup: minimise s with |g_i| <= s
    c = np.concatenate([np.zeros(n), [1.0]])
    a_ub = np.block([[np.eye(n), -np.ones((n, 1))], [-np.eye(n), -np.ones((n, 1))]])
    a_eq = np.hstack([vecs, np.zeros((d, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(2 * n), A_eq=a_eq, b_eq=targets,
                  bounds=[(None, None)] * n + [(0, None)], method="highs")
    return res.x[:n]


def _rational(x: float, den: int = 10**9) -> Fraction:
    return Fraction(x).limit_denominator(den)


def _numeric_auerbach(span: Sequence[CoefVector], coords: list[int], sp: AmbientSpace,
                      restarts: int, seed: int, tol: float) -> AuerbachSystem:
    d = len(span)
    basis = np.array([[float(v[i]) for i in coords] for v in span])
    cmat = _max_det_coefficients(basis, sp, restarts, seed)
    vecs = []
    for i in range(d):
        v = ZERO_VECTOR
        for r in range(d):
            v = v + span[r] * _rational(cmat[r, i])
        vecs.append(v / ambient_norm(v, sp).value)
    emat = [[v[i] for i in coords] for v in vecs]
    efloat = np.array([[float(x) for x in row] for row in emat])
    funcs = []
    for r in range(d):
        delta = [Fraction(int(r == s)) for s in range(d)]
        g = [_rational(x) for x in _min_norm_extension(np.array(delta, dtype=float), efloat, sp)]
        # exact correction onto {g : e_s(g) = delta_rs} inside the span's coordinates
        resid = [dl - sum((a * b for a, b in zip(row, g)), Fraction(0)) for dl, row in zip(delta, emat)]
        gram = linalg.matmul(emat, linalg.transpose(emat))
        t = linalg.solve(gram, resid)
        g = [gi + sum((t[s] * emat[s][c] for s in range(d)), Fraction(0)) for c, gi in enumerate(g)]
        funcs.append(CoefVector(zip(coords, g)))
    tau = max(abs(dual_norm(f, sp).value - 1) for f in funcs)
    system = AuerbachSystem(tuple(vecs), tuple(funcs), sp, tau, "max-det")
    if tau > tol:
        raise ApproximationError(f"Auerbach search stalled at tau={float(tau):.3g} > {tol}", best=system)
    return system


def auerbach_basis(span: Sequence[CoefVector], sp: AmbientSpace | str, *,
                   restarts: int = 6, seed: int = 0, tol: float = AUERBACH_TOLERANCE) -> AuerbachSystem:
    """Auerbach basis of ``span`` in the given ambient space."""
    sp = AmbientSpace.parse(sp)
    span = list(span)
    coords = _check_independent(span)
    if all(len(v.support) == 1 for v in span):
        vecs = tuple(CoefVector.unit(v.min_index) for v in span)
        return AuerbachSystem(vecs, vecs, sp, Fraction(0), "coordinates")
    if sp is AmbientSpace.L2:
        return _gram_schmidt(span)
    if len(span) > MAX_NUMERIC_DIM:
        raise PreconditionError(f"numeric Auerbach search supports d <= {MAX_NUMERIC_DIM}")
    return _numeric_auerbach(span, coords, sp, restarts, seed, tol)


# -- splitting -------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSystem:
    pairs: tuple[tuple[CoefVector, CoefVector], ...]  # (x_j, f_j), j = 1..md
    source: FiniteRankOperator
    d: int
    m: int
    auerbach: AuerbachSystem

    def partial_operator(self, lo: int, hi: int) -> FiniteRankOperator:
        """``sum_{j=lo}^{hi} f_j (x) x_j`` (1-based, empty when ``hi < lo``)."""
        terms = tuple((f, x) for x, f in self.pairs[max(lo, 1) - 1:hi])
        return FiniteRankOperator(terms, self.source.domain, self.source.codomain)

    def to_json(self) -> dict[str, Any]:
        return {"d": self.d, "m": self.m, "source": operator_to_json(self.source),
                "auerbach": self.auerbach.to_json(),
                "pairs": [{"x": x.to_json(), "f": f.to_json()} for x, f in self.pairs]}

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> SplitSystem:
        pairs = tuple((CoefVector.from_json(p["x"]), CoefVector.from_json(p["f"])) for p in data["pairs"])
        return cls(pairs, operator_from_json(data["source"]), int(data["d"]), int(data["m"]),
                   AuerbachSystem.from_json(data["auerbach"]))


def split_operator(a: FiniteRankOperator, m: int, *, auerbach: AuerbachSystem | None = None,
                   seed: int = 0) -> SplitSystem:
    if m < 1:
        raise PreconditionError("split count m must be >= 1")
    if auerbach is None:
        rng = a.range_basis()
        if not rng:
            raise PreconditionError("cannot split the zero operator")
        auerbach = auerbach_basis(rng, a.codomain, seed=seed)
    d = auerbach.d
    funcs = [a.adjoint_apply(es) / m for es in auerbach.functionals]
    pairs = tuple((auerbach.vectors[r], funcs[r]) for _q in range(m) for r in range(d))
    return SplitSystem(pairs, a, d, m, auerbach)


@dataclass
class PelReport:
    passed: bool
    equality_defects: list[CertifiedReal]  # index q = 0..m
    first_failing_q: int | None
    block_ok: bool
    worst_block: tuple[int, int] | None
    worst_block_ratio: float
    slack: float = 1e-9
    notes: list[str] = field(default_factory=list)

    @property
    def max_defect(self) -> CertifiedReal:
        return max(self.equality_defects, key=lambda v: v.sq_hi)

    def to_json(self) -> dict[str, Any]:
        return {"passed": self.passed, "first_failing_q": self.first_failing_q,
                "max_equality_defect": self.max_defect.to_json(), "block_ok": self.block_ok,
                "worst_block": self.worst_block, "worst_block_ratio": self.worst_block_ratio,
                "equality_defects": [v.to_json() for v in self.equality_defects]}


def verify_pel(system: SplitSystem, slack: float = 1e-9) -> PelReport:
    """Check both split identities at every ``q`` and every partial round ``(q, r)``."""
    a, d, m = system.source, system.d, system.m
    defects = []
    first = None
    for q in range(m + 1):
        diff = system.partial_operator(1, q * d) - a.scale(Fraction(q, m))
        if diff.is_zero():
            defects.append(CertifiedReal.ZERO)
            continue
        defects.append(operator_norm(diff))
        if first is None:
            first = q
    norm_a = operator_norm(a)
    tau = system.auerbach.tau
    block_ok, worst, worst_ratio = True, None, 0.0
    for q in range(m):
        for r in range(1, d + 1):
            block = system.partial_operator(q * d + 1, q * d + r)
            val = operator_norm(block)
            bound = norm_a.scale(Fraction(r, m) * (1 + tau)) + Fraction(slack)
            if not val <= bound:
                block_ok = False
            ratio = float(val) / float(norm_a) * m / r if not norm_a.is_zero() else 0.0
            if worst is None or ratio > worst_ratio:
                worst, worst_ratio = (q, r), ratio
    return PelReport(first is None and block_ok, defects, first, block_ok, worst, worst_ratio, slack)


# -- operator (de)serialisation -------------------------------------------------

def operator_to_json(a: FiniteRankOperator) -> dict[str, Any]:
    return {"space": a.domain.value,
            "terms": [{"f": f.to_json(), "x": x.to_json()} for f, x in a.terms]}


def operator_from_json(data: Mapping[str, Any], space: AmbientSpace | str | None = None
                       ) -> FiniteRankOperator:
    """``{"terms": [{"f": ..., "x": ...}]}`` or ``{"matrix": {"row": {"col": value}}}``."""
    sp = AmbientSpace.parse(data.get("space") or space or "L2")
    if "matrix" in data:
        rows = {int(r): {int(c): as_scalar(v) for c, v in cols.items()}
                for r, cols in data["matrix"].items()}
        return FiniteRankOperator.from_matrix(rows, sp)
    terms = tuple((CoefVector.from_json(t["f"]), CoefVector.from_json(t["x"])) for t in data["terms"])
    return FiniteRankOperator(terms, sp)


def coordinate_projection(k: int, sp: AmbientSpace = AmbientSpace.L2) -> FiniteRankOperator:
    """The rank-one map ``x -> x_k e_k``."""
    return FiniteRankOperator.rank_one(CoefVector.unit(k), CoefVector.unit(k), sp)


def load_operator_prefix(data: Mapping[str, Any]) -> tuple[list[FiniteRankOperator], dict[str, Any]]:
    """Operators from an ops file; also returns the remaining assembly options.

    Either ``"ops": [...]`` (each as in :func:`operator_from_json`) or
    ``"template": "coordinate_projections", "count": K``.
    """
    sp = AmbientSpace.parse(data.get("space", "L2"))
    if data.get("template") == "coordinate_projections":
        ops = [coordinate_projection(k, sp) for k in range(1, int(data["count"]) + 1)]
    elif "ops" in data:
        ops = [operator_from_json(o, sp) for o in data["ops"]]
    else:
        raise PreconditionError("ops file needs 'ops' or a known 'template'")
    opts = {k: v for k, v in data.items() if k not in ("ops", "template", "count", "space")}
    return ops, opts


def splits_from_rule(rule: str, ranks: Sequence[int]) -> list[int]:
    """``"m_k=k*d_k"`` style rule evaluated for each operator."""
    lhs, _, rhs = rule.partition("=")
    if not rhs:
        rhs = lhs
    elif lhs.strip() != "m_k":
        raise PreconditionError(f"rule must define m_k, got {rule!r}")
    return [eval_int_expr(rhs, k=k, d_k=d) for k, d in enumerate(ranks, start=1)]


# -- assembly -----------------------------------------------------------------------

@dataclass
class AssembledFrame:
    frame: ExplicitFrame
    systems: list[SplitSystem]
    block_ends: list[int]  # cumulative lengths
    splits: list[int]
    tail_certificate: str


def _check_decay(ranks: Sequence[int], splits: Sequence[int]) -> None:
    ratios = [Fraction(d, m) for d, m in zip(ranks, splits)]
    for k, (a, b) in enumerate(zip(ratios, ratios[1:]), start=2):
        if b > a:
            raise PreconditionError(f"d_k/m_k must not increase: d_{k}/m_{k} = {b} > {a}")
    if len(ratios) > 1 and ratios[-1] >= ratios[0]:
        raise PreconditionError(f"d_k/m_k does not decay across the prefix (stays at {ratios[0]})")


def default_test_family(ops: Sequence[FiniteRankOperator]) -> list[CoefVector]:
    coords = sorted({i for a in ops for f, x in a.terms for i in (*f.support, *x.support)})
    return [CoefVector.unit(c) for c in coords]


def _estimate_tails(systems: Sequence[SplitSystem], ops: Sequence[FiniteRankOperator],
                    norms: Sequence[CertifiedReal], f: CoefVector, sp: AmbientSpace) -> list[Fraction]:
    """Upper bounds for ``R(l) = ||f - f o P_[1,l]||`` for ``l = 0..L`` via the three-term estimate."""
    f_norm = dual_norm(f, sp).hi
    out = [f_norm]
    residual = f
    for sys_k, a_k, n_k in zip(systems, ops, norms):
        a_term = dual_norm(residual, sp).hi
        adj = a_k.adjoint_apply(f)
        b_term = dual_norm(adj, sp).hi
        c_term = n_k.hi * f_norm * (1 + sys_k.auerbach.tau)
        for q in range(sys_k.m):
            for r in range(1, sys_k.d + 1):
                out.append(a_term + Fraction(q, sys_k.m) * b_term + Fraction(r, sys_k.m) * c_term)
        residual = residual - adj
    return out


def assemble_bap_frame(ops: Sequence[FiniteRankOperator], splits: Sequence[int] | str | None = None, *,
                       test_family: Sequence[CoefVector] | None = None,
                       tail_certificate: str = "min", seed: int = 0) -> AssembledFrame:
    """Concatenate the splits of ``A_1, A_2, ...`` into one finite frame.

    ``tail_certificate`` selects the dual-tail data: ``"estimate"`` uses only
    the three-term bound ``2 sup_{l >= N-1} R(l)``, ``"exact"`` enumerates the
    finite frame, ``"min"`` (default) takes the pointwise smaller of the two.
    """
    if not ops:
        raise PreconditionError("operator prefix is empty")
    if tail_certificate not in ("min", "exact", "estimate"):
        raise PreconditionError(f"unknown tail certificate mode {tail_certificate!r}")
    sp = ops[0].domain
    if any(a.domain is not sp or a.codomain is not sp for a in ops):
        raise PreconditionError("all operators must act on the same space")
    ranks = [a.rank() for a in ops]
    if any(d == 0 for d in ranks):
        raise PreconditionError("operators must be nonzero")
    if splits is None:
        splits = "m_k=k*d_k"
    if isinstance(splits, str):
        splits = splits_from_rule(splits, ranks)
    splits = list(splits)
    if len(splits) != len(ops) or any(m < 1 for m in splits):
        raise PreconditionError("need one positive split count per operator")
    _check_decay(ranks, splits)
    family = list(test_family) if test_family is not None else default_test_family(ops)
    for x in family:
        total = ZERO_VECTOR
        for a in ops:
            total = total + a.apply(x)
        if total != x:
            raise PreconditionError(f"sum of A_k x != x on test vector {x.to_json()}")

    systems = [split_operator(a, m, seed=seed) for a, m in zip(ops, splits)]
    pairs = [p for s in systems for p in s.pairs]
    ends, acc = [], 0
    for s in systems:
        acc += len(s.pairs)
        ends.append(acc)
    length = len(pairs)
    exact = ExplicitFrame(pairs, sp, dual_tail={"type": "enumerate"})
    norms = [operator_norm(a) for a in ops]
    rows: dict[str, list[str]] = {}
    for j in range(1, length + 1):
        values: list[Fraction] = []
        if tail_certificate != "exact":
            r_vals = _estimate_tails(systems, ops, norms, pairs[j - 1][1], sp)
            sup_from = r_vals[:]
            for l in range(length - 1, -1, -1):
                sup_from[l] = max(sup_from[l], sup_from[l + 1])
            values = [2 * sup_from[n - 1] for n in range(1, length + 1)]
        if tail_certificate != "estimate":
            enum = [t.hi for t in exact.exact_dual_tails(j)[:length]]
            values = enum if not values else [min(a, b) for a, b in zip(values, enum)]
        rows[str(j)] = [str(v) for v in values]
    frame = ExplicitFrame(pairs, sp, dual_tail={"type": "table", "rows": rows, "beyond": 0},
                          coef_tail={"type": "enumerate"}, name="assembled")
    return AssembledFrame(frame, systems, ends, splits, tail_certificate)
