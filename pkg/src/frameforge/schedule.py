"""Schedules ``N_1 < N_2 < ...`` and their search / validation.

A schedule is admissible for a frame when for every ``k``

    ||P_[m0,n0] P_[m,n]|| <= 2**-k   for all m0 <= n0 <= k and N_k <= m <= n.

:func:`find_schedule` produces the least admissible ``N_k`` allowed by the
dual-tail certificates; :func:`validate_schedule` checks a schedule
independently by computing the composition norms on a coordinate box.
"""

from __future__ import annotations

import ast
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterator, Sequence

from .errors import NoCertificateError, PreconditionError, WeakCertificateError
from .frames import FrameProvider
from .reals import CertifiedReal, as_scalar
from .spaces import ZERO_VECTOR, CoefVector, FiniteRankOperator, ambient_norm, operator_norm, pair

_BINOPS: dict[type, Callable[[int, int], int]] = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.FloorDiv: operator.floordiv, ast.Pow: operator.pow,
}


def eval_int_expr(expr: str, **names: int) -> int:
    """Evaluate a small integer expression such as ``"2*k+1"`` without ``eval``."""
    def walk(node: ast.AST) -> int:
        if isinstance(node, ast.Expression):
            return walk(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, int):
            return node.value
        if isinstance(node, ast.Name):
            if node.id not in names:
                raise ValueError(f"unknown name {node.id!r} in {expr!r}")
            return names[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](walk(node.left), walk(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -walk(node.operand)
        raise ValueError(f"unsupported expression {expr!r}")
    return walk(ast.parse(expr.strip(), mode="eval"))


@dataclass(frozen=True)
class ScheduleCertificate:
    """Why ``N_k`` works: ``k * ||x_j|| * dual_tail(j, N_k) < eps_k`` for each ``j <= k``."""

    k: int
    n_k: int
    epsilon: Fraction
    tails: tuple[tuple[int, CertifiedReal, CertifiedReal], ...]  # (j, dual_tail, ||x_j||)

    def threshold_sq(self, j_norm: CertifiedReal) -> Fraction:
        """Square of ``eps_k / (k ||x_j||)`` (upper end, since the norm may be irrational)."""
        return self.epsilon ** 2 / (self.k ** 2 * j_norm.sq_lo)

    def holds(self) -> bool:
        return all(self.k ** 2 * xn.sq_hi * t.sq_hi < self.epsilon ** 2 for _, t, xn in self.tails)

    def to_json(self) -> dict[str, Any]:
        return {
            "k": self.k, "N_k": self.n_k, "epsilon": str(self.epsilon),
            "tails": [{"j": j, "dual_tail": t.to_json(), "norm_x_j": xn.to_json(),
                       "threshold": float(self.epsilon) / (self.k * float(xn)) if not xn.is_zero() else None}
                      for j, t, xn in self.tails],
        }


@dataclass(frozen=True)
class NkSchedule:
    """Strictly increasing ``N_k`` (``k >= 1``): explicit prefix plus an optional rule in ``k``."""

    values: tuple[int, ...] = ()
    rule: str | None = None
    certificates: tuple[ScheduleCertificate, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals and self.rule is None:
            raise PreconditionError("a schedule needs values or a rule")
        if any(v < 1 for v in vals):
            raise PreconditionError("schedule entries must be positive")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise PreconditionError(f"schedule is not strictly increasing: {vals}")

    @classmethod
    def parse(cls, text: str) -> NkSchedule:
        """``"k+1"``, ``"2,4,5,7"`` or ``"2,4,5;k+4"`` (prefix, then rule)."""
        text = text.strip()
        prefix, _, rule = text.partition(";")
        if not rule and "k" in prefix:
            return cls((), prefix.strip())
        vals = tuple(int(v) for v in prefix.split(",") if v.strip())
        return cls(vals, rule.strip() or None)

    def __getitem__(self, k: int) -> int:
        if k < 1:
            raise IndexError("schedule index starts at 1")
        if k <= len(self.values):
            return self.values[k - 1]
        if self.rule is None:
            raise IndexError(f"schedule has no entry N_{k} (only {len(self.values)} listed, no rule)")
        v = eval_int_expr(self.rule, k=k)
        if k == 1:
            prev = 0
        elif k - 1 <= len(self.values):
            prev = self.values[k - 2]
        else:
            prev = eval_int_expr(self.rule, k=k - 1)
        if v <= prev or v < 1:
            raise PreconditionError(f"rule {self.rule!r} is not strictly increasing at k={k}")
        return v

    def ks_up_to(self, limit: int) -> Iterator[int]:
        """All ``k`` with ``N_k <= limit`` (finite because the schedule increases)."""
        k = 1
        while True:
            if k > len(self.values) and self.rule is None:
                # later entries exceed the last listed one
                if self.values[-1] >= limit:
                    return
                raise IndexError(f"schedule exhausted at k={k} but N_k <= {limit} may still occur")
            if self[k] > limit:
                return
            yield k
            k += 1

    def prefix(self, k_max: int) -> tuple[int, ...]:
        return tuple(self[k] for k in range(1, k_max + 1))

    def shifted(self, c: int) -> NkSchedule:
        """Coordinatewise ``N_k + c``."""
        rule = None if self.rule is None else f"({self.rule})+{c}"
        return NkSchedule(tuple(v + c for v in self.values), rule)

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"values": list(self.values), "rule": self.rule}
        if self.certificates:
            out["certificates"] = [c.to_json() for c in self.certificates]
        return out

    @classmethod
    def from_json(cls, data: dict[str, Any] | str) -> NkSchedule:
        if isinstance(data, str):
            return cls.parse(data)
        return cls(tuple(data.get("values", ())), data.get("rule"))

    def __str__(self) -> str:
        parts = ",".join(map(str, self.values))
        if self.rule:
            return f"{parts};{self.rule}" if parts else self.rule
        return parts


def _default_epsilon(k: int) -> Fraction:
    return Fraction(1, 2 ** k)


def _threshold_met(k: int, eps: Fraction, norms: Sequence[CertifiedReal],
                   tails: Sequence[CertifiedReal]) -> bool:
    bound = eps * eps
    return all(k * k * xn.sq_hi * t.sq_hi < bound for xn, t in zip(norms, tails))


def find_schedule(frame: FrameProvider, k_max: int,
                  epsilon: Callable[[int], Any] | None = None) -> NkSchedule:
    """Least ``N_k > max(k, N_{k-1})`` with ``k ||x_j|| dual_tail(j, N_k) < eps_k`` for ``j <= k``.

    Raises :class:`WeakCertificateError` when no such ``N_k`` exists up to the
    frame's ``search_limit``.  Finite frames get the vacuous extension rule
    ``N_k = k + length`` beyond ``k_max``.
    """
    if k_max < 1:
        raise PreconditionError("k_max must be >= 1")
    if not frame.has_dual_tail:
        raise NoCertificateError()
    eps_of = epsilon or _default_epsilon
    limit = frame.search_limit
    values: list[int] = []
    certs: list[ScheduleCertificate] = []
    norms: list[CertifiedReal] = []
    for k in range(1, k_max + 1):
        eps = as_scalar(eps_of(k))
        if eps <= 0:
            raise PreconditionError(f"epsilon_{k} must be positive")
        if frame.length is None or k <= frame.length:
            norms.append(ambient_norm(frame.vector_at(k), frame.space))
        js = range(1, len(norms) + 1)

        def ok(n: int) -> bool:
            return _threshold_met(k, eps, norms, [frame.dual_tail(j, n) for j in js])

        start = max(k, values[-1] if values else 0) + 1
        if frame.length is not None:
            limit = max(frame.search_limit, start)  # past the last index every tail is empty
        if start > limit:
            raise WeakCertificateError(
                f"tail certificate too weak: N_{k} would exceed the search limit {limit}", k=k)
        if ok(start):
            n_k = start
        else:
            # certificates are nonincreasing in N, so gallop then bisect
            bad, step = start, 1
            while True:
                cand = min(bad + step, limit)
                if ok(cand):
                    good = cand
                    break
                if cand == limit:
                    raise WeakCertificateError(
                        f"tail certificate too weak: no N_{k} <= {limit} meets eps_{k}={eps}", k=k)
                bad, step = cand, step * 2
            while good - bad > 1:
                mid = (bad + good) // 2
                if ok(mid):
                    good = mid
                else:
                    bad = mid
            n_k = good
        values.append(n_k)
        certs.append(ScheduleCertificate(
            k, n_k, eps, tuple((j, frame.dual_tail(j, n_k), norms[j - 1]) for j in js)))
    rule = None if frame.length is None else f"k+{frame.length}"
    return NkSchedule(tuple(values), rule, tuple(certs))


@dataclass
class KValidation:
    k: int
    n_k: int
    finite_ok: bool
    worst: CertifiedReal
    worst_tuple: tuple[int, int, int, int] | None  # (m0, n0, m, n)
    tail_status: str  # pass | fail | covered | uncertified
    tail_bound: CertifiedReal | None

    def to_json(self) -> dict[str, Any]:
        return {"k": self.k, "N_k": self.n_k, "finite_ok": self.finite_ok,
                "worst": self.worst.to_json(), "worst_tuple": self.worst_tuple,
                "tail_status": self.tail_status,
                "tail_bound": None if self.tail_bound is None else self.tail_bound.to_json()}


@dataclass
class ValidationReport:
    horizon: int
    per_k: list[KValidation]
    slack: float

    @property
    def passed(self) -> bool:
        return all(r.finite_ok and r.tail_status != "fail" for r in self.per_k)

    @property
    def certified(self) -> bool:
        return all(r.finite_ok and r.tail_status in ("pass", "covered") for r in self.per_k)

    @property
    def worst(self) -> KValidation:
        return max(self.per_k, key=lambda r: r.worst.sq_lo * 4 ** r.k)

    @property
    def worst_value(self) -> CertifiedReal:
        """Largest composition norm seen over all ``k``."""
        return max((r.worst for r in self.per_k), key=lambda v: v.sq_lo)

    @property
    def first_failure(self) -> KValidation | None:
        return next((r for r in self.per_k if not r.finite_ok or r.tail_status == "fail"), None)

    def to_json(self) -> dict[str, Any]:
        fail = self.first_failure
        return {"passed": self.passed, "certified": self.certified, "horizon": self.horizon,
                "slack": self.slack, "worst_value": self.worst_value.to_json(),
                "first_failure": None if fail is None else fail.to_json(),
                "per_k": [r.to_json() for r in self.per_k]}


def composition_operator(frame: FrameProvider, m0: int, n0: int, m: int, n: int,
                         box: int) -> FiniteRankOperator:
    """``P_[m0,n0] o P_[m,n]`` with the inner functionals restricted to ``[1, box]``."""
    terms = []
    for j in range(m0, n0 + 1):
        fj = frame.functional_at(j)
        g = ZERO_VECTOR
        for i in range(m, n + 1):
            c = pair(fj, frame.vector_at(i))
            if c != 0:
                g = g + frame.functional_at(i).restrict(1, box) * c
        terms.append((g, frame.vector_at(j)))
    return FiniteRankOperator(tuple(terms), frame.space)


def validate_schedule(frame: FrameProvider, sched: NkSchedule, k_max: int, horizon: int,
                      slack: float = 1e-9) -> ValidationReport:
    """Check ``||P_[m0,n0] P_[m,n]|| <= 2**-k`` exhaustively for ``N_k <= m <= n <= horizon``.

    The part ``n > horizon`` is covered by the dual-tail certificate
    ``sum_{j<=k} ||x_j|| dual_tail(j, N_k) <= 2**-k`` when available.
    """
    n_kmax = sched[k_max]
    if horizon < n_kmax:
        raise PreconditionError(f"horizon {horizon} < N_{k_max} = {n_kmax}")
    top = horizon if frame.length is None else min(horizon, frame.length)
    xs = [frame.vector_at(i) for i in range(1, top + 1)]
    fs_box = [frame.functional_at(i).restrict(1, horizon) for i in range(1, top + 1)]
    kk = min(k_max, top)
    coef = [[pair(frame.functional_at(j), x) for x in xs] for j in range(1, kk + 1)]
    finite_covered = frame.length is not None and horizon >= frame.length
    slack_q = Fraction(slack)
    out: list[KValidation] = []
    for k in range(1, k_max + 1):
        n_k = sched[k]
        bound = Fraction(1, 2 ** k) + slack_q
        worst, worst_tuple, ok = CertifiedReal.ZERO, None, True
        jmax = min(k, kk)
        for m in range(n_k, top + 1):
            g: list[CoefVector] = [ZERO_VECTOR] * jmax
            for n in range(m, top + 1):
                changed = False
                for j in range(jmax):
                    c = coef[j][n - 1]
                    if c != 0 and not fs_box[n - 1].is_zero():
                        g[j] = g[j] + fs_box[n - 1] * c
                        changed = True
                if not changed and n > m:
                    continue
                live = [j for j in range(jmax) if not g[j].is_zero()]
                for a, j0 in enumerate(live):
                    terms: list[tuple[CoefVector, CoefVector]] = []
                    for j1 in live[a:]:
                        terms.append((g[j1], xs[j1]))
                        val = operator_norm(FiniteRankOperator(tuple(terms), frame.space))
                        if val.sq_lo > worst.sq_lo:
                            worst, worst_tuple = val, (j0 + 1, j1 + 1, m, n)
                        if not val.sq_hi <= bound * bound:
                            ok = False
        if finite_covered:
            status, tail_bound = "covered", None
        elif frame.has_dual_tail:
            tail_bound = CertifiedReal.ZERO
            for j in range(1, k + 1):
                t = frame.dual_tail(j, n_k)
                if not t.is_zero():
                    tail_bound = tail_bound + t * ambient_norm(frame.vector_at(j), frame.space)
            status = "pass" if tail_bound <= Fraction(1, 2 ** k) else "fail"
        else:
            status, tail_bound = "uncertified", None
        out.append(KValidation(k, n_k, ok, worst, worst_tuple, status, tail_bound))
    return ValidationReport(horizon, out, slack)
