"""Associated norms on finitely supported coefficient vectors.

For ``a = sum a_i z_i`` and a frame ``(x_i, f_i)``:

* ``min_norm(a) = sup_{m<=n} ||sum_{i=m}^n a_i x_i||``
* ``k_subnorm(a, k) = sup 2**k ||P_[m0,n0] S_[m,n] a||`` over
  ``m0 <= n0 <= k`` and ``N_k <= m <= n``
* ``nk_norm(a) = max(min_norm(a), sup_k k_subnorm(a, k))``
* ``subsequence_norm`` restricts the second part to listed ``k``.

All suprema are finite maxima: only intervals whose end points lie in the
support of ``a`` (resp. of the coefficient vector ``(f_j(S a))_j``) can
attain them, so the enumeration is exhaustive and exact.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

from .errors import PreconditionError
from .frames import FrameProvider
from .reals import CertifiedReal
from .schedule import NkSchedule
from .spaces import ZERO_VECTOR, CoefVector, ambient_norm, pair


@dataclass(frozen=True)
class NormReport:
    value: CertifiedReal
    mode: str  # min | k-subnorm | nk | subsequence
    attaining: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict[str, Any]:
        return {"mode": self.mode, "value": self.value.to_json(), "attaining": self.attaining}


def _vector_at(frame: FrameProvider, i: int) -> CoefVector:
    if frame.length is not None and i > frame.length:
        raise PreconditionError(f"coefficient index {i} beyond frame length {frame.length}")
    return frame.vector_at(i)


def _best_interval(points: Sequence[tuple[int, Any, CoefVector]], frame: FrameProvider
                   ) -> tuple[CertifiedReal, tuple[int, int] | None]:
    """Max over ``p <= q`` of ``||sum_{t=p}^q c_t v_t||`` for ``points = [(idx, c, v)]``."""
    best, arg = CertifiedReal.ZERO, None
    for s in range(len(points)):
        acc = ZERO_VECTOR
        for t in range(s, len(points)):
            _, c, v = points[t]
            acc = acc + v * c
            val = ambient_norm(acc, frame.space)
            if val > best:
                best, arg = val, (points[s][0], points[t][0])
    return best, arg


def min_norm(frame: FrameProvider, a: CoefVector) -> NormReport:
    pts = [(i, v, _vector_at(frame, i)) for i, v in a]
    val, arg = _best_interval(pts, frame)
    return NormReport(val, "min", {"interval": list(arg) if arg else None})


def min_norm_closed_form_ex23(a: CoefVector):
    """Squared closed form for the odd/even frame on l2.

    ``sup_I |sum_{i in I odd} a_i|**2 + sum_{i in I even} a_i**2`` over intervals ``I``.
    """
    idx = a.support
    best = 0
    for s in range(len(idx)):
        odd = 0
        even = 0
        for t in range(s, len(idx)):
            i = idx[t]
            if i % 2:
                odd += a[i]
            else:
                even += a[i] ** 2
            best = max(best, odd * odd + even)
    return best


class _SubnormTable:
    """Precomputed ``f_j(x_i)`` for ``j <= k_top`` and ``i`` in the support of ``a``."""

    def __init__(self, frame: FrameProvider, a: CoefVector, k_top: int):
        self.frame = frame
        self.a = a
        top = k_top if frame.length is None else min(k_top, frame.length)
        self.xs = {j: frame.vector_at(j) for j in range(1, top + 1)}
        fs = {j: frame.functional_at(j) for j in self.xs}
        self.rows: dict[int, list[tuple[int, Any]]] = {}
        for i, v in a:
            xi = _vector_at(frame, i)
            self.rows[i] = [(j, v * c) for j, f in fs.items() if (c := pair(f, xi)) != 0]

    def subnorm(self, k: int, n_k: int) -> tuple[CertifiedReal, tuple[int, int, int, int] | None]:
        idx = [i for i in self.a.support if i >= n_k]
        best, arg = CertifiedReal.ZERO, None
        for s in range(len(idx)):
            coef: dict[int, Any] = {}
            for t in range(s, len(idx)):
                changed = False
                for j, c in self.rows[idx[t]]:
                    if j <= k:
                        coef[j] = coef.get(j, 0) + c
                        changed = True
                if not changed and t > s:
                    continue
                pts = [(j, c, self.xs[j]) for j, c in sorted(coef.items()) if c != 0]
                val, inner = _best_interval(pts, self.frame)
                if inner is not None and val > best:
                    best, arg = val, (inner[0], inner[1], idx[s], idx[t])
        return best.scale(2 ** k), arg


def _k_report(k: int, val: CertifiedReal, arg) -> NormReport:
    att = {"k": k}
    if arg is not None:
        att.update(zip(("m0", "n0", "m", "n"), arg))
    return NormReport(val, "k-subnorm", att)


def k_subnorm(frame: FrameProvider, a: CoefVector, k: int, sched: NkSchedule) -> NormReport:
    val, arg = _SubnormTable(frame, a, k).subnorm(k, sched[k])
    return _k_report(k, val, arg)


def _combined(frame: FrameProvider, a: CoefVector, ks: Iterable[int], sched: NkSchedule,
              mode: str) -> NormReport:
    top = a.max_index
    ks = [k for k in ks if sched[k] <= top]
    best = min_norm(frame, a)
    out = NormReport(best.value, mode, {"branch": "min", **best.attaining})
    if ks:
        table = _SubnormTable(frame, a, max(ks))
        for k in ks:
            val, arg = table.subnorm(k, sched[k])
            if val > out.value:
                out = NormReport(val, mode, {"branch": "k", **_k_report(k, val, arg).attaining})
    return out


def subnorm_sup(frame: FrameProvider, a: CoefVector, sched: NkSchedule,
                ks: Iterable[int] | None = None) -> NormReport:
    """Second part alone: ``sup_k k_subnorm(a, k)`` over ``ks`` (default all admissible ``k``)."""
    top = a.max_index
    ks = [k for k in (sched.ks_up_to(top) if ks is None else ks) if sched[k] <= top]
    out = NormReport(CertifiedReal.ZERO, "k-subnorm", {})
    if ks:
        table = _SubnormTable(frame, a, max(ks))
        for k in ks:
            val, arg = table.subnorm(k, sched[k])
            if val > out.value or not out.attaining:
                out = _k_report(k, val, arg)
    return out


def nk_norm(frame: FrameProvider, a: CoefVector, sched: NkSchedule) -> NormReport:
    return _combined(frame, a, sched.ks_up_to(a.max_index), sched, "nk")


def subsequence_norm(frame: FrameProvider, a: CoefVector, ks: Sequence[int] | None,
                     sched: NkSchedule) -> NormReport:
    """``ks=None`` means every ``k`` (the plain ``nk_norm``)."""
    if ks is None:
        return _combined(frame, a, sched.ks_up_to(a.max_index), sched, "subsequence")
    ks = list(ks)
    if any(b <= a_ for a_, b in zip(ks, ks[1:])) or any(k < 1 for k in ks):
        raise PreconditionError(f"k-index list must be strictly increasing and positive: {ks}")
    return _combined(frame, a, ks, sched, "subsequence")


def evaluate_tuple(frame: FrameProvider, a: CoefVector, report: NormReport) -> CertifiedReal:
    """Recompute a report's value from its attaining data alone."""
    att = report.attaining
    if att.get("interval") is not None:
        m, n = att["interval"]
        return ambient_norm(_synth(frame, a, m, n), frame.space)
    if "m0" in att:
        y = _synth(frame, a, att["m"], att["n"])
        z = ZERO_VECTOR
        for j in range(att["m0"], att["n0"] + 1):
            z = z + frame.vector_at(j) * pair(frame.functional_at(j), y)
        return ambient_norm(z, frame.space).scale(2 ** att["k"])
    return CertifiedReal.ZERO


def _synth(frame: FrameProvider, a: CoefVector, m: int, n: int) -> CoefVector:
    out = ZERO_VECTOR
    for i, v in a:
        if m <= i <= n:
            out = out + _vector_at(frame, i) * v
    return out


# -- comparisons -------------------------------------------------------------------

NormFn = Callable[[CoefVector], "NormReport | CertifiedReal"]


def _value(r: NormReport | CertifiedReal) -> CertifiedReal:
    return r.value if isinstance(r, NormReport) else r


@dataclass
class DominationWitness:
    """One-sided evidence about ``norm_A <= K norm_B`` on a finite family."""

    ratios: list[CertifiedReal]
    values_a: list[CertifiedReal]
    values_b: list[CertifiedReal]
    labels: list[str]
    label: str = "witness"

    @property
    def max_ratio(self) -> CertifiedReal:
        return max(self.ratios, key=lambda r: r.sq_lo)

    @property
    def argmax(self) -> int:
        top = self.max_ratio
        return next(i for i, r in enumerate(self.ratios) if r is top)

    @property
    def monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.ratios, self.ratios[1:]))

    @property
    def strictly_growing(self) -> bool:
        return all(a < b for a, b in zip(self.ratios, self.ratios[1:]))

    def csv_rows(self) -> list[tuple[str, float, float, float]]:
        return [(lab, float(a), float(b), float(r))
                for lab, a, b, r in zip(self.labels, self.values_a, self.values_b, self.ratios)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["vector_id", "norm_a", "norm_b", "ratio"])
        w.writerows((lab, repr(a), repr(b), repr(r)) for lab, a, b, r in self.csv_rows())
        return buf.getvalue()

    def to_json(self) -> dict[str, Any]:
        return {"label": self.label, "max_ratio": self.max_ratio.to_json(),
                "argmax": self.labels[self.argmax], "monotone": self.monotone,
                "strictly_growing": self.strictly_growing,
                "ratios": [r.to_json() for r in self.ratios]}


def domination_probe(norm_a: NormFn, norm_b: NormFn, family: Sequence[CoefVector],
                     labels: Sequence[str] | None = None) -> DominationWitness:
    if not family:
        raise PreconditionError("family must be nonempty")
    labels = list(labels) if labels is not None else [str(i + 1) for i in range(len(family))]
    ratios, va, vb = [], [], []
    for lab, a in zip(labels, family):
        if a.is_zero():
            raise PreconditionError(f"family member {lab} is the zero vector")
        x, y = _value(norm_a(a)), _value(norm_b(a))
        if y.is_zero():
            raise ArithmeticError(f"norm_B vanishes on nonzero vector {lab}: broken norm")
        va.append(x)
        vb.append(y)
        ratios.append(x / y)
    return DominationWitness(ratios, va, vb, labels)


def ell1plus_prefix_test(norm: NormFn, blocks: Sequence[CoefVector], alpha
                         ) -> tuple[bool, list[CertifiedReal]]:
    """Check ``||y_1 + ... + y_n|| >= alpha * n`` for every prefix; return the profile too."""
    last = 0
    for b in blocks:
        if b.is_zero():
            raise PreconditionError("blocks must be nonzero")
        if b.min_index <= last:
            raise PreconditionError("blocks must have disjoint, increasing supports")
        last = b.max_index
    profile: list[CertifiedReal] = []
    ok = True
    acc = ZERO_VECTOR
    for n, b in enumerate(blocks, start=1):
        acc = acc + b
        val = _value(norm(acc))
        profile.append(val)
        ok = ok and val >= alpha * n
    return ok, profile
