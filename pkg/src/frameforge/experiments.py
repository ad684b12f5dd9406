"""Experiment drivers producing deterministic JSON reports.

Each ``exp_*`` function returns a plain dictionary with a top-level
``"passed"`` flag; failing checks carry a witness (vector or index tuple)
that replays through the corresponding library call.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Any, Mapping, Sequence

from .errors import FrameForgeError, PreconditionError
from .frames import (Example23, FrameProvider, analysis, frame_constant, frame_to_spec,
                     partial_reconstruction, synthesis)
from .norms import (domination_probe, ell1plus_prefix_test, k_subnorm, min_norm,
                    min_norm_closed_form_ex23, nk_norm, subnorm_sup, subsequence_norm)
from .pelczynski import assemble_bap_frame, load_operator_prefix
from .reals import CertifiedReal
from .schedule import NkSchedule, find_schedule, validate_schedule
from .spaces import ZERO_VECTOR, CoefVector, ambient_norm


def random_vector(rng: random.Random, lo: int, hi: int, max_terms: int | None = None) -> CoefVector:
    """Nonzero vector with support in ``[lo, hi]`` and small rational entries."""
    width = hi - lo + 1
    size = rng.randint(1, min(width, max_terms or width))
    idx = rng.sample(range(lo, hi + 1), size)
    vals = {}
    for i in idx:
        num = 0
        while num == 0:
            num = rng.randint(-9, 9)
        vals[i] = Fraction(num, rng.randint(1, 5))
    return CoefVector(vals)


def _schedule_for(frame: FrameProvider, k_max: int, sched: NkSchedule | None) -> tuple[NkSchedule, str]:
    if sched is not None:
        return sched, "given"
    if frame.has_dual_tail:
        return find_schedule(frame, k_max), "found"
    return NkSchedule.parse("k+1"), "default k+1 (frame has no certificates)"


def _constant(frame: FrameProvider, horizon: int) -> tuple[CertifiedReal, str]:
    fc = frame_constant(frame, horizon)
    if fc.upper is not None:
        return fc.upper, "certified upper bound"
    return fc.lower, f"lower bound over the box [1, {horizon}]"


# -- odd/even frame --------------------------------------------------------------

def exp_example23(frame: FrameProvider | None = None, *, seed: int = 0, samples: int = 500,
                  support: int = 20, prefix: int = 12, odd_blocks: int = 6,
                  sched: NkSchedule | None = None) -> dict[str, Any]:
    """Closed form, l1+ profile and nk growth of the odd blocks.

    Checks: (a) ``min_norm`` squared equals the closed form on seeded random
    vectors; (b) ``min_norm(z_1 + z_3 + ... + z_{2n-1}) = n``; (c)
    ``nk_norm(z_{2i-1}) = 4**(i-1)`` under the schedule; (d) reconstruction
    ``P_[1, n*] x = x`` on the same random vectors.
    """
    frame = frame or Example23()
    rng = random.Random(seed)
    sched, sched_src = _schedule_for(frame, 2 * odd_blocks, sched)
    checks: dict[str, Any] = {}

    vectors = [random_vector(rng, 1, support) for _ in range(samples)]
    bad = None
    for a in vectors:
        got = min_norm(frame, a).value
        want = min_norm_closed_form_ex23(a)
        if not (got.is_exact and got.squared == want):
            bad = {"vector": a.to_json(), "min_norm": got.to_json(), "closed_form_squared": str(want)}
            break
    checks["a_closed_form"] = {"passed": bad is None, "tested": samples, "counterexample": bad}

    blocks = [CoefVector.unit(2 * i - 1) for i in range(1, prefix + 1)]
    _, profile = ell1plus_prefix_test(lambda v: min_norm(frame, v), blocks, 1)
    mism = [n for n, v in enumerate(profile, start=1) if v != n]
    checks["b_l1plus_profile"] = {
        "passed": not mism, "profile": [str(v.value) if v.is_exact else float(v) for v in profile],
        "counterexample": None if not mism else
        {"vector": sum(blocks[:mism[0]], ZERO_VECTOR).to_json(), "n": mism[0]}}

    growth, bad = [], None
    for i in range(1, odd_blocks + 1):
        rep = nk_norm(frame, CoefVector.unit(2 * i - 1), sched)
        growth.append(rep.to_json())
        if bad is None and rep.value != 4 ** (i - 1):
            bad = {"vector": CoefVector.unit(2 * i - 1).to_json(), "expected": 4 ** (i - 1),
                   "report": rep.to_json()}
    checks["c_nk_growth"] = {"passed": bad is None, "reports": growth, "counterexample": bad}

    bad = None
    for x in vectors:
        n_star = frame.analysis_extent(x)
        if partial_reconstruction(frame, 1, max(n_star, 1), x) != x:
            bad = {"vector": x.to_json(), "n_star": n_star}
            break
    checks["d_reconstruction"] = {"passed": bad is None, "tested": samples, "counterexample": bad}

    return {"experiment": "example23", "seed": seed, "frame": frame_to_spec(frame),
            "schedule": {"source": sched_src, **sched.to_json()},
            "passed": all(c["passed"] for c in checks.values()), "checks": checks}


# -- incomparable subsequence norms ------------------------------------------------

def incomparable_family(frame: FrameProvider, sched: NkSchedule, count: int
                        ) -> tuple[list[int], list[CoefVector]]:
    """``k_d = 2**d`` and ``y_d = z_j`` with ``j`` the least odd index ``>= N_{k_d}``."""
    ks = [2 ** d for d in range(1, count + 1)]
    blocks = []
    for k in ks:
        j = sched[k]
        blocks.append(CoefVector.unit(j if j % 2 else j + 1))
    return ks, blocks


def _check_growth(frame: FrameProvider, sched: NkSchedule, ks: Sequence[int],
                  blocks: Sequence[CoefVector]) -> list[dict[str, Any]]:
    failures = []
    for d in range(1, len(blocks) + 1):
        y = blocks[d - 1]
        k_prev = ks[d - 2] if d > 1 else 0
        lo = sched[k_prev] if d > 1 else 1
        reasons = []
        if min_norm(frame, y).value != 1:
            reasons.append("not normalized in min_norm")
        if d > 1 and not k_subnorm(frame, y, ks[d - 1], sched).value >= 2 ** (2 * k_prev):
            reasons.append(f"||y_{d}||_{{k_{d}}} < 2^(2 k_{d - 1})")
        hi = sched[ks[d]] if d < len(ks) else None
        if y.min_index < lo or (hi is not None and y.max_index >= hi):
            reasons.append("support outside [N_{k_{d-1}}, N_{k_{d+1}})")
        if reasons:
            failures.append({"d": d, "reasons": reasons})
    return failures


def exp_incomparable(l_set: Sequence[int], m_set: Sequence[int], frame: FrameProvider | None = None,
                     *, sched: NkSchedule | None = None, seed: int = 0, tail_samples: int = 40,
                     tail_width: int = 12, horizon: int = 8) -> dict[str, Any]:
    """Non-domination witnesses for ``d in L \\ M`` and 1-domination on the tail.

    For ``d in L \\ M`` with ``d > 1`` the report certifies
    ``||y_d||_L / ||y_d||_M >= 2**k_{d-1} / C``.  When ``m'`` (least element of
    ``M`` with ``L`` intersected with ``[m', oo)`` inside ``M``) exists, it checks
    ``||z||_L <= ||z||_M`` exactly on vectors supported from ``N_{k_{m'}}``.
    """
    frame = frame or Example23()
    l_set, m_set = sorted(set(l_set)), sorted(set(m_set))
    if not l_set or not m_set or min(l_set + m_set) < 1:
        raise PreconditionError("index sets must be nonempty sets of positive integers")
    top = max(l_set + m_set)
    if top > 5:
        raise PreconditionError("desk scale: indices up to 5")
    sched, sched_src = _schedule_for(frame, 2 ** (top + 1), sched)
    ks, blocks = incomparable_family(frame, sched, top + 1)
    failures = _check_growth(frame, sched, ks, blocks)
    if failures:
        raise PreconditionError(f"block family misses the growth precondition at d = "
                                f"{[f['d'] for f in failures]}: {failures}")
    c_val, c_src = _constant(frame, horizon)
    kl = [ks[i - 1] for i in l_set]
    km = [ks[i - 1] for i in m_set]

    def norm_l(v: CoefVector):
        return subsequence_norm(frame, v, kl, sched)

    def norm_m(v: CoefVector):
        return subsequence_norm(frame, v, km, sched)

    forward = []
    for d in (d for d in l_set if d not in m_set and d > 1):
        y = blocks[d - 1]
        nl, nm, nmin = norm_l(y).value, norm_m(y).value, min_norm(frame, y).value
        k_prev = ks[d - 2]
        target = CertifiedReal.exact(2 ** k_prev) / c_val
        ratio = nl / nm
        forward.append({
            "d": d, "k_d_minus_1": k_prev, "norm_L": nl.to_json(), "norm_M": nm.to_json(),
            "ratio": ratio.to_json(), "target": target.to_json(),
            "chain_upper_ok": nm <= c_val.scale(2 ** k_prev) * nmin,
            "chain_growth_ok": nl >= 2 ** (2 * k_prev),
            "passed": nl * c_val >= nm.scale(2 ** k_prev),
            "witness": y.to_json()})

    m_prime = next((m for m in m_set if all(i in m_set for i in l_set if i >= m)), None)
    converse: dict[str, Any] = {"m_prime": m_prime}
    if m_prime is None:
        converse.update(passed=True, skipped="no m' in M covers the tail of L")
    else:
        start = sched[ks[m_prime - 1]]
        rng = random.Random(seed)
        family = [random_vector(rng, start, start + tail_width, 6) for _ in range(tail_samples)]
        family += [b for b in blocks if b.min_index >= start]
        bad = None
        for v in family:
            a, b = norm_l(v).value, norm_m(v).value
            if not a <= b:
                bad = {"vector": v.to_json(), "norm_L": a.to_json(), "norm_M": b.to_json()}
                break
        converse.update(start=start, tested=len(family), passed=bad is None, counterexample=bad)

    probe = domination_probe(norm_l, norm_m, blocks, [f"y_{d}" for d in range(1, len(blocks) + 1)])
    probe_rev = domination_probe(norm_m, norm_l, blocks, [f"y_{d}" for d in range(1, len(blocks) + 1)])
    return {
        "experiment": "incomparable",
        "reading": "support condition taken for y_{j+1}",
        "L": l_set, "M": m_set, "k": ks, "blocks": [b.to_json() for b in blocks],
        "schedule": {"source": sched_src, **sched.to_json()},
        "frame_constant": {"value": c_val.to_json(), "source": c_src},
        "forward": forward, "converse": converse,
        "probe_L_over_M": probe.to_json(), "probe_M_over_L": probe_rev.to_json(),
        "csv": probe.to_csv(),
        "passed": all(f["passed"] for f in forward) and converse["passed"],
    }


# -- dichotomy for normalized blocks ----------------------------------------------

def _block_ks(frame: FrameProvider, sched: NkSchedule, blocks: Sequence[CoefVector],
              ks: Sequence[int] | None) -> list[int]:
    if ks is not None:
        ks = list(ks)
        if len(ks) != len(blocks) + 1:
            raise PreconditionError("need one k per block plus a closing k")
        return ks
    out = []
    for y in blocks:
        ok = list(sched.ks_up_to(y.min_index))
        if not ok:
            raise PreconditionError(f"precondition (i) fails: no k with N_k <= min supp {y.min_index}")
        out.append(ok[-1])
    last = blocks[-1]
    sy = synthesis(frame, 1, last.max_index, last)
    out.append(max(out[-1] + 1, last.max_index, frame.analysis_extent(sy) + 1))
    return out


def _interval_norm(frame: FrameProvider, lo: int, hi: int, v: CoefVector) -> CertifiedReal:
    if hi < lo:
        return CertifiedReal.ZERO
    return ambient_norm(partial_reconstruction(frame, lo, hi, v), frame.space)


def _sup_tail(frame: FrameProvider, lo: int, v: CoefVector) -> tuple[CertifiedReal, tuple[int, int] | None]:
    """``sup_{lo <= m <= n} ||P_[m,n] v||`` (finite: coefficients vanish beyond ``n*``)."""
    coefs = analysis(frame, v).coefficients
    pts = [i for i, _ in coefs if i >= lo]
    best, arg = CertifiedReal.ZERO, None
    for s in range(len(pts)):
        acc = ZERO_VECTOR
        for t in range(s, len(pts)):
            acc = acc + frame.vector_at(pts[t]) * coefs[pts[t]]
            val = ambient_norm(acc, frame.space)
            if val > best:
                best, arg = val, (pts[s], pts[t])
    return best, arg


def exp_dichotomy(blocks: Sequence[CoefVector], frame: FrameProvider | None = None, *,
                  sched: NkSchedule | None = None, ks: Sequence[int] | None = None,
                  seed: int = 0, samples: int = 200) -> dict[str, Any]:
    """Classify normalized blocks as c0-like (case a) or synthesis-equivalent (case b)."""
    frame = frame or Example23()
    blocks = list(blocks)
    if not blocks or len(blocks) > 10:
        raise PreconditionError("need between 1 and 10 blocks")
    last = 0
    for y in blocks:
        if y.is_zero() or y.min_index <= last:
            raise PreconditionError("blocks must be nonzero with disjoint increasing supports")
        last = y.max_index
    sched, sched_src = _schedule_for(frame, last, sched)
    for p, y in enumerate(blocks, start=1):
        if nk_norm(frame, y, sched).value != 1:
            raise PreconditionError(f"block {p} is not normalized in nk_norm")
    kseq = _block_ks(frame, sched, blocks, ks)
    sy = [synthesis(frame, 1, y.max_index, y) for y in blocks]
    for p, y in enumerate(blocks, start=1):
        if not (sched[kseq[p - 1]] <= y.min_index and y.max_index <= kseq[p]):
            raise PreconditionError(f"precondition (i) fails at block {p}")
        tail, arg = _sup_tail(frame, kseq[p], sy[p - 1])
        if not tail <= Fraction(1, 2 ** kseq[p - 1]):
            raise PreconditionError(f"precondition (ii) fails at block {p}: interval {arg}")

    norms = [ambient_norm(v, frame.space) for v in sy]
    labels = []
    for p, n in enumerate(norms, start=1):
        labels.append("a" if n <= Fraction(1, 2 ** p) else "b")
    report: dict[str, Any] = {
        "experiment": "dichotomy", "seed": seed, "k": kseq,
        "schedule": {"source": sched_src, **sched.to_json()},
        "synthesis_norms": [n.to_json() for n in norms], "classification": labels}
    verdict = "a" if set(labels) == {"a"} else "b" if set(labels) == {"b"} else "mixed"
    report["verdict"] = verdict
    results = []
    a_idx = [p for p, lab in enumerate(labels) if lab == "a"]
    b_idx = [p for p, lab in enumerate(labels) if lab == "b"]
    if a_idx:
        results.append(_case_a(frame, sched, [blocks[p] for p in a_idx], seed, samples))
    if b_idx:
        results.append(_case_b(frame, [blocks[p] for p in b_idx], [sy[p] for p in b_idx],
                               [norms[p] for p in b_idx], [kseq[p] for p in b_idx] + [kseq[b_idx[-1] + 1]]))
    report["cases"] = results
    report["passed"] = all(r["passed"] for r in results)
    return report


def _case_a(frame, sched, blocks, seed, samples) -> dict[str, Any]:
    rng = random.Random(seed)
    bad, worst_min, worst_sub = None, Fraction(0), Fraction(0)
    for _ in range(samples):
        coefs = [Fraction(rng.randint(-20, 20), rng.randint(1, 6)) for _ in blocks]
        sup = max(abs(c) for c in coefs)
        if sup == 0:
            continue
        v = sum((y * c for y, c in zip(blocks, coefs)), ZERO_VECTOR)
        mn = min_norm(frame, v).value
        sub = subnorm_sup(frame, v, sched)
        worst_min = max(worst_min, mn.hi / sup)
        worst_sub = max(worst_sub, sub.value.hi / sup)
        if not (mn <= 3 * sup and sub.value <= 2 * sup):
            bad = {"coefficients": [str(c) for c in coefs], "vector": v.to_json(),
                   "min_norm": mn.to_json(), "subnorm_sup": sub.to_json()}
            break
    return {"case": "a", "blocks": len(blocks), "tested": samples, "passed": bad is None,
            "worst_min_ratio": float(worst_min), "worst_subnorm_ratio": float(worst_sub),
            "counterexample": bad}


def _case_b(frame, blocks, sy, norms, kseq) -> dict[str, Any]:
    c = min(norms, key=lambda v: v.sq_lo)
    c_ok = c > Fraction(8, 2 ** kseq[0]) and all(n <= 1 for n in norms)
    iv, v_checks, bad = [], [], None
    for i, s in enumerate(sy):
        own = _interval_norm(frame, kseq[i], kseq[i + 1] - 1, s)
        ok = own + Fraction(2, 2 ** kseq[i]) >= norms[i]
        iv.append({"block": i + 1, "value": own.to_json(), "passed": ok})
        if not ok and bad is None:
            bad = {"check": "iv", "block": i + 1, "interval": [kseq[i], kseq[i + 1] - 1]}
        for j in range(len(sy)):
            if j == i:
                continue
            other = _interval_norm(frame, kseq[j], kseq[j + 1] - 1, s)
            ok = other <= Fraction(1, 2 ** kseq[i])
            v_checks.append({"block": i + 1, "window": j + 1, "value": other.to_json(), "passed": ok})
            if not ok and bad is None:
                bad = {"check": "v", "block": i + 1, "window": j + 1,
                       "interval": [kseq[j], kseq[j + 1] - 1]}
    passed = c_ok and bad is None
    return {"case": "b", "blocks": len(blocks), "c": c.to_json(), "c_condition": c_ok,
            "iv": iv, "v": v_checks, "passed": passed, "counterexample": bad}


# -- end-to-end pipeline ---------------------------------------------------------------

def exp_pipeline(data: Mapping[str, Any], *, k_max: int | None = None, horizon: int | None = None,
                 seed: int = 0, samples: int = 20) -> dict[str, Any]:
    """Assemble, search a schedule, validate it, and check reconstruction and ``||T|| <= C``."""
    report: dict[str, Any] = {"experiment": "pipeline", "seed": seed, "stages": {}}
    stages = report["stages"]

    def fail(stage: str, err: Exception) -> dict[str, Any]:
        stages[stage] = {"passed": False, "error": f"{type(err).__name__}: {err}"}
        report.update(passed=False, failed_stage=stage)
        return report

    try:
        ops, opts = load_operator_prefix(data)
        splits = opts.get("m", opts.get("rule", "m_k=k*d_k"))
        fam = opts.get("test_family")
        family = None if fam is None else [CoefVector.from_json(v) for v in fam]
        built = assemble_bap_frame(ops, splits, test_family=family,
                                   tail_certificate=opts.get("tail_certificate", "min"), seed=seed)
    except (FrameForgeError, ValueError) as err:
        return fail("assemble", err)
    frame = built.frame
    stages["assemble"] = {"passed": True, "length": frame.length, "splits": built.splits,
                          "block_ends": built.block_ends, "frame": frame.to_spec()}

    k_max = k_max or int(data.get("k_max", len(ops)))
    try:
        sched = find_schedule(frame, k_max)
    except FrameForgeError as err:
        return fail("nk_find", err)
    stages["nk_find"] = {"passed": True, **sched.to_json()}

    horizon = horizon or frame.length
    try:
        val = validate_schedule(frame, sched, k_max, horizon)
    except FrameForgeError as err:
        return fail("nk_validate", err)
    stages["nk_validate"] = val.to_json()

    family = family or sorted({CoefVector.unit(i) for a in ops for f, _ in a.terms for i in f.support},
                              key=lambda v: v.min_index)
    recon, bad = [], None
    for x in family:
        partial = ZERO_VECTOR
        rows = []
        for k, (a, end) in enumerate(zip(ops, built.block_ends), start=1):
            partial = partial + a.apply(x)
            got = ambient_norm(x - partial_reconstruction(frame, 1, end, x), frame.space)
            want = ambient_norm(x - partial, frame.space)
            rows.append(got == want)
            if got != want and bad is None:
                bad = {"vector": x.to_json(), "block": k, "n": end}
        final = x - partial_reconstruction(frame, 1, frame.length, x)
        recon.append({"vector": x.to_json(), "boundaries_match": all(rows),
                      "final_residual_zero": final.is_zero()})
        if not final.is_zero() and bad is None:
            bad = {"vector": x.to_json(), "n": frame.length, "residual": final.to_json()}
    stages["reconstruction"] = {"passed": bad is None, "vectors": recon, "counterexample": bad}

    c_val, c_src = _constant(frame, frame.length)
    coords = sorted({i for v in family for i in v.support})
    rng = random.Random(seed)
    tests = list(family) + [CoefVector({i: Fraction(rng.randint(-9, 9), rng.randint(1, 4))
                                        for i in coords}) for _ in range(samples)]
    bad = None
    worst = 0.0
    for x in tests:
        if x.is_zero():
            continue
        coef = analysis(frame, x).coefficients
        val_t = nk_norm(frame, coef, sched).value
        bound = c_val * ambient_norm(x, frame.space)
        worst = max(worst, float(val_t) / float(ambient_norm(x, frame.space)))
        if not val_t <= bound:
            bad = {"vector": x.to_json(), "nk_norm": val_t.to_json(), "bound": bound.to_json()}
            break
    stages["analysis_bound"] = {"passed": bad is None, "C": c_val.to_json(), "C_source": c_src,
                                "worst_ratio": worst, "tested": len(tests), "counterexample": bad}
    report["schedule"] = sched.to_json()
    report["passed"] = all(s.get("passed", False) for s in stages.values())
    return report
