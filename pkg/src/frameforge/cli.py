"""Command line interface.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on bad input
or a violated precondition.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from .errors import FrameForgeError
from .experiments import exp_dichotomy, exp_example23, exp_incomparable, exp_pipeline
from .frames import CanonicalBasis, Example23, FrameProvider, analysis, frame_constant, load_frame
from .norms import domination_probe, k_subnorm, min_norm, nk_norm, subsequence_norm
from .pelczynski import (SplitSystem, assemble_bap_frame, load_operator_prefix, operator_from_json,
                         split_operator, verify_pel)
from .schedule import NkSchedule, find_schedule, validate_schedule
from .spaces import CoefVector

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _load_json(text: str) -> Any:
    """Inline JSON, or a path to a JSON file."""
    path = Path(text)
    if path.exists():
        return json.loads(path.read_text())
    return json.loads(text)


def _frame(spec: str | None) -> FrameProvider:
    if spec is None or spec.lower() == "example23":
        return Example23()
    if spec.lower() in ("canonical", "canonical-l2"):
        return CanonicalBasis()
    return load_frame(_load_json(spec))


def _schedule(text: str | None, frame: FrameProvider, k_max: int) -> NkSchedule:
    if text is None or text == "find":
        return find_schedule(frame, k_max)
    path = Path(text)
    if path.exists():
        data = json.loads(path.read_text())
        return NkSchedule.from_json(data.get("schedule", data) if isinstance(data, dict) else data)
    return NkSchedule.parse(text)


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(" ", "").split(",") if t]


def _vectors(text: str) -> list[CoefVector]:
    data = _load_json(text)
    if data and isinstance(data[0], list) and data[0] and isinstance(data[0][0], list):
        return [CoefVector.from_json(v) for v in data]
    return [CoefVector.from_json(data)]


def _norm_fn(frame: FrameProvider, sched: NkSchedule | None, mode: str) -> Callable:
    if mode == "min":
        return lambda a: min_norm(frame, a)
    if sched is None:
        raise FrameForgeError(f"mode {mode!r} needs a schedule")
    if mode == "nk":
        return lambda a: nk_norm(frame, a, sched)
    if mode.startswith("k="):
        k = int(mode[2:])
        return lambda a: k_subnorm(frame, a, k, sched)
    if mode.startswith("subseq="):
        ks = _ints(mode[7:])
        return lambda a: subsequence_norm(frame, a, ks, sched)
    raise FrameForgeError(f"unknown norm mode {mode!r}")


def _emit(obj: Any, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=str)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _side_csv(csv_text: str, out: str | None, csv_path: str | None) -> None:
    path = csv_path or (str(Path(out).with_suffix(".csv")) if out else None)
    if path:
        Path(path).write_text(csv_text)


# -- verbs --------------------------------------------------------------------------------

def cmd_frame_info(args) -> int:
    frame = _frame(args.spec)
    info = frame.describe()
    fc = frame_constant(frame, args.horizon)
    info["frame_constant"] = {"lower": fc.lower.to_json(), "argmax": list(fc.argmax),
                              "upper": None if fc.upper is None else fc.upper.to_json(),
                              "horizon": args.horizon}
    if args.vec:
        info["analysis"] = []
        for x in _vectors(args.vec):
            res = analysis(frame, x)
            info["analysis"].append({"x": x.to_json(), "coefficients": res.coefficients.to_json(),
                                     "n_star": res.n_star})
    _emit(info, args.out)
    return EXIT_OK


def cmd_norm_eval(args) -> int:
    frame = _frame(args.spec)
    vecs = _vectors(args.vec)
    top = max(v.max_index for v in vecs)
    sched = None if args.mode == "min" else _schedule(args.sched, frame, top)
    fn = _norm_fn(frame, sched, args.mode)
    reports = [{"vector": v.to_json(), **fn(v).to_json()} for v in vecs]
    _emit(reports[0] if len(reports) == 1 else reports, args.out)
    return EXIT_OK


def cmd_norm_compare(args) -> int:
    frame = _frame(args.spec)
    family = _vectors(args.family)
    top = max(v.max_index for v in family)
    needs = args.a != "min" or args.b != "min"
    sched = _schedule(args.sched, frame, top) if needs else None
    wit = domination_probe(_norm_fn(frame, sched, args.a), _norm_fn(frame, sched, args.b), family)
    _emit({"norm_a": args.a, "norm_b": args.b, **wit.to_json()}, args.out)
    _side_csv(wit.to_csv(), args.out, args.csv)
    return EXIT_OK


def cmd_nk_find(args) -> int:
    frame = _frame(args.spec)
    sched = find_schedule(frame, args.kmax)
    _emit({"k_max": args.kmax, **sched.to_json()}, args.out)
    return EXIT_OK


def cmd_nk_validate(args) -> int:
    frame = _frame(args.spec)
    sched = _schedule(args.sched, frame, args.kmax)
    rep = validate_schedule(frame, sched, args.kmax, args.horizon)
    _emit({"schedule": sched.to_json(), **rep.to_json()}, args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_pel_split(args) -> int:
    op = operator_from_json(_load_json(args.op))
    system = split_operator(op, args.m, seed=args.seed)
    _emit(system.to_json(), args.out)
    return EXIT_OK


def cmd_pel_verify(args) -> int:
    system = SplitSystem.from_json(_load_json(args.sys))
    rep = verify_pel(system)
    _emit(rep.to_json(), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_pel_assemble(args) -> int:
    ops, opts = load_operator_prefix(_load_json(args.ops))
    rule = args.rule or opts.get("m", opts.get("rule", "m_k=k*d_k"))
    built = assemble_bap_frame(ops, rule, tail_certificate=args.tail_certificate
                               or opts.get("tail_certificate", "min"), seed=args.seed)
    _emit(built.frame.to_spec(), args.out)
    return EXIT_OK


def _exp_result(report: dict[str, Any], args) -> int:
    csv_text = report.pop("csv", None)
    _emit(report, args.out)
    if csv_text:
        _side_csv(csv_text, args.out, getattr(args, "csv", None))
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_exp_example23(args) -> int:
    frame = _frame(args.spec)
    sched = None if args.sched is None else _schedule(args.sched, frame, 12)
    return _exp_result(exp_example23(frame, seed=args.seed, sched=sched), args)


def cmd_exp_incomparable(args) -> int:
    frame = _frame(args.spec)
    sched = None if args.sched is None else NkSchedule.parse(args.sched)
    return _exp_result(exp_incomparable(_ints(args.L), _ints(args.M), frame, sched=sched,
                                        seed=args.seed, horizon=args.horizon), args)


def cmd_exp_dichotomy(args) -> int:
    frame = _frame(args.spec)
    blocks = _vectors(args.blocks)
    sched = None if args.sched is None else NkSchedule.parse(args.sched)
    return _exp_result(exp_dichotomy(blocks, frame, sched=sched, seed=args.seed), args)


def cmd_exp_pipeline(args) -> int:
    rep = exp_pipeline(_load_json(args.ops), k_max=args.kmax, horizon=args.horizon, seed=args.seed)
    return _exp_result(rep, args)


# -- parser -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="frameforge", description="Exact frame and associated-norm toolkit")
    verbs = p.add_subparsers(dest="group", required=True)

    def common(sp, spec=True, sched=False, horizon: int | None = None):
        if spec:
            sp.add_argument("--spec", help="frame spec JSON (file or inline), or 'canonical'/'example23'")
        if sched:
            sp.add_argument("--sched", help="schedule: 'k+1', '2,4,5;k+4', a JSON file, or 'find'")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--horizon", type=int, default=horizon)
        sp.add_argument("--out", help="write the JSON report here instead of stdout")

    g = verbs.add_parser("frame").add_subparsers(dest="verb", required=True)
    s = g.add_parser("info")
    common(s, horizon=10)
    s.add_argument("--vec", help="vector(s) to analyse")
    s.set_defaults(func=cmd_frame_info)

    g = verbs.add_parser("norm").add_subparsers(dest="verb", required=True)
    s = g.add_parser("eval")
    common(s, sched=True)
    s.add_argument("--vec", required=True)
    s.add_argument("--mode", default="nk", help="min | nk | k=K | subseq=K1,K2,...")
    s.set_defaults(func=cmd_norm_eval)
    s = g.add_parser("compare")
    common(s, sched=True)
    s.add_argument("--family", required=True)
    s.add_argument("--a", default="nk")
    s.add_argument("--b", default="min")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_norm_compare)

    g = verbs.add_parser("nk").add_subparsers(dest="verb", required=True)
    s = g.add_parser("find")
    common(s)
    s.add_argument("--kmax", type=int, default=12)
    s.set_defaults(func=cmd_nk_find)
    s = g.add_parser("validate")
    common(s, sched=True, horizon=50)
    s.add_argument("--kmax", type=int, default=12)
    s.set_defaults(func=cmd_nk_validate)

    g = verbs.add_parser("pel").add_subparsers(dest="verb", required=True)
    s = g.add_parser("split")
    common(s, spec=False)
    s.add_argument("--op", required=True)
    s.add_argument("--m", type=int, required=True)
    s.set_defaults(func=cmd_pel_split)
    s = g.add_parser("verify")
    common(s, spec=False)
    s.add_argument("--sys", required=True)
    s.set_defaults(func=cmd_pel_verify)
    s = g.add_parser("assemble")
    common(s, spec=False)
    s.add_argument("--ops", required=True)
    s.add_argument("--rule")
    s.add_argument("--tail-certificate", choices=("min", "exact", "estimate"))
    s.set_defaults(func=cmd_pel_assemble)

    g = verbs.add_parser("exp").add_subparsers(dest="verb", required=True)
    s = g.add_parser("example23")
    common(s, sched=True)
    s.set_defaults(func=cmd_exp_example23)
    s = g.add_parser("incomparable")
    common(s, sched=True, horizon=8)
    s.add_argument("--L", default="1,2,3,4")
    s.add_argument("--M", default="2,4")
    s.add_argument("--csv")
    s.set_defaults(func=cmd_exp_incomparable)
    s = g.add_parser("dichotomy")
    common(s, sched=True)
    s.add_argument("--blocks", required=True)
    s.set_defaults(func=cmd_exp_dichotomy)
    s = g.add_parser("pipeline")
    common(s, spec=False)
    s.add_argument("--ops", required=True)
    s.add_argument("--kmax", type=int)
    s.set_defaults(func=cmd_exp_pipeline)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FrameForgeError, ValueError, KeyError, IndexError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
