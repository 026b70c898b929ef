"""Command-line interface.

Exit codes: 0 success, 1 validation error (bad input), 2 internal error.
Every command accepting a design file also accepts a reference-row file or
an inline --rows list with --m. OOFA_THREADS caps search workers.
"""
from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from . import __version__
from .candidates import full_candidates, validate_against
from .criteria import (
    DEFAULT_RANK_CRITERIA,
    evaluate,
    rank_designs,
)
from .errors import ValidationError
from .io import (
    design_text,
    dump_json,
    envelope,
    load_design_arg,
    read_candidate_spec,
    read_design,
    sha256_path,
    write_design,
)
from .isomorph import d_isomorphic, wt_isomorphic, wt_signature
from .perm import Design
from .reference import admissible_min_N
from .analysis import fit_main_effects, stepwise
from .search import SearchConfig, search as run_search


def _design_from_args(args, flag="design") -> tuple[Design, dict]:
    digests = {}
    rows = getattr(args, "rows", None)
    path = getattr(args, flag, None)
    if rows:
        design = load_design_arg(rows, getattr(args, "m", None))
    elif path:
        design = load_design_arg(path, getattr(args, "m", None))
        if Path(path).exists():
            digests[str(path)] = sha256_path(path)
    else:
        raise ValidationError(f"provide --{flag} or --rows with --m")
    return design, digests


def _candidates_from_args(args, design: Design):
    if getattr(args, "candidates", None):
        return read_candidate_spec(args.candidates)
    if design.process is not None:
        raise ValidationError("process-augmented designs need --candidates")
    return full_candidates(design.m)


def cmd_evaluate(args) -> int:
    design, digests = _design_from_args(args)
    cands = _candidates_from_args(args, design)
    report = evaluate(design, cands, s_max=args.s_max)
    payload = report.to_dict()
    payload["n_runs"] = design.n_runs
    payload["m"] = design.m
    payload["valid_in_candidate_set"] = validate_against(design, cands)
    dump_json(envelope(payload, inputs=digests), args.report)
    return 0


def cmd_admissible(args) -> int:
    cands = (
        read_candidate_spec(args.candidates)
        if args.candidates
        else full_candidates(args.m)
    )
    n = admissible_min_N(cands, args.t)
    if args.report:
        dump_json(envelope({"m": args.m, "t": args.t, "admissible_min_N": n}), args.report)
    else:
        print(n)
    return 0


def cmd_compare(args) -> int:
    a = load_design_arg(args.a, args.m)
    b = load_design_arg(args.b, args.m)
    sig_a, sig_b = wt_signature(a), wt_signature(b)
    payload = {
        "wt_isomorphic": wt_isomorphic(a, b),
        "d_isomorphic": d_isomorphic(a, b),
        "signatures_digest": {"a": sig_a.digest(), "b": sig_b.digest()},
    }
    dump_json(envelope(payload), args.report)
    return 0


def cmd_search(args) -> int:
    cands = read_candidate_spec(args.candidates) if args.candidates else None
    cfg = SearchConfig(
        m=args.m,
        n_runs=args.runs,
        criterion="d_opt" if args.criterion == "d" else "chi2_ave_2",
        starts=args.starts,
        seed=args.seed,
        max_passes=args.max_passes,
        candidates=cands,
        keep=args.keep,
    )
    result = run_search(cfg)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    seen = set()
    files = []
    for hit in result.designs:
        sig = wt_signature(hit.design)
        if sig in seen:
            continue
        seen.add(sig)
        name = f"design_{len(files) + 1:03d}.csv"
        write_design(hit.design, outdir / name)
        files.append(
            {
                "file": name,
                "objective": hit.objective,
                "duplicate_rows": hit.duplicate_rows,
                "report": hit.report.to_dict(),
            }
        )
    payload = {
        "criterion": result.criterion,
        "backend": result.backend,
        "generator": result.generator,
        "starts": args.starts,
        "best_objective": result.best_objective,
        "distinct_wt_classes": result.distinct_wt_classes,
        "degenerate_starts": sum(t.degenerate for t in result.trace),
        "designs": files,
    }
    dump_json(envelope(payload, seed=args.seed), outdir / "summary.json")
    print(f"{len(files)} wt-class representative(s) written to {outdir}")
    return 0


def cmd_rank(args) -> int:
    import json

    items = []
    for path in args.reports:
        obj = json.loads(Path(path).read_text())
        payload = obj.get("payload", obj)
        items.append((Path(path).stem, payload))
    criteria = []
    for spec in args.criteria.split(","):
        name, _, direction = spec.partition(":")
        criteria.append((name.strip(), (direction or "min").strip()))
    table = rank_designs(items, criteria)
    if args.format == "latex":
        _print_latex(table)
    else:
        dump_json(envelope({"ranking": table.rows()}), args.report)
    return 0


def _print_latex(table) -> None:
    crit = [name for name, _ in table.criteria]
    print("\\begin{tabular}{rr" + "r" * len(crit) + "}")
    print("ID & Rank & " + " & ".join(crit) + " \\\\")
    for row in table.rows():
        cells = [str(row["id"]), f"{row['average_rank']:.1f}"]
        cells += [str(row[name]) for name in crit]
        print(" & ".join(cells) + " \\\\")
    print("\\end{tabular}")


def cmd_analyze(args) -> int:
    design, digests = _design_from_args(args)
    y = _read_response(args.response)
    if args.stepwise:
        model = stepwise(
            design, y, alpha_in=args.alpha_in, alpha_out=args.alpha_out, heredity=args.heredity
        )
    else:
        model = fit_main_effects(design, y)
    payload = {
        "intercept": model.intercept,
        "terms": [
            {"name": t.name, "coefficient": t.coefficient, "std_error": t.std_error}
            for t in model.terms
        ],
        "residual_df": model.residual_df,
        "r_squared": model.r_squared,
        "sigma2_hat": model.sigma2_hat,
    }
    dump_json(envelope(payload, inputs=digests), args.report)
    return 0


def _read_response(path: str) -> list[float]:
    vals: list[float] = []
    for ln, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            vals.extend(float(x) for x in line.split(",") if x.strip())
        except ValueError:
            raise ValidationError(f"{path}:{ln}: malformed response line {raw!r}")
    if not vals:
        raise ValidationError(f"{path}: no response values")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oofa",
        description="Order-of-addition experimental designs: evaluate, search, compare.",
    )
    parser.add_argument("--version", action="version", version=f"oofa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="criteria report for a design")
    p.add_argument("--design", help="design CSV or reference-row file")
    p.add_argument("--rows", help="inline 1-based lexicographic row indices")
    p.add_argument("--m", type=int, help="component count (for --rows)")
    p.add_argument("--candidates", help="candidate spec JSON")
    p.add_argument("--s-max", type=int, default=3, dest="s_max")
    p.add_argument("--report", help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("admissible", help="smallest balanced run size")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--t", type=int, required=True, choices=(2, 3))
    p.add_argument("--candidates", help="candidate spec JSON")
    p.add_argument("--report", help="output JSON path (default: print the number)")
    p.set_defaults(func=cmd_admissible)

    p = sub.add_parser("compare", help="wt/d isomorphism verdicts for two designs")
    p.add_argument("--a", required=True, help="design CSV, row file, or inline rows")
    p.add_argument("--b", required=True)
    p.add_argument("--m", type=int, help="component count for inline rows")
    p.add_argument("--report", help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("search", help="multi-start exchange search")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--criterion", choices=("d", "chi2"), default="d")
    p.add_argument("--starts", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-passes", type=int, default=500, dest="max_passes")
    p.add_argument("--candidates", help="candidate spec JSON")
    p.add_argument("--keep", choices=("best_only", "all_optima"), default="all_optima")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("rank", help="multi-criteria ranking of saved reports")
    p.add_argument("--reports", nargs="+", required=True)
    p.add_argument(
        "--criteria",
        default=",".join(f"{n}:{d}" for n, d in DEFAULT_RANK_CRITERIA),
        help="comma list of field:min|max",
    )
    p.add_argument("--format", choices=("json", "latex"), default="json")
    p.add_argument("--report", help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("analyze", help="fit a response model on a design")
    p.add_argument("--design", help="design CSV or reference-row file")
    p.add_argument("--rows", help="inline 1-based row indices")
    p.add_argument("--m", type=int)
    p.add_argument("--response", required=True, help="CSV of response values")
    p.add_argument("--stepwise", action="store_true")
    p.add_argument("--alpha-in", type=float, default=0.05, dest="alpha_in")
    p.add_argument("--alpha-out", type=float, default=0.05, dest="alpha_out")
    p.add_argument("--heredity", choices=("weak", "strong"), default="weak")
    p.add_argument("--report", help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
