"""Command-line interface.

Exit codes: 0 success, 2 parse error, 3 time budget exhausted (partial
result printed), 4 verification rejected.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .election import Election, ParseError, Rules, TiePolicy, compute_quota, parse_blt
from .orders import order_from_json, relax, relaxed_from_json

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_BUDGET = 3
EXIT_REJECTED = 4


class CliError(Exception):
    def __init__(self, message, code=EXIT_PARSE):
        super().__init__(message)
        self.code = code


def _rules(args) -> Rules:
    return Rules(decimals=getattr(args, "decimals", None), tie_policy=TiePolicy(getattr(args, "tie_policy", "by-index")))


def _load(path: str, args) -> Election:
    try:
        data = sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from None
    try:
        e = parse_blt(data, _rules(args))
    except ParseError as exc:
        raise CliError(f"{path}: {exc}") from None
    seats = getattr(args, "seats", None)
    if seats is not None and seats != e.seats:
        e = Election(e.num_candidates, e.profile, seats, names=e.names, title=e.title, rules=e.rules)
    return e


def _load_profile(path: str, election: Election):
    other = _load(path, argparse.Namespace())
    if other.num_candidates != election.num_candidates:
        raise CliError(f"{path}: candidate count differs from the original", EXIT_REJECTED)
    return other.profile


def _prefix(text: str | None, election: Election):
    if text is None:
        return ()
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        data = json.loads(text)
    except ValueError:
        raise CliError(f"prefix is not valid JSON: {text!r}") from None
    try:
        if data and isinstance(data[0], dict) and "candidates" in data[0]:
            return relaxed_from_json(data)
        return order_from_json(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(f"bad prefix: {exc}") from None


def _emit(doc, out: str | None = None):
    text = json.dumps(doc, indent=2)
    if out and out != "-":
        Path(out).write_text(text + "\n")
    else:
        print(text)


# -- subcommands ------------------------------------------------------------


def cmd_tabulate(args) -> int:
    from .serialize import tabulation_json
    from .tabulation import tabulate

    e = _load(args.file, args)
    _emit(tabulation_json(e, tabulate(e)), args.json)
    return EXIT_OK


def cmd_quota(args) -> int:
    if len(args.values) == 2 and all(v.lstrip("-").isdigit() for v in args.values):
        total, seats = (int(v) for v in args.values)
        try:
            print(compute_quota(total, seats))
        except ValueError as exc:
            raise CliError(str(exc)) from None
        return EXIT_OK
    if len(args.values) == 1:
        e = _load(args.values[0], args)
        print(e.quota)
        return EXIT_OK
    raise CliError("usage: quota <total> <seats> | quota <file.blt>")


def cmd_bounds(args) -> int:
    from .bounds import compute_bounds, legacy_tally_bounds
    from .lower_bounds import combined_heuristic_lb
    from .serialize import fraction_json
    from .upper_bounds import best_upper_bound

    e = _load(args.file, args)
    ext_profile = _load_profile(args.external_manipulation, e) if args.external_manipulation else None
    report = best_upper_bound(e, external=args.external_ub, external_profile=ext_profile)
    doc = report.to_json()
    if args.dump_bounds or args.prefix:
        prefix = _prefix(args.prefix, e)
        piles = "shortcut" if args.pile_shortcut else "reachable"
        h = combined_heuristic_lb(e, prefix, tally_mode="legacy" if args.legacy_tallies else "new", piles=piles)
        doc["prefix"] = [list(x) for x in prefix]
        doc["heuristic"] = {"value": h.value, "components": h.components}
        if args.dump_bounds:
            doc["bounds"] = compute_bounds(e, prefix, piles).to_json()
            leg = legacy_tally_bounds(e, prefix, piles)
            doc["legacy_bounds"] = [
                {str(c): {"min": fraction_json(leg.t_min[r][c]), "max": fraction_json(leg.t_max[r][c])} for c in leg.t_max[r]}
                for r in range(len(leg.t_max))
            ]
    _emit(doc, args.json)
    return EXIT_REJECTED if report.rejected else EXIT_OK


def _search_config(args, election):
    from .harness import variant
    from .lower_bounds import LEGACY, NEW
    from .oracle import Oracle
    from .search import SearchConfig

    try:
        oracle = Oracle.parse(args.oracle, cap=args.brute_cap)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    if args.variant:
        try:
            base = variant(args.variant).search_config()
        except ValueError as exc:
            raise CliError(str(exc)) from None
    else:
        base = SearchConfig(
            tally_mode=LEGACY if args.legacy_tallies else NEW,
            dlb=not args.no_dlb and not args.legacy_tallies,
            lse=not args.no_lse and not args.legacy_tallies,
        )
    ext_profile = _load_profile(args.external_manipulation, election) if args.external_manipulation else None
    from dataclasses import replace

    return replace(
        base,
        oracle=oracle,
        external_ub=args.external_ub,
        external_profile=ext_profile,
        timeout=args.timeout,
        threads=args.threads,
        node_budget=args.node_budget,
        leaf_budget=args.leaf_budget,
    )


def cmd_margin_lb(args) -> int:
    from .search import margin_stv

    e = _load(args.file, args)
    cfg = _search_config(args, e)
    res = margin_stv(e, cfg)
    doc = res.to_json(trace=args.trace)
    _emit(doc, args.json)
    if args.json and args.json != "-":
        print(f"lower bound {res.lower_bound} (upper bound {res.upper_bounds.best}, exact={str(res.exact).lower()})")
    return EXIT_BUDGET if res.timed_out else EXIT_OK


def cmd_verify(args) -> int:
    from .tabulation import verify_manipulation

    e = _load(args.file, args)
    prof = _load_profile(args.modified, e)
    try:
        d, changed, new = verify_manipulation(e, prof)
    except ValueError as exc:
        _emit({"accepted": False, "error": str(exc)}, args.json)
        return EXIT_REJECTED
    _emit(
        {
            "distance": d,
            "winners_changed": changed,
            "reported_winners": sorted(e.reported_winners),
            "new_winners": sorted(new),
            "accepted": changed,
        },
        args.json,
    )
    return EXIT_OK if changed else EXIT_REJECTED


def cmd_export_minlp(args) -> int:
    from .oracle import build_minlp, export_model

    e = _load(args.file, args)
    prefix = _prefix(args.prefix, e)
    relaxed = prefix if (prefix and isinstance(prefix[0][0], frozenset)) else relax(prefix)
    data = export_model(build_minlp(e, relaxed, epsilon=args.epsilon))
    if args.out and args.out != "-":
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode())
    return EXIT_OK


def cmd_bench(args) -> int:
    from .harness import reports_csv, reports_json, run_matrix

    variants = args.variants.split(",") if args.variants else None
    try:
        reports = run_matrix(
            args.files,
            variants,
            repetitions=args.repetitions,
            budget=args.budget,
            parallel_contests=args.parallel_contests,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None
    if args.csv:
        Path(args.csv).write_text(reports_csv(reports))
    if args.json or not args.csv:
        text = reports_json(reports)
        if args.json and args.json != "-":
            Path(args.json).write_text(text + "\n")
        else:
            print(text)
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def _common(p, seats=True):
    p.add_argument("--decimals", type=int, default=None, help="truncate transfer values to this many decimal places")
    p.add_argument("--tie-policy", choices=[t.value for t in TiePolicy], default=TiePolicy.BY_INDEX.value)
    if seats:
        p.add_argument("--seats", type=int, default=None, help="override the seat count in the file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stvmargin", description="STV counting and margin lower bounds.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tabulate", help="count a BLT file and print the rounds as JSON")
    p.add_argument("file")
    _common(p)
    p.add_argument("--json", default=None, help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_tabulate)

    p = sub.add_parser("quota", help="Droop quota for <total> <seats>, or for a BLT file")
    p.add_argument("values", nargs="+")
    _common(p)
    p.set_defaults(func=cmd_quota)

    p = sub.add_parser("bounds", help="upper bounds, and optionally bound tables for a prefix")
    p.add_argument("file")
    _common(p)
    p.add_argument("--external-ub", type=int, default=None)
    p.add_argument("--external-manipulation", default=None, metavar="BLT")
    p.add_argument("--prefix", default=None, help='JSON order, e.g. \'[{"candidate":2,"action":"seat"}]\' or @file')
    p.add_argument("--dump-bounds", action="store_true", help="include per-round tally and value bounds")
    p.add_argument("--pile-shortcut", action="store_true",
                   help="track piles with the shortcut rule only (can overstate bounds)")
    p.add_argument("--legacy-tallies", action="store_true")
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("margin-lb", help="certified lower bound on the margin")
    p.add_argument("file")
    _common(p)
    p.add_argument("--variant", default=None, help="Baseline, Baseline+U, New, New+LSE, New+DLB or New+Both")
    p.add_argument("--no-dlb", action="store_true")
    p.add_argument("--no-lse", action="store_true")
    p.add_argument("--legacy-tallies", action="store_true", help="older tally bounds, no DLB or dominance")
    p.add_argument("--oracle", default="none", help="none | brute | external:<command>")
    p.add_argument("--brute-cap", type=int, default=2)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--node-budget", type=float, default=100.0)
    p.add_argument("--leaf-budget", type=float, default=150.0)
    p.add_argument("--external-ub", type=int, default=None)
    p.add_argument("--external-manipulation", default=None, metavar="BLT")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--json", default=None, metavar="OUT")
    p.set_defaults(func=cmd_margin_lb)

    p = sub.add_parser("verify", help="re-count a manipulated profile")
    p.add_argument("file")
    p.add_argument("modified")
    _common(p)
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("export-minlp", help="write the manipulation model for a prefix")
    p.add_argument("file")
    _common(p)
    p.add_argument("--prefix", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--epsilon", type=float, default=None)
    p.set_defaults(func=cmd_export_minlp)

    p = sub.add_parser("bench", help="run the variant matrix over BLT files")
    p.add_argument("files", nargs="*")
    p.add_argument("--variants", default=None, help="comma-separated variant names")
    p.add_argument("--repetitions", type=int, default=3)
    p.add_argument("--budget", type=float, default=None, help="per-run time limit in seconds")
    p.add_argument("--parallel-contests", type=int, default=1)
    p.add_argument("--csv", default=None)
    p.add_argument("--json", default=None)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
