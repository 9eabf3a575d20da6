"""Walk through the five-candidate, three-seat example end to end.

Counts the election, shows the bounds attached to a couple of prefixes,
then runs the margin search and prints what it certified.

    python3 demos/worked_example.py
"""

from pathlib import Path

from stvmargin.bounds import compute_bounds
from stvmargin.election import parse_blt
from stvmargin.lower_bounds import combined_heuristic_lb
from stvmargin.search import margin_stv
from stvmargin.tabulation import tabulate
from stvmargin.upper_bounds import best_upper_bound

BLT = Path(__file__).resolve().parent.parent / "tests" / "data" / "table1a.blt"


def show_count(e):
    tab = tabulate(e)
    print(f"quota {e.quota}, {e.profile.total} ballots")
    for rec in tab.rounds:
        names = ", ".join(e.name(c) for c in rec.candidates)
        tallies = " ".join(f"{e.name(c)}={float(t):g}" for c, t in sorted(rec.tallies.items()))
        tv = "" if rec.transfer_value is None else f"  tv={float(rec.transfer_value):.3f}"
        print(f"  round {rec.round}: {rec.action:<11} {names:<8} [{tallies}]{tv}")
    print("winners:", ", ".join(sorted(e.name(c) for c in tab.winners)))


def show_prefix(e, prefix):
    label = " ".join(f"{e.name(c)}{'+' if s else '-'}" for c, s in prefix)
    b = compute_bounds(e, prefix)
    h = combined_heuristic_lb(e, prefix)
    print(f"\nprefix {label}")
    for r in range(1, b.rounds + 1):
        spans = " ".join(f"{e.name(c)}:[{float(b.t_min[r - 1][c]):g},{float(b.t_max[r - 1][c]):g}]"
                         for c in b.standing(r))
        print(f"  round {r} tallies {spans}")
    print(f"  heuristic lower bound {h.value}  {h.components}")


def main():
    e = parse_blt(BLT.read_bytes())
    show_count(e)

    ub = best_upper_bound(e)
    print(f"\nupper bounds: weub={ub.weub} simple={ub.simple_stv} -> {ub.best}")

    A, B, C, D, E = range(5)
    show_prefix(e, [(C, 1)])
    show_prefix(e, [(C, 1), (D, 1)])

    res = margin_stv(e)
    kind = "exact" if res.exact else "bound only"
    print(f"\nmargin lower bound {res.lower_bound} ({kind}), "
          f"{res.stats.expanded} nodes expanded, {res.runtime_s:.2f}s")


if __name__ == "__main__":
    main()
