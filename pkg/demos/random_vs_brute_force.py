"""Compare the search against exhaustive enumeration on small random elections.

Brute force tries every rewrite of up to ``cap`` ballots, so it only finds
the margin when the margin is small; otherwise it reports "> cap".  The
search result must never exceed the brute-force margin.

    python3 demos/random_vs_brute_force.py [count]
"""

import sys

from stvmargin.harness import generate_random_election
from stvmargin.oracle import realization_table
from stvmargin.search import margin_stv
from stvmargin.upper_bounds import best_upper_bound


def main(count=12, cap=2):
    print(f"{'seed':>4} {'cands':>5} {'seats':>5} {'ballots':>7} {'search':>6} {'brute':>6} {'ub':>4}")
    for seed in range(count):
        e = generate_random_election(3, 12, 1 + seed % 2, seed, max_types=5)
        res = margin_stv(e)
        table = realization_table(e, cap)
        brute = table.margin_any_ties
        shown = str(brute) if brute is not None else f">{cap}"
        print(f"{seed:>4} {e.num_candidates:>5} {e.seats:>5} {e.profile.total:>7} "
              f"{res.lower_bound:>6} {shown:>6} {best_upper_bound(e).best!s:>4}", flush=True)
        assert brute is None or res.lower_bound <= brute


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 12)
