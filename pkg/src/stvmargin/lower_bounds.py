"""Heuristic lower bounds on the manipulation needed to realize a prefix."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .bounds import PrefixBounds, compute_bounds, legacy_tally_bounds
from .election import Election
from .orders import ELIM, REACHABLE, SEAT, as_order, eliminated, remaining, seated

ZERO = Fraction(0)
NEW = "new"
LEGACY = "legacy"


def ceil_votes(x) -> int:
    """Whole ballots needed to cover a (possibly fractional) vote deficit."""
    return max(0, math.ceil(x))


def tallies_for(election: Election, prefix, tally_mode: str = NEW, piles: str = REACHABLE):
    if tally_mode == LEGACY:
        return legacy_tally_bounds(election, prefix, piles)
    if tally_mode != NEW:
        raise ValueError(f"unknown tally mode {tally_mode!r}")
    return compute_bounds(election, prefix, piles)


def rounding_slack(election: Election, seatings: int) -> Fraction:
    """Extra tally movement truncated transfer values allow after ``seatings`` transfers.

    With exact values a changed ballot moves any tally by at most one vote.
    Truncating each transfer value to ``d`` places can shift a tally by up to
    another ``total / 10**d`` per transfer, since a small change in a seated
    candidate's tally may push the value across a truncation step.
    """
    d = election.rules.decimals
    if d is None or seatings <= 0:
        return ZERO
    return Fraction(election.profile.total * seatings, 10**d)


def elim_lb(election: Election, prefix, tallies) -> Fraction:
    """Votes that must move so every eliminated candidate can be the lowest when eliminated."""
    best = ZERO
    nseat = 0
    for r, (c, a) in enumerate(as_order(prefix), start=1):
        if a != ELIM:
            nseat += 1
            continue
        lo = tallies.t_min[r - 1][c]
        slack = rounding_slack(election, nseat)
        for other, hi in tallies.t_max[r - 1].items():
            if other != c:
                best = max(best, (lo - hi) / 2 - slack)
    return best


def quota_lb(election: Election, prefix, tallies) -> Fraction:
    """Votes each seated candidate lacks, at best, to hold a quota when seated."""
    best = ZERO
    Q = election.quota
    nseat = 0
    for r, (c, a) in enumerate(as_order(prefix), start=1):
        if a == SEAT:
            best = max(best, Q - tallies.t_max[r - 1][c] - rounding_slack(election, nseat))
            nseat += 1
    return best


def elim_quota_lb(election: Election, prefix, tally_mode: str = NEW, tallies=None,
                  piles: str = REACHABLE) -> int:
    if tallies is None:
        tallies = tallies_for(election, prefix, tally_mode, piles)
    return ceil_votes(max(elim_lb(election, prefix, tallies), quota_lb(election, prefix, tallies)))


def displacement_lb_exact(election: Election, prefix, bounds: PrefixBounds | None = None,
                          piles: str = REACHABLE) -> Fraction:
    """Cost for some reported loser still standing to take a seat after the prefix."""
    prefix = as_order(prefix)
    W = election.reported_winners
    N = election.seats
    s = seated(prefix)
    if not s <= W:
        return ZERO
    if eliminated(prefix) & W:
        return ZERO
    rem = remaining(prefix, election.num_candidates)
    if N - len(s) == len(rem):
        return ZERO
    if bounds is None:
        bounds = compute_bounds(election, prefix, piles)
    r = len(prefix) + 1
    t_min = bounds.t_min[r - 1]
    t_max = bounds.t_max[r - 1]
    Q = election.quota
    L = len(rem) - (N - len(s)) - 1
    winners_left = sorted(rem & W)
    best = None
    for c in sorted(rem - W):
        if winners_left:
            disp = min(max(ZERO, (t_min[w] - bounds.tally_max_before(c, w, r)) / 2) for w in winners_left)
        else:
            disp = ZERO
        quota_cost = max(ZERO, Q - t_max[c])
        dps = sorted((t_min[o] - bounds.tally_max_before(c, o, r)) / 2 for o in sorted(rem - {c}))
        left_at_end = max(dps[:L]) if L > 0 and dps else ZERO
        cost = max(disp, min(quota_cost, left_at_end))
        best = cost if best is None else min(best, cost)
    if best is None:
        return ZERO
    # later transfers are unknown, so allow for every seat being filled by one
    return max(ZERO, best - rounding_slack(election, N))


def displacement_lb(election: Election, prefix, bounds: PrefixBounds | None = None,
                    piles: str = REACHABLE) -> int:
    return ceil_votes(displacement_lb_exact(election, prefix, bounds, piles))


@dataclass(frozen=True)
class HeuristicBound:
    value: int
    components: dict = field(default_factory=dict)


def combined_heuristic_lb(
    election: Election,
    prefix,
    parent_lb: int = 0,
    tally_mode: str = NEW,
    dlb: bool = True,
    piles: str = REACHABLE,
) -> HeuristicBound:
    prefix = as_order(prefix)
    tallies = tallies_for(election, prefix, tally_mode, piles)
    elim = elim_lb(election, prefix, tallies)
    quota = quota_lb(election, prefix, tallies)
    comps = {"elim": ceil_votes(elim), "quota": ceil_votes(quota), "parent": int(parent_lb)}
    if dlb:
        bounds = tallies if isinstance(tallies, PrefixBounds) else None
        comps["disp"] = displacement_lb(election, prefix, bounds, piles)
    return HeuristicBound(max(comps.values()), comps)
