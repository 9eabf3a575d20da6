"""Initial upper bounds on the margin.

Each bound here is backed by a concrete manipulation that is re-counted
before the bound is accepted, so every reported value certifies a margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .election import BallotProfile, Election
from .tabulation import ELIMINATED, TabulationResult, tabulate, verify_manipulation


@dataclass
class Certificate:
    kind: str
    distance: int
    profile: BallotProfile
    note: str = ""


@dataclass
class UpperBoundReport:
    weub: int | None = None
    simple_stv: int | None = None
    external: int | None = None
    best: int | None = None
    certificates: list = field(default_factory=list)
    rejected: list = field(default_factory=list)

    def to_json(self) -> dict:
        out = {"weub": self.weub, "simple_stv": self.simple_stv, "external": self.external, "best": self.best}
        if self.rejected:
            out["rejected"] = list(self.rejected)
        return out


def _pile_at_round(election: Election, tab: TabulationResult, r: int) -> dict:
    """Recount up to the start of round ``r``; return ranking -> (holder, value)."""
    from .tabulation import _Count

    state = _Count(election)
    for rec in tab.rounds[: r - 1]:
        c = rec.candidates[0]
        if rec.action == ELIMINATED:
            state.eliminate(c)
        else:
            state.seat(c)
    return {b: (h, v) for b, h, v in zip(state.rankings, state.holder, state.value)}


def _shift(election: Election, sources: list, target: tuple, k: int) -> BallotProfile | None:
    """Rewrite ``k`` ballots, taken from ``sources`` in order, as ``target``."""
    counts = election.profile.counts()
    left = k
    for b in sources:
        if left == 0:
            break
        if b == target:
            continue
        take = min(counts.get(b, 0), left)
        if take:
            counts[b] -= take
            counts[target] = counts.get(target, 0) + take
            left -= take
    if left:
        return None
    return BallotProfile(counts)


def _weub_pairs(election: Election, tab: TabulationResult):
    """Candidate (estimate, round, eliminated, winner) pairs from the reported count."""
    W = election.reported_winners
    for rec in tab.rounds:
        if rec.action != ELIMINATED:
            continue
        c = rec.candidate
        for w, t_w in rec.tallies.items():
            if w in W:
                gap = t_w - rec.tallies[c]
                yield math.ceil(gap / 2), rec.round, c, w


def weub(election: Election, tabulation: TabulationResult | None = None, certificates: list | None = None) -> int | None:
    """Winner-elimination bound: make a reported winner lose an elimination.

    For every elimination in the reported count and every winner still
    standing, ballots in the winner's pile (most valuable first) are rewritten
    to rank only the eliminated candidate.  The smallest shift that verifiably
    changes the winners is returned; ``None`` when the count has no eliminations
    or no shift verifies.
    """
    tab = tabulation or tabulate(election)
    best = None
    if not any(r.action == ELIMINATED for r in tab.rounds):
        return None
    for est, r, c, w in sorted(_weub_pairs(election, tab)):
        if best is not None and est >= best:
            continue
        where = _pile_at_round(election, tab, r)
        sources = [b for b, (h, _) in where.items() if h == w]
        sources.sort(key=lambda b: (-where[b][1], b))
        for k in range(max(est, 1), max(est, 1) + 2):
            if best is not None and k >= best:
                break
            prof = _shift(election, sources, (c,), k)
            if prof is None:
                break
            d, changed, _ = verify_manipulation(election, prof)
            if changed:
                best = d
                if certificates is not None:
                    certificates.append(Certificate("weub", d, prof, f"round {r}: {w} below {c}"))
                break
    return best


def simple_stv_ub(election: Election, certificates: list | None = None) -> int | None:
    """Votes a reported loser needs to hold a quota on first preferences."""
    W = election.reported_winners
    fp = election.profile.first_preferences(election.num_candidates)
    Q = election.quota
    best = None
    for c in sorted(set(election.candidates) - W, key=lambda x: (Q - fp[x], x)):
        k = max(0, Q - fp[c])
        if best is not None and k >= best:
            continue
        # take ballots from the candidates with most first preferences
        sources = [b for b, _ in election.profile if b[0] != c]
        sources.sort(key=lambda b: (-fp[b[0]], -election.profile[b], b))
        prof = _shift(election, sources, (c,), k)
        if prof is None:
            continue
        d, changed, _ = verify_manipulation(election, prof)
        if changed:
            best = d
            if certificates is not None:
                certificates.append(Certificate("simple-stv", d, prof, f"{c} reaches a quota"))
    return best


def best_upper_bound(
    election: Election,
    external: int | None = None,
    external_profile: BallotProfile | None = None,
    tabulation: TabulationResult | None = None,
) -> UpperBoundReport:
    """Smallest available certified bound.

    ``external`` is an integer bound accepted as given; ``external_profile`` is
    a manipulated profile that must change the winners on re-count.
    """
    report = UpperBoundReport()
    certs: list = []
    report.weub = weub(election, tabulation, certs)
    report.simple_stv = simple_stv_ub(election, certs)
    if external_profile is not None:
        try:
            d, changed, _ = verify_manipulation(election, external_profile)
        except ValueError as exc:
            report.rejected.append(f"external manipulation: {exc}")
        else:
            if changed:
                certs.append(Certificate("external", d, external_profile))
                external = d if external is None else min(external, d)
            else:
                report.rejected.append("external manipulation does not change the winners")
    if external is not None:
        if external < 1:
            report.rejected.append(f"external bound {external} is below 1")
        else:
            report.external = int(external)
    present = [x for x in (report.weub, report.simple_stv, report.external) if x is not None]
    report.best = math.ceil(min(present)) if present else election.profile.total
    report.certificates = certs
    return report
