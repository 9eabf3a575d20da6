"""Round-by-round bounds on ballot values, tallies and transfer values for a prefix."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .election import Election, truncate
from .orders import EXHAUSTED, REACHABLE, SEAT, as_order, pile_trajectory

ONE = Fraction(1)
ZERO = Fraction(0)


def _tv_bound(tally: Fraction, quota: int, decimals) -> Fraction:
    m = max(Fraction(quota), tally)
    return truncate((m - quota) / m, decimals)


@dataclass
class PrefixBounds:
    """Bounds tables for one prefix.

    Rounds run 1..len(prefix)+1; per-round lists are indexed by ``r - 1``.
    ``t_min``/``t_max`` map candidate -> bound for the candidates standing at
    the start of that round.  ``T_min``/``T_max`` map the round number of each
    seating to its transfer-value bounds.
    """

    prefix: tuple
    rankings: list
    counts: list
    piles: list  # piles[i][r-1] for ballot type i
    v_min: list  # v_min[i][r-1]
    v_max: list
    t_min: list
    t_max: list
    T_min: dict
    T_max: dict
    quota: int

    @property
    def rounds(self) -> int:
        return len(self.prefix) + 1

    def standing(self, r: int) -> list:
        return sorted(self.t_max[r - 1])

    def tally_max_before(self, c: int, w: int, r: int) -> Fraction:
        """Most value that can sit on ballots ranking ``c`` ahead of ``w`` in their tail at round ``r``."""
        decided = {x for x, _ in self.prefix[: r - 1]}
        total = ZERO
        for i, b in enumerate(self.rankings):
            for x in b:
                if x in decided:
                    continue
                if x == w:
                    break
                if x == c:
                    total += self.counts[i] * self.v_max[i][r - 1]
                    break
        return total

    def must(self, c: int, r: int) -> list:
        return [self.rankings[i] for i in range(len(self.rankings)) if self.piles[i][r - 1] == {c}]

    def maybe(self, c: int, r: int) -> list:
        return [self.rankings[i] for i in range(len(self.rankings)) if c in self.piles[i][r - 1]]

    def to_json(self) -> dict:
        from .serialize import fraction_json

        rounds = []
        for r in range(1, self.rounds + 1):
            entry = {
                "round": r,
                "tallies": {
                    str(c): {"min": fraction_json(self.t_min[r - 1][c]), "max": fraction_json(self.t_max[r - 1][c])}
                    for c in self.standing(r)
                },
            }
            if r in self.T_min:
                entry["transfer_value"] = {"min": fraction_json(self.T_min[r]), "max": fraction_json(self.T_max[r])}
            rounds.append(entry)
        ballots = [
            {
                "ranking": list(b),
                "count": self.counts[i],
                "piles": [sorted(str(x) for x in p) for p in self.piles[i]],
                "v_min": [fraction_json(v) for v in self.v_min[i]],
                "v_max": [fraction_json(v) for v in self.v_max[i]],
            }
            for i, b in enumerate(self.rankings)
        ]
        return {"quota": self.quota, "rounds": rounds, "ballots": ballots}


def compute_bounds(election: Election, prefix, piles: str = REACHABLE) -> PrefixBounds:
    """Forward computation of value, tally and transfer-value bounds."""
    prefix = as_order(prefix)
    rankings = list(election.profile.rankings())
    counts = [election.profile[b] for b in rankings]
    Q = election.quota
    dec = election.rules.decimals
    n_rounds = len(prefix) + 1
    piles = [pile_trajectory(prefix, b, piles) for b in rankings]
    v_min = [[ONE] for _ in rankings]
    v_max = [[ONE] for _ in rankings]
    t_min, t_max = [], []
    T_min, T_max = {}, {}
    decided: set = set()
    for r in range(1, n_rounds + 1):
        if r >= 2:
            c_prev, a_prev = prefix[r - 2]
            decided.add(c_prev)
            for i in range(len(rankings)):
                lo, hi = v_min[i][-1], v_max[i][-1]
                if a_prev == SEAT:
                    p = piles[i][r - 2]
                    if p == {c_prev}:
                        hi = hi * T_max[r - 1]
                    if c_prev in p:
                        lo = lo * T_min[r - 1]
                v_min[i].append(lo)
                v_max[i].append(hi)
        lo_t = {c: ZERO for c in election.candidates if c not in decided}
        hi_t = dict(lo_t)
        for i, n in enumerate(counts):
            p = piles[i][r - 1]
            if len(p) == 1:
                (x,) = p
                if x != EXHAUSTED:
                    lo_t[x] += n * v_min[i][r - 1]
                    hi_t[x] += n * v_max[i][r - 1]
            else:
                for x in p:
                    if x != EXHAUSTED:
                        hi_t[x] += n * v_max[i][r - 1]
        t_min.append(lo_t)
        t_max.append(hi_t)
        if r <= len(prefix) and prefix[r - 1][1] == SEAT:
            c = prefix[r - 1][0]
            T_max[r] = _tv_bound(hi_t[c], Q, dec)
            T_min[r] = _tv_bound(lo_t[c], Q, dec)
    return PrefixBounds(prefix, rankings, counts, piles, v_min, v_max, t_min, t_max, T_min, T_max, Q)


@dataclass
class LegacyBounds:
    prefix: tuple
    t_min: list
    t_max: list

    def standing(self, r: int) -> list:
        return sorted(self.t_max[r - 1])


def legacy_tally_bounds(election: Election, prefix, piles: str = REACHABLE) -> LegacyBounds:
    """Older, coarser tally bounds.

    Every ballot that may sit in c's pile at round r counts 1 toward c's
    maximum.  It counts 1 toward the minimum only if it must be there and
    no candidate seated before round r is ranked ahead of c; otherwise it
    may have lost value in a surplus transfer and counts 0.
    """
    prefix = as_order(prefix)
    ballots = [(b, n, pile_trajectory(prefix, b, piles)) for b, n in election.profile]
    t_min, t_max = [], []
    for r in range(1, len(prefix) + 2):
        decided = {c for c, _ in prefix[: r - 1]}
        seated_before = {c for c, a in prefix[: r - 1] if a == SEAT}
        lo = {c: 0 for c in election.candidates if c not in decided}
        hi = dict(lo)
        for b, n, piles in ballots:
            p = piles[r - 1]
            for x in p:
                if x != EXHAUSTED:
                    hi[x] += n
            if len(p) == 1:
                (x,) = p
                if x != EXHAUSTED and not any(y in seated_before for y in b[: b.index(x)]):
                    lo[x] += n
        t_min.append({c: Fraction(v) for c, v in lo.items()})
        t_max.append({c: Fraction(v) for c, v in hi.items()})
    return LegacyBounds(prefix, t_min, t_max)


def tally_max_before(election: Election, prefix, c: int, w: int, r: int) -> Fraction:
    if c == w:
        raise ValueError("c and w must differ")
    return compute_bounds(election, prefix).tally_max_before(c, w, r)
