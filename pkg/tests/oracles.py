"""Independent reference implementations used as test oracles.

These are written from the counting rules directly, one ballot at a time,
and share no code with the package beyond the data classes used to hand
over inputs.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


def droop(total, seats):
    return total // (seats + 1) + 1


def expand(profile):
    """One entry per physical ballot: [ranking, holder index into ranking or None, value]."""
    out = []
    for ranking, n in profile:
        out.extend([list(ranking), 0, Fraction(1)] for _ in range(n))
    return out


def _trunc(x, decimals):
    if decimals is None:
        return x
    s = 10**decimals
    return Fraction(int(x * s), s)


def _holder(b):
    ranking, pos, _ = b
    return None if pos is None else ranking[pos]


def _tallies(ballots, standing):
    t = {c: Fraction(0) for c in standing}
    for b in ballots:
        h = _holder(b)
        if h is not None:
            t[h] += b[2]
    return t


def _pass_on(ballots, c, standing, eligible, factor):
    for b in ballots:
        if _holder(b) != c:
            continue
        ranking, pos, v = b
        nxt = None
        for j in range(pos + 1, len(ranking)):
            if ranking[j] in eligible:
                nxt = j
                break
        b[1] = nxt
        if factor is not None:
            b[2] = v * factor


def reference_outcomes(profile, n, seats, quota=None, decimals=None):
    """Every (order, auto_start, rounds) reachable under some tie resolution.

    ``rounds`` lists (tallies, transfer value, holders) per round, where
    holders maps each ranking to the set of (place, value) its ballots have
    at the start of the round (place None for exhausted).  Ballots are moved
    individually; exact-quota piles are exhausted at value zero.
    """
    total = sum(k for _, k in profile)
    Q = droop(total, seats) if quota is None else quota
    results = []

    def step(ballots, standing, seats_left, order, rounds):
        if seats_left == 0:
            results.append((tuple(order), len(order), tuple(rounds)))
            return
        t = _tallies(ballots, standing)
        held = {}
        for b in ballots:
            held.setdefault(tuple(b[0]), set()).add((_holder(b), b[2]))
        if seats_left == len(standing):
            auto = sorted(standing, key=lambda x: (-t[x], x))
            rounds = rounds + [(t, None, held)]
            results.append((tuple(order) + tuple((c, 1) for c in auto), len(order), tuple(rounds)))
            return
        over = [c for c in standing if t[c] >= Q]
        if over:
            top = max(t[c] for c in over)
            choices = sorted(c for c in over if t[c] == top)
            for c in choices:
                bs = [list(b) for b in ballots]
                rest = standing - {c}
                eligible = {x for x in rest if t[x] < Q}
                if t[c] > Q:
                    tv = _trunc((t[c] - Q) / t[c], decimals)
                    _pass_on(bs, c, rest, eligible, tv)
                else:
                    tv = None
                    for b in bs:
                        if _holder(b) == c:
                            b[1], b[2] = None, Fraction(0)
                step(bs, rest, seats_left - 1, order + [(c, 1)], rounds + [(t, tv, held)])
            return
        low = min(t[c] for c in standing)
        for c in sorted(c for c in standing if t[c] == low):
            bs = [list(b) for b in ballots]
            rest = standing - {c}
            eligible = {x for x in rest if t[x] < Q}
            _pass_on(bs, c, rest, eligible, None)
            step(bs, rest, seats_left, order + [(c, 0)], rounds + [(t, None, held)])

    step(expand(profile), frozenset(range(n)), seats, [], [])
    return results


def reference_count(profile, n, seats, quota=None, decimals=None):
    """The count with every tie broken toward the lowest index."""
    outs = reference_outcomes(profile, n, seats, quota, decimals)
    # lowest index first in every tie is the lexicographically smallest branch
    # of the recursion, which is always generated first
    return outs[0]


def winners_of(order):
    return frozenset(c for c, a in order if a == 1)


def starts_with(order, auto_start, prefix):
    prefix = tuple(prefix)
    k = min(len(prefix), auto_start)
    if prefix[:k] != order[:k]:
        return False
    rest = prefix[auto_start:]
    auto = {c for c, _ in order[auto_start:]}
    return len({c for c, _ in rest}) == len(rest) and all(a == 1 and c in auto for c, a in rest)


def all_rankings(n):
    for k in range(1, n + 1):
        yield from itertools.permutations(range(n), k)


def neighbours(profile, n, cap):
    """Yield (distance, profile) for every profile reachable by rewriting up to ``cap`` ballots.

    Works on physical ballots, so it is slow but obviously complete.
    Duplicated profiles are yielded once, at their smallest distance.
    """
    base = tuple(sorted(tuple(r) for r, k in profile for _ in range(k)))
    alphabet = list(all_rankings(n))
    seen = set()

    def key(bs):
        return tuple(sorted(bs))

    frontier = {base}
    seen |= frontier
    yield 0, list(base)
    for d in range(1, cap + 1):
        nxt = set()
        for bs in frontier:
            for i in range(len(bs)):
                if i and bs[i] == bs[i - 1]:
                    continue
                for r in alphabet:
                    if r == bs[i]:
                        continue
                    new = key(bs[:i] + (r,) + bs[i + 1 :])
                    if new not in seen:
                        seen.add(new)
                        nxt.add(new)
                        yield d, list(new)
        frontier = nxt


def as_profile(ballots):
    counts = {}
    for b in ballots:
        counts[tuple(b)] = counts.get(tuple(b), 0) + 1
    return sorted(counts.items())


def naive_distances(profile, n, seats, cap, quota=None, decimals=None):
    """Map each reachable outcome (order, auto_start) to its smallest distance within ``cap``."""
    best = {}
    for d, ballots in neighbours(profile, n, cap):
        for order, auto, _ in reference_outcomes(as_profile(ballots), n, seats, quota, decimals):
            if (order, auto) not in best:
                best[(order, auto)] = d
    return best


def naive_margin(profile, n, seats, cap, quota=None, decimals=None):
    """Smallest distance within ``cap`` at which some tie resolution changes the winners, else None."""
    reported = winners_of(reference_count(profile, n, seats, quota, decimals)[0])
    found = [d for (order, _), d in naive_distances(profile, n, seats, cap, quota, decimals).items()
             if winners_of(order) != reported]
    return min(found) if found else None
