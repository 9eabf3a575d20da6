"""Election orders, prefixes and transfer paths.

An order is a tuple of ``(candidate, action)`` pairs where action 1 means the
candidate was seated and 0 that they were eliminated.  Rounds are 1-based:
round ``r`` of a prefix is entry ``r - 1``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

SEAT = 1
ELIM = 0
EXHAUSTED = "exhausted"

# pile rules: every place a ballot can reach, or the shortcut rule on its own
REACHABLE = "reachable"
SHORTCUT = "shortcut"


def as_order(entries: Iterable) -> tuple:
    return tuple((int(c), int(a)) for c, a in entries)


def seated(prefix) -> frozenset:
    return frozenset(c for c, a in prefix if a == SEAT)


def eliminated(prefix) -> frozenset:
    return frozenset(c for c, a in prefix if a == ELIM)


def remaining(prefix, num_candidates: int) -> frozenset:
    decided = {c for c, _ in prefix}
    return frozenset(c for c in range(num_candidates) if c not in decided)


def is_complete(prefix, seats: int) -> bool:
    return len(seated(prefix)) == seats


def leaf_status(prefix, num_candidates: int, seats: int):
    """Return ``(is_leaf, final_seated)`` for a prefix.

    A prefix is a leaf once every seat is filled, or once the candidates
    still standing would be seated automatically.
    """
    s = seated(prefix)
    rem = remaining(prefix, num_candidates)
    if len(s) == seats:
        return True, s
    if seats - len(s) == len(rem):
        return True, s | rem
    return False, s


def tail(prefix, ballot: Sequence[int], r: int) -> tuple:
    """The ballot with every candidate decided in rounds 1..r-1 removed."""
    decided = {c for c, _ in prefix[: r - 1]}
    return tuple(x for x in ballot if x not in decided)


def _follow(prefix, ballot: tuple) -> list:
    """Exact sets of places a ballot can occupy, rounds 1..len(prefix)+1.

    A surplus skips anyone already holding a quota.  Within the prefix that
    can only be a candidate seated in the unbroken run of seats that follows;
    past its end anyone still standing might be one.
    """
    n = len(prefix)
    round_of = {c: (k, a) for k, (c, a) in enumerate(prefix, start=1)}

    def may_hold(x, k):
        k_x, a_x = round_of.get(x, (None, None))
        if a_x == ELIM:
            return False
        last = k_x - 1 if k_x is not None else n
        return all(prefix[j - 1][1] == SEAT for j in range(k + 1, last + 1))

    states = {(ballot[0], 0)} if ballot else set()
    out = [frozenset(h for h, _ in states) or frozenset([EXHAUSTED])]
    done: set = set()
    for k, (c, a) in enumerate(prefix, start=1):
        done.add(c)
        nxt = set()
        for h, pos in states:
            if h != c:
                nxt.add((h, pos))
                continue
            for j in range(pos + 1, len(ballot)):
                x = ballot[j]
                if x in done:
                    continue
                nxt.add((x, j))
                if a == ELIM or not may_hold(x, k):
                    break
            else:
                nxt.add((EXHAUSTED, len(ballot)))
        states = nxt
        out.append(frozenset(h for h, _ in states))
    return out


def pile_trajectory(prefix, ballot: Sequence[int], piles: str = REACHABLE) -> list:
    """Possible piles of ``ballot`` at the start of rounds 1..len(prefix)+1.

    Entry ``r - 1`` of the returned list is the set for round ``r``.

    A ballot's pile becomes uncertain only when it leaves a candidate seated
    in round r-1 and the next event is also a seating: the receiving
    candidate may already have held a quota, in which case the ballot skips
    on down its tail or exhausts.  The usual shortcut admits this only when
    the first remaining preference is the very candidate seated in round r,
    and treats anything leaving a seated pile after the prefix as ambiguous.
    That misses skips over candidates seated later in the same run of seats,
    so the exact reachable set is added in unless ``piles`` is ``SHORTCUT``.
    """
    if piles not in (REACHABLE, SHORTCUT):
        raise ValueError(f"unknown pile rule {piles!r}")
    n = len(prefix)
    ballot = tuple(ballot)
    exact = _follow(prefix, ballot) if piles == REACHABLE else None
    out = []
    decided: set = set()
    prev = None
    for r in range(1, n + 2):
        if r >= 2:
            decided.add(prefix[r - 2][0])
        t = [x for x in ballot if x not in decided]
        if not t:
            cur = frozenset([EXHAUSTED])
        elif r == 1:
            cur = frozenset([t[0]])
        else:
            c_prev, a_prev = prefix[r - 2]
            from_seat = a_prev == SEAT and c_prev in prev
            if from_seat and r <= n:
                c_now, a_now = prefix[r - 1]
                ambiguous = a_now == SEAT and t[0] == c_now
            else:
                ambiguous = from_seat
            if ambiguous:
                cur = frozenset(t) | {EXHAUSTED}
            else:
                cur = frozenset([t[0]])
        if exact is not None:
            cur = cur | exact[r - 1]
        out.append(cur)
        prev = cur
    return out


def pile(prefix, ballot: Sequence[int], r: int, piles: str = REACHABLE) -> frozenset:
    if not 1 <= r <= len(prefix) + 1:
        raise ValueError(f"round {r} outside 1..{len(prefix) + 1}")
    return pile_trajectory(prefix, ballot, piles)[r - 1]


def must_pile(prefix, c: int, r: int, rankings: Iterable, piles: str = REACHABLE) -> set:
    """Rankings that are certainly with ``c`` at the start of round ``r``."""
    return {tuple(b) for b in rankings if pile(prefix, b, r, piles) == {c}}


def maybe_pile(prefix, c: int, r: int, rankings: Iterable, piles: str = REACHABLE) -> set:
    """Rankings that may be with ``c`` at the start of round ``r``."""
    return {tuple(b) for b in rankings if c in pile(prefix, b, r, piles)}


# -- relaxed orders --------------------------------------------------------


def relax(order) -> tuple:
    """Batch long elimination runs into super-candidates.

    Each maximal run of n > 3 consecutive eliminations has its first n-1
    members merged into one entry.  Entries are ``(frozenset, action)``.
    """
    order = as_order(order)
    out = []
    i = 0
    while i < len(order):
        c, a = order[i]
        if a == SEAT:
            out.append((frozenset([c]), SEAT))
            i += 1
            continue
        j = i
        while j < len(order) and order[j][1] == ELIM:
            j += 1
        run = [x for x, _ in order[i:j]]
        if len(run) > 3:
            out.append((frozenset(run[:-1]), ELIM))
            out.append((frozenset([run[-1]]), ELIM))
        else:
            out.extend((frozenset([x]), ELIM) for x in run)
        i = j
    return tuple(out)


def as_relaxed(entries) -> tuple:
    """Accept either a plain order or a relaxed one and return relaxed entries."""
    entries = tuple(entries)
    if entries and isinstance(entries[0][0], (frozenset, set, tuple, list)):
        return tuple((frozenset(s), int(a)) for s, a in entries)
    return tuple((frozenset([c]), int(a)) for c, a in entries)


def canonical(relaxed) -> tuple:
    return tuple((tuple(sorted(s)), a) for s, a in as_relaxed(relaxed))


def flatten(relaxed) -> tuple:
    """Plain order with each super-candidate expanded in index order."""
    return tuple((c, a) for s, a in as_relaxed(relaxed) for c in sorted(s))


# -- JSON --------------------------------------------------------------------


def order_to_json(order) -> list:
    return [{"candidate": c, "action": "seat" if a == SEAT else "elim"} for c, a in order]


def relaxed_to_json(relaxed) -> list:
    return [
        {"candidates": sorted(s), "action": "seat" if a == SEAT else "elim"}
        for s, a in as_relaxed(relaxed)
    ]


def _action(v) -> int:
    if v in ("seat", 1, "1", True):
        return SEAT
    if v in ("elim", 0, "0", False):
        return ELIM
    raise ValueError(f"unknown action {v!r}")


def order_from_json(data) -> tuple:
    """Parse an order from JSON text or decoded data.

    Accepts ``[{"candidate": i, "action": "seat"}, ...]`` or ``[[i, 1], ...]``.
    """
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    out = []
    for item in data:
        if isinstance(item, dict):
            out.append((int(item["candidate"]), _action(item["action"])))
        else:
            c, a = item
            out.append((int(c), _action(a)))
    return tuple(out)


def relaxed_from_json(data) -> tuple:
    if isinstance(data, (str, bytes)):
        data = json.loads(data)
    return tuple((frozenset(int(x) for x in d["candidates"]), _action(d["action"])) for d in data)


# -- transfer paths over a relaxed prefix -----------------------------------


@dataclass(frozen=True)
class Arrival:
    """Ballots of one ranking reaching ``candidate`` during a round's transfer.

    ``factors`` lists the seat rounds whose transfer values multiply the
    ballot's value; ``caveats`` are (kind, candidate, round) triples with kind
    ``"q"`` (candidate held a quota at the start of round) or ``"nq"``.
    """

    candidate: int
    factors: tuple
    caveats: tuple


class TransferPaths:
    """Where ballots can travel under a relaxed prefix.

    Built once per prefix; query with :meth:`arrivals`.
    """

    def __init__(self, relaxed, num_candidates: int):
        self.relaxed = as_relaxed(relaxed)
        self.num_candidates = num_candidates
        self.L = len(self.relaxed)
        decided = set()
        self.decided_after = []  # decided_after[k-1]: decided once round k completes
        self.standing = []  # standing[k-1]: candidates standing at the start of round k
        for s, _ in self.relaxed:
            self.standing.append(frozenset(c for c in range(num_candidates) if c not in decided))
            decided |= s
            self.decided_after.append(frozenset(decided))
        self.round_of = {}
        for k, (s, a) in enumerate(self.relaxed, start=1):
            for c in s:
                self.round_of[c] = (k, a)

    def seat_round(self, c: int) -> int | None:
        k, a = self.round_of.get(c, (None, None))
        return k if a == SEAT else None

    def may_hold_quota(self, x: int, k: int) -> bool:
        """Could standing candidate ``x`` already have a quota when round ``k`` starts?

        A quota holder is never eliminated and no elimination can happen
        while it is waiting to be seated.
        """
        k_x, a_x = self.round_of.get(x, (None, None))
        if a_x == ELIM:
            return False
        last = (k_x - 1) if k_x is not None else self.L
        return all(self.relaxed[j - 1][1] == SEAT for j in range(k + 1, last + 1))

    def arrivals(self, ballot: Sequence[int]) -> tuple:
        """Per round k = 1..L, the arrivals caused by that round's transfer."""
        ballot = tuple(ballot)
        states = [(ballot[0], 0, (), ())] if ballot else []  # holder, position, factors, caveats
        per_round = []
        for k, (group, a) in enumerate(self.relaxed, start=1):
            out = []
            nxt_states = []
            done = self.decided_after[k - 1]
            for holder, pos, fac, cav in states:
                if holder not in group:
                    nxt_states.append((holder, pos, fac, cav))
                    continue
                if a == ELIM:
                    for j in range(pos + 1, len(ballot)):
                        if ballot[j] not in done:
                            out.append(Arrival(ballot[j], fac, cav))
                            nxt_states.append((ballot[j], j, fac, cav))
                            break
                    continue
                fac2 = fac + (k,)
                branch_cav = cav
                for j in range(pos + 1, len(ballot)):
                    x = ballot[j]
                    if x in done:
                        continue
                    if self.may_hold_quota(x, k):
                        arrive = branch_cav + (("nq", x, k),)
                        out.append(Arrival(x, fac2, arrive))
                        nxt_states.append((x, j, fac2, arrive))
                        branch_cav = branch_cav + (("q", x, k),)
                    else:
                        out.append(Arrival(x, fac2, branch_cav))
                        nxt_states.append((x, j, fac2, branch_cav))
                        break
            states = nxt_states
            per_round.append(tuple(out))
        return tuple(per_round)

    def signature(self, ballot: Sequence[int]) -> tuple:
        ballot = tuple(ballot)
        return (ballot[0] if ballot else None, self.arrivals(ballot))


# -- equivalence classes ----------------------------------------------------


def all_rankings(num_candidates: int, max_length: int | None = None):
    top = num_candidates if max_length is None else min(max_length, num_candidates)
    for k in range(1, top + 1):
        yield from itertools.permutations(range(num_candidates), k)


FULL_ALPHABET_LIMIT = 6


def manipulation_alphabet(election) -> list:
    """Rankings a manipulated ballot may take.

    Every ranking for small candidate sets; otherwise the profile's own
    rankings plus one single-candidate ranking per candidate.
    """
    n = election.num_candidates
    if n <= FULL_ALPHABET_LIMIT:
        return list(all_rankings(n))
    seen = dict.fromkeys(election.profile.rankings())
    for c in range(n):
        seen.setdefault((c,), None)
    return list(seen)


@dataclass
class EquivalenceClassTable:
    class_of: dict  # ranking -> class id
    representatives: list  # class id -> representative ranking
    signatures: list  # class id -> signature
    counts: list  # class id -> number of original ballots

    def __len__(self):
        return len(self.representatives)

    def members(self, s: int) -> list:
        return [r for r, k in self.class_of.items() if k == s]


def equivalence_classes(election, relaxed_prefix, alphabet=None, paths: TransferPaths | None = None) -> EquivalenceClassTable:
    """Group rankings that move identically under the relaxed prefix."""
    paths = paths or TransferPaths(relaxed_prefix, election.num_candidates)
    if alphabet is None:
        alphabet = manipulation_alphabet(election)
    rankings = list(dict.fromkeys(list(election.profile.rankings()) + [tuple(r) for r in alphabet]))
    by_sig: dict = {}
    class_of, reps, sigs, counts = {}, [], [], []
    for r in rankings:
        sig = paths.signature(r)
        k = by_sig.get(sig)
        if k is None:
            k = by_sig[sig] = len(reps)
            reps.append(r)
            sigs.append(sig)
            counts.append(0)
        class_of[r] = k
        counts[k] += election.profile[r]
    return EquivalenceClassTable(class_of, reps, sigs, counts)
