"""Weighted Inclusive Gregory STV counting."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .election import BallotProfile, Election, Rules, TiePolicy, manipulation_distance

SEATED = "seated"
ELIMINATED = "eliminated"
AUTO_SEATED = "auto-seated"

ZERO = Fraction(0)


@dataclass(frozen=True)
class RoundRecord:
    round: int
    action: str
    candidates: tuple
    tallies: dict  # tallies of remaining candidates at the start of the round
    transfer_value: Fraction | None = None
    tied: tuple = ()  # candidates that were tied for this decision, if any
    exhausted: Fraction = ZERO  # cumulative exhausted value at the start of the round

    @property
    def candidate(self) -> int:
        return self.candidates[0]


@dataclass(frozen=True)
class TabulationResult:
    order: tuple  # ((candidate, 1|0), ...)
    rounds: tuple
    winners: frozenset
    exhausted_total: Fraction
    retained: dict = field(default_factory=dict)  # value kept by each seated candidate
    quota: int = 0
    tie_policy: TiePolicy = TiePolicy.BY_INDEX

    @property
    def auto_start(self) -> int:
        """Index in ``order`` where auto-seated entries begin (len(order) if none)."""
        n = len(self.order)
        if self.rounds and self.rounds[-1].action == AUTO_SEATED:
            return n - len(self.rounds[-1].candidates)
        return n


class _Count:
    """Mutable counting state, one slot per ballot type."""

    __slots__ = ("rankings", "counts", "holder", "value", "tally", "remaining",
                 "quota", "seats_left", "rules", "exhausted", "retained", "first_prefs")

    def __init__(self, election: Election):
        self.rankings = [r for r, _ in election.profile]
        self.counts = [n for _, n in election.profile]
        self.quota = election.quota
        self.rules = election.rules
        self.seats_left = election.seats
        self.remaining = set(election.candidates)
        self.tally = {c: ZERO for c in election.candidates}
        self.holder = [r[0] for r in self.rankings]
        self.value = [Fraction(1)] * len(self.rankings)
        for r, n in zip(self.rankings, self.counts):
            self.tally[r[0]] += n
        self.first_prefs = {c: self.tally[c] for c in election.candidates}
        self.exhausted = ZERO
        self.retained = {}

    def copy(self) -> "_Count":
        other = object.__new__(_Count)
        other.rankings = self.rankings
        other.counts = self.counts
        other.quota = self.quota
        other.rules = self.rules
        other.first_prefs = self.first_prefs
        other.seats_left = self.seats_left
        other.remaining = set(self.remaining)
        other.tally = dict(self.tally)
        other.holder = list(self.holder)
        other.value = list(self.value)
        other.exhausted = self.exhausted
        other.retained = dict(self.retained)
        return other

    def decision(self):
        """Return (kind, tied candidates) for the next round, or None when done."""
        if self.seats_left == 0:
            return None
        if self.seats_left == len(self.remaining):
            return AUTO_SEATED, tuple(sorted(self.remaining))
        with_quota = [c for c in self.remaining if self.tally[c] >= self.quota]
        if with_quota:
            top = max(self.tally[c] for c in with_quota)
            return SEATED, tuple(sorted(c for c in with_quota if self.tally[c] == top))
        low = min(self.tally[c] for c in self.remaining)
        return ELIMINATED, tuple(sorted(c for c in self.remaining if self.tally[c] == low))

    def _move(self, c: int, factor: Fraction | None, eligible: set):
        for i, h in enumerate(self.holder):
            if h != c:
                continue
            v = self.value[i] if factor is None else self.value[i] * factor
            n = self.counts[i]
            nxt = None
            for x in self.rankings[i]:
                if x in eligible:
                    nxt = x
                    break
            self.holder[i] = nxt
            self.value[i] = v
            if nxt is None:
                self.exhausted += v * n
            else:
                self.tally[nxt] += v * n

    def seat(self, c: int) -> Fraction | None:
        t = self.tally[c]
        eligible = {x for x in self.remaining if x != c and self.tally[x] < self.quota}
        self.remaining.discard(c)
        self.seats_left -= 1
        if t > self.quota:
            tv = self.rules.transfer_value(t, self.quota)
            before = self.exhausted + sum(self.tally[x] for x in self.remaining)
            self._move(c, tv, eligible)
            after = self.exhausted + sum(self.tally[x] for x in self.remaining)
            self.retained[c] = t - (after - before)
        else:
            # exact quota: the pile is spent and its ballots exhaust at value zero
            tv = None
            for i, h in enumerate(self.holder):
                if h == c:
                    self.holder[i] = None
                    self.value[i] = ZERO
            self.retained[c] = t
        return tv

    def eliminate(self, c: int):
        self.remaining.discard(c)
        eligible = {x for x in self.remaining if self.tally[x] < self.quota}
        self._move(c, None, eligible)

    def auto_seat(self) -> tuple:
        chosen = tuple(sorted(self.remaining, key=lambda x: (-self.tally[x], x)))
        for c in chosen:
            self.retained[c] = self.tally[c]
        self.remaining.clear()
        self.seats_left = 0
        return chosen

    def choose(self, kind: str, tied: tuple, policy: TiePolicy) -> int:
        if len(tied) == 1:
            return tied[0]
        if policy is TiePolicy.BY_FIRST_PREF:
            if kind == SEATED:
                best = max(self.first_prefs[c] for c in tied)
            else:
                best = min(self.first_prefs[c] for c in tied)
            tied = tuple(c for c in tied if self.first_prefs[c] == best)
        return min(tied)


def tabulate(election: Election, rules: Rules | None = None) -> TabulationResult:
    """Count the election, resolving ties by the configured tie policy."""
    if rules is not None:
        election = election.with_rules(rules)
    state = _Count(election)
    policy = election.rules.tie_policy
    order, rounds = [], []
    rnd = 1
    while (d := state.decision()) is not None:
        kind, tied = d
        tallies = {c: state.tally[c] for c in sorted(state.remaining)}
        exhausted = state.exhausted
        tie_info = tied if len(tied) > 1 and kind != AUTO_SEATED else ()
        if kind == AUTO_SEATED:
            chosen = state.auto_seat()
            order.extend((c, 1) for c in chosen)
            rounds.append(RoundRecord(rnd, kind, chosen, tallies, None, (), exhausted))
            break
        c = state.choose(kind, tied, policy)
        if kind == SEATED:
            tv = state.seat(c)
            order.append((c, 1))
        else:
            tv = None
            state.eliminate(c)
            order.append((c, 0))
        rounds.append(RoundRecord(rnd, kind, (c,), tallies, tv, tie_info, exhausted))
        rnd += 1
    return TabulationResult(
        order=tuple(order),
        rounds=tuple(rounds),
        winners=frozenset(c for c, a in order if a == 1),
        exhausted_total=state.exhausted,
        retained=dict(state.retained),
        quota=election.quota,
        tie_policy=policy,
    )


@dataclass(frozen=True)
class Outcome:
    """One way the count can go when every tie may be broken either way."""

    order: tuple
    auto_start: int

    @property
    def winners(self) -> frozenset:
        return frozenset(c for c, a in self.order if a == 1)

    def realizes(self, prefix) -> bool:
        """True when ``prefix`` is an initial segment of this outcome.

        Auto-seated candidates are seated simultaneously, so a prefix may list
        them in any order.
        """
        k = min(len(prefix), self.auto_start)
        if tuple(prefix[:k]) != self.order[:k]:
            return False
        if len(prefix) <= self.auto_start:
            return True
        auto = {c for c, _ in self.order[self.auto_start:]}
        rest = prefix[self.auto_start:]
        return len({c for c, _ in rest}) == len(rest) and all(a == 1 and c in auto for c, a in rest)


def tabulate_all_ties(election: Election, limit: int = 10_000) -> list:
    """Every outcome reachable by some resolution of the ties met while counting."""
    out: list = []
    seen = set()

    def walk(state: _Count, order: list):
        if len(out) >= limit:
            return
        d = state.decision()
        if d is None:
            key = tuple(order)
            if key not in seen:
                seen.add(key)
                out.append(Outcome(key, len(key)))
            return
        kind, tied = d
        if kind == AUTO_SEATED:
            chosen = state.auto_seat()
            key = tuple(order) + tuple((c, 1) for c in chosen)
            if key not in seen:
                seen.add(key)
                out.append(Outcome(key, len(order)))
            return
        for i, c in enumerate(tied):
            s = state if i == len(tied) - 1 else state.copy()
            if kind == SEATED:
                s.seat(c)
                walk(s, order + [(c, 1)])
            else:
                s.eliminate(c)
                walk(s, order + [(c, 0)])

    walk(_Count(election), [])
    return out


def iter_outcomes(election: Election) -> Iterator[Outcome]:
    yield from tabulate_all_ties(election)


def verify_manipulation(election: Election, modified: BallotProfile):
    """Re-count with a modified profile.

    Returns ``(distance, winners_changed, new_winners)``.
    """
    distance = manipulation_distance(election.profile, modified)
    result = tabulate(election.with_profile(modified))
    return distance, result.winners != election.reported_winners, result.winners
