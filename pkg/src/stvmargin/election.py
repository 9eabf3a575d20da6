"""Election data model: profiles, quota, BLT ingestion and manipulation distance."""

from __future__ import annotations

import enum
import io
import re
import shlex
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

Ranking = tuple  # tuple[int, ...] of distinct 0-based candidate indices


class ParseError(ValueError):
    """Raised for malformed BLT input; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TiePolicy(enum.Enum):
    """How ties between candidates are resolved during tabulation.

    BY_INDEX picks the lowest candidate index among tied candidates, both
    for elimination and for seating order.  BY_FIRST_PREF first picks the
    candidate(s) with the smallest (elimination) or largest (seating)
    first-preference tally, then falls back to BY_INDEX.
    """

    BY_INDEX = "by-index"
    BY_FIRST_PREF = "by-first-pref"


@dataclass(frozen=True)
class Rules:
    """Counting rules shared by tabulation and the bounds machinery.

    ``decimals=None`` keeps transfer values exact; an integer truncates every
    transfer value toward zero to that many decimal places.
    """

    decimals: int | None = None
    tie_policy: TiePolicy = TiePolicy.BY_INDEX

    def transfer_value(self, tally: Fraction, quota: int) -> Fraction:
        """Surplus fraction ``(tally - quota) / tally``, clamped at zero."""
        if tally <= quota:
            return Fraction(0)
        tv = (tally - quota) / tally
        return truncate(tv, self.decimals)


def truncate(value: Fraction, decimals: int | None) -> Fraction:
    if decimals is None:
        return value
    scale = 10**decimals
    return Fraction(value.numerator * scale // value.denominator, scale)


def compute_quota(total_ballots: int, seats: int) -> int:
    """Droop quota: floor(total / (seats + 1)) + 1."""
    if seats < 1:
        raise ValueError("seats must be at least 1")
    if total_ballots < 0:
        raise ValueError("total_ballots must be non-negative")
    return total_ballots // (seats + 1) + 1


def _check_ranking(ranking: Sequence[int], num_candidates: int | None = None) -> Ranking:
    r = tuple(int(c) for c in ranking)
    if not r:
        raise ValueError("a ranking needs at least one candidate")
    if len(set(r)) != len(r):
        raise ValueError(f"ranking {r} repeats a candidate")
    if num_candidates is not None and any(c < 0 or c >= num_candidates for c in r):
        raise ValueError(f"ranking {r} has a candidate outside 0..{num_candidates - 1}")
    return r


class BallotProfile:
    """Immutable multiset of ballot types (ranking -> count)."""

    __slots__ = ("_counts", "_items", "total")

    def __init__(self, counts: Mapping[Sequence[int], int] | Iterable[tuple[Sequence[int], int]] = ()):
        merged: dict[Ranking, int] = {}
        items = counts.items() if isinstance(counts, Mapping) else counts
        for ranking, n in items:
            n = int(n)
            if n < 0:
                raise ValueError("ballot counts must be non-negative")
            if n == 0:
                continue
            r = _check_ranking(ranking)
            merged[r] = merged.get(r, 0) + n
        self._items = tuple(sorted(merged.items()))
        self._counts = dict(self._items)
        self.total = sum(merged.values())

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, ranking: Sequence[int]) -> int:
        return self._counts.get(tuple(ranking), 0)

    def __contains__(self, ranking) -> bool:
        return tuple(ranking) in self._counts

    def __eq__(self, other):
        if not isinstance(other, BallotProfile):
            return NotImplemented
        return self._items == other._items

    def __hash__(self):
        return hash(self._items)

    def __repr__(self):
        return f"BallotProfile({dict(self._items)!r})"

    def rankings(self) -> tuple[Ranking, ...]:
        return tuple(r for r, _ in self._items)

    def counts(self) -> dict[Ranking, int]:
        return dict(self._counts)

    def first_preferences(self, num_candidates: int) -> list[int]:
        tallies = [0] * num_candidates
        for ranking, n in self._items:
            tallies[ranking[0]] += n
        return tallies

    def moved(self, source: Sequence[int], target: Sequence[int], n: int) -> "BallotProfile":
        """Return a copy with ``n`` ballots of ``source`` rewritten as ``target``."""
        counts = self.counts()
        source, target = tuple(source), tuple(target)
        if counts.get(source, 0) < n:
            raise ValueError(f"only {counts.get(source, 0)} ballots of type {source}")
        counts[source] -= n
        counts[target] = counts.get(target, 0) + n
        return BallotProfile(counts)


def manipulation_distance(original: BallotProfile, modified: BallotProfile) -> int:
    """Number of ballots whose ranking must be rewritten to turn one profile into the other."""
    if original.total != modified.total:
        raise ValueError(
            f"profiles differ in size ({original.total} vs {modified.total}); "
            "manipulations keep the number of ballots fixed"
        )
    a, b = original.counts(), modified.counts()
    return sum(max(n - a.get(r, 0), 0) for r, n in b.items())


@dataclass(frozen=True)
class Election:
    """An STV contest: candidates, ballots, seats, quota and reported winners.

    ``winners`` may be supplied; otherwise they are obtained by tabulating the
    profile under ``rules``.
    """

    num_candidates: int
    profile: BallotProfile
    seats: int
    quota: int | None = None
    winners: frozenset | None = None
    names: tuple | None = None
    title: str = ""
    rules: Rules = field(default_factory=Rules)

    def __post_init__(self):
        if not 1 <= self.seats < self.num_candidates:
            raise ValueError(
                f"need 1 <= seats < candidates, got {self.seats} seats for {self.num_candidates} candidates"
            )
        for ranking, _ in self.profile:
            if any(c < 0 or c >= self.num_candidates for c in ranking):
                raise ValueError(f"ranking {ranking} mentions an unknown candidate")
        if self.quota is None:
            object.__setattr__(self, "quota", compute_quota(self.profile.total, self.seats))
        if self.winners is not None:
            w = frozenset(self.winners)
            if len(w) != self.seats:
                raise ValueError("number of reported winners must equal the number of seats")
            object.__setattr__(self, "winners", w)
        if self.names is not None:
            if len(self.names) != self.num_candidates:
                raise ValueError("one name per candidate is required")
            object.__setattr__(self, "names", tuple(self.names))

    @property
    def candidates(self) -> range:
        return range(self.num_candidates)

    @cached_property
    def tabulation(self):
        from .tabulation import tabulate

        return tabulate(self)

    @property
    def reported_winners(self) -> frozenset:
        if self.winners is not None:
            return self.winners
        return self.tabulation.winners

    def name(self, c: int) -> str:
        if self.names is None:
            return _default_name(c, self.num_candidates)
        return self.names[c]

    def index_of(self, name: str) -> int:
        for c in self.candidates:
            if self.name(c) == name:
                return c
        raise KeyError(name)

    def with_profile(self, profile: BallotProfile, keep_quota: bool = False) -> "Election":
        """Same contest with a different profile; winners are recomputed."""
        return Election(
            self.num_candidates,
            profile,
            self.seats,
            quota=self.quota if keep_quota else None,
            names=self.names,
            title=self.title,
            rules=self.rules,
        )

    def with_rules(self, rules: Rules) -> "Election":
        return Election(
            self.num_candidates,
            self.profile,
            self.seats,
            quota=self.quota,
            winners=self.winners,
            names=self.names,
            title=self.title,
            rules=rules,
        )


def _default_name(c: int, n: int) -> str:
    if n <= 26:
        return chr(ord("A") + c)
    return f"C{c + 1}"


def make_election(
    ballots: Mapping[str | Sequence, int] | Iterable,
    seats: int,
    names: Sequence[str] | None = None,
    **kwargs,
) -> Election:
    """Build an election from rankings written with candidate names.

    >>> e = make_election({"A": 3, "B": 1}, seats=1)
    >>> e.quota
    3

    Rankings may be strings of single-letter names (``"BAC"``) or sequences
    of names.  Without ``names``, candidates are the letters used, sorted.
    """
    items = list(ballots.items()) if isinstance(ballots, Mapping) else list(ballots)
    if names is None:
        seen = sorted({x for ranking, _ in items for x in ranking})
        names = seen
    names = tuple(names)
    index = {n: i for i, n in enumerate(names)}
    counts = {}
    for ranking, n in items:
        key = tuple(index[x] for x in ranking)
        counts[key] = counts.get(key, 0) + n
    return Election(len(names), BallotProfile(counts), seats, names=names, **kwargs)


# -- BLT ------------------------------------------------------------------

_COMMENT = re.compile(r"#.*$")


def parse_blt(data: bytes | str, rules: Rules | None = None) -> Election:
    """Parse a BLT ballot file.

    Ballot weights multiply into counts, withdrawn candidates are removed
    from every ranking and from the candidate list (remaining candidates are
    re-indexed densely), and ballots left empty are discarded.  Repeated
    preferences on one ballot keep only their first occurrence.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    lines = data.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    stripped = [(i + 1, _COMMENT.sub("", ln).strip()) for i, ln in enumerate(lines)]
    stripped = [(i, ln) for i, ln in stripped if ln]
    if not stripped:
        raise ParseError("empty file", 1)
    pos = 0

    lineno, header = stripped[pos]
    parts = header.split()
    if len(parts) != 2:
        raise ParseError("header must be '<candidates> <seats>'", lineno)
    try:
        ncand, seats = int(parts[0]), int(parts[1])
    except ValueError:
        raise ParseError("header must contain two integers", lineno) from None
    if ncand < 2 or seats < 1:
        raise ParseError("need at least two candidates and one seat", lineno)
    pos += 1

    withdrawn: set[int] = set()
    while pos < len(stripped) and stripped[pos][1].startswith("-"):
        lineno, ln = stripped[pos]
        for tok in ln.split():
            try:
                v = int(tok)
            except ValueError:
                raise ParseError(f"bad withdrawal token {tok!r}", lineno) from None
            if v >= 0 or -v > ncand:
                raise ParseError(f"withdrawal {v} out of range", lineno)
            withdrawn.add(-v - 1)
        pos += 1

    raw: dict[tuple, int] = {}
    terminated = False
    while pos < len(stripped):
        lineno, ln = stripped[pos]
        pos += 1
        toks = ln.split()
        if toks == ["0"]:
            terminated = True
            break
        try:
            nums = [int(t) for t in toks]
        except ValueError:
            raise ParseError(f"non-integer token in ballot line {ln!r}", lineno) from None
        if len(nums) < 2 or nums[-1] != 0:
            raise ParseError("ballot line must end with 0", lineno)
        weight, prefs = nums[0], nums[1:-1]
        if weight < 0:
            raise ParseError("negative ballot weight", lineno)
        ranking = []
        for p in prefs:
            if p < 1 or p > ncand:
                raise ParseError(f"preference {p} out of range 1..{ncand}", lineno)
            c = p - 1
            if c not in withdrawn and c not in ranking:
                ranking.append(c)
        if ranking and weight:
            key = tuple(ranking)
            raw[key] = raw.get(key, 0) + weight
    if not terminated:
        raise ParseError("missing 0 line terminating the ballots", stripped[-1][0])

    names = []
    for k in range(ncand):
        if pos >= len(stripped):
            names.append(_default_name(k, ncand))
            continue
        lineno, ln = stripped[pos]
        pos += 1
        names.append(_unquote(ln))
    title = _unquote(stripped[pos][1]) if pos < len(stripped) else ""

    keep = [c for c in range(ncand) if c not in withdrawn]
    remap = {c: i for i, c in enumerate(keep)}
    counts = {tuple(remap[c] for c in r): n for r, n in raw.items()}
    if not 1 <= seats < len(keep):
        raise ParseError(f"{seats} seats cannot be filled from {len(keep)} candidates", stripped[0][0])
    return Election(
        len(keep),
        BallotProfile(counts),
        seats,
        names=tuple(names[c] for c in keep),
        title=title,
        rules=rules or Rules(),
    )


def _unquote(s: str) -> str:
    try:
        toks = shlex.split(s)
    except ValueError:
        return s.strip('"')
    return " ".join(toks) if toks else ""


def serialize_blt(election: Election) -> str:
    """Write an election back out as BLT text (one line per ballot type)."""
    out = io.StringIO()
    out.write(f"{election.num_candidates} {election.seats}\n")
    for ranking, n in election.profile:
        prefs = " ".join(str(c + 1) for c in ranking)
        out.write(f"{n} {prefs} 0\n")
    out.write("0\n")
    for c in election.candidates:
        out.write('"' + election.name(c).replace('"', "'") + '"\n')
    out.write('"' + election.title.replace('"', "'") + '"\n')
    return out.getvalue()
