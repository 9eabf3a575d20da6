"""Best-first branch and bound over election-order prefixes.

The search walks prefixes of possible counts, attaching to each a lower bound
on the manipulation needed to reach any count that starts with it.  Leaves
(complete outcomes with different winners) tighten the running upper limit
``rul``; the smallest bound left on the frontier is the running lower bound
``rlb``.  When nothing remains to expand the answer is certified.
"""

from __future__ import annotations

import heapq
import itertools
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .election import BallotProfile, Election
from .lower_bounds import NEW, combined_heuristic_lb
from .oracle import Oracle, Status, evaluate
from .orders import as_order, canonical, leaf_status, relax, remaining
from .upper_bounds import UpperBoundReport, best_upper_bound


@dataclass(frozen=True)
class SearchConfig:
    tally_mode: str = NEW
    dlb: bool = True
    lse: bool = True
    oracle: Oracle = field(default_factory=Oracle)
    use_external_ub: bool = True
    external_ub: int | None = None
    external_profile: BallotProfile | None = None
    timeout: float | None = None
    threads: int = 1
    node_budget: float = 100.0
    leaf_budget: float = 150.0
    seen_cap: int = 1_000_000
    trace: bool = True


@dataclass(frozen=True)
class SearchNode:
    lb: int
    prefix: tuple
    is_leaf: bool = False


@dataclass
class Stats:
    expanded: int = 0
    pruned: int = 0
    dominated: int = 0
    oracle_calls: int = 0
    infeasible: int = 0
    leaves: int = 0
    skipped_reported: int = 0

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class MarginResult:
    lower_bound: int
    exact: bool
    upper_bounds: UpperBoundReport
    stats: Stats
    runtime_s: float
    timed_out: bool = False
    rul_trace: list = field(default_factory=list)
    rlb_trace: list = field(default_factory=list)

    def to_json(self, trace: bool = False) -> dict:
        out = {
            "lower_bound": self.lower_bound,
            "exact": self.exact,
            "upper_bounds": self.upper_bounds.to_json(),
            "stats": self.stats.to_json(),
            "runtime_s": round(self.runtime_s, 4),
            "timed_out": self.timed_out,
        }
        if trace:
            out["trace"] = {"rul": self.rul_trace, "rlb": self.rlb_trace}
        return out


class Frontier:
    """Min-heap on lower bound; equal bounds pop first-in first-out, then longer prefix first."""

    def __init__(self):
        self._heap = []
        self._count = itertools.count()

    def push(self, node: SearchNode):
        heapq.heappush(self._heap, (node.lb, next(self._count), -len(node.prefix), node))

    def pop(self) -> SearchNode:
        return heapq.heappop(self._heap)[-1]

    def min_lb(self):
        return self._heap[0][0] if self._heap else None

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)


class SeenTable:
    """Smallest bound recorded per relaxed order, with LRU eviction."""

    def __init__(self, cap: int):
        self.cap = cap
        self._d: OrderedDict = OrderedDict()

    def dominated(self, prefix, lb) -> bool:
        key = canonical(relax(prefix))
        old = self._d.get(key)
        if old is not None and old <= lb:
            self._d.move_to_end(key)
            return True
        self._d[key] = lb
        self._d.move_to_end(key)
        while len(self._d) > self.cap:
            self._d.popitem(last=False)
        return False

    def __len__(self):
        return len(self._d)


def dominated(node: SearchNode, seen: SeenTable) -> bool:
    """True when an equivalent relaxed order was already recorded with a bound no larger.

    On a miss the node's bound is recorded.
    """
    return seen.dominated(node.prefix, node.lb)


def _evaluate_child(election: Election, config: SearchConfig, parent_lb: int, prefix: tuple, rul: int):
    """Bound one child prefix.

    Returns ``(kind, node)`` with kind one of "skip", "pruned", "infeasible"
    or "ok"; ``node`` is set for "ok".  Also returns whether the oracle ran.
    """
    n, N = election.num_candidates, election.seats
    is_leaf, final_seated = leaf_status(prefix, n, N)
    if is_leaf and final_seated == election.reported_winners:
        return "skip", None, False
    h = combined_heuristic_lb(election, prefix, parent_lb, config.tally_mode, config.dlb).value
    if h >= rul:
        return "pruned", None, False
    budget = config.leaf_budget if is_leaf else config.node_budget
    res = evaluate(config.oracle, election, prefix, h, rul, budget)
    if res.status is Status.INFEASIBLE:
        return "infeasible", None, True
    if res.status is Status.TIMED_OUT:
        lb = h
    else:
        lb = max(h, int(res.value))
    return "ok", SearchNode(lb, prefix, is_leaf), True


def expand_and_evaluate(election: Election, parent: SearchNode, rul: int, config: SearchConfig, stats: Stats, pool=None) -> list:
    """Children of ``parent`` that survive pruning, in a fixed order."""
    rem = sorted(remaining(parent.prefix, election.num_candidates))
    prefixes = [parent.prefix + ((c, a),) for c in rem for a in (0, 1)]
    if pool is not None and len(prefixes) > 1:
        results = list(pool.map(lambda p: _evaluate_child(election, config, parent.lb, p, rul), prefixes))
    else:
        results = [_evaluate_child(election, config, parent.lb, p, rul) for p in prefixes]
    children = []
    for kind, node, called in results:
        stats.oracle_calls += called
        if kind == "skip":
            stats.skipped_reported += 1
        elif kind == "pruned":
            stats.pruned += 1
        elif kind == "infeasible":
            stats.infeasible += 1
        else:
            children.append(node)
    return children


def margin_stv(election: Election, config: SearchConfig | None = None) -> MarginResult:
    """Certified lower bound on the margin of ``election``."""
    config = config or SearchConfig()
    start = time.monotonic()
    deadline = None if config.timeout is None else start + config.timeout
    ub = best_upper_bound(
        election,
        external=config.external_ub if config.use_external_ub else None,
        external_profile=config.external_profile if config.use_external_ub else None,
    )
    rul = ub.best
    stats = Stats()
    frontier = Frontier()
    seen = SeenTable(config.seen_cap) if config.lse else None
    rul_trace, rlb_trace = [rul], []
    pool = ThreadPoolExecutor(config.threads) if config.threads > 1 else None
    timed_out = False

    def absorb(children):
        nonlocal rul
        for child in children:
            if child.is_leaf:
                stats.leaves += 1
                if child.lb < rul:
                    rul = child.lb
                    if config.trace:
                        rul_trace.append(rul)
                continue
            if seen is not None and dominated(child, seen):
                stats.dominated += 1
                continue
            frontier.push(child)

    try:
        absorb(expand_and_evaluate(election, SearchNode(0, ()), rul, config, stats, pool))
        rlb = frontier.min_lb() if frontier else rul
        rlb_trace.append(rlb)
        while frontier and rlb < rul:
            if deadline is not None and time.monotonic() > deadline:
                timed_out = True
                break
            node = frontier.pop()
            if node.lb >= rul:
                stats.pruned += 1
                continue
            stats.expanded += 1
            absorb(expand_and_evaluate(election, node, rul, config, stats, pool))
            if frontier:
                new = frontier.min_lb()
                if new > rlb:
                    rlb = new
                    if config.trace:
                        rlb_trace.append(rlb)
        if not frontier and not timed_out:
            rlb = rul
            rlb_trace.append(rlb)
    finally:
        if pool is not None:
            pool.shutdown()
    # nothing on the frontier can beat a leaf already found
    lower = min(rlb, rul)
    return MarginResult(
        lower_bound=int(lower),
        exact=(not timed_out) and lower == ub.best,
        upper_bounds=ub,
        stats=stats,
        runtime_s=time.monotonic() - start,
        timed_out=timed_out,
        rul_trace=rul_trace,
        rlb_trace=rlb_trace,
    )
