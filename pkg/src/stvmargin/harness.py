"""Variant matrix runner and random election fixtures."""

from __future__ import annotations

import csv
import io
import json
import random
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .election import BallotProfile, Election, ParseError, Rules, parse_blt
from .lower_bounds import LEGACY, NEW
from .search import SearchConfig, margin_stv


@dataclass(frozen=True)
class VariantConfig:
    name: str
    legacy_tallies: bool
    dlb: bool
    lse: bool
    external_ub_enabled: bool

    def search_config(self, **overrides) -> SearchConfig:
        base = SearchConfig(
            tally_mode=LEGACY if self.legacy_tallies else NEW,
            dlb=self.dlb,
            lse=self.lse,
            use_external_ub=self.external_ub_enabled,
        )
        return replace(base, **overrides)


VARIANTS = {
    v.name: v
    for v in (
        VariantConfig("Baseline", True, False, False, False),
        VariantConfig("Baseline+U", True, False, False, True),
        VariantConfig("New", False, False, False, True),
        VariantConfig("New+LSE", False, False, True, True),
        VariantConfig("New+DLB", False, True, False, True),
        VariantConfig("New+Both", False, True, True, True),
    )
}


def variant(name: str) -> VariantConfig:
    try:
        return VARIANTS[name]
    except KeyError:
        raise ValueError(f"unknown variant {name!r}; choose from {', '.join(VARIANTS)}") from None


@dataclass
class RunReport:
    contest: str
    variant: str
    lower_bound: int | None = None
    lower_bound_range: tuple | None = None
    upper_bound: int | None = None
    runtime: float | None = None
    exact: bool | None = None
    repetitions: int = 0
    error: str | None = None

    def row(self) -> dict:
        lo, hi = self.lower_bound_range or (None, None)
        return {
            "contest": self.contest,
            "variant": self.variant,
            "lower_bound": self.lower_bound,
            "lower_bound_min": lo,
            "lower_bound_max": hi,
            "upper_bound": self.upper_bound,
            "mean_runtime_s": None if self.runtime is None else round(self.runtime, 4),
            "exact": self.exact,
            "repetitions": self.repetitions,
            "error": self.error,
        }


FIELDS = list(RunReport("", "").row())


def _run_one(path, election, names, repetitions, overrides):
    if election is None:
        try:
            election = parse_blt(Path(path).read_bytes())
        except (OSError, ParseError, ValueError) as exc:
            return [RunReport(str(path), n, error=str(exc)) for n in names]
    out = []
    for n in names:
        rep = RunReport(str(path), n, repetitions=repetitions)
        try:
            cfg = variant(n).search_config(**overrides)
            lbs, times = [], []
            for _ in range(repetitions):
                t0 = time.monotonic()
                res = margin_stv(election, cfg)
                times.append(time.monotonic() - t0)
                lbs.append(res.lower_bound)
            rep.lower_bound = round(statistics.mean(lbs)) if len(set(lbs)) > 1 else lbs[0]
            rep.lower_bound_range = (min(lbs), max(lbs))
            rep.upper_bound = res.upper_bounds.best
            rep.runtime = statistics.mean(times)
            rep.exact = res.exact
        except Exception as exc:  # keep other contests running
            rep.error = f"{type(exc).__name__}: {exc}"
        out.append(rep)
    return out


def run_matrix(contests, variants=None, repetitions: int = 3, budget: float | None = None,
               parallel_contests: int = 1, **overrides) -> list:
    """Run every (contest, variant) pair ``repetitions`` times.

    ``contests`` holds BLT paths or ``(label, Election)`` pairs.  Failures
    are isolated into error records.
    """
    names = list(variants or VARIANTS)
    for n in names:
        variant(n)
    if budget is not None:
        overrides.setdefault("timeout", budget)
    jobs = []
    for item in contests:
        if isinstance(item, tuple):
            jobs.append((item[0], item[1]))
        else:
            jobs.append((item, None))
    reports = []
    if parallel_contests > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(parallel_contests) as ex:
            futs = [ex.submit(_run_one, p, e, names, repetitions, overrides) for p, e in jobs]
            for f in futs:
                reports.extend(f.result())
    else:
        for p, e in jobs:
            reports.extend(_run_one(p, e, names, repetitions, overrides))
    return reports


def reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=FIELDS)
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def reports_json(reports) -> str:
    return json.dumps([r.row() for r in reports], indent=2)


def generate_random_election(num_candidates: int, num_ballots: int, seats: int, seed: int,
                              rules: Rules | None = None, max_types: int | None = None) -> Election:
    """Random election; rankings are uniform over non-empty partial permutations.

    ``max_types`` optionally limits the number of distinct rankings, which
    keeps brute-force checks cheap.
    """
    if not 2 <= num_candidates <= 6:
        raise ValueError("num_candidates must be between 2 and 6")
    if not 0 <= num_ballots <= 30:
        raise ValueError("num_ballots must be between 0 and 30")
    if not 1 <= seats < num_candidates:
        raise ValueError("need 1 <= seats < num_candidates")
    rng = random.Random(seed)
    # number of partial permutations of each length, for uniform sampling
    weights = []
    w = 1
    for k in range(1, num_candidates + 1):
        w *= num_candidates - k + 1
        weights.append(w)
    lengths = range(1, num_candidates + 1)

    def draw():
        k = rng.choices(lengths, weights=weights)[0]
        return tuple(rng.sample(range(num_candidates), k))

    pool = None
    if max_types is not None:
        pool = [draw() for _ in range(max_types)]
    counts = {}
    for _ in range(num_ballots):
        r = rng.choice(pool) if pool else draw()
        counts[r] = counts.get(r, 0) + 1
    return Election(num_candidates, BallotProfile(counts), seats, rules=rules or Rules())
