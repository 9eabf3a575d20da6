"""Distance oracles: lower bounds on the manipulation needed to realize a prefix.

Three backends share one interface (:func:`evaluate`):

* pass-through, which simply echoes the heuristic bound;
* brute force, exact on tiny elections by exhaustive enumeration;
* external, which exports a mixed-integer nonlinear model as JSON and hands
  it to a solver command.

The model can also be checked against a concrete assignment, which is how
its semantics are tested without a solver.
"""

from __future__ import annotations

import enum
import itertools
import json
import os
import shlex
import subprocess
import tempfile
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction

from .election import BallotProfile, Election, manipulation_distance
from .orders import (
    ELIM,
    SEAT,
    TransferPaths,
    all_rankings,
    as_order,
    as_relaxed,
    equivalence_classes,
    flatten,
    relax,
)
from .tabulation import Outcome, tabulate, tabulate_all_ties


class Status(enum.Enum):
    INFEASIBLE = "infeasible"
    TIMED_OUT = "timed-out"
    BOUND = "bound"


@dataclass(frozen=True)
class OracleResult:
    status: Status
    value: int | float | Fraction | None = None
    exact: bool = False
    note: str = ""

    @classmethod
    def infeasible(cls, note=""):
        return cls(Status.INFEASIBLE, note=note)

    @classmethod
    def timed_out(cls, note=""):
        return cls(Status.TIMED_OUT, note=note)

    @classmethod
    def bound(cls, value, exact=False, note=""):
        if value < 0:
            raise ValueError("oracle bounds are non-negative")
        return cls(Status.BOUND, value, exact, note)


# -- model -----------------------------------------------------------------


@dataclass
class Var:
    name: str
    kind: str  # "cont" | "bin"
    lb: float
    ub: float


@dataclass
class Constraint:
    name: str
    relation: str  # "<=", ">=", "="
    rhs: float
    terms: list  # [(coef, (var names...)), ...]


@dataclass
class MinlpModel:
    vars: list = field(default_factory=list)
    objective: list = field(default_factory=list)  # [(coef, var)]
    constraints: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def var_names(self) -> list:
        return [v.name for v in self.vars]

    def __eq__(self, other):
        if not isinstance(other, MinlpModel):
            return NotImplemented
        return export_model(self) == export_model(other)


def _num(x):
    """JSON-friendly number: ints stay ints, other rationals become floats."""
    if isinstance(x, Fraction):
        if x.denominator == 1:
            return int(x)
        return float(x)
    return x


class _Builder:
    def __init__(self):
        self.model = MinlpModel()
        self._names = set()

    def var(self, name, kind="cont", lb=0, ub=None):
        if name not in self._names:
            self._names.add(name)
            self.model.vars.append(Var(name, kind, _num(lb), _num(ub)))
        return name

    def add(self, name, terms, relation, rhs):
        self.model.constraints.append(Constraint(name, relation, _num(rhs), [(_num(c), tuple(v)) for c, v in terms]))


def v_name(c, k):
    return f"v_{c}_{k}"


def q_name(c, k):
    return f"q_{c}_{k}"


def nq_name(c, k):
    return f"nq_{c}_{k}"


def t_name(k):
    return f"t_{k}"


def build_minlp(
    election: Election,
    relaxed_prefix,
    alphabet=None,
    epsilon: float | None = None,
    strict: bool = False,
    classes=None,
) -> MinlpModel:
    """Model of the cheapest manipulation realizing a (relaxed) prefix.

    Rounds are numbered 1..L where L is the number of relaxed entries.
    ``v_c_k`` is c's tally at the start of round k.  Eliminated
    super-candidates carry no "lowest tally" constraints unless ``strict``
    is set, in which case each member must at least lack a quota.
    """
    relaxed = as_relaxed(relaxed_prefix)
    n = election.num_candidates
    paths = TransferPaths(relaxed, n)
    if classes is None:
        classes = equivalence_classes(election, relaxed, alphabet, paths)
    Q = election.quota
    total = election.profile.total
    eps = Fraction(Q) * Fraction(1, 10**6) if epsilon is None else Fraction(epsilon)
    L = len(relaxed)
    b = _Builder()
    m = b.model
    m.meta = {
        "quota": Q,
        "ballots": total,
        "seats": election.seats,
        "epsilon": _num(eps),
        "rounds": L,
        "prefix": [[sorted(s), a] for s, a in relaxed],
        "classes": [list(r) for r in classes.representatives],
    }
    S = len(classes)
    for s in range(S):
        b.var(f"p_{s}", ub=total)
        b.var(f"m_{s}", ub=total)
        b.var(f"y_{s}", ub=total)
    m.objective = [(1, f"p_{s}") for s in range(S)]

    for s in range(S):
        b.add(f"conserve_{s}", [(1, [f"y_{s}"]), (-1, [f"p_{s}"]), (1, [f"m_{s}"])], "=", classes.counts[s])
    if S:
        b.add("moves_balance", [(1, [f"p_{s}"]) for s in range(S)] + [(-1, [f"m_{s}"]) for s in range(S)], "=", 0)

    # tallies at the start of each round
    for k in range(1, L + 1):
        for c in sorted(paths.standing[k - 1]):
            b.var(v_name(c, k), ub=total)

    seat_rounds = [k for k, (_, a) in enumerate(relaxed, start=1) if a == SEAT]
    for k in seat_rounds:
        if k < L:
            b.var(t_name(k), lb=0, ub=1)

    used_q = set()

    def q_var(c, k):
        b.var(q_name(c, k), "bin", 0, 1)
        b.var(nq_name(c, k), "bin", 0, 1)
        used_q.add((c, k))

    first_terms = {c: [] for c in range(n)}
    for s, rep in enumerate(classes.representatives):
        first_terms[rep[0]].append((1, [f"y_{s}"]))
    for c in range(n):
        b.add(f"tally_{c}_1", [(1, [v_name(c, 1)])] + [(-co, vs) for co, vs in first_terms[c]], "=", 0)

    # tally recurrence
    arrivals = {}  # (c, k) -> terms for round k's transfer
    for s, sig in enumerate(classes.signatures):
        _, per_round = sig
        for k, arrs in enumerate(per_round, start=1):
            if k >= L:
                break
            for arr in arrs:
                vars_ = [f"y_{s}"] + [t_name(j) for j in arr.factors if j < L]
                for kind, x, j in arr.caveats:
                    q_var(x, j)
                    vars_.append(q_name(x, j) if kind == "q" else nq_name(x, j))
                arrivals.setdefault((arr.candidate, k), []).append((1, vars_))
    for k in range(1, L):
        for c in sorted(paths.standing[k]):
            terms = [(1, [v_name(c, k + 1)]), (-1, [v_name(c, k)])]
            terms += [(-co, vs) for co, vs in arrivals.get((c, k), [])]
            b.add(f"tally_{c}_{k + 1}", terms, "=", 0)

    # seated candidates: quota binaries
    for k in seat_rounds:
        (c,) = relaxed[k - 1][0]
        q_var(c, k)
        b.add(f"seat_{c}_{k}", [(1, [q_name(c, k)])], "=", 1)
        if k < L:
            b.add(f"tv_{k}", [(1, [t_name(k), v_name(c, k)]), (-1, [v_name(c, k)])], "=", -Q)

    for c, k in sorted(used_q):
        b.add(f"quota_lo_{c}_{k}", [(1, [v_name(c, k)]), (-Q, [q_name(c, k)])], ">=", 0)
        b.add(f"quota_hi_{c}_{k}", [(1, [v_name(c, k)]), (Q - eps - total, [q_name(c, k)])], "<=", Q - eps)
        b.add(f"not_q_{c}_{k}", [(1, [q_name(c, k)]), (1, [nq_name(c, k)])], "=", 1)

    # eliminated candidates
    for k, (group, a) in enumerate(relaxed, start=1):
        if a != ELIM:
            continue
        if len(group) == 1:
            (c,) = group
            b.add(f"elim_below_quota_{c}_{k}", [(1, [v_name(c, k)])], "<=", Q - eps)
            for o in sorted(paths.standing[k - 1] - {c}):
                b.add(f"elim_lowest_{c}_{o}_{k}", [(1, [v_name(c, k)]), (-1, [v_name(o, k)])], "<=", 0)
        elif strict:
            for c in sorted(group):
                b.add(f"elim_below_quota_{c}_{k}", [(1, [v_name(c, k)])], "<=", Q - eps)

    m.vars.sort(key=lambda v: _var_sort_key(v.name))
    return m


_PREFIX_ORDER = {"p": 0, "m": 1, "y": 2, "v": 3, "t": 4, "q": 5, "nq": 6}


def _var_sort_key(name: str):
    head, *rest = name.split("_")
    return (_PREFIX_ORDER.get(head, 9), [int(x) for x in rest])


def export_model(model: MinlpModel) -> bytes:
    """Deterministic JSON encoding of a model."""
    doc = {
        "vars": [{"name": v.name, "kind": v.kind, "lb": v.lb, "ub": v.ub} for v in model.vars],
        "objective": {"sense": "min", "terms": [{"var": v, "coef": c} for c, v in model.objective]},
        "constraints": [
            {
                "name": k.name,
                "relation": k.relation,
                "rhs": k.rhs,
                "terms": [{"coef": c, "vars": list(vs)} for c, vs in k.terms],
            }
            for k in model.constraints
        ],
    }
    if model.meta:
        doc["meta"] = model.meta
    return (json.dumps(doc, indent=1, sort_keys=False) + "\n").encode()


def parse_model(data: bytes | str) -> MinlpModel:
    doc = json.loads(data)
    m = MinlpModel()
    m.vars = [Var(v["name"], v["kind"], v["lb"], v["ub"]) for v in doc["vars"]]
    m.objective = [(t["coef"], t["var"]) for t in doc["objective"]["terms"]]
    m.constraints = [
        Constraint(k["name"], k["relation"], k["rhs"], [(t["coef"], tuple(t["vars"])) for t in k["terms"]])
        for k in doc["constraints"]
    ]
    m.meta = doc.get("meta", {})
    return m


def check_assignment(model: MinlpModel, assignment: dict, tolerance: float = 1e-6):
    """Return ``(feasible, violated constraint names)`` for an assignment."""
    violated = []
    missing = [v.name for v in model.vars if v.name not in assignment]
    if missing:
        raise ValueError(f"assignment misses variables: {missing[:5]}")
    for v in model.vars:
        x = assignment[v.name]
        if (v.lb is not None and x < v.lb - tolerance) or (v.ub is not None and x > v.ub + tolerance):
            violated.append(f"bounds:{v.name}")
        if v.kind == "bin" and min(abs(x), abs(x - 1)) > tolerance:
            violated.append(f"integrality:{v.name}")
    scale = max(1, abs(model.meta.get("ballots", 1)))
    tol = tolerance * scale
    for k in model.constraints:
        lhs = 0
        for coef, vs in k.terms:
            term = coef
            for n in vs:
                term = term * assignment[n]
            lhs = lhs + term
        rhs = k.rhs
        ok = (
            (k.relation == "=" and abs(lhs - rhs) <= tol)
            or (k.relation == "<=" and lhs <= rhs + tol)
            or (k.relation == ">=" and lhs >= rhs - tol)
        )
        if not ok:
            violated.append(k.name)
    return not violated, violated


def objective_value(model: MinlpModel, assignment: dict):
    return sum(c * assignment[v] for c, v in model.objective)


def assignment_from_profile(election: Election, relaxed_prefix, modified: BallotProfile, classes=None) -> dict:
    """Variable values induced by counting ``modified`` along the prefix.

    The count must follow the prefix for some resolution of ties; members of
    a batched elimination are taken in whatever order the count allows.
    """
    relaxed = as_relaxed(relaxed_prefix)
    if classes is None:
        classes = equivalence_classes(election, relaxed)
    paths = TransferPaths(relaxed, election.num_candidates)
    mod = election.with_profile(modified, keep_quota=True)
    rounds = _round_states(mod, relaxed)
    if rounds is None:
        raise ValueError("the modified profile does not realize the prefix")
    Q = election.quota
    L = len(relaxed)
    a = {}
    y = [0] * len(classes)
    for r, n in modified:
        if r not in classes.class_of:
            raise ValueError(f"ranking {r} is outside the model's alphabet")
        y[classes.class_of[r]] += n
    for s in range(len(classes)):
        a[f"y_{s}"] = y[s]
        a[f"p_{s}"] = max(0, y[s] - classes.counts[s])
        a[f"m_{s}"] = max(0, classes.counts[s] - y[s])
    # moves within one class are invisible to the model
    for k in range(1, L + 1):
        tallies, tv = rounds[k - 1]
        for c in paths.standing[k - 1]:
            a[v_name(c, k)] = tallies[c]
            a[q_name(c, k)] = 1 if tallies[c] >= Q else 0
            a[nq_name(c, k)] = 1 - a[q_name(c, k)]
        if tv is not None:
            a[t_name(k)] = tv
    return a


def _round_states(election: Election, relaxed):
    """Tallies at the start of each relaxed round, following the prefix.

    Returns None when no resolution of ties follows the prefix.
    """
    from .tabulation import AUTO_SEATED, SEATED, _Count

    state = _Count(election)
    out = []
    for group, act in relaxed:
        tallies = dict(state.tally)
        tv = None
        members = set(group)
        snapshot_tv = Fraction(0)
        while members:
            d = state.decision()
            if d is None:
                return None
            kind, tied = d
            if kind == AUTO_SEATED:
                return None
            want = act == SEAT
            if (kind == SEATED) != want:
                return None
            pick = [c for c in tied if c in members]
            if not pick:
                return None
            c = pick[0]
            if want:
                t = state.seat(c)
                snapshot_tv = t if t is not None else Fraction(0)
            else:
                state.eliminate(c)
            members.discard(c)
        if act == SEAT:
            tv = snapshot_tv
        out.append((tallies, tv))
    return out


# -- brute force -------------------------------------------------------------


MAX_CANDIDATES = 5
MAX_BALLOTS = 25
MAX_CAP = 4


class InstanceTooLarge(ValueError):
    pass


@dataclass
class RealizationTable:
    """Every count reachable within ``cap`` ballot changes of the original."""

    cap: int
    complete: bool  # True when the whole profile space was covered
    order_cost: dict  # outcome order -> min distance
    auto_start: dict  # outcome order -> auto-seat index
    margin_any_ties: int | None  # cheapest change of winners under some tie resolution
    margin_policy: int | None  # cheapest change of winners under the tie policy
    profiles: int = 0

    def realization(self, prefix, changed_from=None) -> int | None:
        """Cheapest distance to a count that starts with ``prefix``."""
        best = None
        for order, d in self.order_cost.items():
            if best is not None and d >= best:
                continue
            out = Outcome(order, self.auto_start[order])
            if changed_from is not None and out.winners == changed_from:
                continue
            if out.realizes(prefix):
                best = d
        return best


def _profiles_within(election: Election, cap: int, alphabet):
    """Yield ``(distance, profile counts)`` for each distinct profile within ``cap``."""
    base = election.profile.counts()
    types = sorted(base)
    alphabet = [tuple(r) for r in alphabet]
    seen = {tuple(sorted(base.items()))}
    yield 0, base
    for k in range(1, cap + 1):
        for src in itertools.combinations_with_replacement(types, k):
            need = {}
            for s in src:
                need[s] = need.get(s, 0) + 1
            if any(base[s] < n for s, n in need.items()):
                continue
            for dst in itertools.combinations_with_replacement(alphabet, k):
                if set(dst) & need.keys():
                    continue  # replacing a ballot by its own type is a shorter move
                counts = dict(base)
                for s, n in need.items():
                    counts[s] -= n
                for t in dst:
                    counts[t] = counts.get(t, 0) + 1
                key = tuple(sorted((r, n) for r, n in counts.items() if n))
                if key in seen:
                    continue
                seen.add(key)
                yield k, counts


_TABLE_CACHE: "OrderedDict" = OrderedDict()
_TABLE_LOCK = threading.Lock()


def realization_table(election: Election, cap: int, alphabet=None) -> RealizationTable:
    """Enumerate profiles within ``cap`` changes and record every outcome."""
    if election.num_candidates > MAX_CANDIDATES or election.profile.total > MAX_BALLOTS or cap > MAX_CAP:
        raise InstanceTooLarge(
            f"brute force is limited to {MAX_CANDIDATES} candidates, {MAX_BALLOTS} ballots and cap {MAX_CAP}"
        )
    key = (election.num_candidates, election.profile, election.seats, election.quota, election.rules, cap)
    with _TABLE_LOCK:
        if key in _TABLE_CACHE:
            _TABLE_CACHE.move_to_end(key)
            return _TABLE_CACHE[key]
    if alphabet is None:
        alphabet = list(all_rankings(election.num_candidates))
    W = election.reported_winners
    cap_eff = min(cap, election.profile.total)
    order_cost, auto = {}, {}
    any_m = pol_m = None
    count = 0
    for d, counts in _profiles_within(election, cap_eff, alphabet):
        count += 1
        e2 = election.with_profile(BallotProfile(counts), keep_quota=True)
        outs = tabulate_all_ties(e2)
        winners = {o.winners for o in outs}
        for o in outs:
            if o.order not in order_cost:
                order_cost[o.order] = d
                auto[o.order] = o.auto_start
        if any_m is None and any(w != W for w in winners):
            any_m = d
        if pol_m is None:
            pw = next(iter(winners)) if len(winners) == 1 else tabulate(e2).winners
            if pw != W:
                pol_m = d
    table = RealizationTable(cap_eff, cap_eff >= election.profile.total, order_cost, auto, any_m, pol_m, count)
    with _TABLE_LOCK:
        _TABLE_CACHE[key] = table
        while len(_TABLE_CACHE) > 64:
            _TABLE_CACHE.popitem(last=False)
    return table


def brute_force_distance(election: Election, prefix, cap: int = 2, changed_winners: bool = False) -> OracleResult:
    """Exact realization distance of ``prefix`` if it is at most ``cap``.

    With ``changed_winners`` only counts whose winners differ from the
    reported ones are considered.
    """
    table = realization_table(election, cap)
    prefix = flatten(prefix) if prefix and isinstance(prefix[0][0], (frozenset, set)) else as_order(prefix)
    d = table.realization(prefix, election.reported_winners if changed_winners else None)
    if d is not None:
        return OracleResult.bound(d, exact=True)
    if table.complete:
        return OracleResult.infeasible("no profile realizes the prefix")
    return OracleResult.bound(table.cap + 1, exact=False, note="not realizable within cap")


# -- evaluation interface --------------------------------------------------


class OracleMode(enum.Enum):
    PASSTHROUGH = "none"
    BRUTE = "brute"
    EXTERNAL = "external"


@dataclass(frozen=True)
class Oracle:
    mode: OracleMode = OracleMode.PASSTHROUGH
    command: str | None = None
    cap: int = 2
    rel_gap: float = 0.01

    @classmethod
    def parse(cls, spec: str, cap: int = 2) -> "Oracle":
        if spec in ("none", "passthrough", ""):
            return cls()
        if spec == "brute":
            return cls(OracleMode.BRUTE, cap=cap)
        if spec.startswith("external:"):
            cmd = spec.split(":", 1)[1]
            if not cmd.strip():
                raise ValueError("external oracle needs a command")
            return cls(OracleMode.EXTERNAL, command=cmd)
        raise ValueError(f"unknown oracle {spec!r}")


def evaluate(oracle: Oracle, election: Election, prefix, heuristic_lb, rul=None, budget: float | None = None) -> OracleResult:
    """Lower bound for the prefix from the configured backend.

    ``prefix`` is a plain order (the external backend relaxes it before
    building the model) or an already relaxed one.
    """
    if oracle.mode is OracleMode.PASSTHROUGH:
        return OracleResult.bound(heuristic_lb, exact=False)
    if oracle.mode is OracleMode.BRUTE:
        res = brute_force_distance(election, prefix, cap=oracle.cap)
        if res.status is Status.BOUND and res.value < heuristic_lb:
            return OracleResult.bound(heuristic_lb, exact=False)
        return res
    relaxed = prefix
    if not prefix or not isinstance(prefix[0][0], (frozenset, set)):
        relaxed = relax(as_order(prefix))
    return _external(oracle, election, relaxed, heuristic_lb, budget, rul)


def _external(oracle: Oracle, election, relaxed_prefix, heuristic_lb, budget, rul=None) -> OracleResult:
    model = build_minlp(election, as_relaxed(relaxed_prefix))
    with tempfile.TemporaryDirectory(prefix="stvmargin-") as tmp:
        model_path = os.path.join(tmp, "model.json")
        reply_path = os.path.join(tmp, "reply.json")
        with open(model_path, "wb") as fh:
            fh.write(export_model(model))
        env = dict(os.environ)
        if budget is not None:
            env["MARGIN_TIME_LIMIT"] = str(budget)
        env["MARGIN_REL_GAP"] = str(oracle.rel_gap)
        if rul is not None:
            env["MARGIN_CUTOFF"] = str(int(rul))
        cmd = shlex.split(oracle.command) + [model_path, reply_path]
        try:
            proc = subprocess.run(
                cmd, capture_output=True, env=env, timeout=None if budget is None else budget + 30
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            return OracleResult.timed_out(f"solver failed: {exc}")
        if proc.returncode != 0:
            return OracleResult.timed_out(f"solver exited with {proc.returncode}: {proc.stderr.decode(errors='replace')[:200]}")
        text = None
        if os.path.exists(reply_path):
            with open(reply_path, "rb") as fh:
                text = fh.read()
        if not text:
            text = proc.stdout
        try:
            reply = json.loads(text)
        except ValueError:
            return OracleResult.timed_out("unreadable solver reply")
    return interpret_reply(reply, heuristic_lb)


def interpret_reply(reply: dict, heuristic_lb) -> OracleResult:
    status = reply.get("status")
    dual = reply.get("dual", reply.get("dual_bound"))
    if status == "infeasible":
        return OracleResult.infeasible("solver proved infeasibility")
    if status == "timeout" and dual is None:
        return OracleResult.timed_out("solver timed out")
    if status in ("optimal", "gap", "timeout"):
        if dual is None:
            return OracleResult.timed_out("solver reported no dual bound")
        # the model is continuous in p; a fractional dual rounds up to whole ballots
        value = max(_ceil_tol(dual), heuristic_lb)
        return OracleResult.bound(value, exact=status == "optimal")
    return OracleResult.timed_out(f"unknown solver status {status!r}")


def _ceil_tol(x: float, tol: float = 1e-6) -> int:
    import math

    return max(0, math.ceil(x - tol))
