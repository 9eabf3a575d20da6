import random
import sys
import textwrap

import pytest

from stvmargin.election import BallotProfile, make_election
from stvmargin.harness import generate_random_election
from stvmargin.oracle import (
    InstanceTooLarge,
    Oracle,
    OracleMode,
    OracleResult,
    Status,
    assignment_from_profile,
    brute_force_distance,
    build_minlp,
    check_assignment,
    evaluate,
    export_model,
    interpret_reply,
    objective_value,
    parse_model,
    realization_table,
)
from stvmargin.orders import as_relaxed, relax
from stvmargin.tabulation import tabulate

import oracles
from conftest import HAVE_SCIP, SCIP_ORACLE, A, B, C, E

# -- the model ----------------------------------------------------------------


def test_export_round_trip(table1a):
    m = build_minlp(table1a, as_relaxed(((C, 1), (E, 1))))
    data = export_model(m)
    assert export_model(build_minlp(table1a, as_relaxed(((C, 1), (E, 1))))) == data
    assert parse_model(data) == m
    assert m.meta["quota"] == 308
    assert m.meta["epsilon"] == pytest.approx(308e-6)


def test_original_count_is_feasible_at_zero(table1a):
    rel = as_relaxed(((C, 1), (E, 1)))
    m = build_minlp(table1a, rel)
    a = assignment_from_profile(table1a, rel, table1a.profile)
    assert check_assignment(m, a) == (True, [])
    assert objective_value(m, a) == 0


def test_weub_manipulation_is_feasible(table1a):
    mod = table1a.profile.moved((A,), (B,), 65)
    order = tabulate(table1a.with_profile(mod)).order
    rel = relax(order[:3])
    m = build_minlp(table1a, rel)
    a = assignment_from_profile(table1a, rel, mod)
    assert check_assignment(m, a)[0]
    assert objective_value(m, a) == 65


def test_assignment_must_follow_prefix(table1a):
    with pytest.raises(ValueError):
        assignment_from_profile(table1a, as_relaxed(((A, 1),)), table1a.profile)


def test_check_assignment_reports_missing_and_violations(table1a):
    rel = as_relaxed(((C, 1),))
    m = build_minlp(table1a, rel)
    with pytest.raises(ValueError):
        check_assignment(m, {})
    a = assignment_from_profile(table1a, rel, table1a.profile)
    a["v_2_1"] = 0  # C no longer holds a quota
    ok, bad = check_assignment(m, a)
    assert not ok and bad


def test_real_counts_satisfy_their_model():
    # the model must admit every real count, or its optimum would overshoot
    checked = 0
    for seed in range(150):
        rng = random.Random(seed)
        n = rng.randint(2, 5)
        e = generate_random_election(n, rng.randint(1, 15), rng.randint(1, n - 1), seed)
        counts = e.profile.counts()
        for _ in range(rng.randint(0, 3)):
            src = rng.choice(sorted(counts))
            if counts[src] == 0:
                continue
            counts[src] -= 1
            dst = tuple(rng.sample(range(n), rng.randint(1, n)))
            counts[dst] = counts.get(dst, 0) + 1
        mod = BallotProfile(counts)
        res = tabulate(e.with_profile(mod, keep_quota=True))
        for k in range(1, res.auto_start + 1):
            rel = relax(res.order[:k])
            m = build_minlp(e, rel)
            a = assignment_from_profile(e, rel, mod)
            ok, bad = check_assignment(m, a)
            assert ok, (seed, rel, bad)
            checked += 1
    assert checked > 100


# -- brute force ---------------------------------------------------------------


def test_realization_table_matches_naive_enumeration():
    for seed in range(40):
        rng = random.Random(seed)
        n = rng.randint(2, 3)
        e = generate_random_election(n, rng.randint(1, 5), 1 if n == 2 else rng.randint(1, 2), seed)
        table = realization_table(e, 2)
        naive = oracles.naive_distances(list(e.profile), n, e.seats, 2)
        assert {o: d for o, d in table.order_cost.items()} == {o: d for (o, _), d in naive.items()}
        assert table.margin_any_ties == oracles.naive_margin(list(e.profile), n, e.seats, 2)


def test_brute_force_result_kinds(table1a):
    e = make_election({"A": 2, "B": 1}, seats=1)
    assert brute_force_distance(e, ((0, 1),)) == OracleResult.bound(0, exact=True)
    assert brute_force_distance(e, ((1, 1),)).value == 1
    # every profile was visited and none seats both
    assert brute_force_distance(e, ((0, 1), (1, 1)), cap=3).status is Status.INFEASIBLE
    big = make_election({"A": 10, "B": 6, "C": 5}, seats=1)
    res = brute_force_distance(big, ((0, 0),), cap=1)
    assert res.status is Status.BOUND and res.value == 2 and not res.exact


def test_brute_force_refuses_large_instances(table1a):
    with pytest.raises(InstanceTooLarge):
        realization_table(table1a, 1)
    small = make_election({"A": 2, "B": 1}, seats=1)
    with pytest.raises(InstanceTooLarge):
        realization_table(small, 5)


# -- evaluation ----------------------------------------------------------------


def test_oracle_parse():
    assert Oracle.parse("none").mode is OracleMode.PASSTHROUGH
    assert Oracle.parse("brute", cap=3) == Oracle(OracleMode.BRUTE, cap=3)
    assert Oracle.parse("external:solve-it --fast").command == "solve-it --fast"
    for bad in ("external:", "magic"):
        with pytest.raises(ValueError):
            Oracle.parse(bad)


def test_evaluate_passthrough_and_brute():
    e = make_election({"A": 3, "B": 2, "C": 1}, seats=1)
    assert evaluate(Oracle(), e, ((1, 0),), 7) == OracleResult.bound(7)
    # brute force never reports below the heuristic it was given
    assert evaluate(Oracle(OracleMode.BRUTE), e, ((0, 1),), 1).value == 1
    assert evaluate(Oracle(OracleMode.BRUTE), e, ((2, 0),), 0).value == 0


def test_oracle_result_rejects_negative():
    with pytest.raises(ValueError):
        OracleResult.bound(-1)


@pytest.mark.parametrize(
    "reply,status,value,exact",
    [
        ({"status": "optimal", "dual": 3.0000001}, Status.BOUND, 3, True),
        ({"status": "gap", "dual": 2.2}, Status.BOUND, 3, False),
        ({"status": "gap", "dual": 0.5}, Status.BOUND, 4, False),
        ({"status": "timeout", "dual_bound": 5}, Status.BOUND, 5, False),
        ({"status": "timeout"}, Status.TIMED_OUT, None, False),
        ({"status": "infeasible"}, Status.INFEASIBLE, None, False),
        ({"status": "whatever"}, Status.TIMED_OUT, None, False),
    ],
)
def test_interpret_reply(reply, status, value, exact):
    res = interpret_reply(reply, 4 if reply.get("dual") == 0.5 else 0)
    assert res.status is status
    if value is not None:
        assert res.value == value and res.exact == exact


def _solver_script(tmp_path, body):
    path = tmp_path / "solver.py"
    path.write_text(textwrap.dedent(body))
    return Oracle.parse(f"external:{sys.executable} {path}")


def test_external_protocol(tmp_path, table1a):
    oracle = _solver_script(tmp_path, """
        import json, os, sys
        model = json.load(open(sys.argv[1]))
        assert model["meta"]["quota"] == 308
        json.dump({"status": "gap", "dual": float(os.environ["MARGIN_CUTOFF"]) - 0.5}, open(sys.argv[2], "w"))
    """)
    res = evaluate(oracle, table1a, ((C, 1),), 0, rul=65, budget=5)
    assert res == OracleResult.bound(65, exact=False)


def test_external_failures_are_timeouts(tmp_path, table1a):
    crash = _solver_script(tmp_path, "import sys; sys.exit(3)\n")
    assert evaluate(crash, table1a, ((C, 1),), 0).status is Status.TIMED_OUT
    junk = _solver_script(tmp_path, "print('not json')\n")
    assert evaluate(junk, table1a, ((C, 1),), 0).status is Status.TIMED_OUT


@pytest.mark.skipif(not HAVE_SCIP, reason="pyscipopt not installed")
def test_scip_bridge_on_worked_example(table1a):
    oracle = Oracle.parse(SCIP_ORACLE)
    assert evaluate(oracle, table1a, ((C, 1),), 0, budget=30).value == 0
    # A needs 58 more votes for a quota; the model need not see any further
    res = evaluate(oracle, table1a, ((A, 1),), 0, budget=30)
    assert res.status is Status.INFEASIBLE or res.value >= 58
