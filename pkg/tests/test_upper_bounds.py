import random

from stvmargin.election import BallotProfile, Rules, make_election
from stvmargin.harness import generate_random_election
from stvmargin.tabulation import verify_manipulation
from stvmargin.upper_bounds import best_upper_bound, simple_stv_ub, weub

import oracles
from conftest import A, B


def test_table1a_bounds(table1a):
    rep = best_upper_bound(table1a)
    assert (rep.weub, rep.simple_stv, rep.best) == (65, 188, 65)
    assert rep.rejected == []
    kinds = {c.kind for c in rep.certificates}
    assert {"weub", "simple-stv"} <= kinds


def test_certificates_recount(table1a):
    certs = []
    weub(table1a, certificates=certs)
    simple_stv_ub(table1a, certificates=certs)
    for cert in certs:
        d, changed, _ = verify_manipulation(table1a, cert.profile)
        assert changed and d == cert.distance


def test_external_bound_accepted(table1a):
    assert best_upper_bound(table1a, external=50).best == 50
    assert best_upper_bound(table1a, external=500).best == 65


def test_external_manipulation_rejected_when_winners_stay(table1a):
    same = table1a.profile.moved((B, A, 2), (A,), 5)
    rep = best_upper_bound(table1a, external_profile=same)
    assert rep.rejected and rep.best == 65


def test_external_manipulation_accepted(table1a):
    rep = best_upper_bound(table1a, external_profile=table1a.profile.moved((A,), (B,), 65))
    assert rep.external == 65


def test_external_bound_below_one_rejected(table1a):
    rep = best_upper_bound(table1a, external=0)
    assert rep.external is None and rep.rejected


def test_external_profile_with_wrong_total(table1a):
    rep = best_upper_bound(table1a, external_profile=BallotProfile({(A,): 3}))
    assert rep.rejected


def test_no_eliminations_means_no_weub():
    e = make_election({"A": 6, "B": 4}, seats=1)
    assert weub(e) is None
    assert simple_stv_ub(e) == 2
    # one ballot makes a 5-5 tie, which A loses by index
    assert oracles.naive_margin(list(e.profile), 2, 1, cap=2) == 1


def test_json(table1a):
    assert best_upper_bound(table1a).to_json() == {"weub": 65, "simple_stv": 188, "external": None, "best": 65}


def test_upper_bounds_never_below_true_margin():
    for seed in range(60):
        rng = random.Random(seed)
        n = rng.randint(2, 3)
        e = generate_random_election(n, rng.randint(2, 7), 1 if n == 2 else rng.randint(1, 2), seed)
        m = oracles.naive_margin(list(e.profile), n, e.seats, cap=2)
        best = best_upper_bound(e).best
        if m is None:
            assert best > 2
        else:
            assert best >= m
