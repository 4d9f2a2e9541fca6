import math

import pytest
from hypothesis import given, strategies as st

from dynmatch import CycleDetected, InstanceError, RoleConflict, build_instance
from dynmatch.dda import ScriptedCoins, expected_value_exact
from dynmatch.generators import two_edge_path, random_instance, tightness
from dynmatch.market import DepartureModel, REVEALED, resolve_deadlines
from dynmatch.oracle import offline_opt, verify_certificate
from dynmatch.pdda import (
    decompose_two_matching,
    order_preserving,
    run_pdda,
    run_pdda_known_departures,
    run_pdda_unknown_departures,
)

from conftest import brute_mwm, ledger_gap, usable_weights


def test_path_expectation_and_decomposition():
    inst = two_edge_path(3.0)
    assert expected_value_exact(run_pdda, inst) == 2.0
    assert offline_opt(inst).value == 3.0
    res = run_pdda(inst, 0, check_every_step=True)
    assert res.passed, res.failures()
    assert res.info["virtual_pairs"] == [(1, 2), (2, 3)]
    assert decompose_two_matching(res.info["virtual_pairs"]) == [[1, 2, 3]]
    causes = [r.cause for r in res.info["role_log"]]
    assert causes[0] == "coin" and "propagation" in causes


def test_tightness_expectation():
    inst = tightness(0.01)
    e = expected_value_exact(run_pdda, inst)
    assert e == 0.5
    assert e / offline_opt(inst).value == pytest.approx(1 / (4 - 0.02), abs=1e-12)


def test_single_vertex():
    assert run_pdda(build_instance(1, {}, 3)).total_value == 0


def test_needs_constant_deadline():
    inst = build_instance(2, {(1, 2): 1}, DepartureModel.per_vertex([2, 1]))
    with pytest.raises(InstanceError):
        run_pdda(inst)


def test_known_departures_drop_out_of_order_edges():
    inst = build_instance(2, {(1, 2): 1}, DepartureModel.per_vertex([5, 1]))
    assert dict(order_preserving(inst, (5, 1)).values) == {}
    res = run_pdda_known_departures(inst)
    assert res.total_value == 0 and res.info["dropped_edges"] == 1
    assert offline_opt(inst).value == 1


def test_tie_in_departure_order_is_kept():
    inst = build_instance(2, {(1, 2): 1}, DepartureModel.per_vertex([2, 1]))
    assert dict(order_preserving(inst, (2, 1)).values) == {(1, 2): 1.0}


def test_partner_gone_is_audited():
    inst = build_instance(2, {(1, 2): 1}, DepartureModel.per_vertex([3, 0], REVEALED))
    for seed in range(6):
        res = run_pdda_unknown_departures(inst, seed=seed)
        assert res.total_value == 0
        assert [a.name for a in res.audit if a.name == "partner_gone"] == ["partner_gone"]
        assert res.passed


def test_decompose_edge_cases():
    assert decompose_two_matching([]) == []
    with pytest.raises(CycleDetected):
        decompose_two_matching([(1, 2), (2, 3), (3, 1)])
    with pytest.raises(CycleDetected):
        decompose_two_matching([(1, 2), (1, 3), (1, 4)])
    with pytest.raises(RoleConflict):
        decompose_two_matching([(1, 2)], {1: "S", 2: "S"})


@given(T=st.integers(1, 9), d=st.integers(1, 4), seed=st.integers(0, 2**31))
def test_expectation_is_half_the_final_duals(T, d, seed):
    inst = random_instance(T, d, 0.7, "int100", seed)
    exact = expected_value_exact(run_pdda, inst)
    ledger = run_pdda(inst, 0).ledger
    half = 0.5 * (math.fsum(ledger.p_final.values()) + math.fsum(ledger.q_final.values()))
    assert exact == pytest.approx(half, abs=1e-9)
    assert 4 * exact >= brute_mwm(dict(inst.values)) - 1e-9


@given(T=st.integers(1, 40), d=st.integers(1, 6), seed=st.integers(0, 2**31))
def test_run_invariants(T, d, seed):
    inst = random_instance(T, d, 0.5, "uniform", seed)
    res = run_pdda(inst, seed, check_every_step=True)
    assert res.passed, res.failures()
    assert abs(ledger_gap(res.ledger)) <= 1e-9
    lam = res.info["certificate"]
    for (i, j), v in inst.values.items():
        assert v <= lam[i] + lam[j] + 1e-9
    # each real vertex resolves at most once
    seen = [r.vertex for r in res.info["role_log"]]
    assert len(seen) == len(set(seen))
    paths = decompose_two_matching(res.info["virtual_pairs"], res.info["roles"])
    roles = res.info["roles"]
    for path in paths:
        for a, b in zip(path, path[1:]):
            assert {roles[a], roles[b]} <= {"S", "B"} and roles[a] != roles[b]


@given(T=st.integers(1, 30), d=st.integers(0, 5), seed=st.integers(0, 2**31))
def test_constant_deadline_variants_agree(T, d, seed):
    inst = random_instance(T, d, 0.6, "int100", seed)
    base = run_pdda(inst, seed)
    for other in (run_pdda_known_departures(inst, seed=seed), run_pdda_unknown_departures(inst, seed=seed)):
        assert other.matching == base.matching
        assert other.total_value == base.total_value


@given(T=st.integers(1, 25), delta=st.sampled_from([0.3, 0.5, 0.8]), seed=st.integers(0, 2**31))
def test_stochastic_variants_are_valid(T, delta, seed):
    inst = random_instance(T, 4, 0.6, "int100", seed, departure=DepartureModel.geometric(delta))
    dl = resolve_deadlines(inst, seed)
    for fn in (run_pdda_known_departures, run_pdda_unknown_departures):
        res = fn(inst, seed=seed, check_every_step=True)
        assert res.passed, res.failures()
        assert abs(ledger_gap(res.ledger)) <= 1e-9
        assert res.total_value <= brute_mwm(usable_weights(inst, dl)) + 1e-9
    cert = run_pdda_unknown_departures(inst, seed=seed).info["certificate"]
    assert verify_certificate(inst, cert, deadlines=dl).passed


def test_coins_only_for_undetermined_vertices():
    inst = two_edge_path(3.0)
    res = run_pdda(inst, coins=ScriptedCoins([1]))
    assert res.info["coins_used"] == 1
    assert res.matching.pairs == [(1, 2, 2)]
    res = run_pdda(inst, coins=ScriptedCoins([0]))
    assert res.matching.pairs == [(2, 3, 3)]
