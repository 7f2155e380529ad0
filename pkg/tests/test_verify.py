import numpy as np
import pytest

from liftproject.cuts import CutRow
from liftproject.membership import FractionalPoint
from liftproject.verify import (
    CheckRecord,
    EnumerationDomain,
    check_duality,
    check_proposition3,
    check_theorem3,
    check_theorem4,
    check_validity,
    random_milp,
    run_suite,
)


def test_validity_passes_on_t1_cut(t1):
    cut = CutRow(coeffs=np.array([0.0, -1.0]), rhs=0.0, space="structural")
    dom = EnumerationDomain(caps=[1])
    rec = check_validity(t1, [cut], dom)
    assert rec.passed


def test_validity_catches_planted_fault(t1):
    # tightening the valid cut -x2 >= 0 cuts off the feasible point (0, 0)
    bad = CutRow(coeffs=np.array([0.0, -1.0]), rhs=0.1, space="structural")
    dom = EnumerationDomain(caps=[1])
    rec = check_validity(t1, [bad], dom)
    assert not rec.passed
    assert "(0,)" in rec.detail


def test_validity_respects_cap(t1):
    cut = CutRow(coeffs=np.array([0.0, -1.0]), rhs=0.0, space="structural")
    dom = EnumerationDomain(caps=[100], max_points=10)
    rec = check_validity(t1, [cut], dom)
    assert rec.skipped is not None


def test_suites_pass_small_runs():
    for suite in ("theorem3", "theorem4", "duality", "proposition3"):
        res = run_suite(suite, count=20, seed=5)
        assert res.failed == 0, res.failures[:3]
        assert res.passed > 0
    res = run_suite("validity", count=6, seed=5)
    assert res.failed == 0, res.failures[:3]
    assert res.passed > 0


def test_fault_injection_trips_validity():
    res = run_suite("validity", count=4, seed=3, corrupt_rhs=0.4)
    assert res.failed > 0


def test_unknown_suite_rejected():
    with pytest.raises(ValueError):
        run_suite("nonsense", count=1)


def test_random_milp_is_feasible_and_bounded(rng):
    from liftproject.closure import ClosureConfig, optimize_closure

    inst = random_milp(rng)
    # the seeded point satisfies every row
    acts = inst.nm.a @ inst.x_seed - inst.nm.b
    assert acts.min() >= -1e-9
    rep = optimize_closure(inst.nm, ClosureConfig(mode="pe", time_limit=5))
    assert np.isfinite(rep.z_lp)


def test_check_records_report_deviation(t1):
    pt = FractionalPoint.from_point(t1, np.array([0.5, 1.0]))
    from liftproject.membership import build_membership_lp, membership_value

    prob = build_membership_lp(t1, pt, 0)
    _, res = membership_value(prob)
    rec3 = check_theorem3(t1, res.basis, 0, pt)
    rec4 = check_theorem4(t1, res.basis, 0, pt)
    assert rec3.passed and rec3.deviation < 1e-12
    assert rec4.passed and rec4.deviation < 1e-12
    rec_d = check_duality(t1, pt, 0)
    assert rec_d.passed
    rec_p = check_proposition3(t1, pt, 0)
    assert rec_p.passed


def test_lemma3_regime_is_skipped():
    # membership of an interior point ends with the variable at its upper
    # bound: the oracle records a skip, not a failure
    from liftproject.membership import build_membership_lp, membership_value
    from test_membership import interval_milp

    nm = interval_milp(3.0)
    pt = FractionalPoint.from_point(nm, np.array([1.5]))
    prob = build_membership_lp(nm, pt, 0)
    _, res = membership_value(prob)
    rec = check_theorem3(nm, res.basis, 0, pt)
    assert rec.skipped is not None
