from itertools import combinations, product

import numpy as np
import pytest

from liftproject import simplex
from liftproject.simplex import BoundedLp, Status, dual_objective, solve
from liftproject.standard_form import Basis, to_standard


def make_lp(sense, c, a, d, lower=None, upper=None):
    c = np.asarray(c, float)
    a = np.asarray(a, float).reshape(-1, len(c)) if np.size(a) else np.zeros((0, len(c)))
    d = np.asarray(d, float)
    lower = np.zeros(len(c)) if lower is None else np.asarray(lower, float)
    upper = np.full(len(c), np.inf) if upper is None else np.asarray(upper, float)
    return BoundedLp(sense=sense, objective=c, a_eq=a, rhs=d, lower=lower, upper=upper)


def test_t1_relaxation_optimum(t1):
    slp = to_standard(t1)
    lp = make_lp("max", slp.c, slp.a, slp.b)
    res = solve(lp, start=slp.slack_basis())
    assert res.status is Status.OPTIMAL
    assert res.value == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(res.x[2:], [0.5, 1.0], atol=1e-9)


def test_infeasible_system():
    # x >= 1 and -x >= 0 in slack form
    lp = make_lp(
        "max",
        [0.0, 0.0, 1.0],
        [[-1.0, 0.0, 1.0], [0.0, -1.0, -1.0]],
        [1.0, 0.0],
    )
    assert solve(lp).status is Status.INFEASIBLE


def test_unbounded_no_rows():
    lp = make_lp("max", [1.0], np.zeros((0, 1)), [])
    assert solve(lp).status is Status.UNBOUNDED


def test_unbounded_with_rows():
    # max x1 with x1 - x2 = 0: both can grow forever
    lp = make_lp("max", [1.0, 0.0], [[1.0, -1.0]], [0.0])
    assert solve(lp).status is Status.UNBOUNDED


def test_min_sense_sign_conventions():
    # min x subject to x + s = 3, x in [1, 5]
    lp = make_lp(
        "min",
        [1.0, 0.0],
        [[1.0, 1.0]],
        [3.0],
        lower=[1.0, 0.0],
        upper=[5.0, np.inf],
    )
    res = solve(lp)
    assert res.status is Status.OPTIMAL
    assert res.value == pytest.approx(1.0)
    assert res.x[0] == pytest.approx(1.0)


def test_iteration_limit():
    lp = make_lp("max", [1.0, 1.0, 0.0], [[1.0, 2.0, 1.0]], [4.0])
    res = solve(lp, max_iter=0)
    assert res.status is Status.ITERATION_LIMIT


def test_time_limit_cap():
    lp = make_lp("max", [1.0, 1.0, 0.0], [[1.0, 2.0, 1.0]], [4.0])
    res = solve(lp, time_limit=0.0)
    assert res.status is Status.ITERATION_LIMIT
    # a generous budget does not change the optimum
    ok = solve(lp, time_limit=60.0)
    assert ok.status is Status.OPTIMAL


def enumerate_optimum(lp: BoundedLp):
    """Brute-force optimum over all basic solutions (exact for tiny LPs)."""
    r, c = lp.a_eq.shape
    best = None
    if r == 0:
        cmax = lp.objective if lp.sense == "max" else -lp.objective
        if np.any((cmax > 0) & ~np.isfinite(lp.upper)):
            return "unbounded"
        x = np.where(cmax > 0, lp.upper, lp.lower)
        val = float(cmax @ x)
        return val if lp.sense == "max" else -val
    feasible_seen = False
    for basis_cols in combinations(range(c), r):
        bmat = lp.a_eq[:, basis_cols]
        if abs(np.linalg.det(bmat)) < 1e-9:
            continue
        nonbasic = [j for j in range(c) if j not in basis_cols]
        finite_up = [j for j in nonbasic if np.isfinite(lp.upper[j])]
        for flags in product(
            *[[False, True] if j in finite_up else [False] for j in nonbasic]
        ):
            x = lp.lower.copy()
            for j, up in zip(nonbasic, flags):
                x[j] = lp.upper[j] if up else lp.lower[j]
            rhs = lp.rhs - lp.a_eq[:, nonbasic] @ x[list(nonbasic)]
            xb = np.linalg.solve(bmat, rhs)
            x[list(basis_cols)] = xb
            if np.any(x < lp.lower - 1e-7) or np.any(x > lp.upper + 1e-7):
                continue
            feasible_seen = True
            val = float(lp.objective @ x)
            if best is None:
                best = val
            elif lp.sense == "max":
                best = max(best, val)
            else:
                best = min(best, val)
    if not feasible_seen:
        return "infeasible"
    return best


def test_against_vertex_enumeration(rng):
    agree = 0
    for trial in range(200):
        r = int(rng.integers(1, 5))
        c = int(rng.integers(r, 5))
        a = rng.integers(-4, 5, size=(r, c)).astype(float)
        if np.linalg.matrix_rank(a) < r:  # solver requires full row rank
            continue
        d = rng.integers(-4, 5, size=r).astype(float)
        lower = np.zeros(c)
        upper = rng.integers(1, 6, size=c).astype(float)  # bounded domain
        sense = "max" if rng.integers(0, 2) else "min"
        obj = rng.integers(-4, 5, size=c).astype(float)
        lp = BoundedLp(sense, obj, a, d, lower, upper)
        expected = enumerate_optimum(lp)
        res = solve(lp)
        if expected == "infeasible":
            assert res.status is Status.INFEASIBLE, f"trial {trial}"
        else:
            assert res.status is Status.OPTIMAL, f"trial {trial}: {res.status}"
            assert res.value == pytest.approx(expected, abs=1e-7), f"trial {trial}"
            agree += 1
    assert agree > 50  # the corpus must actually exercise optimality


def test_determinism_bit_for_bit(t1):
    slp = to_standard(t1)
    lp = make_lp("max", slp.c, slp.a, slp.b)
    r1 = solve(lp, start=slp.slack_basis())
    r2 = solve(lp, start=slp.slack_basis())
    assert r1.value == r2.value  # exact float equality
    np.testing.assert_array_equal(r1.basis.basic, r2.basis.basic)
    np.testing.assert_array_equal(r1.x, r2.x)
    np.testing.assert_array_equal(r1.reduced_costs, r2.reduced_costs)


def test_warm_start_from_arbitrary_basis(rng):
    for _ in range(25):
        c = int(rng.integers(2, 6))
        r = int(rng.integers(1, c))
        a = rng.integers(-3, 4, size=(r, c)).astype(float)
        if np.linalg.matrix_rank(a) < r:
            continue
        d = rng.integers(-3, 4, size=r).astype(float)
        upper = rng.integers(1, 5, size=c).astype(float)
        lp = BoundedLp("max", rng.integers(-3, 4, size=c).astype(float), a, d,
                       np.zeros(c), upper)
        cold = solve(lp)
        cols = np.sort(rng.permutation(c)[:r])
        start = Basis(cols, rng.integers(0, 2, size=c).astype(bool))
        warm = solve(lp, start=start)
        assert warm.status is cold.status
        if cold.status is Status.OPTIMAL:
            assert warm.value == pytest.approx(cold.value, abs=1e-7)


def test_optimality_certificates(rng):
    # complementary slackness + strong duality at reported optima
    for _ in range(50):
        c = int(rng.integers(2, 6))
        r = int(rng.integers(1, c))
        a = rng.integers(-3, 4, size=(r, c)).astype(float)
        if np.linalg.matrix_rank(a) < r:
            continue
        d = rng.integers(-3, 4, size=r).astype(float)
        upper = rng.integers(1, 6, size=c).astype(float)
        lp = BoundedLp("max", rng.integers(-3, 4, size=c).astype(float), a, d,
                       np.zeros(c), upper)
        res = solve(lp)
        if res.status is not Status.OPTIMAL:
            continue
        gap = abs(res.value - dual_objective(lp, res))
        assert gap <= 1e-7 * (1.0 + abs(res.value))
        # dual feasibility signs (maximization)
        in_basis = np.zeros(c, bool)
        in_basis[res.basis.basic] = True
        for j in range(c):
            if in_basis[j] or lp.upper[j] - lp.lower[j] <= 0:
                continue
            if res.basis.at_upper[j]:
                assert res.reduced_costs[j] >= -1e-7
            else:
                assert res.reduced_costs[j] <= 1e-7
        # complementary slackness: basic reduced costs are zeroed exactly
        assert np.all(res.reduced_costs[res.basis.basic] == 0.0)


def test_phase1_repairs_stale_basis(t1):
    slp = to_standard(t1)
    lp = make_lp("max", slp.c, slp.a, slp.b)
    opt = solve(lp, start=slp.slack_basis())
    # perturb the rhs so the old optimal basis is primal infeasible
    lp2 = make_lp("max", slp.c, slp.a, slp.b - np.array([3.0, 1.0]))
    res = solve(lp2, start=opt.basis)
    assert res.status is Status.OPTIMAL
    cold = solve(lp2)
    assert res.value == pytest.approx(cold.value, abs=1e-9)


def test_bound_flip_path():
    # optimum requires a nonbasic variable at its upper bound
    lp = make_lp(
        "max",
        [1.0, 1.0, 0.0],
        [[1.0, 1.0, 1.0]],
        [3.0],
        lower=[0.0, 0.0, 0.0],
        upper=[2.0, 2.0, np.inf],
    )
    res = solve(lp)
    assert res.status is Status.OPTIMAL
    assert res.value == pytest.approx(3.0)
