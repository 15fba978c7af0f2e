"""LP core against vertex enumeration, duality, rays, warm restarts."""

import numpy as np
import pytest

from pgvrp.simplex import (
    EQ,
    GE,
    LE,
    LinearProgram,
    SimplexError,
    SimplexOptions,
    lp_dump,
    resolve_with_added_row,
    solve,
)

from util_lp import feasible, random_bounded_lp, vertex_enumeration_optimum


def test_no_rows_minimum_at_origin():
    lp = LinearProgram(c=[1.0], A=np.zeros((0, 1)), senses=[], b=[])
    sol = solve(lp)
    assert sol.status == "optimal"
    assert sol.objective == 0.0
    assert sol.x[0] == 0.0


def test_two_var_vertex_and_dual():
    # min -x - y  s.t.  x + y <= 1
    lp = LinearProgram(c=[-1.0, -1.0], A=[[1.0, 1.0]], senses=[LE], b=[1.0])
    sol = solve(lp)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(-1.0)
    assert sol.duals[0] == pytest.approx(-1.0)
    assert sol.objective == pytest.approx(sol.duals @ lp.b)


def test_infeasible_detected():
    lp = LinearProgram(c=[1.0], A=[[1.0]], senses=[LE], b=[-1.0])
    assert solve(lp).status == "infeasible"


def test_unbounded_with_certifying_ray():
    lp = LinearProgram(c=[-1.0, 0.0], A=[[0.0, 1.0]], senses=[LE], b=[1.0])
    sol = solve(lp)
    assert sol.status == "unbounded"
    r = sol.ray
    assert lp.c @ r < 0
    assert np.all(r >= -1e-12)
    assert lp.A @ r <= 1e-12  # recession direction of the <= row


def test_upper_bound_flip():
    lp = LinearProgram(
        c=[-2.0], A=np.zeros((0, 1)), senses=[], b=[], upper=[3.0]
    )
    sol = solve(lp)
    assert sol.objective == pytest.approx(-6.0)
    assert sol.x[0] == pytest.approx(3.0)


def test_equality_phase_one():
    lp = LinearProgram(
        c=[1.0, 2.0], A=[[1.0, 1.0]], senses=[EQ], b=[4.0], upper=[10.0, 10.0]
    )
    sol = solve(lp)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(4.0)
    assert sol.x[0] == pytest.approx(4.0)


def test_matches_vertex_enumeration_bulk(rng):
    mismatches = 0
    for _ in range(300):
        lp = random_bounded_lp(rng, max_vars=5, max_rows=5)
        sol = solve(lp)
        ref = vertex_enumeration_optimum(lp)
        assert ref is not None  # feasible by construction
        assert sol.status == "optimal"
        if abs(sol.objective - ref) > 1e-7 * (1 + abs(ref)):
            mismatches += 1
    assert mismatches == 0


def test_duality_and_feasibility_residuals(rng):
    for _ in range(200):
        lp = random_bounded_lp(rng, max_vars=6, max_rows=6)
        sol = solve(lp)
        assert sol.status == "optimal"
        x = sol.x
        assert feasible(lp, x, tol=1e-8 * (1 + np.abs(lp.b).sum()))
        # general bounded duality: c.x = y.b + sum of reduced costs at upper
        rc = lp.c - sol.duals @ lp.A
        at_ub = np.abs(x - lp.upper) < 1e-9
        gap = lp.c @ x - (sol.duals @ lp.b + rc[at_ub] @ lp.upper[at_ub])
        assert abs(gap) <= 1e-7 * (1 + abs(sol.objective))


def test_duality_without_upper_bounds(rng):
    done = 0
    while done < 100:
        n = int(rng.integers(1, 6))
        m = int(rng.integers(1, 5))
        A = rng.integers(-9, 10, size=(m, n)).astype(float)
        x0 = rng.integers(0, 5, size=n).astype(float)
        b = A @ x0
        c = rng.integers(0, 10, size=n).astype(float)  # c >= 0 keeps it bounded
        lp = LinearProgram(c=c, A=A, senses=[EQ] * m, b=b)
        sol = solve(lp)
        if sol.status != "optimal":
            continue
        assert sol.objective == pytest.approx(
            float(sol.duals @ lp.b), abs=1e-7 * (1 + abs(sol.objective))
        )
        done += 1


def test_determinism(rng):
    lp = random_bounded_lp(rng)
    a = solve(lp)
    b = solve(lp)
    assert a.basis == b.basis
    assert np.array_equal(a.x, b.x)


def test_big_m_agrees(rng):
    for _ in range(50):
        lp = random_bounded_lp(rng, max_vars=4, max_rows=4)
        two = solve(lp)
        bigm = solve(lp, SimplexOptions(method="big-m"))
        assert bigm.status == two.status
        if two.status == "optimal":
            assert bigm.objective == pytest.approx(two.objective, abs=1e-6)


def test_dimension_mismatch_raises():
    with pytest.raises(SimplexError, match="dimension"):
        LinearProgram(c=[1.0, 2.0], A=[[1.0]], senses=[LE], b=[1.0])


def test_resolve_non_binding_row_keeps_objective(rng):
    lp = random_bounded_lp(rng, max_vars=4, max_rows=3)
    base = solve(lp)
    a = np.zeros(lp.n_vars)
    a[0] = 1.0
    warm = resolve_with_added_row(lp, base, a, LE, float(base.x[0]) + 5.0)
    assert warm.status == "optimal"
    assert warm.objective == pytest.approx(base.objective, abs=1e-9)


def test_resolve_cutting_row_matches_cold(rng):
    checked = 0
    while checked < 120:
        lp = random_bounded_lp(rng, max_vars=5, max_rows=4)
        base = solve(lp)
        if base.status != "optimal":
            continue
        a = rng.integers(-5, 6, size=lp.n_vars).astype(float)
        cutoff = float(a @ base.x)
        sense, rhs = (LE, cutoff - 1.0) if rng.random() < 0.5 else (GE, cutoff + 1.0)
        warm = resolve_with_added_row(lp, base, a, sense, rhs)
        cold = solve(lp.with_row(a, sense, rhs))
        assert warm.status == cold.status
        if cold.status == "optimal":
            assert warm.objective == pytest.approx(cold.objective, abs=1e-6)
            # a cut can only worsen a minimum
            assert warm.objective >= base.objective - 1e-9
        checked += 1


def test_degenerate_cycling_guard():
    # classic Beale cycling example; Bland fallback must terminate it
    lp = LinearProgram(
        c=[-0.75, 150.0, -0.02, 6.0],
        A=[
            [0.25, -60.0, -0.04, 9.0],
            [0.5, -90.0, -0.02, 3.0],
            [0.0, 0.0, 1.0, 0.0],
        ],
        senses=[LE, LE, LE],
        b=[0.0, 0.0, 1.0],
    )
    sol = solve(lp)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(-0.05)


def test_lp_dump_mentions_rows():
    lp = LinearProgram(c=[1.0, 0.0], A=[[1.0, 2.0]], senses=[GE], b=[3.0])
    text = lp_dump(lp)
    assert ">= 3" in text and "min" in text
