import numpy as np
import pytest

from polyvar.lpsolve import solve
from polyvar.oracle import grid_min, vertex_min
from polyvar.polynomial import MultiPoly, Rectangle, bernstein_coefficients
from polyvar.relaxation import (
    BoundResult,
    ConstraintSet,
    DegreeZeroConflict,
    InfeasiblePolytope,
    SizeGuardError,
    build_full_lp,
    build_reduced_lp,
    enumerate_classes,
    lifted_dot,
    lower_bound,
    pad_for_constraints,
    sensitivity_bound,
)

from conftest import (
    random_feasible_constraints,
    random_multi_affine,
    random_poly,
    random_rectangle,
)


def quartic_problem():
    p = MultiPoly(1, {(4,): 1.0, (3,): -3.0, (2,): -1.5, (1,): 10.0})
    return p, Rectangle([-5.0], [5.0]), ConstraintSet(1)


def constrained_3d_problem():
    p = MultiPoly(
        3,
        {
            (1, 1, 1): 1.0,
            (2, 0, 0): 1.0,
            (1, 1, 0): -2.0,
            (1, 0, 1): -3.0,
            (0, 1, 1): 5.0,
            (0, 0, 2): -1.0,
            (0, 1, 0): 5.0,
            (0, 0, 1): 1.0,
        },
    )
    rect = Rectangle([2.0, 0.0, 4.0], [5.0, 10.0, 8.0])
    cs = ConstraintSet(
        3,
        inequalities=[
            (np.array([4.0, 3.0, 1.0]), 20.0),
            (np.array([-1.0, -2.0, -1.0]), -1.0),  # x1 + 2x2 + x3 >= 1, negated
        ],
    )
    return p, rect, cs


class TestEnumerateClasses:
    def test_counts(self):
        assert len(enumerate_classes((2, 1, 2))) == 18
        assert len(enumerate_classes((4,))) == 5
        assert enumerate_classes((0, 0)) == [(0, 0)]

    def test_lexicographic_order(self):
        classes = enumerate_classes((1, 2))
        assert classes == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]


class TestLiftedDot:
    def test_unit_case(self):
        assert lifted_dot([1.0], Rectangle([0.0], [1.0]), (1,), (1,)) == pytest.approx(1.0)

    def test_interior_class(self):
        assert lifted_dot([1.0], Rectangle([-5.0], [5.0]), (4,), (3,)) == pytest.approx(2.5)

    def test_all_lower_vertex(self):
        rect = Rectangle([2.0, 0.0, 4.0], [5.0, 10.0, 8.0])
        assert lifted_dot([4.0, 3.0, 1.0], rect, (2, 1, 2), (0, 0, 0)) == pytest.approx(12.0)

    def test_degree_zero_conflict(self):
        with pytest.raises(DegreeZeroConflict):
            lifted_dot([1.0, 1.0], Rectangle([0, 0], [1, 1]), (1, 0), (1, 0))

    def test_degree_zero_with_zero_coefficient_ok(self):
        v = lifted_dot([1.0, 0.0], Rectangle([0, 0], [1, 1]), (1, 0), (1, 0))
        assert v == pytest.approx(1.0)


class TestBuildReducedLp:
    def test_quartic_size(self):
        lp = build_reduced_lp(*quartic_problem())
        assert lp.n_vars == 1
        assert lp.m_ineq == 5

    def test_constrained_3d_size(self):
        p, rect, cs = constrained_3d_problem()
        lp = build_reduced_lp(p, rect, cs)
        assert lp.n_vars == 3  # t and two multipliers
        assert lp.m_ineq == 18 + 2

    def test_multi_affine_unconstrained_reduces_to_vertex_min(self):
        rng = np.random.default_rng(101)
        for _ in range(10):
            n = int(rng.integers(1, 4))
            p = random_multi_affine(rng, n)
            rect = random_rectangle(rng, n)
            lp = build_reduced_lp(p, rect, ConstraintSet(n))
            sol = solve(lp)
            ref, _ = vertex_min(p, rect)
            assert sol.objective == pytest.approx(ref, abs=1e-9)


class TestBuildFullLp:
    def test_quartic_shape(self):
        p, rect, cs = quartic_problem()
        lp = build_full_lp(p, rect, cs)
        assert lp.n_vars == 1 + 3  # t plus the three adjacent-difference multipliers
        assert lp.m_ineq == 16  # 2**4 lifted vertices

    def test_size_guard(self):
        p = MultiPoly(2, {(15, 11): 1.0})
        with pytest.raises(SizeGuardError):
            build_full_lp(p, Rectangle([0, 0], [1, 1]), ConstraintSet(2))

    def test_degree_one_everywhere_matches_reduced(self):
        rng = np.random.default_rng(103)
        for _ in range(10):
            n = int(rng.integers(1, 4))
            p = random_multi_affine(rng, n)
            rect = random_rectangle(rng, n)
            cs = random_feasible_constraints(rng, rect, 2, 0)
            p2 = pad_for_constraints(p, cs)
            full = solve(build_full_lp(p2, rect, cs))
            red = solve(build_reduced_lp(p2, rect, cs))
            assert full.objective == pytest.approx(red.objective, abs=1e-9)

    def test_random_equivalence_with_reduced(self):
        rng = np.random.default_rng(107)
        for _ in range(25):
            n = int(rng.integers(1, 3))
            p = random_poly(rng, n, 3)
            rect = random_rectangle(rng, n)
            cs = random_feasible_constraints(
                rng, rect, int(rng.integers(0, 4)), int(rng.integers(0, 2))
            )
            p2 = pad_for_constraints(p, cs)
            full = solve(build_full_lp(p2, rect, cs))
            red = solve(build_reduced_lp(p2, rect, cs))
            assert full.objective == pytest.approx(red.objective, abs=1e-7)


class TestLowerBound:
    def test_constrained_3d_benchmark(self):
        res = lower_bound(*constrained_3d_problem())
        assert res.d_star == pytest.approx(-120.0, abs=1e-6)

    def test_quartic_benchmark(self):
        res = lower_bound(*quartic_problem())
        assert res.d_star == pytest.approx(-837.5, abs=1e-6)
        assert res.lam.size == 0 and res.mu.size == 0

    def test_constant_polynomial(self):
        rect = Rectangle([0.0, 0.0], [1.0, 1.0])
        cs = ConstraintSet(2, inequalities=[(np.array([1.0, 1.0]), 1.5)])
        res = lower_bound(MultiPoly.constant(2, 4.25), rect, cs)
        assert res.d_star == pytest.approx(4.25, abs=1e-9)
        assert res.lam == pytest.approx([0.0])

    def test_equality_constrained_parabola(self):
        # p = x^2 on [-1,1] restricted to x = 1/2; the optimal multiplier
        # balances the two nearest class rows at exactly 0 (hand-derived),
        # below the true minimum 1/4
        p = MultiPoly(1, {(2,): 1.0})
        rect = Rectangle([-1.0], [1.0])
        cs = ConstraintSet(1, equalities=[(np.array([1.0]), 0.5)])
        res = lower_bound(p, rect, cs)
        assert res.d_star == pytest.approx(0.0, abs=1e-9)
        assert res.d_star <= 0.25

    def test_infeasible_region_raises(self):
        rect = Rectangle([0.0], [1.0])
        cs = ConstraintSet(1, inequalities=[(np.array([1.0]), -1.0)])
        with pytest.raises(InfeasiblePolytope):
            lower_bound(MultiPoly(1, {(1,): 1.0}), rect, cs)

    def test_unconstrained_bound_is_min_bernstein_coefficient(self):
        rng = np.random.default_rng(109)
        for _ in range(15):
            n = int(rng.integers(1, 4))
            p = random_poly(rng, n, 4)
            rect = random_rectangle(rng, n)
            res = lower_bound(p, rect, ConstraintSet(n))
            tensor = bernstein_coefficients(p, rect)
            assert res.d_star == pytest.approx(tensor.min(), abs=1e-9)

    def test_soundness_small_battery(self):
        rng = np.random.default_rng(113)
        for _ in range(30):
            n = int(rng.integers(1, 4))
            p = random_poly(rng, n, 3)
            rect = random_rectangle(rng, n)
            cs = random_feasible_constraints(
                rng, rect, int(rng.integers(0, 5)), int(rng.integers(0, 2))
            )
            res = lower_bound(p, rect, cs)
            sampled, _ = grid_min(p, rect, cs, steps_per_axis=21)
            assert res.d_star <= sampled + 1e-7

    def test_multi_affine_exactness(self):
        rng = np.random.default_rng(127)
        for _ in range(25):
            n = int(rng.integers(1, 4))
            p = random_multi_affine(rng, n)
            rect = random_rectangle(rng, n)
            res = lower_bound(p, rect, ConstraintSet(n))
            ref, _ = vertex_min(p, rect)
            assert res.d_star == pytest.approx(ref, abs=1e-9)


class TestSensitivityBound:
    def test_zero_perturbation_returns_d_star(self):
        res = lower_bound(*constrained_3d_problem())
        assert sensitivity_bound(res, [0.0, 0.0]) == pytest.approx(res.d_star)

    def test_perturbed_resolve_dominates(self):
        p, rect, _ = constrained_3d_problem()
        res = lower_bound(*constrained_3d_problem())
        rng = np.random.default_rng(131)
        for _ in range(20):
            alpha = rng.uniform(-1.0, 1.0, size=2)
            cs = ConstraintSet(
                3,
                inequalities=[
                    (np.array([4.0, 3.0, 1.0]), 20.0 + alpha[0]),
                    (np.array([-1.0, -2.0, -1.0]), -1.0 + alpha[1]),
                ],
            )
            resolved = lower_bound(p, rect, cs)
            assert sensitivity_bound(res, alpha) <= resolved.d_star + 1e-7

    def test_inactive_rows_give_exact_value(self):
        res = BoundResult(d_star=-2.0, lam=np.array([0.0, 3.0]), mu=np.zeros(0))
        assert sensitivity_bound(res, [5.0, 0.0]) == pytest.approx(-2.0)

    def test_length_validation(self):
        res = lower_bound(*quartic_problem())
        with pytest.raises(ValueError):
            sensitivity_bound(res, [1.0])

    def test_beta_required_with_equalities(self):
        p = MultiPoly(1, {(2,): 1.0})
        rect = Rectangle([-1.0], [1.0])
        cs = ConstraintSet(1, equalities=[(np.array([1.0]), 0.5)])
        res = lower_bound(p, rect, cs)
        with pytest.raises(ValueError):
            sensitivity_bound(res, [])
        shifted = sensitivity_bound(res, [], beta=[0.1])
        resolved = lower_bound(p, rect, ConstraintSet(1, equalities=[(np.array([1.0]), 0.6)]))
        assert shifted <= resolved.d_star + 1e-7


class TestConcurrency:
    def test_parallel_bounds_match_sequential(self):
        # all inputs are immutable and solves share no state, so threaded
        # evaluation must reproduce the sequential results exactly
        from concurrent.futures import ThreadPoolExecutor

        rng = np.random.default_rng(137)
        jobs = []
        for _ in range(12):
            n = int(rng.integers(1, 4))
            p = random_poly(rng, n, 3)
            rect = random_rectangle(rng, n)
            cs = random_feasible_constraints(rng, rect, 2, 0)
            jobs.append((p, rect, cs))
        sequential = [lower_bound(*job).d_star for job in jobs]
        with ThreadPoolExecutor(max_workers=6) as pool:
            threaded = list(pool.map(lambda job: lower_bound(*job).d_star, jobs))
        assert threaded == sequential


class TestDegreePadding:
    def test_pads_constrained_variables_only(self):
        p = MultiPoly(3, {(2, 0, 0): 1.0})
        cs = ConstraintSet(3, inequalities=[(np.array([0.0, 1.0, 0.0]), 1.0)])
        padded = pad_for_constraints(p, cs)
        assert padded.degrees == (2, 1, 0)

    def test_bound_with_variable_missing_from_objective(self):
        # objective ignores x2 entirely; the constraint still must lift
        p = MultiPoly(2, {(2, 0): 1.0})
        rect = Rectangle([-1.0, -1.0], [1.0, 1.0])
        cs = ConstraintSet(2, inequalities=[(np.array([0.0, 1.0]), 0.5)])
        res = lower_bound(p, rect, cs)
        assert res.d_star <= 0.0 + 1e-9
