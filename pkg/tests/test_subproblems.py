import numpy as np
import pytest

from convexdfo import geometry as geo
from convexdfo import subproblems as sp
from convexdfo.linear_models import LinearModel
from convexdfo.quadratic_models import QuadraticModel

from oracles import grid_criticality


class TestCriticalityMeasure:
    def test_unconstrained_closed_form(self):
        res = sp.criticality_measure([3.0, 4.0], [0.0, 0.0], geo.WholeSpace(2))
        assert res.value == 5.0
        np.testing.assert_allclose(res.minimizer, [-0.6, -0.8])
        assert res.gap_estimate == 0.0

    def test_zero_gradient(self):
        res = sp.criticality_measure([0.0, 0.0], [0.5, 0.5], geo.Box([0, 0], [1, 1]))
        assert res.value == 0.0
        np.testing.assert_array_equal(res.minimizer, [0.0, 0.0])

    def test_box_corner_matches_grid_oracle(self):
        region = geo.Box([0.0, 0.0], [1.0, 1.0])
        g = np.array([1.0, -1.0])
        res = sp.criticality_measure(g, np.zeros(2), region)
        oracle = grid_criticality(g, np.zeros(2), region, step=1e-3)
        assert abs(res.value - oracle) <= 1e-4
        assert geo.contains(region, np.zeros(2) + res.minimizer, 1e-9)
        assert np.linalg.norm(res.minimizer) <= 1.0 + 1e-9
        assert res.value == pytest.approx(abs(g @ res.minimizer))
        assert g @ res.minimizer <= 0.0

    @pytest.mark.parametrize("case", [
        ("box", [0.2, 0.9], [0.5, 1.5]),
        ("box", [1.0, 0.3], [-2.0, 0.7]),
        ("ball", [0.5, 0.0], [1.0, 1.0]),
        ("ball", [0.6, -0.6], [-0.3, 2.0]),
    ])
    def test_random_instances_match_grid_oracle(self, case):
        kind, x, g = case
        region = (geo.Box([0.0, 0.0], [1.0, 1.0]) if kind == "box"
                  else geo.Ball([0.0, 0.0], 1.0))
        x, g = np.asarray(x, float), np.asarray(g, float)
        res = sp.criticality_measure(g, x, region)
        oracle = grid_criticality(g, x, region, step=1e-3)
        assert abs(res.value - oracle) <= 1e-3

    def test_positive_homogeneity_exact(self):
        region = geo.Box([0.0, 0.0], [1.0, 1.0])
        g = np.array([0.7, -0.2])
        base = sp.criticality_measure(g, np.zeros(2), region)
        for factor in (2.0, 0.5, 13.75):
            scaled = sp.criticality_measure(factor * g, np.zeros(2), region)
            assert scaled.value == pytest.approx(factor * base.value, rel=1e-9)

    def test_infeasible_base_rejected(self):
        with pytest.raises(ValueError):
            sp.criticality_measure([1.0, 0.0], [2.0, 0.0], geo.Box([0, 0], [1, 1]))

    def test_radius_scaling_unconstrained(self):
        res = sp.criticality_measure([3.0, 4.0], [0.0, 0.0], geo.WholeSpace(2),
                                     radius=0.25)
        assert res.value == pytest.approx(1.25)


def linear_model(g, base):
    return LinearModel(0.0, np.asarray(g, float), np.asarray(base, float))


class TestTrustRegionStep:
    def test_linear_model_whole_space_is_cauchy_point(self):
        model = linear_model([3.0, 4.0], [0.0, 0.0])
        step = sp.solve_trust_region_step(model, np.zeros(2), geo.WholeSpace(2), 0.7)
        np.testing.assert_allclose(step.step, [-0.42, -0.56], atol=1e-12)
        assert step.predicted_reduction == pytest.approx(0.7 * 5.0)
        assert step.satisfied_cauchy
        assert step.cauchy_constant_used == 0.1

    def test_zero_criticality_returns_zero_step(self):
        model = linear_model([0.0, 0.0], [0.0, 0.0])
        step = sp.solve_trust_region_step(model, np.zeros(2), geo.WholeSpace(2), 1.0)
        np.testing.assert_array_equal(step.step, [0.0, 0.0])
        assert step.predicted_reduction == 0.0
        assert step.satisfied_cauchy

    def test_interior_quadratic_reaches_minimizer(self):
        H = np.diag([1.0, 2.0])
        g = np.array([0.3, -0.4])
        model = QuadraticModel(1.0, g, H, np.zeros(2))
        xstar = -np.linalg.solve(H, g)
        step = sp.solve_trust_region_step(model, np.zeros(2), geo.WholeSpace(2), 1.0)
        assert np.linalg.norm(step.step - xstar) <= 1e-4
        assert step.satisfied_cauchy

    def test_interior_quadratic_in_box(self):
        H = np.array([[2.0, 0.3], [0.3, 1.0]])
        g = np.array([0.4, -0.3])
        model = QuadraticModel(0.0, g, H, np.zeros(2))
        region = geo.Box([-1.0, -1.0], [1.0, 1.0])
        xstar = -np.linalg.solve(H, g)
        assert region.is_member(xstar) and np.linalg.norm(xstar) < 1.0
        step = sp.solve_trust_region_step(model, np.zeros(2), region, 1.0)
        assert np.linalg.norm(step.step - xstar) <= 1e-4

    @pytest.mark.parametrize("seed", range(8))
    def test_cauchy_condition_and_feasibility(self, seed):
        rng = np.random.default_rng(seed)
        region = geo.Box([-1.0, -1.0], [1.0, 1.0])
        x = rng.uniform(-1, 1, 2)
        A = rng.standard_normal((2, 2))
        model = QuadraticModel(
            rng.standard_normal(), rng.standard_normal(2), A + A.T, x
        )
        delta = float(rng.uniform(0.05, 2.0))
        step = sp.solve_trust_region_step(model, x, region, delta, c1=0.1)
        assert np.linalg.norm(step.step) <= delta * (1 + 1e-9)
        assert geo.contains(region, x + step.step, 1e-9)
        assert step.predicted_reduction >= 0.0
        target = sp.cauchy_decrease_target(step.pi_model, model.hess_norm(), delta, 0.1)
        if step.satisfied_cauchy:
            assert step.predicted_reduction >= target - 1e-10
        assert step.satisfied_cauchy  # the two-phase search achieves it here

    def test_reduction_monotone_with_phase_two(self):
        # phase 2 never returns less reduction than the Cauchy phase
        H = np.diag([4.0, 0.5])
        g = np.array([1.0, 1.0])
        model = QuadraticModel(0.0, g, H, np.zeros(2))
        region = geo.Ball([0.0, 0.0], 1.0)
        step = sp.solve_trust_region_step(model, np.zeros(2), region, 0.8)
        gnorm = np.linalg.norm(g)
        gamma = 0.8 / gnorm
        cauchy_best = 0.0
        proj = geo.TrustRegionProjector(region, np.zeros(2), 0.8)
        for _ in range(sp.CAUCHY_HALVINGS):
            s = proj((np.zeros(2) - gamma * g)[None, :])[0]
            cauchy_best = max(cauchy_best, model.value(np.zeros(2)) - model.value(s))
            gamma *= 0.5
        assert step.predicted_reduction >= cauchy_best - 1e-12
