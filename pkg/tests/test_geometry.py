import numpy as np
import pytest

from convexdfo import geometry as geo

from oracles import arc_projection, grid_project


def regions_for_properties():
    return [
        geo.WholeSpace(2),
        geo.Box([0.0, 0.0], [1.0, 1.0]),
        geo.Box([-1.0, -2.0, 0.5], [1.0, 2.0, 3.0]),
        geo.Ball([0.0, 0.0], 1.0),
        geo.Ball([0.3, -0.2, 0.1], 2.0),
        geo.Halfspaces([[1.0, 0.0]], [0.0]),
        geo.Halfspaces([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]], [1.0, 1.0, 1.0]),
        geo.Intersection([geo.Box([0.0, 0.0], [1.0, 1.0]), geo.Ball([0.0, 0.0], 1.0)]),
        geo.Intersection([geo.Ball([0.0, 0.0], 1.5), geo.Ball([0.5, 0.0], 1.2)]),
    ]


class TestProjectExamples:
    def test_box_clamp(self):
        box = geo.Box([0.0, 0.0], [1.0, 1.0])
        res = geo.project(box, [2.0, 0.5])
        np.testing.assert_allclose(res.point, [1.0, 0.5], atol=0)
        assert res.residual == 0.0

    def test_ball_radial_scaling(self):
        ball = geo.Ball([0.0, 0.0], 1.0)
        res = geo.project(ball, [3.0, 4.0])
        np.testing.assert_allclose(res.point, [0.6, 0.8], atol=1e-15)

    def test_box_ball_intersection_matches_refined_oracle(self):
        box = geo.Box([0.0, 0.0], [1.0, 1.0])
        region = geo.Intersection([box, geo.Ball([0.0, 0.0], 1.0)])
        y = np.array([2.0, 2.0])
        res = geo.project(region, y)
        # coarse grid brackets the active-arc minimizer; derivative bisection
        # polishes it to machine precision
        coarse = grid_project(region, y, [-0.1, -0.1], [1.1, 1.1], levels=3)
        assert np.linalg.norm(res.point - coarse) <= 1e-3
        truth = arc_projection([0.0, 0.0], 1.0, y, box.is_member)
        assert np.linalg.norm(res.point - truth) <= 1e-8
        # this instance also has a closed form on the diagonal
        np.testing.assert_allclose(res.point, [np.sqrt(0.5)] * 2, atol=1e-9)

    def test_halfspace_projection(self):
        hs = geo.Halfspaces([[2.0, 0.0]], [2.0])  # x <= 1 scaled
        res = geo.project(hs, [3.0, 7.0])
        np.testing.assert_allclose(res.point, [1.0, 7.0], atol=1e-12)

    def test_polyhedron_dykstra_matches_grid_oracle(self):
        region = geo.Halfspaces(
            [[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]], [1.0, 1.0, 1.0]
        )
        y = np.array([2.0, 1.7])
        res = geo.project(region, y)
        truth = grid_project(region, y, [-2.5, -2.5], [1.5, 1.5])
        assert np.linalg.norm(res.point - truth) <= 1e-7


class TestContains:
    def test_box_interior(self):
        assert geo.contains(geo.Box([0, 0], [1, 1]), [0.5, 0.5], tol=0.0)

    def test_ball_boundary_within_tolerance(self):
        assert geo.contains(geo.Ball([0.0, 0.0], 1.0), [1.0 + 1e-12, 0.0], tol=1e-10)

    def test_halfspace_outside(self):
        assert not geo.contains(geo.Halfspaces([[1.0, 0.0]], [0.0]), [1.0, 0.0], tol=1e-6)

    def test_intersection_exact_membership(self):
        region = geo.Intersection([geo.Box([0, 0], [1, 1]), geo.Ball([0, 0], 1.0)])
        assert geo.contains(region, [0.5, 0.5], tol=0.0)
        assert not geo.contains(region, [0.9, 0.9], tol=0.0)

    def test_default_tolerance_scales(self):
        ball = geo.Ball([0.0, 0.0], 1.0)
        assert geo.contains(ball, [1.0 + 1e-10, 0.0])


class TestBallIntersectionProjection:
    def test_whole_space_reduces_to_ball(self):
        res = geo.project_onto_ball_intersection(
            geo.WholeSpace(2), np.zeros(2), 1.0, [0.0, 2.0]
        )
        np.testing.assert_allclose(res.point, [0.0, 1.0], atol=1e-15)

    def test_box_with_ball_matches_refined_oracle(self):
        box = geo.Box([0.0, 0.0], [1.0, 1.0])
        y = np.array([1.0, 1.0])
        res = geo.project_onto_ball_intersection(box, np.zeros(2), 0.5, y)
        region = geo.Intersection([box, geo.Ball(np.zeros(2), 0.5)])
        coarse = grid_project(region, y, [-0.1, -0.1], [0.6, 0.6], levels=3)
        assert np.linalg.norm(res.point - coarse) <= 1e-3
        truth = arc_projection([0.0, 0.0], 0.5, y, box.is_member)
        assert np.linalg.norm(res.point - truth) <= 1e-8

    def test_feasible_point_is_fixed(self):
        box = geo.Box([0.0, 0.0], [1.0, 1.0])
        y = np.array([0.2, 0.1])
        res = geo.project_onto_ball_intersection(box, np.zeros(2), 0.5, y)
        np.testing.assert_array_equal(res.point, y)

    def test_two_ball_closed_form_vs_dykstra(self, rng):
        for _ in range(50):
            c = rng.standard_normal(3) * 0.3
            region = geo.Ball(c, 0.8 + rng.random())
            center = c + rng.standard_normal(3) * 0.5
            radius = 0.5 + rng.random()
            if np.linalg.norm(center - c) >= 0.9 * (region.radius + radius):
                continue
            y = rng.standard_normal(3) * 2.5
            res = geo.project_onto_ball_intersection(region, center, radius, y)
            pts, _, _ = geo._dykstra_batch(
                [region, geo.Ball(center, radius)], np.array([y])
            )
            assert np.linalg.norm(res.point - pts[0]) <= 1e-7


def random_points(rng, region, count, spread=2.0):
    return rng.standard_normal((count, region.dimension)) * spread


class TestProjectionProperties:
    @pytest.mark.parametrize("region", regions_for_properties(), ids=repr)
    def test_idempotence(self, region, rng):
        for y in random_points(rng, region, 25):
            p1 = geo.project(region, y).point
            p2 = geo.project(region, p1).point
            assert np.linalg.norm(p2 - p1) <= 1e-10

    @pytest.mark.parametrize("region", regions_for_properties(), ids=repr)
    def test_nonexpansive(self, region, rng):
        for _ in range(25):
            y1, y2 = random_points(rng, region, 2)
            p1 = geo.project(region, y1).point
            p2 = geo.project(region, y2).point
            assert np.linalg.norm(p1 - p2) <= np.linalg.norm(y1 - y2) + 1e-10

    @pytest.mark.parametrize("region", regions_for_properties(), ids=repr)
    def test_members_are_fixed_points(self, region, rng):
        inside = [p for p in random_points(rng, region, 60, spread=0.8)
                  if geo.contains(region, p, 1e-12)]
        for y in inside:
            assert np.linalg.norm(geo.project(region, y).point - y) <= 1e-9

    @pytest.mark.parametrize("region", regions_for_properties(), ids=repr)
    def test_variational_inequality(self, region, rng):
        # (y - proj(y)) . (z - proj(y)) <= 0 for all feasible z
        candidates = random_points(rng, region, 200, spread=0.8)
        feasible = [z for z in candidates if geo.contains(region, z, 0.0)]
        for y in random_points(rng, region, 10):
            p = geo.project(region, y).point
            for z in feasible[:20]:
                assert (y - p) @ (z - p) <= 1e-8


class TestValidation:
    def test_box_needs_interior(self):
        with pytest.raises(ValueError):
            geo.Box([0.0, 0.0], [0.0, 0.0])
        geo.Box([0.0, 0.0], [0.0, 1.0])  # one flat coordinate is allowed

    def test_ball_radius_positive(self):
        with pytest.raises(ValueError):
            geo.Ball([0.0], 0.0)

    def test_intersection_dimension_mismatch(self):
        with pytest.raises(ValueError):
            geo.Intersection([geo.WholeSpace(2), geo.WholeSpace(3)])

    def test_dimension_check_on_project(self):
        with pytest.raises(ValueError):
            geo.project(geo.Box([0.0, 0.0], [1.0, 1.0]), [1.0, 2.0, 3.0])


class TestRegionGrammar:
    def test_box_shorthand(self):
        region = geo.parse_region("box(-1,1)^2")
        assert isinstance(region, geo.Box)
        np.testing.assert_array_equal(region.lower, [-1.0, -1.0])
        np.testing.assert_array_equal(region.upper, [1.0, 1.0])

    def test_ball_keyword_form(self):
        region = geo.parse_region("ball(center=[0, 0.5], radius=2)")
        assert isinstance(region, geo.Ball)
        assert region.radius == 2.0

    def test_ball_shorthand(self):
        region = geo.parse_region("ball(1.5)^3")
        assert region.dimension == 3 and region.radius == 1.5

    def test_intersect_and_halfspace(self):
        region = geo.parse_region(
            "intersect(box(0,2)^2, halfspace(normal=[1,1], offset=3))"
        )
        assert isinstance(region, geo.Intersection)
        assert region.is_member(np.array([1.0, 1.0]))
        assert not region.is_member(np.array([1.9, 1.9]))

    def test_whole(self):
        assert geo.parse_region("whole(4)").dimension == 4

    def test_rejects_garbage(self):
        with pytest.raises(ValueError):
            geo.parse_region("polytope(3)")
        with pytest.raises(ValueError):
            geo.parse_region("box(")
