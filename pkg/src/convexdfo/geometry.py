"""Feasible regions: membership tests and Euclidean projections.

A region is a closed convex set with nonempty interior, given either in a
form with an analytic projection (whole space, box, ball, single halfspace)
or as an intersection of such pieces, projected onto iteratively with
Dykstra's alternating scheme.  Every solver-facing feasible set in this
package is of the form ``C`` or ``C`` intersected with a trust-region ball,
so those two projections are the workhorses here.

All projection routines accept a single point of shape ``(n,)`` or a batch
of shape ``(m, n)``; batches are projected row by row in vectorized form.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConvexRegion",
    "WholeSpace",
    "Box",
    "Ball",
    "Halfspaces",
    "Intersection",
    "ProjectionResult",
    "ProjectionError",
    "TrustRegionProjector",
    "project",
    "contains",
    "project_onto_ball_intersection",
    "parse_region",
    "membership_tolerance",
]

# Dykstra stopping rule: largest within-sweep move of the primal iterate.
DYKSTRA_TOL = 1e-10
DYKSTRA_MAX_SWEEPS = 10_000


class ProjectionError(RuntimeError):
    """Iterative projection failed to reach the residual target.

    Carries the last residual so callers can distinguish "nearly there"
    from an ill-posed region specification (e.g. an empty intersection).
    """

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = float(residual)


@dataclass(frozen=True)
class ProjectionResult:
    """Projection of a point onto a region.

    ``iterations`` counts Dykstra sweeps (0 for analytic projections) and
    ``residual`` is the largest within-sweep move of the final sweep
    (0.0 for analytic projections).
    """

    point: np.ndarray
    iterations: int
    residual: float


def membership_tolerance(y):
    """Default membership tolerance, scaled so it behaves under rescaling."""
    return 1e-9 * (1.0 + float(np.linalg.norm(y)))


def _as_batch(y):
    arr = np.asarray(y, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


class ConvexRegion:
    """Base class for closed convex sets with nonempty interior."""

    def __init__(self, dimension):
        self.dimension = int(dimension)
        if self.dimension < 1:
            raise ValueError("region dimension must be positive")

    # Subclasses with closed-form projections override this.
    has_analytic_projection = False

    def project_exact(self, ys):
        """Analytic projection of a batch ``(m, n)``; only if available."""
        raise NotImplementedError

    def is_member(self, y):
        """Exact membership (no tolerance) for a single point."""
        raise NotImplementedError

    def is_member_batch(self, ys):
        ys = np.asarray(ys, dtype=float)
        return np.array([self.is_member(y) for y in ys], dtype=bool)

    def distance(self, y):
        """Euclidean distance from ``y`` to the region."""
        if self.is_member(y):
            return 0.0
        return float(np.linalg.norm(np.asarray(y, float) - project(self, y).point))

    def dykstra_pieces(self):
        """Elementary analytic components for Dykstra's scheme."""
        return [self]

    def _check_dim(self, y):
        if np.shape(y)[-1] != self.dimension:
            raise ValueError(
                f"point dimension {np.shape(y)[-1]} != region dimension {self.dimension}"
            )


class WholeSpace(ConvexRegion):
    """All of R^n (the unconstrained case)."""

    has_analytic_projection = True

    def project_exact(self, ys):
        return np.array(ys, dtype=float)

    def is_member(self, y):
        self._check_dim(y)
        return True

    def is_member_batch(self, ys):
        return np.ones(len(ys), dtype=bool)

    def distance(self, y):
        self._check_dim(y)
        return 0.0

    def dykstra_pieces(self):
        return []

    def __repr__(self):
        return f"WholeSpace({self.dimension})"


class Box(ConvexRegion):
    """Axis-aligned box ``lower <= x <= upper`` (componentwise)."""

    has_analytic_projection = True

    def __init__(self, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("box bounds must be 1-d arrays of equal length")
        if np.any(lower > upper):
            raise ValueError("box requires lower <= upper componentwise")
        if not np.any(lower < upper):
            raise ValueError("box must have nonempty interior in some coordinate")
        super().__init__(lower.size)
        self.lower = lower
        self.upper = upper

    def project_exact(self, ys):
        return np.clip(ys, self.lower, self.upper)

    def is_member(self, y):
        self._check_dim(y)
        return bool(np.all(y >= self.lower) and np.all(y <= self.upper))

    def is_member_batch(self, ys):
        return np.all((ys >= self.lower) & (ys <= self.upper), axis=1)

    def distance(self, y):
        self._check_dim(y)
        excess = np.maximum(self.lower - y, 0.0) + np.maximum(y - self.upper, 0.0)
        return float(np.linalg.norm(excess))

    def __repr__(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


class Ball(ConvexRegion):
    """Euclidean ball of given center and (positive) radius."""

    has_analytic_projection = True

    def __init__(self, center, radius):
        center = np.asarray(center, dtype=float)
        if center.ndim != 1:
            raise ValueError("ball center must be a 1-d array")
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        super().__init__(center.size)
        self.center = center
        self.radius = float(radius)

    def project_exact(self, ys):
        ys = np.asarray(ys, dtype=float)
        diff = ys - self.center
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        factor = np.ones_like(dist)
        outside = dist > self.radius
        factor[outside] = self.radius / dist[outside]
        return self.center + diff * factor[:, None]

    def is_member(self, y):
        self._check_dim(y)
        return bool(np.linalg.norm(np.asarray(y, float) - self.center) <= self.radius)

    def is_member_batch(self, ys):
        diff = np.asarray(ys, float) - self.center
        return np.einsum("ij,ij->i", diff, diff) <= self.radius**2

    def distance(self, y):
        self._check_dim(y)
        return max(0.0, float(np.linalg.norm(np.asarray(y, float) - self.center)) - self.radius)

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class _SingleHalfspace(ConvexRegion):
    """Internal elementary piece ``a^T x <= b`` with a != 0."""

    has_analytic_projection = True

    def __init__(self, normal, offset):
        normal = np.asarray(normal, dtype=float)
        nn = float(np.dot(normal, normal))
        if nn == 0.0:
            raise ValueError("halfspace normal must be nonzero")
        super().__init__(normal.size)
        self.normal = normal
        self.offset = float(offset)
        self._nn = nn

    def project_exact(self, ys):
        ys = np.asarray(ys, dtype=float)
        viol = np.maximum(ys @ self.normal - self.offset, 0.0) / self._nn
        return ys - viol[:, None] * self.normal

    def is_member(self, y):
        self._check_dim(y)
        return bool(np.dot(y, self.normal) <= self.offset)

    def is_member_batch(self, ys):
        return ys @ self.normal <= self.offset

    def distance(self, y):
        self._check_dim(y)
        return max(0.0, (float(np.dot(y, self.normal)) - self.offset) / np.sqrt(self._nn))


class Halfspaces(ConvexRegion):
    """Intersection of halfspaces ``normals @ x <= offsets`` (a polyhedron).

    A single row has an analytic projection; two or more rows are handled
    by Dykstra's scheme over the individual halfspaces.
    """

    def __init__(self, normals, offsets):
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        if normals.shape[0] != offsets.size:
            raise ValueError("one offset per halfspace required")
        super().__init__(normals.shape[1])
        self.normals = normals
        self.offsets = offsets
        self._pieces = [
            _SingleHalfspace(n, b) for n, b in zip(normals, offsets)
        ]

    @property
    def has_analytic_projection(self):
        return len(self._pieces) == 1

    def project_exact(self, ys):
        if len(self._pieces) != 1:
            raise NotImplementedError("multi-halfspace projection is iterative")
        return self._pieces[0].project_exact(ys)

    def is_member(self, y):
        self._check_dim(y)
        return bool(np.all(self.normals @ np.asarray(y, float) <= self.offsets))

    def is_member_batch(self, ys):
        return np.all(ys @ self.normals.T <= self.offsets, axis=1)

    def distance(self, y):
        if len(self._pieces) == 1:
            return self._pieces[0].distance(y)
        return super().distance(y)

    def dykstra_pieces(self):
        return list(self._pieces)

    def __repr__(self):
        return f"Halfspaces({self.normals.tolist()}, {self.offsets.tolist()})"


class Intersection(ConvexRegion):
    """Intersection of regions of equal dimension."""

    def __init__(self, members):
        members = list(members)
        if not members:
            raise ValueError("intersection needs at least one member")
        dims = {m.dimension for m in members}
        if len(dims) != 1:
            raise ValueError("intersection members must share a dimension")
        super().__init__(dims.pop())
        self.members = members

    def is_member(self, y):
        return all(m.is_member(y) for m in self.members)

    def is_member_batch(self, ys):
        ok = np.ones(len(ys), dtype=bool)
        for m in self.members:
            ok &= m.is_member_batch(np.asarray(ys, float))
        return ok

    def dykstra_pieces(self):
        pieces = []
        for m in self.members:
            pieces.extend(m.dykstra_pieces())
        return pieces

    def __repr__(self):
        return f"Intersection({self.members!r})"


def _dykstra_batch(pieces, ys):
    """Project each row of ``ys`` onto the intersection of ``pieces``.

    Alternating projections with Dykstra's correction terms, which converge
    to the exact Euclidean projection (plain alternation would only reach a
    feasible point).  Returns ``(points, sweeps, residual)`` where residual
    is the largest within-sweep primal move of the final sweep.
    """
    x = np.array(ys, dtype=float)
    corrections = [np.zeros_like(x) for _ in pieces]
    residual = np.inf
    for sweep in range(1, DYKSTRA_MAX_SWEEPS + 1):
        moved = 0.0
        for i, piece in enumerate(pieces):
            z = x + corrections[i]
            xn = piece.project_exact(z)
            corrections[i] = z - xn
            moved = max(moved, float(np.max(np.linalg.norm(xn - x, axis=1), initial=0.0)))
            x = xn
        residual = moved
        if residual <= DYKSTRA_TOL:
            return x, sweep, residual
    raise ProjectionError(
        f"Dykstra projection did not converge in {DYKSTRA_MAX_SWEEPS} sweeps "
        f"(residual {residual:.3e}); check the region specification",
        residual,
    )


def project_batch(region, ys):
    """Project a batch ``(m, n)`` onto ``region``; returns (points, iters, residual)."""
    region._check_dim(ys)
    ys = np.asarray(ys, dtype=float)
    if region.has_analytic_projection:
        return region.project_exact(ys), 0, 0.0
    pieces = region.dykstra_pieces()
    if not pieces:
        return np.array(ys, dtype=float), 0, 0.0
    if len(pieces) == 1:
        return pieces[0].project_exact(ys), 0, 0.0
    # Rows already feasible are fixed points; skip them.
    out = np.array(ys, dtype=float)
    todo = ~region.is_member_batch(ys)
    if not np.any(todo):
        return out, 0, 0.0
    # A two-piece intersection involving a ball has exact treatments
    # (shortcuts, two-ball circle, scalar dual); route through them.
    if len(pieces) == 2 and any(isinstance(piece, Ball) for piece in pieces):
        ball = next(piece for piece in pieces if isinstance(piece, Ball))
        other = next(piece for piece in pieces if piece is not ball)
        projector = TrustRegionProjector(other, ball.center, ball.radius)
        out[todo] = projector(ys[todo])
        return out, projector.last_sweeps, projector.last_residual
    projected, sweeps, residual = _dykstra_batch(pieces, ys[todo])
    out[todo] = projected
    return out, sweeps, residual


def project(region, y):
    """Euclidean projection of ``y`` onto ``region``.

    Analytic for whole space, boxes, balls and single halfspaces; Dykstra's
    alternating scheme for halfspace lists and intersections, run until the
    within-sweep move is at most ``DYKSTRA_TOL`` or ``DYKSTRA_MAX_SWEEPS``
    sweeps have elapsed (then :class:`ProjectionError` is raised).
    """
    ys, single = _as_batch(y)
    points, iters, residual = project_batch(region, ys)
    return ProjectionResult(points[0] if single else points, iters, float(residual))


def contains(region, y, tol=None):
    """Whether ``y`` is within distance ``tol`` of ``region``.

    Decided analytically where the region geometry permits, otherwise via
    the distance to the projected point.  ``tol=None`` uses the scaled
    default :func:`membership_tolerance`.
    """
    y = np.asarray(y, dtype=float)
    region._check_dim(y)
    if tol is None:
        tol = membership_tolerance(y)
    if region.is_member(y):
        return True
    if tol == 0.0:
        return False
    return region.distance(y) <= tol


def _two_ball_circle(ball_a, ball_b):
    """Boundary-intersection sphere of two balls, or None when one contains
    the other (the inner ball is then the whole intersection)."""
    u = ball_b.center - ball_a.center
    d = float(np.linalg.norm(u))
    if d + min(ball_a.radius, ball_b.radius) <= max(ball_a.radius, ball_b.radius):
        return None
    if d >= ball_a.radius + ball_b.radius:
        raise ProjectionError(
            "ball intersection is empty or a single point; region is ill-posed", d
        )
    u_hat = u / d
    t = (d**2 + ball_a.radius**2 - ball_b.radius**2) / (2.0 * d)
    rho_sq = ball_a.radius**2 - t**2
    center = ball_a.center + t * u_hat
    fallback = np.zeros_like(u_hat)
    fallback[int(np.argmin(np.abs(u_hat)))] = 1.0
    fallback -= (fallback @ u_hat) * u_hat
    fallback /= np.linalg.norm(fallback)
    return center, np.sqrt(max(rho_sq, 0.0)), u_hat, fallback


def _project_onto_circle(circle, ys):
    """Nearest point on the boundary-intersection sphere of two balls.

    Valid as the intersection projection exactly when both ball constraints
    are active, i.e. when each single-ball projection violates the other.
    """
    center, rho, u_hat, fallback = circle
    offset = ys - center
    tangential = offset - (offset @ u_hat)[:, None] * u_hat
    norms = np.sqrt(np.einsum("ij,ij->i", tangential, tangential))
    safe = norms > 0.0
    direction = np.where(
        safe[:, None], tangential / np.where(safe, norms, 1.0)[:, None], fallback
    )
    return center + rho * direction


def _dual_bisection_ball(region, ball, ys, steps=90):
    """Exact projection onto ``region`` intersected with a ball via duality.

    With a single multiplier mu >= 0 on the ball constraint, the optimality
    condition collapses to ``z(mu) = P_region((y + mu c) / (1 + mu))`` with
    ``||z(mu) - c||`` nonincreasing in mu; the correct mu makes the ball
    constraint active.  Only called for rows whose projection onto the
    region alone leaves the ball (so mu = 0 overshoots), and requires the
    ball center's distance to the region to be below the radius (otherwise
    the intersection is empty or a single point).  Bisection on mu is
    exact to floating-point resolution; unlike alternating schemes it does
    not degrade when the two boundaries meet tangentially.
    """
    c, r = ball.center, ball.radius
    if region.distance(c) >= r:
        raise ProjectionError(
            "ball center too far from the region; intersection empty or degenerate",
            region.distance(c) - r,
        )

    def violation(mu):
        w = (ys + mu[:, None] * c) / (1.0 + mu[:, None])
        z = region.project_exact(w)
        diff = z - c
        return np.sqrt(np.einsum("ij,ij->i", diff, diff)) - r, z

    lo = np.zeros(len(ys))
    hi = np.ones(len(ys))
    for _ in range(80):
        gap, _ = violation(hi)
        grow = gap > 0.0
        if not np.any(grow):
            break
        lo[grow] = hi[grow]
        hi[grow] *= 2.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        gap, _ = violation(mid)
        above = gap > 0.0
        lo[above] = mid[above]
        hi[~above] = mid[~above]
    gap, z = violation(hi)
    return z


class TrustRegionProjector:
    """Reusable projector onto ``region`` intersected with a fixed ball.

    Builds the Dykstra piece list once; calls then run two exactness
    shortcuts (projection onto one set landing in the other) and fall back
    to the closed two-ball form (ball regions) or Dykstra for the leftover
    rows.  The last call's sweep count and residual are kept on the
    instance.
    """

    def __init__(self, region, center, radius):
        if not radius > 0:
            raise ValueError("ball radius must be positive")
        self.region = region
        self.ball = Ball(center, radius)
        self.pieces = region.dykstra_pieces() + [self.ball]
        self.ball_only = len(self.pieces) == 1
        self.circle = _two_ball_circle(region, self.ball) if isinstance(region, Ball) else None
        if isinstance(region, Ball) and self.circle is None:
            # One ball contains the other: the inner one is the intersection.
            self.ball = region if region.radius <= radius else self.ball
            self.ball_only = True
        self.last_sweeps = 0
        self.last_residual = 0.0

    def __call__(self, ys):
        ys = np.asarray(ys, dtype=float)
        self.last_sweeps, self.last_residual = 0, 0.0
        if self.ball_only:
            return self.ball.project_exact(ys)

        out = np.array(ys, dtype=float)
        todo = ~(self.region.is_member_batch(ys) & self.ball.is_member_batch(ys))
        if not np.any(todo):
            return out
        work = ys[todo]

        done = np.zeros(len(work), dtype=bool)
        result = np.empty_like(work)
        onto_region, _, _ = project_batch(self.region, work)
        in_ball = self.ball.is_member_batch(onto_region)
        result[in_ball] = onto_region[in_ball]
        done |= in_ball
        if not np.all(done):
            onto_ball = self.ball.project_exact(work[~done])
            in_region = self.region.is_member_batch(onto_ball)
            idx = np.flatnonzero(~done)
            result[idx[in_region]] = onto_ball[in_region]
            done[idx[in_region]] = True
        if not np.all(done):
            rest = work[~done]
            if self.circle is not None:
                result[~done] = _project_onto_circle(self.circle, rest)
            elif self.region.has_analytic_projection:
                result[~done] = _dual_bisection_ball(self.region, self.ball, rest)
            else:
                projected, self.last_sweeps, self.last_residual = _dykstra_batch(
                    self.pieces, rest
                )
                result[~done] = projected
        out[todo] = result
        return out


def project_onto_ball_intersection_batch(region, center, radius, ys):
    """Batch projection onto ``region`` intersected with ``B(center, radius)``."""
    region._check_dim(ys)
    projector = TrustRegionProjector(region, center, radius)
    out = projector(ys)
    return out, projector.last_sweeps, projector.last_residual


def project_onto_ball_intersection(region, center, radius, y):
    """Projection onto ``region`` intersected with a ball, as a ProjectionResult.

    The feasible set of every trust-region subproblem has this shape; the
    ball is treated as one more intersected piece in the Dykstra scheme,
    after two exact shortcuts (projection onto one set landing in the other).
    """
    ys, single = _as_batch(y)
    points, iters, residual = project_onto_ball_intersection_batch(region, center, radius, ys)
    return ProjectionResult(points[0] if single else points, iters, float(residual))


# ---------------------------------------------------------------------------
# Region specification grammar
#
#   whole(n)
#   box(lower=[...], upper=[...])        box(lo, hi)^n
#   ball(center=[...], radius=r)         ball(r)^n        (centered at origin)
#   halfspace(normal=[...], offset=b)
#   intersect(REGION, REGION, ...)
# ---------------------------------------------------------------------------


def _literal(node):
    try:
        return ast.literal_eval(node)
    except (ValueError, SyntaxError):
        raise ValueError(f"unsupported literal in region spec: {ast.dump(node)}")


def _build_region(node, power=None):
    if isinstance(node, ast.BinOp) and isinstance(node.op, ast.BitXor):
        if power is not None:
            raise ValueError("nested '^' in region spec")
        n = _literal(node.right)
        if not isinstance(n, int) or n < 1:
            raise ValueError("'^' exponent must be a positive integer")
        return _build_region(node.left, power=n)
    if not isinstance(node, ast.Call) or not isinstance(node.func, ast.Name):
        raise ValueError("region spec must be calls like box(...), ball(...), intersect(...)")
    name = node.func.id
    args = [a for a in node.args]
    kwargs = {k.arg: k.value for k in node.keywords}

    if name == "whole":
        if power is not None:
            raise ValueError("whole(n) takes its dimension directly")
        if args:
            dim = _literal(args[0])
        elif "dimension" in kwargs:
            dim = _literal(kwargs["dimension"])
        else:
            raise ValueError("whole(...) needs a dimension")
        return WholeSpace(int(dim))
    if name == "box":
        if power is not None:
            lo, hi = (_literal(a) for a in args)
            return Box([lo] * power, [hi] * power)
        return Box(_literal(kwargs["lower"]), _literal(kwargs["upper"]))
    if name == "ball":
        if power is not None:
            (radius,) = (_literal(a) for a in args)
            return Ball([0.0] * power, radius)
        return Ball(_literal(kwargs["center"]), _literal(kwargs["radius"]))
    if name == "halfspace":
        if power is not None:
            raise ValueError("halfspace does not take '^'")
        return Halfspaces([_literal(kwargs["normal"])], [_literal(kwargs["offset"])])
    if name == "intersect":
        if power is not None:
            raise ValueError("intersect does not take '^'")
        return Intersection([_build_region(a) for a in args])
    raise ValueError(f"unknown region kind {name!r}; expected whole/box/ball/halfspace/intersect")


def parse_region(text):
    """Parse a region specification string into a :class:`ConvexRegion`.

    Examples: ``box(-1,1)^2``, ``ball(center=[0,0], radius=1)``,
    ``intersect(box(0,2)^2, ball(1.5)^2)``.
    """
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse region spec {text!r}: {exc}") from exc
    return _build_region(tree.body)
