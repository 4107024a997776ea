"""Benchmark problem registry for the solver harness.

Each problem bundles an objective, its analytic gradient (used only for
validation, never handed to the solver), a Lipschitz constant for the
gradient where one is known on the default region, a default feasible
region and starting point, and the reference solution when it is analytic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Ball, Box, ConvexRegion, parse_region
from .subproblems import criticality_measure

__all__ = ["Problem", "REGISTRY", "get_problem", "problem_names", "true_criticality"]


@dataclass
class Problem:
    """A registered test problem."""

    name: str
    dimension: int
    f: callable
    grad: callable
    lipschitz_grad: float | None
    region: ConvexRegion
    x0: np.ndarray
    xstar: np.ndarray | None = None
    fstar: float | None = None

    def with_region(self, region_spec):
        """Same objective over a different region (resets reference data)."""
        region = parse_region(region_spec) if isinstance(region_spec, str) else region_spec
        if region.dimension != self.dimension:
            raise ValueError("region dimension does not match the problem")
        return Problem(
            self.name, self.dimension, self.f, self.grad, self.lipschitz_grad,
            region, self.x0, None, None,
        )


def true_criticality(problem, x, radius=1.0):
    """First-order criticality at ``x`` using the analytic gradient.

    Validation-only oracle: measures how far ``x`` is from stationarity of
    the true objective over the problem's region.
    """
    return criticality_measure(problem.grad(x), x, problem.region, radius).value


def _quadratic(name, A, b, region, x0):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)

    def f(x):
        return 0.5 * x @ A @ x + b @ x

    def grad(x):
        return A @ x + b

    xstar = np.linalg.solve(A, -b)
    if not region.is_member(xstar):
        xstar = None
    return Problem(
        name=name,
        dimension=b.size,
        f=f,
        grad=grad,
        lipschitz_grad=float(np.linalg.norm(A, 2)),
        region=region,
        x0=np.asarray(x0, dtype=float),
        xstar=xstar,
        fstar=None if xstar is None else float(0.5 * xstar @ A @ xstar + b @ xstar),
    )


def _affine2d():
    g = np.array([1.0, -2.0])

    def f(x):
        return g @ x + 0.5

    def grad(_x):
        return g

    # Over the default box the minimizer is the opposite-sign corner.
    xstar = np.array([-1.0, 1.0])
    return Problem(
        name="affine2d",
        dimension=2,
        f=f,
        grad=grad,
        lipschitz_grad=0.0,
        region=Box([-1.0, -1.0], [1.0, 1.0]),
        x0=np.array([0.3, 0.2]),
        xstar=xstar,
        fstar=float(g @ xstar + 0.5),
    )


def _cossum(name, weights, region, x0):
    w = np.asarray(weights, dtype=float)

    def f(x):
        return float(np.sum(np.cos(w * x)))

    def grad(x):
        return -w * np.sin(w * x)

    # |d^2/dx_i^2 cos(w_i x_i)| <= w_i^2, so the gradient is max(w)^2-Lipschitz.
    return Problem(
        name=name,
        dimension=w.size,
        f=f,
        grad=grad,
        lipschitz_grad=float(np.max(w**2)),
        region=region,
        x0=np.asarray(x0, dtype=float),
    )


def _rosenbrock2d():
    def f(x):
        return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2

    def grad(x):
        return np.array([
            -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] ** 2),
            200.0 * (x[1] - x[0] ** 2),
        ])

    return Problem(
        name="rosenbrock2d",
        dimension=2,
        f=f,
        grad=grad,
        lipschitz_grad=None,  # not exposed; excluded from the bound suites
        region=Ball([0.0, 0.0], 1.0),
        x0=np.array([-0.5, 0.4]),
    )


def _build_registry():
    problems = [
        _quadratic(
            "quad2d",
            A=[[2.0, 0.4], [0.4, 1.6]],
            b=[-0.3, 0.5],
            region=Box([-1.0, -1.0], [1.0, 1.0]),
            x0=[0.8, -0.7],
        ),
        _quadratic(
            "quad3d",
            A=[[3.0, 0.5, 0.0], [0.5, 2.0, 0.3], [0.0, 0.3, 1.5]],
            b=[0.4, -0.2, 0.6],
            region=Box([-1.0] * 3, [1.0] * 3),
            x0=[0.5, 0.5, -0.5],
        ),
        _affine2d(),
        _cossum("cossum2d", [1.0, 2.0], Box([-1.0, -1.0], [1.0, 1.0]), [0.5, -0.3]),
        _cossum("cossum3d", [1.0, 1.5, 2.0], Ball([0.0] * 3, 1.5), [0.4, 0.2, -0.3]),
        _rosenbrock2d(),
    ]
    return {p.name: p for p in problems}


REGISTRY = _build_registry()


def problem_names():
    return sorted(REGISTRY)


def get_problem(name, region_spec=None):
    """Look up a registered problem, optionally overriding its region."""
    if name not in REGISTRY:
        raise KeyError(
            f"unknown problem {name!r}; registry: {', '.join(problem_names())}"
        )
    problem = REGISTRY[name]
    if region_spec is not None:
        problem = problem.with_region(region_spec)
    return problem
