"""Linear regression models on sampled points, and their Lagrange polynomials.

Given p >= n+1 samples of the objective, the affine model
``m(y) = c + g^T (y - x)`` is the least-squares fit, obtained from the
pseudoinverse of the p x (n+1) design matrix whose rows are
``[1, (y_t - x)^T]``.  The t-th regression Lagrange polynomial is the fit
to the t-th standard basis vector; the size of these polynomials over the
feasible part of the trust region is the geometry (poisedness) measure that
controls model accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import contains
from .sampling import sample_feasible_in_ball

__all__ = [
    "InterpolationSet",
    "LinearModel",
    "RegressionBasis",
    "DegenerateGeometryError",
    "build_design_matrix",
    "fit_regression_model",
    "eval_regression_lagrange",
    "regression_accuracy_constants",
    "FullyLinearReport",
    "fully_linear_report",
    "check_fully_linear_bounds",
]


class DegenerateGeometryError(RuntimeError):
    """Sample points do not affinely span R^n (design matrix rank deficient)."""


@dataclass
class InterpolationSet:
    """Sample geometry: base point, trust-region radius, points and values.

    The base point need not be one of the sample points.  Instances are
    treated as immutable; point replacement returns a new set.
    """

    base: np.ndarray
    radius: float
    points: np.ndarray
    values: np.ndarray | None = None

    def __post_init__(self):
        self.base = np.asarray(self.base, dtype=float)
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if self.points.shape[1] != self.base.size:
            raise ValueError("point dimension does not match base point")
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.values is not None:
            self.values = np.asarray(self.values, dtype=float)
            if self.values.size != self.points.shape[0]:
                raise ValueError("one value per point required")

    @property
    def npoints(self):
        return self.points.shape[0]

    @property
    def dimension(self):
        return self.base.size

    @property
    def scale(self):
        """Displacement scale min(radius, 1) used throughout the geometry layer."""
        return min(self.radius, 1.0)

    @property
    def displacement_bound(self):
        """Largest point distance from the base, relative to min(radius, 1)."""
        dists = np.linalg.norm(self.points - self.base, axis=1)
        return float(np.max(dists, initial=0.0)) / self.scale

    def replace_point(self, t, point, value=None):
        points = self.points.copy()
        points[t] = point
        values = None
        if self.values is not None:
            values = self.values.copy()
            values[t] = np.nan if value is None else value
        return InterpolationSet(self.base, self.radius, points, values)

    def with_values(self, values):
        return InterpolationSet(self.base, self.radius, self.points.copy(), values)

    def with_geometry(self, base, radius):
        """Same points, new base and radius (used when the solver recenters)."""
        return InterpolationSet(base, radius, self.points.copy(), self.values)

    def feasible(self, region, tol=1e-9):
        return all(contains(region, y, tol) for y in self.points)


@dataclass
class LinearModel:
    """Affine model ``m(y) = c + g^T (y - base)``."""

    c: float
    g: np.ndarray
    base: np.ndarray
    residuals: np.ndarray | None = None

    def value(self, y):
        return self.c + (np.asarray(y, float) - self.base) @ self.g

    def values(self, ys):
        return self.c + (np.asarray(ys, float) - self.base) @ self.g

    def grad(self, y=None):
        return self.g

    def grads(self, ys):
        return np.broadcast_to(self.g, (len(ys), self.g.size))

    def hess_norm(self):
        return 0.0

    def hessian(self):
        n = self.g.size
        return np.zeros((n, n))


@dataclass
class RegressionBasis:
    """Design matrix, SVD pseudoinverse and regression Lagrange coefficients.

    ``lagrange_coeffs`` has one column per sample point, holding
    ``(c_t, g_t)`` for the t-th Lagrange polynomial (the pseudoinverse
    applied to the t-th standard basis vector).
    """

    base: np.ndarray
    radius: float
    points: np.ndarray
    matrix: np.ndarray
    svd: tuple
    rank: int
    rank_tol: float
    pinv: np.ndarray
    lagrange_coeffs: np.ndarray = field(init=False)

    def __post_init__(self):
        self.lagrange_coeffs = self.pinv

    @property
    def npoints(self):
        return self.points.shape[0]

    @property
    def dimension(self):
        return self.base.size

    @property
    def full_rank(self):
        return self.rank == self.dimension + 1

    # Nondegeneracy in the sense required by the regression poisedness
    # definition: the displacements span R^n, i.e. M has full column rank.
    @property
    def nondegenerate(self):
        return self.full_rank

    def lagrange_polynomial(self, t):
        col = self.lagrange_coeffs[:, t]
        return LinearModel(float(col[0]), col[1:].copy(), self.base)

    def lagrange_values(self, y):
        """All p Lagrange polynomial values at one point ``y``."""
        rhs = np.concatenate(([1.0], np.asarray(y, float) - self.base))
        return self.lagrange_coeffs.T @ rhs

    def lagrange_values_many(self, ys):
        ys = np.asarray(ys, float)
        rhs = np.column_stack([np.ones(len(ys)), ys - self.base])
        return rhs @ self.lagrange_coeffs


def build_design_matrix(iset, require_full_rank=True):
    """Assemble the regression system for an interpolation set.

    Builds the p x (n+1) matrix with rows ``[1, (y_t - x)^T]``, its SVD
    pseudoinverse with singular values below
    ``max(p, n+1) * eps * sigma_max`` treated as zero, and the Lagrange
    coefficient columns.  Raises :class:`DegenerateGeometryError` when the
    rank is below n+1 (caller must repair the sample geometry), unless
    ``require_full_rank`` is False.
    """
    p, n = iset.npoints, iset.dimension
    if p < n + 1:
        raise ValueError(f"regression needs at least n+1={n + 1} points, got {p}")
    M = np.column_stack([np.ones(p), iset.points - iset.base])
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cutoff = max(p, n + 1) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(s > cutoff))
    if require_full_rank and rank < n + 1:
        raise DegenerateGeometryError(
            f"degenerate geometry: design matrix rank {rank} < {n + 1}"
        )
    inv_s = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    pinv = (Vt.T * inv_s) @ U.T
    return RegressionBasis(
        base=iset.base,
        radius=iset.radius,
        points=iset.points,
        matrix=M,
        svd=(U, s, Vt),
        rank=rank,
        rank_tol=cutoff,
        pinv=pinv,
    )


def fit_regression_model(basis, values):
    """Least-squares affine fit of the given sample values.

    Requires a full-rank basis; returns the model with its per-point
    residual vector attached.
    """
    values = np.asarray(values, dtype=float)
    if values.size != basis.npoints:
        raise ValueError("one value per sample point required")
    if not basis.full_rank:
        raise DegenerateGeometryError("cannot fit on rank-deficient geometry")
    coef = basis.pinv @ values
    residuals = basis.matrix @ coef - values
    return LinearModel(float(coef[0]), coef[1:].copy(), basis.base, residuals=residuals)


def eval_regression_lagrange(basis, t, y):
    """Value of the t-th regression Lagrange polynomial at ``y``."""
    if not 0 <= t < basis.npoints:
        raise IndexError(f"polynomial index {t} out of range")
    return float(basis.lagrange_values(y)[t])


def regression_accuracy_constants(p, lam, lipschitz, beta):
    """Model-error constants guaranteed by poised regression geometry.

    Returns ``(kappa_ef, kappa_eg)`` for the function-error bound
    ``|f - m| <= kappa_ef * delta^2`` over feasible steps of length <= delta
    and the directional gradient bound
    ``|(grad f(x) - g)^T d| <= kappa_eg * delta`` over feasible unit steps.
    """
    kappa_eg = p * lam * lipschitz * beta**2
    kappa_ef = kappa_eg + lipschitz / 2.0
    return kappa_ef, kappa_eg


@dataclass
class FullyLinearReport:
    """Observed-vs-guaranteed accuracy ratios from feasible sampling."""

    kappa_ef: float
    kappa_eg: float
    max_ratio_f: float
    max_ratio_g: float
    samples_f: int
    samples_g: int

    @property
    def max_ratio(self):
        return max(self.max_ratio_f, self.max_ratio_g)

    @property
    def violated(self):
        return self.max_ratio > 1.0


def _ratio(observed, bound, scale):
    if bound > 0.0:
        return observed / bound
    return 0.0 if observed <= 1e-10 * (1.0 + scale) else np.inf


def fully_linear_report(model, f, grad, region, x, delta, kappa_ef, kappa_eg,
                        n_samples=1000, rng=None):
    """Sample-based check of the two accuracy bounds for any model.

    Draws feasible points in ``B(x, delta)`` for the function-error bound
    and in ``B(x, 1)`` for the directional gradient bound, and reports the
    worst observed/(guaranteed bound) ratios.  Report-only: ratios above 1
    mean the claimed constants do not cover this model.
    """
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    x = np.asarray(x, dtype=float)

    ys = sample_feasible_in_ball(rng, region, x, delta, n_samples)
    fvals = np.array([f(y) for y in ys])
    err_f = np.abs(fvals - model.values(ys))
    ratio_f = _ratio(float(np.max(err_f)), kappa_ef * delta**2, float(np.max(np.abs(fvals))))

    zs = sample_feasible_in_ball(rng, region, x, 1.0, n_samples)
    gap = np.asarray(grad(x), float) - model.grad(x)
    err_g = np.abs((zs - x) @ gap)
    ratio_g = _ratio(float(np.max(err_g)), kappa_eg * delta, float(np.linalg.norm(gap)))

    return FullyLinearReport(
        kappa_ef=float(kappa_ef),
        kappa_eg=float(kappa_eg),
        max_ratio_f=float(ratio_f),
        max_ratio_g=float(ratio_g),
        samples_f=len(ys),
        samples_g=len(zs),
    )


def check_fully_linear_bounds(iset, model, f, grad, lipschitz, lam, beta, region,
                              n_samples=1000, rng=None):
    """Accuracy-ratio report for a regression model on a poised set.

    Uses the regression constants from :func:`regression_accuracy_constants`
    with the supplied poisedness level ``lam`` and displacement bound
    ``beta``; the set is assumed certified at those values.
    """
    kappa_ef, kappa_eg = regression_accuracy_constants(iset.npoints, lam, lipschitz, beta)
    return fully_linear_report(
        model, f, grad, region, iset.base, iset.radius, kappa_ef, kappa_eg,
        n_samples=n_samples, rng=rng,
    )
