"""Minimum-Frobenius-norm quadratic interpolation via the bordered KKT system.

With n+2 <= p <= (n+1)(n+2)/2 sample points there are infinitely many
quadratics matching the data; the model chosen here has the smallest
Frobenius-norm Hessian.  It is obtained by solving the symmetric
(p+n+1) x (p+n+1) system

    [ Q   M ] [ lambda ]   [ f values ]
    [ M^T 0 ] [ (c, g) ] = [ 0        ],

where ``M`` is the regression design matrix and
``Q_ij = 0.5 * ((y_i - x)^T (y_j - x))^2``.  The Hessian is recovered from
the multipliers as ``H = sum_t lambda_t (y_t - x)(y_t - x)^T``.  The t-th
Lagrange polynomial solves the same system with the t-th standard basis
vector on the right-hand side, and evaluates as ``e_t^T F^{-1} phi(y)``.

The system is assembled in displacements divided by min(radius, 1): the
``Q`` block is quartic in the point radius, so the unscaled matrix is
needlessly ill-conditioned.  Lagrange values are invariant under this
rescaling; model coefficients are mapped back by the chain rule.

Point-swap determinant prediction: replacing the t-th point changes the
t-th row and column of ``F`` to ``phi(y) + eta_t e_t``, and for a symmetric
invertible matrix such an update multiplies the determinant by
``l_t(y)^2 + alpha_t beta_t`` with ``alpha_t = e_t^T F^{-1} e_t`` and
``beta_t = 0.5 ||y - x||^4 - phi(y)^T F^{-1} phi(y)``; both correction
factors are nonnegative whenever ``l_t(y) != 0``, so each swap multiplies
``|det F|`` by at least ``l_t(y)^2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linear_models import fully_linear_report

__all__ = [
    "QuadraticModel",
    "MfnSystem",
    "SignedLogDet",
    "SingularGeometryError",
    "max_points",
    "assemble_system",
    "fit_mfn_model",
    "eval_mfn_lagrange",
    "det_after_point_swap",
    "hessian_rayleigh_bound",
    "mfn_accuracy_constants",
    "check_fully_linear_bounds",
]

# F is declared singular when an LU pivot falls below this fraction of the
# largest pivot (or the determinant under/overflows).
PIVOT_RTOL = 1e-12


class SingularGeometryError(RuntimeError):
    """The interpolation system is (numerically) singular for this point set."""


def max_points(n):
    """Largest admissible p: a full quadratic basis in dimension n."""
    return (n + 1) * (n + 2) // 2


@dataclass(frozen=True)
class SignedLogDet:
    """Determinant stored as (sign, log |det|) to dodge overflow."""

    sign: float
    logabs: float

    @property
    def value(self):
        if self.sign == 0.0:
            return 0.0
        return self.sign * math.exp(self.logabs)

    def scaled_by(self, factor):
        """Determinant after multiplication by a (possibly negative) factor."""
        if factor == 0.0 or self.sign == 0.0:
            return SignedLogDet(0.0, -math.inf)
        return SignedLogDet(
            self.sign * math.copysign(1.0, factor),
            self.logabs + math.log(abs(factor)),
        )


def _lu_signed_logdet(lu, piv):
    diag = np.diag(lu)
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    sign = -1.0 if swaps % 2 else 1.0
    if np.any(diag == 0.0) or not np.all(np.isfinite(diag)):
        return SignedLogDet(0.0, -math.inf), 0.0
    sign *= float(np.prod(np.sign(diag)))
    logabs = float(np.sum(np.log(np.abs(diag))))
    pivot_ratio = float(np.min(np.abs(diag)) / np.max(np.abs(diag)))
    return SignedLogDet(sign, logabs), pivot_ratio


@dataclass
class QuadraticModel:
    """Quadratic ``m(y) = c + g^T(y-base) + 0.5 (y-base)^T H (y-base)``."""

    c: float
    g: np.ndarray
    H: np.ndarray
    base: np.ndarray
    multipliers: np.ndarray | None = None

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=float)
        self.base = np.asarray(self.base, dtype=float)
        H = np.asarray(self.H, dtype=float)
        self.H = 0.5 * (H + H.T)

    def value(self, y):
        d = np.asarray(y, float) - self.base
        return float(self.c + d @ self.g + 0.5 * d @ self.H @ d)

    def values(self, ys):
        D = np.asarray(ys, float) - self.base
        return self.c + D @ self.g + 0.5 * np.einsum("ij,ij->i", D @ self.H, D)

    def grad(self, y):
        d = np.asarray(y, float) - self.base
        return self.g + self.H @ d

    def grads(self, ys):
        D = np.asarray(ys, float) - self.base
        return self.g + D @ self.H

    def hess_norm(self):
        return float(np.linalg.norm(self.H, 2)) if self.g.size else 0.0

    def hessian(self):
        return self.H


@dataclass
class MfnSystem:
    """Assembled and factorized interpolation system for one point set.

    Immutable after assembly.  ``lagrange_solutions`` has one column per
    point, holding the (scaled) ``(lambda_t, c_t, g_t)`` solution of
    ``F col = e_t``; it is None when the system is singular.
    """

    base: np.ndarray
    radius: float
    points: np.ndarray
    scale: float
    Z: np.ndarray          # scaled displacements, one row per point
    Q: np.ndarray
    M: np.ndarray
    F: np.ndarray
    lu: tuple | None
    det: SignedLogDet
    pivot_ratio: float
    invertible: bool
    lagrange_solutions: np.ndarray | None

    @property
    def npoints(self):
        return self.points.shape[0]

    @property
    def dimension(self):
        return self.base.size

    @property
    def nondegenerate(self):
        return self.invertible

    def scaled_point(self, y):
        return (np.asarray(y, float) - self.base) / self.scale

    def phi(self, y):
        """Basis vector phi(y) of the swap/evaluation identities (scaled)."""
        z = self.scaled_point(y)
        w = self.Z @ z
        return np.concatenate([0.5 * w**2, [1.0], z])

    def phi_many(self, ys):
        Zs = (np.asarray(ys, float) - self.base) / self.scale
        W = Zs @ self.Z.T
        return np.column_stack([0.5 * W**2, np.ones(len(Zs)), Zs])

    def _require_invertible(self):
        if not self.invertible:
            raise SingularGeometryError(
                f"singular geometry: pivot ratio {self.pivot_ratio:.3e}"
            )

    def solve(self, rhs):
        self._require_invertible()
        return scipy.linalg.lu_solve(self.lu, rhs)

    def lagrange_polynomial(self, t):
        """The t-th Lagrange polynomial as a quadratic in original coordinates."""
        self._require_invertible()
        p, n = self.npoints, self.dimension
        col = self.lagrange_solutions[:, t]
        lam, c, g_scaled = col[:p], col[p], col[p + 1:]
        H_scaled = self.Z.T @ (lam[:, None] * self.Z)
        return QuadraticModel(
            c=float(c),
            g=g_scaled / self.scale,
            H=H_scaled / self.scale**2,
            base=self.base,
            multipliers=lam.copy(),
        )

    def lagrange_values(self, y):
        """All p Lagrange polynomial values at ``y`` via e_t^T F^{-1} phi(y)."""
        self._require_invertible()
        return self.lagrange_solutions.T @ self.phi(y)

    def lagrange_values_many(self, ys):
        self._require_invertible()
        return self.phi_many(ys) @ self.lagrange_solutions


def assemble_system(iset, require_invertible=True):
    """Build and factorize the bordered system for an interpolation set.

    Requires n+2 <= p <= (n+1)(n+2)/2.  The factorization is a dense LU
    with partial pivoting, redone from scratch for each point set; at these
    sizes that is cheap and robust.  With ``require_invertible`` a singular
    system raises :class:`SingularGeometryError`; otherwise it is returned
    with ``invertible=False`` for the caller to repair.
    """
    p, n = iset.npoints, iset.dimension
    if not (n + 2 <= p <= max_points(n)):
        raise ValueError(
            f"point count p={p} outside [{n + 2}, {max_points(n)}] for dimension {n}"
        )
    scale = iset.scale
    Z = (iset.points - iset.base) / scale
    G = Z @ Z.T
    Q = 0.5 * G**2
    M = np.column_stack([np.ones(p), Z])
    F = np.zeros((p + n + 1, p + n + 1))
    F[:p, :p] = Q
    F[:p, p:] = M
    F[p:, :p] = M.T

    lu = piv = None
    try:
        with warnings.catch_warnings():
            # Singular factorizations are detected below, not warned about.
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(F, check_finite=False)
        det, pivot_ratio = _lu_signed_logdet(lu, piv)
    except scipy.linalg.LinAlgError:
        det, pivot_ratio = SignedLogDet(0.0, -math.inf), 0.0
    invertible = (
        lu is not None
        and det.sign != 0.0
        and math.isfinite(det.logabs)
        and pivot_ratio >= PIVOT_RTOL
    )
    lagrange = None
    if invertible:
        rhs = np.zeros((p + n + 1, p))
        rhs[:p, :] = np.eye(p)
        lagrange = scipy.linalg.lu_solve((lu, piv), rhs)
    system = MfnSystem(
        base=iset.base,
        radius=iset.radius,
        points=iset.points,
        scale=scale,
        Z=Z,
        Q=Q,
        M=M,
        F=F,
        lu=(lu, piv) if lu is not None else None,
        det=det,
        pivot_ratio=pivot_ratio,
        invertible=invertible,
        lagrange_solutions=lagrange,
    )
    if require_invertible:
        system._require_invertible()
    return system


def fit_mfn_model(system, values):
    """Interpolate the sample values with the minimum-Frobenius-norm quadratic.

    Solves the bordered system for the multipliers and the affine part,
    assembles the Hessian from the multiplier-weighted displacement outer
    products, and maps the coefficients back to original coordinates.
    """
    values = np.asarray(values, dtype=float)
    p, n = system.npoints, system.dimension
    if values.size != p:
        raise ValueError("one value per interpolation point required")
    rhs = np.concatenate([values, np.zeros(n + 1)])
    sol = system.solve(rhs)
    lam, c, g_scaled = sol[:p], sol[p], sol[p + 1:]
    H_scaled = system.Z.T @ (lam[:, None] * system.Z)
    return QuadraticModel(
        c=float(c),
        g=g_scaled / system.scale,
        H=H_scaled / system.scale**2,
        base=system.base,
        multipliers=lam.copy(),
    )


def eval_mfn_lagrange(system, t, y):
    """Value of the t-th Lagrange polynomial at ``y`` via the factorization."""
    if not 0 <= t < system.npoints:
        raise IndexError(f"polynomial index {t} out of range")
    return float(system.lagrange_values(y)[t])


def det_swap_factor(system, t, y_new):
    """Determinant ratio det(F_new)/det(F) for replacing point t by ``y_new``.

    Evaluates ``l_t(y)^2 + alpha_t beta_t`` from the rank-3 row/column
    update identity, without refactorizing.
    """
    system._require_invertible()
    p = system.npoints
    phi = system.phi(y_new)
    finv_phi = system.solve(phi)
    ell = float(finv_phi[t])
    alpha = float(system.lagrange_solutions[t, t])  # e_t^T F^{-1} e_t
    z = system.scaled_point(y_new)
    beta = 0.5 * float(z @ z) ** 2 - float(phi @ finv_phi)
    return ell**2 + alpha * beta


def det_after_point_swap(system, t, y_new):
    """Predicted signed determinant after replacing point t by ``y_new``."""
    if not 0 <= t < system.npoints:
        raise IndexError(f"point index {t} out of range")
    return system.det.scaled_by(det_swap_factor(system, t, y_new))


def hessian_rayleigh_bound(p, lam, lipschitz, beta):
    """Bound on displacement-direction Hessian quotients for poised geometry.

    For a set poised at level ``lam`` with displacement bound ``beta``, the
    model Hessian satisfies
    ``|(y_s-x)^T H (y_t-x)| <= kappa_H * beta^2 * min(delta,1)^2`` with this
    ``kappa_H``.
    """
    return lipschitz * p * (8.0 * lam * beta**2 + 36.0 * lam * beta + 58.0 * lam + 6.0)


def mfn_accuracy_constants(p, lam, lipschitz, beta):
    """Model-error constants guaranteed by poised quadratic interpolation.

    Returns ``(kappa_ef, kappa_eg)`` for the same two bounds as the
    regression constants, with the Hessian term folded in.
    """
    kappa_h = hessian_rayleigh_bound(p, lam, lipschitz, beta)
    kappa_eg = p**1.5 * lam * (lipschitz + kappa_h) * beta**2
    kappa_ef = 0.5 * lipschitz + 1.5 * kappa_eg + 0.5 * p * lam**2 * kappa_h * beta**2
    return kappa_ef, kappa_eg


def check_fully_linear_bounds(iset, model, f, grad, lipschitz, lam, beta, region,
                              n_samples=1000, rng=None):
    """Accuracy-ratio report for a quadratic model on a poised set."""
    kappa_ef, kappa_eg = mfn_accuracy_constants(iset.npoints, lam, lipschitz, beta)
    return fully_linear_report(
        model, f, grad, region, iset.base, iset.radius, kappa_ef, kappa_eg,
        n_samples=n_samples, rng=rng,
    )
