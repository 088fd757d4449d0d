"""Linear estimators for the cascaded channel observed through pilot combining.

Observations follow y(i) = sqrt(rho) phi(i)^T x + phi(i)^T (g * e(i)) + z(i)
with phase-only combining rows phi(i), elementwise product *. Covariances
are expressed after normalizing the observation by sqrt(rho), so the
interference and noise terms enter as sigma_e2/rho and sigma_z2/rho.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import InfeasibleError, NumericalError
from .spatial import CorrelationMatrix, numerical_rank

__all__ = [
    "PhaseSchedule",
    "LinearEstimator",
    "emi_training_cov",
    "observation_cov",
    "lmmse_matrix",
    "analytic_mse",
    "rsls_basis",
    "rsls_matrix",
    "RSLS_COND_LIMIT",
]

RSLS_COND_LIMIT = 1e12


def _entries(m) -> np.ndarray:
    return m.entries if isinstance(m, CorrelationMatrix) else np.asarray(m)


@dataclass(frozen=True)
class PhaseSchedule:
    """Phase-only combining schedule: one row of angles per pilot use."""

    angles: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("angles must be a (uses, elements) array")
        object.__setattr__(self, "angles", a)
        a.setflags(write=False)

    @classmethod
    def from_matrix(cls, phi: np.ndarray) -> "PhaseSchedule":
        phi = np.asarray(phi)
        mod = np.abs(phi)
        if not np.allclose(mod, 1.0, atol=1e-9):
            raise ValueError("combining matrix entries must have unit modulus")
        return cls(np.angle(phi))

    @property
    def n_uses(self) -> int:
        return self.angles.shape[0]

    @property
    def n_elements(self) -> int:
        return self.angles.shape[1]

    @cached_property
    def matrix(self) -> np.ndarray:
        m = np.exp(1j * self.angles)
        m.setflags(write=False)
        return m

    def shifted(self, delta: np.ndarray) -> "PhaseSchedule":
        return PhaseSchedule(self.angles + delta)


@dataclass(frozen=True)
class LinearEstimator:
    """x_hat = matrix @ y / sqrt(rho_tr); rho_tr is the training power."""

    matrix: np.ndarray = field(repr=False)
    rho_tr: float = 1.0

    def __post_init__(self):
        m = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", m)
        m.setflags(write=False)

    def estimate(self, y: np.ndarray) -> np.ndarray:
        return (self.matrix @ y) / np.sqrt(self.rho_tr)


def emi_training_cov(phi: np.ndarray, r_q) -> np.ndarray:
    """Per-use interference covariance diag(Phi R_q Phi^H) at unit EMI power.

    Interference realizations are independent across pilot uses, so only
    the diagonal of Phi R_q Phi^H survives.
    """
    r_q = _entries(r_q)
    diag = np.einsum("in,nm,im->i", phi, r_q, phi.conj())
    return np.diag(diag.real)


def observation_cov(phi: np.ndarray, r_x, r_q, sigma_e2: float, sigma_z2: float,
                    rho: float = 1.0) -> np.ndarray:
    """Covariance of y / sqrt(rho) for a given combining matrix."""
    r_x = _entries(r_x)
    r_y = phi @ r_x @ phi.conj().T
    r_y += (sigma_e2 / rho) * emi_training_cov(phi, r_q)
    r_y += (sigma_z2 / rho) * np.eye(phi.shape[0])
    return 0.5 * (r_y + r_y.conj().T)


def lmmse_matrix(phi: np.ndarray, r_x, r_q, sigma_e2: float, sigma_z2: float,
                 rho: float = 1.0) -> LinearEstimator:
    """LMMSE combiner R_x Phi^H R_y^-1 computed through a Cholesky solve."""
    r_x = _entries(r_x)
    r_y = observation_cov(phi, r_x, r_q, sigma_e2, sigma_z2, rho)
    try:
        factor = cho_factor(r_y, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise NumericalError(
            "observation covariance is not positive definite; "
            "use sigma_z2 > 0 or fewer pilot uses"
        ) from exc
    lam = cho_solve(factor, phi @ r_x, check_finite=False).conj().T
    return LinearEstimator(matrix=lam, rho_tr=rho)


def analytic_mse(estimator: LinearEstimator, phi: np.ndarray, r_x, r_q,
                 sigma_e2: float, sigma_z2: float) -> float:
    """Mean-square error tr{R_x} - 2Re tr{Lam Phi R_x} + tr{Lam R_y Lam^H}.

    Valid for any linear estimator, matched or not; with the LMMSE matrix
    for the same statistics it collapses to tr{R_x - Lam Phi R_x}.
    """
    r_x = _entries(r_x)
    lam = estimator.matrix
    r_y = observation_cov(phi, r_x, r_q, sigma_e2, sigma_z2, estimator.rho_tr)
    cross = np.trace(lam @ phi @ r_x).real
    quad = np.trace(lam @ r_y @ lam.conj().T).real
    return float(np.trace(r_x).real - 2.0 * cross + quad)


def rsls_basis(r_x, tol: float = 1e-6) -> np.ndarray:
    """Dominant eigenvectors of the cascaded correlation, rank by relative tol."""
    r_x = _entries(r_x)
    w, v = np.linalg.eigh(r_x)
    r = numerical_rank(r_x, tol=tol)
    if r == 0:
        raise NumericalError("correlation matrix has numerical rank zero")
    return v[:, ::-1][:, :r]


def rsls_matrix(phi: np.ndarray, basis: np.ndarray, rho: float = 1.0) -> LinearEstimator:
    """Reduced-subspace LS combiner U_r pinv(Phi U_r).

    Raises InfeasibleError when the pilot count is below the subspace
    dimension or the projected combining matrix is too ill conditioned
    to invert.
    """
    n_uses = phi.shape[0]
    r = basis.shape[1]
    if n_uses < r:
        raise InfeasibleError(f"{n_uses} pilot uses cannot resolve a rank-{r} subspace")
    projected = phi @ basis
    cond = np.linalg.cond(projected)
    if not np.isfinite(cond) or cond > RSLS_COND_LIMIT:
        raise InfeasibleError(f"projected combining matrix condition {cond:.3e} too large")
    return LinearEstimator(matrix=basis @ np.linalg.pinv(projected), rho_tr=rho)
