"""Backend selection for the numerical hot kernels.

The compiled Cython extension is preferred when importable; the NumPy
fallback is always available. Set NFRIS_PURE_PYTHON=1 to force the
fallback (used by the benchmark and the backend-equivalence tests).
"""
from __future__ import annotations

import os

import numpy as np

from . import _numpy

if os.environ.get("NFRIS_PURE_PYTHON", "") == "1":
    _impl = _numpy
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _numpy
        BACKEND = "python"

__all__ = ["BACKEND", "response_matrix", "mc_trial_errors", "get_backend"]


def get_backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return BACKEND


def _c128(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def response_matrix(points, coords, wavelength: float, near: bool = True) -> np.ndarray:
    """Batch of array-response vectors; see ``_numpy.response_matrix``."""
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    coords = np.ascontiguousarray(coords, dtype=np.float64)
    return _impl.response_matrix(points, coords, float(wavelength), near)


def mc_trial_errors(vh, vg, ve, vz, lh_t, lg_t, le_t, phi, lam_t,
                    sqrt_rho: float, sigma_e: float, sigma_z: float):
    """Per-trial error/power accumulation; see ``_numpy.mc_trial_errors``."""
    return _impl.mc_trial_errors(
        _c128(vh), _c128(vg), _c128(ve), _c128(vz),
        _c128(lh_t), _c128(lg_t), _c128(le_t), _c128(phi), _c128(lam_t),
        float(sqrt_rho), float(sigma_e), float(sigma_z),
    )
