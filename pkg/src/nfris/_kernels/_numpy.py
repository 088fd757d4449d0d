"""Pure-NumPy implementations of the hot kernels.

Used as the fallback backend when the compiled extension is unavailable
(or when NFRIS_PURE_PYTHON=1). Kept semantically identical to the
compiled kernels; the two may differ in the last few ulps because the
summation orders differ.
"""
from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def response_matrix(points, coords, wavelength, near=True):
    """Array response vectors for a batch of source points.

    Parameters
    ----------
    points : (P, 3) float array
        Rows (r, azimuth, elevation) in meters/radians. The radius column
        is ignored in the far-field mode.
    coords : (N, 3) float array
        Element coordinates, reference element first.
    wavelength : float
    near : bool
        True for spherical-wavefront responses, False for the plane-wave
        (far-field) limit.

    Returns
    -------
    (P, N) complex128 array, one unit-modulus response per row.
    """
    r = points[:, 0:1]
    az = points[:, 1]
    el = points[:, 2]
    cos_el = np.cos(el)
    k = np.stack([cos_el * np.cos(az), cos_el * np.sin(az), np.sin(el)], axis=1)
    ku = k @ coords.T  # (P, N) projections k^T u
    kappa = TWO_PI / wavelength
    if not near:
        return np.exp(-1j * kappa * ku)
    u2 = np.sum(coords * coords, axis=1)[None, :]
    radicand = 1.0 - 2.0 * ku / r + u2 / (r * r)
    if np.any(radicand <= 0.0):
        raise ValueError("source point passes through the array plane (non-positive radicand)")
    # r_n - r = r*(sqrt(radicand) - 1), rewritten to avoid cancellation at large r
    delta = (-2.0 * ku + u2 / r) / (1.0 + np.sqrt(radicand))
    return np.exp(1j * kappa * delta)


def mc_trial_errors(vh, vg, ve, vz, lh_t, lg_t, le_t, phi, lam_t, sqrt_rho, sigma_e, sigma_z):
    """Per-trial squared estimation error and channel power.

    Parameters
    ----------
    vh, vg : (T, mh), (T, mg) complex
        Unit-variance circular Gaussian draws for the two link channels.
    ve : (T, tau, me) complex
        Draws for the interference incident on the array, one block per
        channel use. ``me`` may be zero.
    vz : (T, tau) complex
        Thermal-noise draws.
    lh_t, lg_t, le_t : (m, N) complex
        Transposed coloring factors (so ``vh @ lh_t`` is a batch of
        correlated channel vectors).
    phi : (tau, N) complex
        Unit-modulus phase schedule.
    lam_t : (tau, N) complex
        Transposed linear-estimator matrix.
    sqrt_rho, sigma_e, sigma_z : float
        Pilot amplitude, interference amplitude, noise amplitude.

    Returns
    -------
    err, pow : (T,) float64 arrays
        ||x_t - xhat_t||^2 and ||x_t||^2 per trial.
    """
    h = vh @ lh_t
    g = vg @ lg_t
    x = g * h
    y = sqrt_rho * (x @ phi.T)
    if ve.shape[2] > 0 and sigma_e != 0.0:
        emi = ve @ le_t  # (T, tau, N)
        y = y + sigma_e * np.einsum("tin,tn,in->ti", emi, g, phi)
    if sigma_z != 0.0:
        y = y + sigma_z * vz
    xhat = (y @ lam_t) / sqrt_rho
    diff = x - xhat
    err = np.sum(diff.real**2 + diff.imag**2, axis=1)
    pw = np.sum(x.real**2 + x.imag**2, axis=1)
    return err, pw
