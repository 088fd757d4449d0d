# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: batch array-response synthesis and the
Monte Carlo trial loop. Semantics match ``_numpy`` exactly. The matrix
contractions go through BLAS (same zgemm the fallback reaches through
numpy); the win over the fallback is that everything between the
contractions is fused into single passes instead of a chain of
full-size temporaries."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt
from scipy.linalg.cython_blas cimport zgemm

cnp.import_array()

ctypedef double complex dcomplex

DEF TWO_PI = 6.283185307179586476925286766559


def response_matrix(const double[:, ::1] points, const double[:, ::1] coords,
                    double wavelength, bint near=True):
    cdef Py_ssize_t P = points.shape[0]
    cdef Py_ssize_t N = coords.shape[0]
    out_arr = np.empty((P, N), dtype=np.complex128)
    cdef dcomplex[:, ::1] out = out_arr
    cdef double kappa = TWO_PI / wavelength
    cdef Py_ssize_t p, n
    cdef double r, az, el, kx, ky, kz, cel
    cdef double ku, u2, radicand, delta, phase
    cdef bint bad = False
    with nogil:
        for p in range(P):
            r = points[p, 0]
            az = points[p, 1]
            el = points[p, 2]
            cel = cos(el)
            kx = cel * cos(az)
            ky = cel * sin(az)
            kz = sin(el)
            for n in range(N):
                ku = kx * coords[n, 0] + ky * coords[n, 1] + kz * coords[n, 2]
                if near:
                    u2 = (coords[n, 0] * coords[n, 0]
                          + coords[n, 1] * coords[n, 1]
                          + coords[n, 2] * coords[n, 2])
                    radicand = 1.0 - 2.0 * ku / r + u2 / (r * r)
                    if radicand <= 0.0:
                        bad = True
                        break
                    delta = (-2.0 * ku + u2 / r) / (1.0 + sqrt(radicand))
                    phase = kappa * delta
                else:
                    phase = -kappa * ku
                out[p, n] = cos(phase) + 1j * sin(phase)
            if bad:
                break
    if bad:
        raise ValueError("source point passes through the array plane (non-positive radicand)")
    return out_arr


def mc_trial_errors(const dcomplex[:, ::1] vh, const dcomplex[:, ::1] vg,
                    const dcomplex[:, :, ::1] ve, const dcomplex[:, ::1] vz,
                    const dcomplex[:, ::1] lh_t, const dcomplex[:, ::1] lg_t,
                    const dcomplex[:, ::1] le_t, const dcomplex[:, ::1] phi,
                    const dcomplex[:, ::1] lam_t,
                    double sqrt_rho, double sigma_e, double sigma_z):
    cdef Py_ssize_t T = vh.shape[0]
    cdef Py_ssize_t mh = vh.shape[1]
    cdef Py_ssize_t mg = vg.shape[1]
    cdef Py_ssize_t me = ve.shape[2]
    cdef Py_ssize_t tau = phi.shape[0]
    cdef Py_ssize_t N = phi.shape[1]

    err_arr = np.empty(T, dtype=np.float64)
    pow_arr = np.empty(T, dtype=np.float64)
    cdef double[::1] err = err_arr
    cdef double[::1] pw = pow_arr

    h_arr = np.empty((T, N), dtype=np.complex128)
    g_arr = np.empty((T, N), dtype=np.complex128)
    x_arr = np.empty((T, N), dtype=np.complex128)
    xe_arr = np.empty((T, N), dtype=np.complex128)
    y_arr = np.empty((T, tau), dtype=np.complex128)
    cdef dcomplex[:, ::1] h = h_arr
    cdef dcomplex[:, ::1] g = g_arr
    cdef dcomplex[:, ::1] x = x_arr
    cdef dcomplex[:, ::1] xe = xe_arr
    cdef dcomplex[:, ::1] y = y_arr

    cdef bint with_emi = me > 0 and sigma_e != 0.0
    cdef dcomplex[:, :, ::1] ce = None
    cdef dcomplex[:, ::1] q = None
    if with_emi:
        # fold the schedule phases into the interference coloring up front
        ce = np.empty((tau, me, N), dtype=np.complex128)
        q = np.empty((T, N), dtype=np.complex128)

    cdef char opn = b'N'[0]
    cdef char opt = b'T'[0]
    cdef int bm, bn, bk, lda, ldb, ldc
    cdef dcomplex one = 1.0
    cdef dcomplex zero = 0.0
    cdef dcomplex a_fwd = sqrt_rho
    cdef dcomplex a_inv = 1.0 / sqrt_rho

    cdef Py_ssize_t t, i, n, m
    cdef double ar, ai, br, bi, qr, qi, dr, di, se, sp
    cdef dcomplex yv

    # All products below run through zgemm on the row-major buffers via the
    # usual transposition trick: C = A @ B row-major is C^T = B^T A^T
    # column-major, so swap the operand order and pass row strides as
    # leading dimensions.
    with nogil:
        # h = vh @ lh_t, g = vg @ lg_t
        bm = <int> N; bn = <int> T; bk = <int> mh
        lda = <int> N; ldb = <int> mh; ldc = <int> N
        zgemm(&opn, &opn, &bm, &bn, &bk, &one,
              <dcomplex *> &lh_t[0, 0], &lda, <dcomplex *> &vh[0, 0], &ldb,
              &zero, &h[0, 0], &ldc)
        bk = <int> mg; ldb = <int> mg
        zgemm(&opn, &opn, &bm, &bn, &bk, &one,
              <dcomplex *> &lg_t[0, 0], &lda, <dcomplex *> &vg[0, 0], &ldb,
              &zero, &g[0, 0], &ldc)

        # cascaded channel x = g .* h
        for t in range(T):
            for n in range(N):
                ar = h[t, n].real; ai = h[t, n].imag
                br = g[t, n].real; bi = g[t, n].imag
                x[t, n] = (ar * br - ai * bi) + 1j * (ar * bi + ai * br)

        # received pilots y_i = sqrt(rho) phi_i^T x + phi_i^T (g .* e_i) + z_i
        bm = <int> tau; bn = <int> T; bk = <int> N
        lda = <int> N; ldb = <int> N; ldc = <int> tau
        zgemm(&opt, &opn, &bm, &bn, &bk, &a_fwd,
              <dcomplex *> &phi[0, 0], &lda, &x[0, 0], &ldb,
              &zero, &y[0, 0], &ldc)

        if with_emi:
            for i in range(tau):
                for m in range(me):
                    for n in range(N):
                        ce[i, m, n] = le_t[m, n] * phi[i, n]
            bm = <int> N; bn = <int> T; bk = <int> me
            lda = <int> N; ldb = <int> (tau * me); ldc = <int> N
            for i in range(tau):
                # q = ve[:, i, :] @ ce[i]; the slice of ve is already a
                # valid column-major (me, T) operand with leading
                # dimension tau * me, no copy needed
                zgemm(&opn, &opn, &bm, &bn, &bk, &one,
                      &ce[i, 0, 0], &lda,
                      <dcomplex *> &ve[0, i, 0], &ldb,
                      &zero, &q[0, 0], &ldc)
                for t in range(T):
                    qr = 0.0
                    qi = 0.0
                    for n in range(N):
                        ar = q[t, n].real; ai = q[t, n].imag
                        br = g[t, n].real; bi = g[t, n].imag
                        qr += ar * br - ai * bi
                        qi += ar * bi + ai * br
                    yv = y[t, i]
                    y[t, i] = (yv.real + sigma_e * qr) + 1j * (yv.imag + sigma_e * qi)

        if sigma_z != 0.0:
            for t in range(T):
                for i in range(tau):
                    y[t, i] = y[t, i] + sigma_z * vz[t, i]

        # apply the linear estimator: xe = y @ lam_t / sqrt(rho)
        bm = <int> N; bn = <int> T; bk = <int> tau
        lda = <int> N; ldb = <int> tau; ldc = <int> N
        zgemm(&opn, &opn, &bm, &bn, &bk, &a_inv,
              <dcomplex *> &lam_t[0, 0], &lda, &y[0, 0], &ldb,
              &zero, &xe[0, 0], &ldc)

        # accumulate squared error and channel power per trial
        for t in range(T):
            se = 0.0
            sp = 0.0
            for n in range(N):
                ar = x[t, n].real; ai = x[t, n].imag
                dr = ar - xe[t, n].real
                di = ai - xe[t, n].imag
                se += dr * dr + di * di
                sp += ar * ar + ai * ai
            err[t] = se
            pw[t] = sp
    return err_arr, pow_arr
