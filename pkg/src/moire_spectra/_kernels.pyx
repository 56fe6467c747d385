# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Mirrors ``_kernels_py`` exactly; see that module for the contracts."""

import numpy as np

from libc.math cimport cos, sin


def stencil_apply(const double[::1] kin, const long long[:, ::1] nbr,
                  const double complex[::1] vals, const double complex[:, ::1] psi):
    cdef Py_ssize_t n = psi.shape[0], nb = psi.shape[1], nc = nbr.shape[0]
    cdef Py_ssize_t i, b, c
    cdef long long j
    cdef double complex v
    out_arr = np.empty((n, nb), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    with nogil:
        for i in range(n):
            for b in range(nb):
                out[i, b] = kin[i] * psi[i, b]
        for c in range(nc):
            v = vals[c]
            for i in range(n):
                j = nbr[c, i]
                if j >= 0:
                    for b in range(nb):
                        out[i, b] = out[i, b] + v * psi[j, b]
    return out_arr


def trig_sum(const double[:, ::1] freqs, const double complex[:, ::1] amps,
             const double[:, ::1] points):
    cdef Py_ssize_t nk = freqs.shape[0], d = freqs.shape[1]
    cdef Py_ssize_t ns = amps.shape[1], npts = points.shape[0]
    cdef Py_ssize_t p, t, s, a
    cdef double phase
    cdef double complex e
    out_arr = np.zeros((npts, ns), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    with nogil:
        for p in range(npts):
            for t in range(nk):
                phase = 0.0
                for a in range(d):
                    phase = phase + freqs[t, a] * points[p, a]
                e = cos(phase) + 1j * sin(phase)
                for s in range(ns):
                    out[p, s] = out[p, s] + amps[t, s] * e
    return out_arr
