# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: orbit iteration, cube correlation sums, lattice-minimized distances.

Hot loops only; all higher-level logic lives in the pure-Python modules. The
numpy fallback in ``_kernels_np`` implements the same contracts and the same
minimization domains, so both backends agree to floating-point tolerance.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, fabs, sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline double _frac(double u) nogil:
    cdef double v = u - floor(u)
    if v >= 1.0:
        v -= 1.0
    return v


def orbit_heis(double alpha, double beta, double gamma, double[:] p0, Py_ssize_t n):
    """Orbit (p0, T p0, ..., T^{n-1} p0) by iterated group multiplication.

    Each step multiplies on the left by (alpha, beta, gamma) and reduces to the
    canonical representative in [0,1)^3.
    """
    out = np.empty((n, 3), dtype=np.float64)
    cdef double[:, :] o = out
    cdef double x = _frac(p0[0]), y = _frac(p0[1]), z = p0[2]
    cdef double X, Y, Z, fy
    cdef Py_ssize_t k
    z = _frac(z - p0[0] * floor(p0[1]))
    x = _frac(p0[0])
    y = _frac(p0[1])
    for k in range(n):
        o[k, 0] = x
        o[k, 1] = y
        o[k, 2] = z
        X = alpha + x
        Y = beta + y
        Z = gamma + z + alpha * y
        fy = floor(Y)
        x = _frac(X)
        y = Y - fy
        if y >= 1.0:
            y -= 1.0
        z = _frac(Z - X * fy)
    return out


def orbit_torus(double[:] tau, double[:] p0, Py_ssize_t n):
    """Orbit of a torus rotation, componentwise mod-1."""
    cdef Py_ssize_t d = tau.shape[0]
    out = np.empty((n, d), dtype=np.float64)
    cdef double[:, :] o = out
    cdef double* cur = <double*> malloc(d * sizeof(double))
    cdef Py_ssize_t k, j
    if cur == NULL:
        raise MemoryError()
    try:
        for j in range(d):
            cur[j] = _frac(p0[j])
        for k in range(n):
            for j in range(d):
                o[k, j] = cur[j]
                cur[j] = _frac(cur[j] + tau[j])
    finally:
        free(cur)
    return out


def csum(double complex[:] v):
    """Compensated (Kahan) complex sum."""
    cdef double sr = 0.0, si = 0.0, cr = 0.0, ci = 0.0
    cdef double yr, yi, tr, ti
    cdef Py_ssize_t k
    for k in range(v.shape[0]):
        yr = v[k].real - cr
        yi = v[k].imag - ci
        tr = sr + yr
        ti = si + yi
        cr = (tr - sr) - yr
        ci = (ti - si) - yi
        sr = tr
        si = ti
    return complex(sr, si)


def cube_sum(double complex[:] F, Py_ssize_t n_side, int k):
    """S_k(F) = sum over n in {1..n_side}^k of prod_{eps in {0,1}^k} C^{|eps|} F[eps.n].

    C is complex conjugation. Evaluated by the exact factorization
    S_k(F) = sum_{n1} S_{k-1}(H_{n1}) with H_{n1}[m] = F[m] * conj(F[m+n1]).
    Requires len(F) >= k*n_side + 1.
    """
    cdef Py_ssize_t L = F.shape[0]
    if L < k * n_side + 1:
        raise ValueError("orbit value array too short for requested cube sum")
    cdef double complex acc = 0, s, s2, h0
    cdef Py_ssize_t n1, n2, n3, m
    cdef double complex* H
    if k == 1:
        s = 0
        for n1 in range(1, n_side + 1):
            s = s + F[n1]
        return complex(F[0] * s.conjugate())
    if k == 2:
        for n1 in range(1, n_side + 1):
            s = 0
            for n2 in range(1, n_side + 1):
                s = s + F[n2] * F[n2 + n1].conjugate()
            acc = acc + (F[0] * F[n1].conjugate()) * s.conjugate()
        return complex(acc)
    if k == 3:
        H = <double complex*> malloc((2 * n_side + 1) * sizeof(double complex))
        if H == NULL:
            raise MemoryError()
        try:
            for n1 in range(1, n_side + 1):
                for m in range(2 * n_side + 1):
                    H[m] = F[m] * F[m + n1].conjugate()
                for n2 in range(1, n_side + 1):
                    s2 = 0
                    for n3 in range(1, n_side + 1):
                        s2 = s2 + H[n3] * H[n3 + n2].conjugate()
                    acc = acc + (H[0] * H[n2].conjugate()) * s2.conjugate()
        finally:
            free(H)
        return complex(acc)
    raise ValueError("cube_sum supports k in {1, 2, 3}")


DEF CENTRAL_TOL = 1e-9


cdef inline double _wrap(double t) nogil:
    cdef double u = t - floor(t)
    if u > 0.5:
        u = 1.0 - u
    return u


cdef inline double _dist_w(double x, double y, double z) nogil:
    """Invariant quotient distance of the group difference w = (x,y,z).

    Conjugation by a lattice element (a,b,c) shifts z by a*y - b*x, so an
    exactly lattice- and translation-invariant distance can see the central
    coordinate only on fiber pairs (x = y = 0 mod 1). Closed form: the
    torus-factor wrap distance, except that exact-fiber differences are
    measured by the homogeneous sqrt of the central wrap offset.
    """
    cdef double wx = _wrap(x)
    cdef double wy = _wrap(y)
    cdef double base = wx if wx > wy else wy
    cdef double zslot
    if wx <= CENTRAL_TOL and wy <= CENTRAL_TOL:
        zslot = sqrt(_wrap(z))
        if zslot > base:
            return zslot
    return base


def pair_dists_heis(double[:, :] P, double[:, :] Q):
    """Distances between canonical points P[i] and Q[i] on the Heisenberg nilmanifold."""
    cdef Py_ssize_t n = P.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    cdef double px, py, pz, wx, wy, wz
    cdef Py_ssize_t i
    for i in range(n):
        px = P[i, 0]; py = P[i, 1]; pz = P[i, 2]
        # w = P^{-1} * Q; the z part is grouped as differences so identical
        # or same-fiber points cancel exactly in floating point
        wx = Q[i, 0] - px
        wy = Q[i, 1] - py
        wz = (Q[i, 2] - pz) + px * (py - Q[i, 1])
        o[i] = _dist_w(wx, wy, wz)
    return out


def max_pairwise_heis(double[:, :] pts):
    """Exact maximum pairwise distance of canonical Heisenberg points."""
    cdef Py_ssize_t n = pts.shape[0]
    cdef double best = 0.0, d
    cdef double px, py, pz, wx, wy, wz
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            px = pts[i, 0]; py = pts[i, 1]; pz = pts[i, 2]
            for j in range(i + 1, n):
                wx = pts[j, 0] - px
                wy = pts[j, 1] - py
                wz = (pts[j, 2] - pz) + px * (py - pts[j, 1])
                d = _dist_w(wx, wy, wz)
                if d > best:
                    best = d
    return best


def pair_dists_torus(double[:, :] P, double[:, :] Q):
    """Componentwise wrap-around max distances between torus point arrays."""
    cdef Py_ssize_t n = P.shape[0], d = P.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[:] o = out
    cdef double m, t
    cdef Py_ssize_t i, j
    for i in range(n):
        m = 0.0
        for j in range(d):
            t = fabs(P[i, j] - Q[i, j])
            if t > 0.5:
                t = 1.0 - t
            if t > m:
                m = t
        o[i] = m
    return out


def max_pairwise_torus(double[:, :] pts):
    cdef Py_ssize_t n = pts.shape[0], d = pts.shape[1]
    cdef double best = 0.0, m, t
    cdef Py_ssize_t i, j, c
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                m = 0.0
                for c in range(d):
                    t = fabs(pts[i, c] - pts[j, c])
                    if t > 0.5:
                        t = 1.0 - t
                    if t > m:
                        m = t
                if m > best:
                    best = m
    return best
