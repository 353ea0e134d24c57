"""Pure-numpy kernel implementations, used when the compiled extension is unavailable.

Same contracts and the same minimization domains as ``_core``; results agree
with the compiled backend to floating-point tolerance. Orbits are generated in
blocks from the closed-form power formula instead of stepwise multiplication,
which keeps the fallback vectorized; the per-block restart bounds the
accumulated rounding error well below the documented 1e-8 orbit tolerance.
"""

import math

import numpy as np

_BLOCK = 1 << 16


def _heis_block(alpha, beta, gamma, p0, n):
    """Canonical coords of tau^k * p0 for k = 0..n-1 via the closed form
    tau^k = (k a, k b, k g + k(k-1)/2 * a b)."""
    k = np.arange(n, dtype=np.float64)
    X = p0[0] + k * alpha
    Y = p0[1] + k * beta
    Z = gamma * k + k * (k - 1.0) * 0.5 * (alpha * beta) + p0[2] + k * alpha * p0[1]
    zc = (Z - X * np.floor(Y)) % 1.0
    out = np.stack([X % 1.0, Y % 1.0, zc], axis=-1)
    out[out >= 1.0] -= 1.0
    return out


def orbit_heis(alpha, beta, gamma, p0, n):
    p = np.asarray(p0, dtype=np.float64)
    start = _heis_block(alpha, beta, gamma, p, 1)[0]
    if n <= _BLOCK:
        return _heis_block(alpha, beta, gamma, start, n)
    chunks = []
    done = 0
    while done < n:
        m = min(_BLOCK, n - done)
        blk = _heis_block(alpha, beta, gamma, start, m + 1)
        chunks.append(blk[:m])
        start = blk[m]
        done += m
    return np.concatenate(chunks, axis=0)


def orbit_torus(tau, p0, n):
    tau = np.asarray(tau, dtype=np.float64)
    p = np.asarray(p0, dtype=np.float64) % 1.0
    k = np.arange(n, dtype=np.float64)[:, None]
    out = (p[None, :] + k * tau[None, :]) % 1.0
    out[out >= 1.0] -= 1.0
    return out


def csum(v):
    v = np.asarray(v, dtype=np.complex128)
    return complex(math.fsum(v.real), math.fsum(v.imag))


def cube_sum(F, n_side, k):
    F = np.asarray(F, dtype=np.complex128)
    if len(F) < k * n_side + 1:
        raise ValueError("orbit value array too short for requested cube sum")
    if k == 1:
        return complex(F[0] * np.conj(F[1:n_side + 1].sum()))
    if k == 2:
        return _s2(F, n_side)
    if k == 3:
        acc = 0.0 + 0.0j
        L = 2 * n_side + 1
        for n1 in range(1, n_side + 1):
            H = F[:L] * np.conj(F[n1:n1 + L])
            acc += _s2(H, n_side)
        return complex(acc)
    raise ValueError("cube_sum supports k in {1, 2, 3}")


def _s2(F, ns):
    L = ns + 1
    win = np.lib.stride_tricks.sliding_window_view(F[:2 * ns + 1], L)  # win[i] = F[i:i+L]
    H = F[None, :L] * np.conj(win[1:ns + 1])       # H[n1-1, m] = F[m] conj(F[m+n1])
    return complex(np.sum(H[:, 0] * np.conj(H[:, 1:ns + 1].sum(axis=1))))


_CENTRAL_TOL = 1e-9


def _wrap(t):
    u = np.asarray(t) % 1.0
    return np.minimum(u, 1.0 - u)


def _dist_w(wx, wy, wz):
    """Vectorized invariant quotient distance for group differences w.

    Conjugation by a lattice element (a,b,c) shifts z by a*y - b*x, so an
    exactly lattice- and translation-invariant distance can see the central
    coordinate only on fiber pairs (x = y = 0 mod 1): torus-factor wrap
    distance, with exact-fiber differences measured by sqrt of the central
    wrap offset.
    """
    base = np.maximum(_wrap(wx), _wrap(wy))
    central = (_wrap(wx) <= _CENTRAL_TOL) & (_wrap(wy) <= _CENTRAL_TOL)
    if np.any(central):
        zslot = np.sqrt(_wrap(np.asarray(wz)))
        base = np.where(central, np.maximum(base, zslot), base)
    return base


def _w_components(P, Q):
    # z part grouped as differences so identical or same-fiber points cancel exactly
    wx = Q[:, 0] - P[:, 0]
    wy = Q[:, 1] - P[:, 1]
    wz = (Q[:, 2] - P[:, 2]) + P[:, 0] * (P[:, 1] - Q[:, 1])
    return wx, wy, wz


def pair_dists_heis(P, Q):
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    return _dist_w(*_w_components(P, Q))


def pair_dists_torus(P, Q):
    d = np.abs(np.asarray(P, float) - np.asarray(Q, float))
    return np.minimum(d, 1.0 - d).max(axis=1)


def max_pairwise_torus(pts):
    pts = np.asarray(pts, dtype=np.float64)
    best = 0.0
    n = len(pts)
    step = max(1, (1 << 22) // max(n, 1))
    for lo in range(0, n, step):
        blk = pts[lo:lo + step]
        d = np.abs(blk[:, None, :] - pts[None, lo:, :])
        d = np.minimum(d, 1.0 - d).max(axis=2)
        best = max(best, float(d.max()))
    return best


def max_pairwise_heis(pts):
    """Exact max pairwise distance of canonical Heisenberg points, in blocks."""
    pts = np.asarray(pts, dtype=np.float64)
    best = 0.0
    n = len(pts)
    step = max(1, (1 << 21) // max(n, 1))
    for lo in range(0, n, step):
        blk = pts[lo:lo + step][:, None, :]
        rest = pts[None, lo:, :]
        wx = rest[..., 0] - blk[..., 0]
        wy = rest[..., 1] - blk[..., 1]
        wz = (rest[..., 2] - blk[..., 2]) + blk[..., 0] * (blk[..., 1] - rest[..., 1])
        best = max(best, float(_dist_w(wx, wy, wz).max()))
    return best
