"""Heisenberg group arithmetic, lattice reduction, and the nilmanifold metric.

Conventions
-----------
The group is G = R^3 with the polarized multiplication

    (x, y, z) * (x', y', z') = (x + x', y + y', z + z' + x y'),

and Gamma = Z^3 is the integer lattice. The quotient X = G / Gamma has the
half-open unit box [0,1)^3 as fundamental domain: every coset g Gamma has a
unique representative with all coordinates in [0,1), obtained by right
multiplication with gamma = (a, b, c) where a = -floor(x), b = -floor(y),
c = -floor(z + x b). Haar measure on X is Lebesgue measure on the box in
these coordinates.

Flat tori T^d are handled as the abelian degenerate case (componentwise
mod-1 arithmetic); all functions take points as float arrays with the last
axis holding coordinates.

Metric
------
``dist`` evaluates the lattice-invariant quotient of the homogeneous
quasi-norm N(x, y, z) = max(|x|, |y|, |z|^(1/2)) in closed form. Changing the
lift of either point acts on the group difference w = p^{-1} q by the
two-sided lattice action, and conjugation by a lattice element (a, b, c)
shifts the central coordinate by a y - b x. The orbit infimum of the
symmetrized N is therefore

    d(p Gamma, q Gamma) = max(||dx||, ||dy||)            generically,
    d(p Gamma, q Gamma) = max(||dx||, ||dy||, ||dz||^(1/2))   on fiber pairs,

where ||.|| is wrap-around distance on the circle and "fiber pair" means the
torus-factor offsets vanish (within 1e-9; the z information of a generic pair
is not lattice-invariant, because the shifts a y - b x are dense). The closed
form is exactly symmetric, exactly left-invariant, vanishes exactly on equal
canonical points, and satisfies the triangle inequality up to a fixed
constant (a quasi-metric, sufficient for every diameter and neighborhood
computation here). A windowed lattice search is kept in the test oracles;
``MetricConfig.gamma_window`` is its radius.
"""

from dataclasses import dataclass

import numpy as np

from . import backend

__all__ = [
    "MetricConfig", "heis_mul", "heis_inv", "reduce_heis", "reduce_torus",
    "is_canonical", "dist", "dist_pairs", "haar_sample",
]


@dataclass(frozen=True)
class MetricConfig:
    """Metric parameters. The closed-form distance needs no search; the window
    radius parametrizes the brute-force lattice oracles used for
    cross-checking (reduction uniqueness, windowed norm minima)."""
    gamma_window: int = 3

    def __post_init__(self):
        if self.gamma_window < 1:
            raise ValueError("gamma_window must be >= 1")


def heis_mul(g, h):
    """Group product; broadcasts over leading axes."""
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    return np.stack(
        [g[..., 0] + h[..., 0],
         g[..., 1] + h[..., 1],
         g[..., 2] + h[..., 2] + g[..., 0] * h[..., 1]],
        axis=-1,
    )


def heis_inv(g):
    """Group inverse: (-x, -y, -z + x y)."""
    g = np.asarray(g, dtype=np.float64)
    return np.stack(
        [-g[..., 0], -g[..., 1], -g[..., 2] + g[..., 0] * g[..., 1]],
        axis=-1,
    )


def _frac(u):
    v = np.asarray(u) % 1.0
    return np.where(v >= 1.0, v - 1.0, v)


def reduce_heis(g):
    """Canonical coset representative of g Gamma in [0,1)^3."""
    g = np.asarray(g, dtype=np.float64)
    x, y, z = g[..., 0], g[..., 1], g[..., 2]
    return np.stack([_frac(x), _frac(y), _frac(z - x * np.floor(y))], axis=-1)


def reduce_torus(g):
    """Componentwise mod-1 reduction."""
    return _frac(np.asarray(g, dtype=np.float64))


def is_canonical(p, tol=0.0):
    p = np.asarray(p)
    return bool(np.all(p >= -tol) and np.all(p < 1.0 + tol))


def _check_canonical(p, name):
    if not is_canonical(p):
        raise ValueError(f"{name} is not canonical (coordinates must lie in [0,1))")


def dist_pairs(P, Q, cfg=MetricConfig(), kind="heisenberg"):
    """Elementwise distances between two (n, d) arrays of canonical points."""
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    _check_canonical(P, "P")
    _check_canonical(Q, "Q")
    if P.shape != Q.shape:
        raise ValueError("point arrays must have matching shapes")
    if kind == "heisenberg":
        return np.asarray(backend.kernels.pair_dists_heis(P, Q))
    return np.asarray(backend.kernels.pair_dists_torus(P, Q))


def dist(p, q, cfg=MetricConfig(), kind="heisenberg"):
    """Distance between two canonical points."""
    return float(dist_pairs(np.asarray(p)[None, :], np.asarray(q)[None, :], cfg, kind)[0])


def haar_sample(n, seed, dim=3):
    """n i.i.d. Haar points: uniform on the fundamental box, deterministic in seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.random.default_rng(seed).random((int(n), dim))
