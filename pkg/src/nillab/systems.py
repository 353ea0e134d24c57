"""Nilsystem descriptors and dynamics: rotations, orbits, Birkhoff averages,
the torus factor, and vertical (central) rotations.

A nilsystem here is (X, mu, T) with X either the Heisenberg nilmanifold or a
flat d-torus, mu Haar, and T left translation by a fixed group element tau.
Ergodicity is an *assumption* recorded in the system's certificate (the list
of real numbers whose Q-linear independence is assumed), never verified at
runtime; the default parameters are embedded as exact expressions evaluated
at load time.

Orbit averages of continuous observables converge to the Haar integral by
unique ergodicity of ergodic nilsystems; ``birkhoff_avg`` is therefore the
primary integration route, with Monte Carlo over ``haar_sample`` as the
independent cross-check.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import backend
from .nilgroup import MetricConfig, heis_mul, reduce_heis, reduce_torus

__all__ = [
    "ALPHA", "BETA", "GAMMA", "SHEAR_BASE", "NilSystem", "Observable",
    "heisenberg_system", "torus_system", "tau_power", "nilrotate", "orbit",
    "birkhoff_avg", "project_torus_factor", "vertical_rotate",
    "vertical_average", "heis_character", "torus_character", "parse_observable",
]

# default rotation data: 1, ALPHA, BETA are linearly independent over Q
ALPHA = np.sqrt(2.0) - 1.0
BETA = np.sqrt(3.0) - 1.0
GAMMA = 0.0
# base shear for the explicit non-graph joining: 1, ALPHA, BETA, ALPHA*SHEAR_BASE
# stay independent (distinct squarefree radicals)
SHEAR_BASE = np.sqrt(5.0) - 2.0

_BIRKHOFF_BLOCK = 1 << 17


@dataclass(frozen=True)
class NilSystem:
    kind: str                      # "heisenberg" | "torus"
    tau: np.ndarray                # rotation element (3 coords, or d for torus)
    metric: MetricConfig = MetricConfig()
    certificate: tuple = ()        # expressions assumed Q-linearly independent

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=np.float64)
        object.__setattr__(self, "tau", tau)
        if self.kind not in ("heisenberg", "torus"):
            raise ValueError(f"unknown system kind: {self.kind!r}")
        if self.kind == "heisenberg" and tau.shape != (3,):
            raise ValueError("heisenberg rotation element needs 3 coordinates")
        if not np.all(np.isfinite(tau)):
            raise ValueError("rotation element must be finite")

    @property
    def dim(self):
        return int(self.tau.shape[0])

    @property
    def is_trivial(self):
        if self.kind == "heisenberg":
            return bool(np.all(self.tau[:2] == 0.0))
        return bool(np.all(self.tau % 1.0 == 0.0))

    def require_ergodic(self):
        if self.is_trivial:
            raise ValueError("trivial rotation: an ergodic system is required here")
        return self


def heisenberg_system(alpha=ALPHA, beta=BETA, gamma=GAMMA, metric=MetricConfig()):
    cert = ("1", "alpha", "beta") if (alpha, beta) != (ALPHA, BETA) else ("1", "sqrt(2)-1", "sqrt(3)-1")
    return NilSystem("heisenberg", np.array([alpha, beta, gamma]), metric, cert)


def torus_system(freqs=(ALPHA,), metric=MetricConfig()):
    freqs = np.atleast_1d(np.asarray(freqs, dtype=np.float64))
    return NilSystem("torus", freqs, metric, ("1",) + tuple(repr(float(f)) for f in freqs))


def tau_power(sys, k):
    """Closed form for tau^k: (k a, k b, k g + C(k,2) a b) on the Heisenberg group,
    k * tau on tori."""
    if sys.kind == "torus":
        return k * sys.tau
    a, b, g = sys.tau
    return np.array([k * a, k * b, k * g + k * (k - 1) / 2.0 * a * b])


@dataclass(frozen=True)
class Observable:
    """Bounded closed-form observable on canonical points.

    ``fn`` must be deterministic and vectorized over an (n, d) array of
    canonical coordinates. ``continuous`` is False for observables that are
    only a.e. continuous (e.g. characters of the canonical z coordinate,
    whose discontinuity set is Haar-null).
    """
    name: str
    fn: Callable
    bound: float = 1.0
    continuous: bool = True

    def __call__(self, pts):
        return np.asarray(self.fn(np.atleast_2d(np.asarray(pts, dtype=np.float64))))


def heis_character(m):
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3,):
        raise ValueError("heisenberg character needs 3 integer frequencies")

    def fn(pts):
        return np.exp(2j * np.pi * (pts @ m))

    name = "char:" + ",".join(str(int(c)) for c in m)
    return Observable(name, fn, 1.0, continuous=(m[2] == 0))


def torus_character(m):
    m = np.atleast_1d(np.asarray(m, dtype=np.float64))

    def fn(pts):
        return np.exp(2j * np.pi * (pts @ m))

    return Observable("char:" + ",".join(str(int(c)) for c in m), fn, 1.0, True)


def parse_observable(text, kind, dim):
    """Parse CLI observable ids: 'char:1,0,-2' or the 'vert' shorthand."""
    text = text.strip()
    if text == "vert":
        if kind != "heisenberg":
            raise ValueError("'vert' is a heisenberg observable")
        return heis_character((0, 0, 1))
    if text.startswith("char:"):
        m = [int(c) for c in text[5:].split(",")]
        if len(m) != dim:
            raise ValueError(f"observable frequency needs {dim} components")
        return heis_character(m) if kind == "heisenberg" else torus_character(m)
    raise ValueError(f"unknown observable spec: {text!r}")


def nilrotate(sys, p):
    """One rotation step: reduce(tau * lift(p)). Works on single points or batches."""
    if sys.kind == "torus":
        return reduce_torus(np.asarray(p) + sys.tau)
    return reduce_heis(heis_mul(sys.tau, p))


def orbit(sys, p0, n):
    """(p0, T p0, ..., T^{n-1} p0) with per-step reduction, as an (n, d) array."""
    if n < 1:
        raise ValueError("orbit length must be >= 1")
    p0 = np.asarray(p0, dtype=np.float64)
    if sys.kind == "torus":
        return backend.kernels.orbit_torus(sys.tau, p0, int(n))
    a, b, g = sys.tau
    return backend.kernels.orbit_heis(float(a), float(b), float(g), p0, int(n))


def birkhoff_avg(sys, f, p0=None, n=100_000, block=_BIRKHOFF_BLOCK):
    """(1/n) sum_{k<n} f(T^k p0), blockwise with compensated accumulation.

    Defaults to the base point; ergodic systems make the average converge to
    the Haar integral regardless of the (generic) starting point.
    """
    sys.require_ergodic()
    if n < 1:
        raise ValueError("n must be >= 1")
    start = np.zeros(sys.dim) if p0 is None else np.asarray(p0, dtype=np.float64)
    totals = []
    done = 0
    while done < n:
        m = min(block, n - done)
        pts = orbit(sys, start, m + 1)
        totals.append(backend.kernels.csum(np.ascontiguousarray(f(pts[:m]), dtype=np.complex128)))
        start = pts[m]
        done += m
    import math
    return complex(math.fsum(t.real for t in totals) / n, math.fsum(t.imag for t in totals) / n)


def project_torus_factor(p):
    """Quotient by the center: (x, y, z) Gamma -> (x, y) on the 2-torus.

    Intertwines the Heisenberg rotation with the torus rotation by (alpha, beta).
    """
    return np.asarray(p, dtype=np.float64)[..., :2]


def vertical_rotate(p, u):
    """Right multiplication by the central element (0, 0, u): fiberwise circle rotation.

    Commutes with every nilrotation and fixes the torus-factor projection.
    """
    p = np.asarray(p, dtype=np.float64)
    out = p.copy()
    zu = (out[..., 2] + u) % 1.0
    out[..., 2] = np.where(zu >= 1.0, zu - 1.0, zu)
    return out


def vertical_average(f, p, grid=16):
    """(1/grid) sum_j f(V_{j/grid} p): Riemann sum over the fiber circle.

    Exact for observables whose fiber dependence is a trigonometric polynomial
    of degree < grid; approximates conditional expectation onto the torus factor.
    """
    if grid < 1:
        raise ValueError("grid must be >= 1")
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    acc = np.zeros(p.shape[0], dtype=np.complex128)
    for j in range(grid):
        acc += f(vertical_rotate(p, j / grid))
    out = acc / grid
    return out if out.shape[0] > 1 else complex(out[0])
