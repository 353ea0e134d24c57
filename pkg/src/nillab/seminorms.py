"""Numerical estimators for the uniformity seminorms U^k, k <= 3.

Two independent estimators cross-validate each other:

* ``uk_recursive`` evaluates the defining recursion
      |f|_{U^1} = |int f|,   |f|_{U^{k+1}}^{2^{k+1}} = avg_n |conj(f) T^n f|_{U^k}^{2^k}
  with the limit replaced by the average over n = 1..n_outer at each level and
  the base integral by an orbit average of length n_base. For a fixed orbit the
  level-k base integrals are autocorrelations of the orbit values, evaluated by
  FFT (bit-for-bit deterministic; reorders the additions of the plain
  compensated sum within floating tolerance).

* ``uk_cube`` averages the 2^k-fold correlation product over the cube grid
      (1/n_mc) sum_x (1/n_side^k) sum_{n in {1..n_side}^k}
          prod_{eps in {0,1}^k} C^{|eps|} f(T^{eps . n} x)
  with base points x drawn from Haar samples and C denoting conjugation. The
  grid sum is evaluated through the exact factorization in the kernel backend,
  so the cost is O(n_side^k) arithmetic on precomputed orbit values rather
  than 2^k n_side^k observable evaluations.

Estimates carry a within-run stability half-width from four independent
sub-batches (base-point batches for the cube form, outer-average blocks for
the recursive form).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import BudgetError
from .nilgroup import haar_sample
from .systems import orbit

__all__ = ["SeminormEstimate", "u1", "uk_recursive", "uk_cube",
           "cube_cost", "DEFAULT_CUBE_BUDGET", "MAX_STEP"]

MAX_STEP = 3
DEFAULT_CUBE_BUDGET = 1e10


@dataclass(frozen=True)
class SeminormEstimate:
    k: int
    value: float
    estimator: str            # "recursive" | "cube"
    n_side: int = 0           # averaging length per cube dimension / outer length
    n_base: int = 0           # base-integral length (recursive; 0 for cube)
    n_mc: int = 0             # Monte Carlo base points (cube; 0 for recursive)
    seed: int | None = None
    stability: float = 0.0    # half-width across four sub-batches
    imag_diag: float = 0.0    # |imag part| of the raw average (cube diagnostic)
    raw: complex = 0j         # raw accumulated average before the 2^-k root

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("seminorm estimates are nonnegative")


def _check_step(k):
    if not 1 <= k <= MAX_STEP:
        raise BudgetError(f"step k={k} outside the supported range 1..{MAX_STEP}")


def cube_cost(k, n_side, n_mc):
    return float(n_side) ** k * n_mc * 2 ** k


def u1(sys, f, n=100_000, p0=None):
    """|int f dmu| via an orbit average of length n."""
    sys.require_ergodic()
    start = np.zeros(sys.dim) if p0 is None else np.asarray(p0, dtype=np.float64)
    seg_sums, seg_lens = [], []
    q = max(1, n // 4)
    done = 0
    while done < n:
        m = min(q, n - done)
        pts = orbit(sys, start, m + 1)
        seg_sums.append(backend.kernels.csum(np.ascontiguousarray(f(pts[:m]), dtype=np.complex128)))
        seg_lens.append(m)
        start = pts[m]
        done += m
    total = complex(math.fsum(s.real for s in seg_sums), math.fsum(s.imag for s in seg_sums))
    value = abs(total) / n
    seg_vals = [abs(s) / m for s, m in zip(seg_sums, seg_lens)]
    stab = (max(seg_vals) - min(seg_vals)) / 2 if len(seg_vals) > 1 else 0.0
    return SeminormEstimate(1, value, "recursive", n_side=n, n_base=n, stability=stab,
                            raw=complex(value))


def _autocorr(F, n_base, n_max):
    """A[n] = (1/n_base) sum_{j<n_base} conj(F[j]) F[j+n], n = 1..n_max, via FFT."""
    L = len(F)
    size = 1
    while size < L + 1:
        size <<= 1
    fa = np.fft.fft(F[:n_base], size)
    fb = np.fft.fft(F, size)
    corr = np.fft.ifft(np.conj(fa) * fb)
    return corr[1:n_max + 1] / n_base


def _block_halfwidth(vals, root):
    vals = np.asarray(vals, dtype=np.float64)
    blocks = np.array_split(vals, 4)
    bv = [max(float(np.mean(b)), 0.0) ** root for b in blocks if len(b)]
    return (max(bv) - min(bv)) / 2 if len(bv) > 1 else 0.0


def uk_recursive(sys, f, k, n_outer=1000, n_base=100_000, p0=None, seed=None):
    """The defining recursion with finite averages; see the module docstring.

    The default starting point is the base point; passing ``seed`` draws a
    random Haar starting point instead (used for stability studies).
    """
    _check_step(k)
    sys.require_ergodic()
    if k == 1:
        return u1(sys, f, n_base, p0)
    if p0 is None and seed is not None:
        p0 = haar_sample(1, seed, sys.dim)[0]
    start = np.zeros(sys.dim) if p0 is None else np.asarray(p0, dtype=np.float64)
    need = n_base + (k - 1) * n_outer + 1
    F = np.ascontiguousarray(f(orbit(sys, start, need)), dtype=np.complex128)
    if k == 2:
        A2 = np.abs(_autocorr(F, n_base, n_outer)) ** 2
        value = float(np.mean(A2)) ** 0.25
        return SeminormEstimate(2, value, "recursive", n_side=n_outer, n_base=n_base,
                                seed=seed, stability=_block_halfwidth(A2, 0.25),
                                raw=complex(np.mean(A2)))
    vals = np.empty(n_outer)
    for n1 in range(1, n_outer + 1):
        G = np.conj(F[:len(F) - n1]) * F[n1:]
        A2 = np.abs(_autocorr(G, n_base, n_outer)) ** 2
        vals[n1 - 1] = np.mean(A2)
    value = float(np.mean(vals)) ** 0.125
    return SeminormEstimate(3, value, "recursive", n_side=n_outer, n_base=n_base,
                            seed=seed, stability=_block_halfwidth(vals, 0.125),
                            raw=complex(np.mean(vals)))


def uk_cube(sys, f, k, n_side=64, n_mc=200, seed=1, budget=DEFAULT_CUBE_BUDGET):
    """Cube-grid correlation average over Haar-sampled base points."""
    _check_step(k)
    sys.require_ergodic()
    if n_side < 1 or n_mc < 1:
        raise ValueError("n_side and n_mc must be >= 1")
    cost = cube_cost(k, n_side, n_mc)
    if cost > budget:
        raise BudgetError(f"cube run cost {cost:.3g} exceeds budget {budget:.3g}")
    base = haar_sample(n_mc, seed, sys.dim)
    per_point = np.empty(n_mc, dtype=np.complex128)
    norm = float(n_side) ** k
    for i in range(n_mc):
        F = np.ascontiguousarray(f(orbit(sys, base[i], k * n_side + 1)), dtype=np.complex128)
        per_point[i] = backend.kernels.cube_sum(F, n_side, k) / norm
    raw = backend.kernels.csum(per_point) / n_mc
    root = 1.0 / 2 ** k
    value = max(raw.real, 0.0) ** root
    batches = np.array_split(per_point, 4)
    bv = [max(float(np.mean(b).real), 0.0) ** root for b in batches if len(b)]
    stab = (max(bv) - min(bv)) / 2 if len(bv) > 1 else 0.0
    return SeminormEstimate(k, value, "cube", n_side=n_side, n_mc=n_mc, seed=seed,
                            stability=stab, imag_diag=abs(raw.imag), raw=raw)
