"""Self-joinings as empirical measures: construction, weak-* distance,
marginal checks, and the fiber-dispersion graphness score.

Weak-* metric
-------------
``weakstar_dist`` is the weighted character metric

    d(m1, m2) = sum_j 2^{-j} | int phi_j dm1 - int phi_j dm2 |,

where phi_j runs through a fixed enumeration of characters
e^{2 pi i (m . p + m' . q)} of the canonical coordinates with sup-norm
frequencies <= max_freq, and phi_0 = 1 (so total-mass discrepancy is always
measured). Any enumeration metrizes the weak-* topology; the one used here is
chosen so that the statistics that distinguish joinings with identical Haar
marginals get non-negligible weight. Frequencies of a single component are
enumerated in graded order m^(1), m^(2), ... (by l1 norm, then
lexicographically); the product-space family then interleaves, for each r,
the correlation character (m^(r), -m^(r)) followed by the two marginal
characters (m^(r), 0) and (0, m^(r)). The geometric weights truncate
everything beyond ``max_terms`` below floating precision; the tail bound
2^{-(J-1)} * 2 of the dropped terms is far below every tolerance used.

Graphness
---------
``graphness`` operationalizes conditional fiber dispersion. Pairs are binned
by the torus-factor coordinates of the first component (wrap-aware bins of
size ``bin_size``); within each bin the second components are transported to
the identity fiber by the group difference w_i = reduce(p_i^{-1} q_i), and the
bin's dispersion is the exact diameter of {w_i} under the nilmanifold metric.
The score is the point-count-weighted median of bin dispersions. A graph
joining of a fiber translation has constant w and scores ~0; a joining with
full circle fibers scores the fiber diameter. (The literal diameter of the
raw second components within a bin would be dominated by the fiber spread of
the *first* components and could not separate the diagonal from a non-graph
joining at any bin size; the transported form is what the classification
thresholds and acceptance margins are stated against.)
"""

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product as _iproduct

import numpy as np

from . import backend
from .errors import CertificationError, SpaceMismatchError
from .nilgroup import haar_sample, is_canonical, reduce_heis, reduce_torus
from .systems import SHEAR_BASE, nilrotate, orbit, vertical_rotate

__all__ = [
    "SpaceSpec", "EmpiricalMeasure", "TestFunctionFamily", "default_family",
    "weakstar_dist", "diagonal_joining", "graph_joining", "counterexample_joining",
    "vertical_map", "PointMap", "graphness", "marginal_error", "dist_to_diagonal",
    "ClassifyConfig", "JoiningReport", "analyze_joining", "push_forward",
    "parse_shear", "Shear",
]


@dataclass(frozen=True)
class SpaceSpec:
    kind: str   # "heisenberg" | "torus"
    dim: int

    def __post_init__(self):
        if self.kind not in ("heisenberg", "torus"):
            raise ValueError(f"unknown space kind: {self.kind!r}")


def space_of(sys):
    return SpaceSpec(sys.kind, sys.dim)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniformly weighted point cloud on X (``second is None``) or on X x X."""
    space: SpaceSpec
    first: np.ndarray
    second: np.ndarray | None = None
    provenance: str = "direct-haar"
    seed: int | None = None

    def __post_init__(self):
        first = np.ascontiguousarray(self.first, dtype=np.float64)
        object.__setattr__(self, "first", first)
        if self.second is not None:
            second = np.ascontiguousarray(self.second, dtype=np.float64)
            object.__setattr__(self, "second", second)
            if second.shape != first.shape:
                raise ValueError("pair components must have matching shapes")
        if first.ndim != 2 or first.shape[1] != self.space.dim:
            raise ValueError("points must be (n, dim)")
        if first.shape[0] < 1:
            raise ValueError("empty point cloud")
        if not is_canonical(first) or (self.second is not None and not is_canonical(self.second)):
            raise ValueError("stored points must be canonical")
        if self.provenance not in ("direct-haar", "orbit-pushforward"):
            raise ValueError(f"unknown provenance: {self.provenance!r}")

    @property
    def n(self):
        return self.first.shape[0]

    @property
    def paired(self):
        return self.second is not None

    def coords(self):
        if self.paired:
            return np.concatenate([self.first, self.second], axis=1)
        return self.first

    def integrate(self, fn):
        """Mean of a vectorized function of the (possibly concatenated) coordinates."""
        vals = np.asarray(fn(self.coords()), dtype=np.complex128)
        return backend.kernels.csum(np.ascontiguousarray(vals)) / self.n

    def char_integrals(self, freqs):
        """Means of e^{2 pi i <m, coords>} for the rows m of freqs."""
        ph = self.coords() @ np.asarray(freqs, dtype=np.float64).T
        return np.exp(2j * np.pi * ph).mean(axis=0)

    def marginal(self, which):
        if not self.paired:
            raise ValueError("marginal of a single-space measure")
        pts = self.first if which == 1 else self.second
        return EmpiricalMeasure(self.space, pts, None, self.provenance, self.seed)

    def to_table(self, limit=None):
        """Point cloud as a named-column table (the CLI's JSON/CSV schema)."""
        d = self.space.dim
        names = ["x", "y", "z"][:d] if self.space.kind == "heisenberg" else \
            [f"x{i+1}" for i in range(d)]
        cols = names + [f"{c}_2" for c in names] if self.paired else names
        pts = self.coords()[:limit if limit else self.n]
        return {"columns": cols, "rows": [[float(v) for v in row] for row in pts]}


@lru_cache(maxsize=32)
def _graded_single(dim, max_freq, count):
    vecs = sorted(_iproduct(range(-max_freq, max_freq + 1), repeat=dim),
                  key=lambda m: (sum(abs(c) for c in m), m))
    return tuple(vecs[:count])


@dataclass(frozen=True)
class TestFunctionFamily:
    """Enumerated character family with decay weights 2^{-j}; phi_0 = 1."""
    __test__ = False  # not a pytest class, despite the name
    space: SpaceSpec
    paired: bool
    max_freq: int = 3
    max_terms: int = 64
    freqs: np.ndarray = field(init=False, repr=False, compare=False)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.max_freq < 1 or self.max_terms < 1:
            raise ValueError("max_freq and max_terms must be >= 1")
        d = self.space.dim
        if self.paired:
            singles = _graded_single(d, self.max_freq, self.max_terms)
            rows = [np.zeros(2 * d, dtype=np.int64)]
            for m in singles:
                if not any(m):
                    continue
                m = np.asarray(m, dtype=np.int64)
                rows.append(np.concatenate([m, -m]))
                rows.append(np.concatenate([m, 0 * m]))
                rows.append(np.concatenate([0 * m, m]))
                if len(rows) >= self.max_terms:
                    break
            freqs = np.asarray(rows[:self.max_terms])
        else:
            freqs = np.asarray(_graded_single(d, self.max_freq, self.max_terms), dtype=np.int64)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "weights", 0.5 ** np.arange(len(freqs)))

    def __len__(self):
        return len(self.freqs)


def default_family(space, paired, max_freq=3, max_terms=64):
    return TestFunctionFamily(space, paired, max_freq, max_terms)


def weakstar_dist(m1, m2, fam=None):
    """Weighted character distance; in [0, 2] for probability clouds."""
    if m1.space != m2.space or m1.paired != m2.paired:
        raise SpaceMismatchError("measures live on different spaces")
    if fam is None:
        fam = default_family(m1.space, m1.paired)
    e1 = m1.char_integrals(fam.freqs)
    e2 = m2.char_integrals(fam.freqs)
    return float(np.sum(fam.weights * np.abs(e1 - e2)))


# --- joining constructors -------------------------------------------------


def _base_cloud(sys, n, scheme, seed):
    if scheme == "direct-haar":
        return haar_sample(n, seed, sys.dim)
    if scheme == "orbit-pushforward":
        sys.require_ergodic()
        return orbit(sys, np.zeros(sys.dim), n)
    raise ValueError(f"unknown scheme: {scheme!r}")


def diagonal_joining(sys, n, scheme="direct-haar", seed=1):
    """Pairs (p, p) with p Haar-distributed (directly or along an orbit)."""
    pts = _base_cloud(sys, n, scheme, seed)
    return EmpiricalMeasure(space_of(sys), pts, pts.copy(), scheme, seed)


@dataclass(frozen=True)
class PointMap:
    """A measure-preserving point map commuting with the rotation (caller-certified)."""
    name: str
    fn: object

    def __call__(self, pts):
        return self.fn(pts)


def vertical_map(u):
    return PointMap(f"vertical:{u!r}", lambda pts: vertical_rotate(pts, u))


def torus_translation(v):
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    return PointMap(f"translate:{tuple(v)!r}", lambda pts: reduce_torus(pts + v))


def graph_joining(sys, S, n, seed=1):
    """Pairs (p, S p) with p Haar-distributed: the graph joining of S."""
    pts = haar_sample(n, seed, sys.dim)
    return EmpiricalMeasure(space_of(sys), pts, np.asarray(S(pts), dtype=np.float64),
                            "direct-haar", seed)


# certified shears: rational multiples/offsets of SHEAR_BASE = sqrt(5)-2 keep
# 1, alpha, beta, alpha*s linearly independent over Q (distinct squarefree radicals)
_SHEAR_RE = re.compile(
    r"^\s*(?:(?P<q>-?\d+(?:/\d+)?)\s*\*\s*)?(?P<s0>s0)\s*(?:/\s*(?P<div>\d+))?"
    r"\s*(?:(?P<sign>[+-])\s*(?P<r>\d+(?:/\d+)?))?\s*$"
)


@dataclass(frozen=True)
class Shear:
    expr: str
    value: float
    certified: bool


def parse_shear(text):
    """Parse a shear expression: 'q*s0/k + r' with rational q, r, or a plain rational.

    Only expressions with a nonzero s0 coefficient are certified; plain
    rationals (e.g. '0.5') parse but are not certified.
    """
    if isinstance(text, Shear):
        return text
    if isinstance(text, (int, float)):
        if float(text) == 0.0:
            return Shear("0", 0.0, False)
        raise CertificationError(
            "pass shears as expressions in s0 (e.g. 's0', 's0/2', '3*s0+1/2'); "
            "bare floats cannot be certified")
    t = str(text).strip()
    m = _SHEAR_RE.match(t)
    if m:
        q = Fraction(m.group("q")) if m.group("q") else Fraction(1)
        if m.group("div"):
            q /= int(m.group("div"))
        r = Fraction(0)
        if m.group("r"):
            r = Fraction(m.group("r"))
            if m.group("sign") == "-":
                r = -r
        value = float(q) * SHEAR_BASE + float(r)
        return Shear(t, value, q != 0)
    try:
        val = Fraction(t)
    except ValueError:
        raise CertificationError(f"cannot parse shear expression: {text!r}")
    return Shear(t, float(val), False)


def counterexample_joining(sys, s="s0", n=100_000, scheme="direct-haar", seed=1):
    """The explicit non-graph self-joining of the Heisenberg system.

    Supported on {(g Gamma, a g c Gamma): g in G, c central} with a = (0, s, 0):
    pairs (reduce(x, y, z), reduce(x, y + s, z + t)) where the base point and
    the fiber phase t are jointly Haar on X x T. The direct scheme samples that
    product Haar measure; the orbit scheme pushes forward the orbit of the
    product rotation (tau, alpha*s) from the base point, which equidistributes
    by unique ergodicity exactly when 1, alpha, beta, alpha*s are independent
    over Q. The degenerate s = 0 variant (full central fibers over an unmoved
    base) is allowed for the direct scheme only.
    """
    if sys.kind != "heisenberg":
        raise ValueError("the explicit non-graph joining lives on the Heisenberg system")
    shear = parse_shear(s)
    if not shear.certified:
        if shear.value != 0.0:
            raise CertificationError(
                f"shear {shear.expr!r} is not in the certified independence set")
        if scheme != "direct-haar":
            raise CertificationError(
                "s = 0 breaks unique ergodicity of the product rotation; "
                "use the direct-haar scheme for the degenerate case")
    sval = shear.value
    if scheme == "direct-haar":
        rng = np.random.default_rng(seed)
        first = rng.random((int(n), 3))
        t = rng.random(int(n))
    elif scheme == "orbit-pushforward":
        sys.require_ergodic()
        first = orbit(sys, np.zeros(3), int(n))
        t = reduce_torus(np.arange(int(n), dtype=np.float64) * (sys.tau[0] * sval))
    else:
        raise ValueError(f"unknown scheme: {scheme!r}")
    second = reduce_heis(np.stack(
        [first[:, 0], first[:, 1] + sval, first[:, 2] + t], axis=-1))
    return EmpiricalMeasure(space_of(sys), first, second, scheme, seed)


# --- analysis --------------------------------------------------------------


def _displacements(m):
    """Group differences w_i = reduce(p_i^{-1} q_i) transporting each second
    component to the identity fiber. The z part is grouped as differences so
    coinciding pairs cancel exactly in floating point."""
    P, Q = m.first, m.second
    if m.space.kind == "heisenberg":
        wz = (Q[:, 2] - P[:, 2]) + P[:, 0] * (P[:, 1] - Q[:, 1])
        return reduce_heis(np.stack([Q[:, 0] - P[:, 0], Q[:, 1] - P[:, 1], wz], axis=-1))
    return reduce_torus(Q - P)


def _set_diameter(pts, space):
    if len(pts) < 2 or np.all(pts == pts[0]):
        return 0.0
    if space.kind == "heisenberg":
        return float(backend.kernels.max_pairwise_heis(np.ascontiguousarray(pts)))
    return float(backend.kernels.max_pairwise_torus(np.ascontiguousarray(pts)))


def graphness(m, bin_size=0.05, min_count=20, pair_cap=96):
    """Weighted median of per-bin fiber dispersions; NaN when no bin qualifies."""
    if not m.paired:
        raise ValueError("graphness needs a pair measure")
    if not 0 < bin_size <= 1:
        raise ValueError("bin_size must be in (0, 1]")
    disp = _displacements(m)
    base_dim = min(2, m.space.dim)
    nb = max(1, int(round(1.0 / bin_size)))
    idx = np.zeros(m.n, dtype=np.int64)
    for c in range(base_dim):
        b = np.minimum((m.first[:, c] / bin_size).astype(np.int64), nb - 1)
        idx = idx * nb + b
    order = np.argsort(idx, kind="stable")
    keys, starts = np.unique(idx[order], return_index=True)
    bounds = list(starts) + [m.n]
    diams, weights = [], []
    for t in range(len(keys)):
        members = order[bounds[t]:bounds[t + 1]]
        if len(members) < min_count:
            continue
        diams.append(_set_diameter(disp[members[:pair_cap]], m.space))
        weights.append(len(members))
    if not diams:
        return float("nan")
    diams = np.asarray(diams)
    weights = np.asarray(weights, dtype=np.float64)
    o = np.argsort(diams)
    cum = np.cumsum(weights[o])
    return float(diams[o][np.searchsorted(cum, cum[-1] / 2.0)])


def marginal_error(m, which, fam=None, n_ref=None, ref_seed=None):
    """Weak-* distance of a coordinate projection from a fresh Haar reference cloud."""
    marg = m.marginal(which)
    if fam is None:
        fam = default_family(m.space, False)
    n_ref = n_ref or m.n
    if ref_seed is None:
        ref_seed = (m.seed or 0) * 2 + 7919 * which + 104729
    ref = EmpiricalMeasure(m.space, haar_sample(n_ref, ref_seed, m.space.dim))
    return weakstar_dist(marg, ref, fam)


def dist_to_diagonal(m, fam=None):
    """Weak-* distance to the diagonal cloud built over m's own first components.

    Using the measure's first marginal as the diagonal reference shares the
    base points (common random numbers), so the marginal noise cancels and the
    distance isolates the correlation statistics.
    """
    diag = EmpiricalMeasure(m.space, m.first, m.first, m.provenance, m.seed)
    return weakstar_dist(m, diag, fam)


def push_forward(m, sys):
    """Image of a pair measure under one product rotation step (T x T)."""
    return EmpiricalMeasure(m.space, nilrotate(sys, m.first), nilrotate(sys, m.second),
                            m.provenance, m.seed)


@dataclass(frozen=True)
class ClassifyConfig:
    bin_size: float = 0.05
    min_count: int = 20
    pair_cap: int = 96
    graph_factor: float = 3.0      # graph-like iff graphness <= graph_factor * bin_size
    nongraph_factor: float = 0.5   # non-graph iff graphness >= nongraph_factor * fiber_diameter
    fiber_diameter: float = float(np.sqrt(0.5))  # measured central-fiber diameter

    def classify(self, g):
        if math.isnan(g):
            return "indeterminate"
        if g <= self.graph_factor * self.bin_size:
            return "graph-like"
        if g >= self.nongraph_factor * self.fiber_diameter:
            return "non-graph"
        return "indeterminate"


@dataclass(frozen=True)
class JoiningReport:
    dist_to_diagonal: float
    graphness: float
    marginal_error_1: float
    marginal_error_2: float
    classification: str
    thresholds: dict

    def to_dict(self):
        return {
            "dist_to_diagonal": self.dist_to_diagonal,
            "graphness": self.graphness,
            "marginal_error_1": self.marginal_error_1,
            "marginal_error_2": self.marginal_error_2,
            "classification": self.classification,
            "thresholds": dict(self.thresholds),
        }


def analyze_joining(m, cfg=ClassifyConfig(), fam=None):
    g = graphness(m, cfg.bin_size, cfg.min_count, cfg.pair_cap)
    report = JoiningReport(
        dist_to_diagonal=dist_to_diagonal(m, fam),
        graphness=g,
        marginal_error_1=marginal_error(m, 1),
        marginal_error_2=marginal_error(m, 2),
        classification=cfg.classify(g),
        thresholds={
            "bin_size": cfg.bin_size,
            "min_count": cfg.min_count,
            "graph_like_max": cfg.graph_factor * cfg.bin_size,
            "non_graph_min": cfg.nongraph_factor * cfg.fiber_diameter,
        },
    )
    return report
