"""Experiment layer: rigidity sweeps over joining families and the
no-small-subnilmanifolds diameter probe.

The sweep certifies the graph/non-graph dichotomy over the two implemented
joining families only (vertical-rotation graphs and the explicit non-graph
family); the underlying statement quantifies over all ergodic self-joinings,
which is not enumerable, and the report language reflects that restriction.
The gap ``delta_hat`` is a measured minimum, re-baselined only by an explicit
oracle rerun.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .joinings import (ClassifyConfig, analyze_joining, counterexample_joining,
                       default_family, diagonal_joining, graph_joining, space_of,
                       vertical_map, weakstar_dist)
from .nilgroup import MetricConfig, haar_sample, heis_mul, reduce_heis, reduce_torus

__all__ = ["SubnilDescriptor", "subnil_diameter", "min_subnil_diameter",
           "default_catalog", "RigidityReport", "rigidity_sweep"]


@dataclass(frozen=True)
class SubnilDescriptor:
    """A closed-subgroup orbit expressible in closed form at step <= 2."""
    kind: str                      # central_fiber | translated_central_fiber | subtorus | singleton
    q: tuple | None = None         # subtorus direction (coprime integers)
    base: tuple | None = None      # base point for translated fibers / singleton
    sample_count: int = 1000

    def __post_init__(self):
        if self.kind not in ("central_fiber", "translated_central_fiber",
                             "subtorus", "singleton"):
            raise ValueError(f"unknown subnilmanifold kind: {self.kind!r}")
        if self.kind == "subtorus":
            if self.q is None or len(self.q) != 2 or self.q == (0, 0):
                raise ValueError("subtorus needs a nonzero integer direction (q1, q2)")
            if math.gcd(abs(self.q[0]), abs(self.q[1])) != 1:
                raise ValueError("subtorus direction must be coprime (closed subgroup)")
        if self.kind == "translated_central_fiber" and self.base is None:
            raise ValueError("translated fiber needs a base point")
        if self.kind != "singleton" and self.sample_count < 2:
            raise ValueError("need at least two sample points")


def _fiber_points(desc, seed):
    n = desc.sample_count
    phase = float(np.random.default_rng(seed).random()) / n
    t = (np.arange(n, dtype=np.float64) + 0.5) / n + phase
    t = t % 1.0
    if desc.kind == "central_fiber":
        pts = np.zeros((n, 3))
        pts[:, 2] = t
        return pts
    base = np.asarray(desc.base, dtype=np.float64)
    fib = np.zeros((n, 3))
    fib[:, 2] = t
    return reduce_heis(heis_mul(base, fib))


def subnil_diameter(desc, cfg=MetricConfig(), seed=1):
    """Max pairwise distance over sampled points of the subnilmanifold."""
    if desc.kind == "singleton":
        return 0.0
    if desc.kind == "subtorus":
        n = desc.sample_count
        phase = float(np.random.default_rng(seed).random()) / n
        t = ((np.arange(n, dtype=np.float64) + 0.5) / n + phase) % 1.0
        pts = reduce_torus(np.stack([t * desc.q[0], t * desc.q[1]], axis=-1))
        return float(backend.kernels.max_pairwise_torus(np.ascontiguousarray(pts)))
    pts = _fiber_points(desc, seed)
    return float(backend.kernels.max_pairwise_heis(np.ascontiguousarray(pts)))


def min_subnil_diameter(family, cfg=MetricConfig(), seed=1):
    """Minimum diameter over a catalog of non-trivial subnilmanifolds."""
    family = list(family)
    if not family:
        raise ValueError("empty subnilmanifold family")
    if any(d.kind == "singleton" for d in family):
        raise ValueError("singletons are excluded from the minimum-diameter probe")
    return min(subnil_diameter(d, cfg, seed) for d in family)


def default_catalog(seed=1, n_translates=10, qmax=10, sample_count=1000):
    """Central fiber, its translates at random base points, and the coprime
    rational subtori of the 2-torus with |q| <= qmax."""
    cat = [SubnilDescriptor("central_fiber", sample_count=sample_count)]
    bases = haar_sample(n_translates, seed, 3)
    for b in bases:
        cat.append(SubnilDescriptor("translated_central_fiber", base=tuple(b),
                                    sample_count=sample_count))
    for q1 in range(0, qmax + 1):
        for q2 in range(-qmax, qmax + 1):
            if (q1, q2) == (0, 0) or (q1 == 0 and q2 < 0):
                continue
            if math.gcd(q1, abs(q2)) != 1:
                continue
            cat.append(SubnilDescriptor("subtorus", q=(q1, q2), sample_count=sample_count))
    return cat


@dataclass(frozen=True)
class RigidityReport:
    u_records: tuple               # per-u dicts: u, dist, graphness, classification, marginals
    s_records: tuple               # per-shear dicts
    fiber_diameter: float
    delta_hat: float               # min over the non-graph family of dist-to-diagonal
    u_star: float                  # graph-family restriction for the margin
    max_graphlike_dist: float      # max dist over graph-like records with u <= u_star
    u_graphlike_max: float         # largest u classified graph-like
    noise_estimate: float          # weak-* distance of two independent diagonal clouds
    margin: float
    dichotomy_ok: bool
    all_classified: bool
    config: dict

    def to_payload(self):
        cols = ["param", "dist_to_diagonal", "graphness", "classification",
                "marginal_error_1", "marginal_error_2"]
        def rows(records, key):
            return [[r[key], r["dist"], r["graphness"], r["classification"],
                     r["marginal_error_1"], r["marginal_error_2"]] for r in records]
        return {
            "graph_family": {"columns": cols, "rows": rows(self.u_records, "u")},
            "nongraph_family": {"columns": cols, "rows": rows(self.s_records, "s")},
            "summary": {
                "columns": ["field", "value"],
                "rows": [
                    ["fiber_diameter", self.fiber_diameter],
                    ["delta_hat", self.delta_hat],
                    ["u_star", self.u_star],
                    ["max_graphlike_dist", self.max_graphlike_dist],
                    ["u_graphlike_max", self.u_graphlike_max],
                    ["noise_estimate", self.noise_estimate],
                    ["margin", self.margin],
                    ["dichotomy_ok", self.dichotomy_ok],
                    ["all_classified", self.all_classified],
                ],
            },
        }


def _noise_probe(sys, n, seed, fam):
    a = diagonal_joining(sys, n, "direct-haar", seed + 31337)
    b = diagonal_joining(sys, n, "direct-haar", seed + 65537)
    return weakstar_dist(a, b, fam)


def rigidity_sweep(sys, u_grid=None, s_grid=None, n=100_000, seed=1,
                   scheme="direct-haar", max_freq=3, max_terms=64,
                   u_star=2.0 ** -4, classify=None):
    """Build the vertical-rotation graph family and the non-graph family,
    analyze every joining, and aggregate the dichotomy summary."""
    if u_grid is None:
        u_grid = [2.0 ** -k for k in range(1, 9)]
    if s_grid is None:
        s_grid = ["s0"]
    u_grid = list(u_grid)
    s_grid = list(s_grid)
    if not u_grid or not s_grid:
        raise ValueError("parameter grids must be nonempty")
    sys.require_ergodic()

    fiber = subnil_diameter(SubnilDescriptor("central_fiber", sample_count=512),
                            sys.metric, seed)
    cfg = classify or ClassifyConfig(fiber_diameter=fiber)
    fam = default_family(space_of(sys), True, max_freq, max_terms)

    def record(m, key, val):
        rep = analyze_joining(m, cfg, fam)
        return {key: val, "dist": rep.dist_to_diagonal, "graphness": rep.graphness,
                "classification": rep.classification,
                "marginal_error_1": rep.marginal_error_1,
                "marginal_error_2": rep.marginal_error_2}

    u_records = [record(graph_joining(sys, vertical_map(u), n, seed), "u", float(u))
                 for u in u_grid]
    s_records = [record(counterexample_joining(sys, s, n, scheme, seed), "s", str(s))
                 for s in s_grid]

    noise = _noise_probe(sys, n, seed, fam)
    delta_hat = min(r["dist"] for r in s_records)
    graphlike = [r for r in u_records if r["classification"] == "graph-like"]
    below = [r["dist"] for r in graphlike if r["u"] <= u_star]
    max_below = max(below) if below else 0.0
    margin = delta_hat - max_below
    all_classified = all(r["classification"] != "indeterminate"
                         for r in u_records + s_records)
    ok = (all(r["classification"] == "graph-like" for r in u_records)
          and all(r["classification"] == "non-graph" for r in s_records)
          and margin >= 2.0 * noise)

    return RigidityReport(
        u_records=tuple(u_records), s_records=tuple(s_records),
        fiber_diameter=fiber, delta_hat=delta_hat, u_star=u_star,
        max_graphlike_dist=max_below,
        u_graphlike_max=max((r["u"] for r in graphlike), default=0.0),
        noise_estimate=noise, margin=margin, dichotomy_ok=bool(ok),
        all_classified=bool(all_classified),
        config={"n": n, "seed": seed, "scheme": scheme, "u_grid": list(map(float, u_grid)),
                "s_grid": [str(s) for s in s_grid], "max_freq": max_freq,
                "max_terms": max_terms, "u_star": u_star},
    )
