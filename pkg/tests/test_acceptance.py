"""Acceptance battery.

One test per criterion (criterion 3 is split into its separately stated
clauses); each prints a PASS/FAIL line (run with ``pytest -s`` to see them
during the run) and enforces both the stated tolerances and the stated
runtime budgets.

Frozen baselines in this module come from independent oracle runs recorded in
the calibration notes: the exact finite-size cube means for the vertical
character, the non-graph gap delta_hat = 0.0935 +- 0.004 (floor frozen at
0.085), and the central fiber diameter sqrt(1/2).

Known red: the clause of criterion 3 that requires the *cube* estimator of
U^2 for the vertical character to be <= 0.1 and strictly decreasing over
n_side in {32, 64, 128}. The exact (zero Monte Carlo noise) expectation of
that estimator has real part +0.0052, -0.0047, +0.0026 at those sizes: the
sign oscillates, so after the fourth root the sequence cannot be both below
0.1 and strictly decreasing at any Monte Carlo budget. The assertion is kept
faithful and marked strict-xfail; see the repository notes for the analysis.
"""

import json
import time

import numpy as np
import pytest

import nillab
from nillab import backend
from nillab.joinings import (ClassifyConfig, EmpiricalMeasure, SpaceSpec,
                             analyze_joining, counterexample_joining,
                             diagonal_joining, graph_joining, push_forward,
                             torus_translation, vertical_map, weakstar_dist)
from nillab.nilgroup import dist_pairs, haar_sample, heis_mul, reduce_heis
from nillab.rigidity import (SubnilDescriptor, default_catalog,
                             min_subnil_diameter, rigidity_sweep, subnil_diameter)
from nillab.seminorms import u1, uk_cube, uk_recursive
from nillab.systems import (ALPHA, BETA, birkhoff_avg, heis_character,
                            heisenberg_system, nilrotate, project_torus_factor,
                            torus_character, torus_system, vertical_average,
                            vertical_rotate)

HEIS = heisenberg_system()
TORUS = torus_system()
VERT = heis_character((0, 0, 1))

DELTA_HAT_BASELINE = 0.085   # oracle run measured 0.0935 at n=1e5, seed 1


def _report(name, ok, detail=""):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'}"
          + (f" -- {detail}" if detail else ""))


def _elapsed_ok(name, t0, budget):
    dt = time.perf_counter() - t0
    _report(f"{name} runtime", dt < budget, f"{dt:.1f}s < {budget}s")
    assert dt < budget


def test_c1_algebra_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    n = 100_000
    g, h, k = (rng.uniform(-5, 5, (n, 3)) for _ in range(3))
    assoc = np.abs(heis_mul(heis_mul(g, h), k) - heis_mul(g, heis_mul(h, k))).max()
    inv = np.abs(heis_mul(g, nillab.heis_inv(g))).max()

    pts = haar_sample(n, 102)
    idem = not np.array_equal(reduce_heis(pts), pts)
    gam = rng.integers(-3, 4, (n, 3)).astype(float)
    a = reduce_heis(g)
    b = reduce_heis(heis_mul(g, gam))
    frac = lambda x: np.all((x > 1e-9) & (x < 1 - 1e-9), axis=-1)
    keep = frac(a) & frac(b)
    coset = np.abs(a[keep] - b[keep]).max()

    ok = assoc < 1e-12 and inv < 1e-12 and not idem and coset < 1e-9
    _report("C1 algebra", ok,
            f"assoc={assoc:.2e} inv={inv:.2e} coset={coset:.2e}")
    assert assoc < 1e-12 and inv < 1e-12
    assert not idem
    assert coset < 1e-9
    _elapsed_ok("C1", t0, 5.0)


def test_c2_equidistribution():
    t0 = time.perf_counter()
    tor = abs(birkhoff_avg(TORUS, torus_character((1,)), None, 100_000))
    hx = abs(birkhoff_avg(HEIS, heis_character((1, 0, 0)), None, 1_000_000))
    hy = abs(birkhoff_avg(HEIS, heis_character((0, 1, 0)), None, 1_000_000))

    mc_pts = haar_sample(100_000, 103)
    battery = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1)]
    diffs = []
    for m in battery:
        f = heis_character(m)
        diffs.append(abs(birkhoff_avg(HEIS, f, None, 1_000_000) - f(mc_pts).mean()))
    worst = max(diffs)

    ok = tor <= 0.01 and hx <= 0.02 and hy <= 0.02 and worst <= 0.02
    _report("C2 equidistribution", ok,
            f"torus={tor:.2e} heis=({hx:.2e},{hy:.2e}) birkhoff-vs-mc={worst:.3f}")
    assert tor <= 0.01
    assert hx <= 0.02 and hy <= 0.02
    assert worst <= 0.02
    _elapsed_ok("C2", t0, 30.0)


def test_c3a_u1_torus_character():
    val = u1(TORUS, torus_character((1,)), 100_000).value
    _report("C3a U1 torus character", val <= 0.01, f"value={val:.2e}")
    assert val <= 0.01


def test_c3b_u2_torus_character_both_estimators():
    rec = uk_recursive(TORUS, torus_character((1,)), 2, 1000, 100_000)
    cub = uk_cube(TORUS, torus_character((1,)), 2, 512, 256, seed=1)
    lo_r, hi_r = rec.value - rec.stability, rec.value + rec.stability
    lo_c, hi_c = cub.value - cub.stability, cub.value + cub.stability
    overlap = max(lo_r, lo_c) <= min(hi_r, hi_c) + 1e-12
    ok = 0.95 <= rec.value <= 1.02 and 0.95 <= cub.value <= 1.02 and overlap
    _report("C3b U2 torus character", ok,
            f"recursive={rec.value:.6f} cube={cub.value:.6f}")
    assert 0.95 <= rec.value <= 1.02
    assert 0.95 <= cub.value <= 1.02
    assert overlap


@pytest.mark.xfail(
    strict=True,
    reason="structural defect in this clause: the exact expectation of the cube "
           "estimator has real part +0.0052/-0.0047/+0.0026 at n_side 32/64/128 "
           "(sign oscillates), so the rooted estimate cannot be <= 0.1 and "
           "strictly decreasing at any Monte Carlo budget; see notes")
def test_c3c_vertical_character_u2_cube_decay():
    vals = [uk_cube(HEIS, VERT, 2, ns, 200, seed=1).value for ns in (32, 64, 128)]
    ok = all(v <= 0.1 for v in vals) and vals[0] > vals[1] > vals[2]
    _report("C3c vertical-character U2 cube <=0.1 and strictly decreasing", ok,
            "values=" + ", ".join(f"{v:.3f}" for v in vals) + " (known red; see notes)")
    assert all(v <= 0.1 for v in vals)
    assert vals[0] > vals[1] > vals[2]


def test_c3d_vertical_character_u3_stable_and_budget():
    t0 = time.perf_counter()
    first = uk_cube(HEIS, VERT, 3, 64, 200, seed=1)
    single = time.perf_counter() - t0
    vals = [first.value] + [uk_cube(HEIS, VERT, 3, 64, 200, seed=s).value
                            for s in (2, 3, 4, 5)]
    vals = np.array(vals)
    spread = (vals.max() - vals.min()) / 2 / vals.mean()
    ok = np.all(vals > 0) and spread <= 0.10 and single < 180.0
    _report("C3d vertical-character U3", ok,
            f"mean={vals.mean():.4f} rel-spread={spread:.2%} run={single:.1f}s")
    assert np.all(vals > 0)
    assert spread <= 0.10
    assert single < 180.0, "U3 cube run exceeded the performance budget"


def test_c4_counterexample_joining():
    t0 = time.perf_counter()
    n = 100_000
    ce = counterexample_joining(HEIS, "s0", n, "direct-haar", seed=1)
    m1 = nillab.marginal_error(ce, 1)
    m2 = nillab.marginal_error(ce, 2)
    drift = weakstar_dist(push_forward(ce, HEIS), ce)
    orb = counterexample_joining(HEIS, "s0", n, "orbit-pushforward", seed=1)
    schemes = weakstar_dist(ce, orb)
    c_w = subnil_diameter(SubnilDescriptor("central_fiber", sample_count=512), seed=1)
    g = nillab.graphness(ce)
    d = nillab.dist_to_diagonal(ce)
    ok = (m1 <= 0.02 and m2 <= 0.02 and drift <= 0.02 and schemes <= 0.02
          and g >= 0.8 * c_w and d >= DELTA_HAT_BASELINE and d >= 0.05)
    _report("C4 counterexample joining", ok,
            f"marg=({m1:.3f},{m2:.3f}) drift={drift:.3f} schemes={schemes:.3f} "
            f"graphness={g:.3f}>=0.8*{c_w:.3f} dist={d:.4f}>={DELTA_HAT_BASELINE}")
    assert m1 <= 0.02 and m2 <= 0.02
    assert drift <= 0.02
    assert schemes <= 0.02
    assert g >= 0.8 * c_w
    assert d >= DELTA_HAT_BASELINE
    _elapsed_ok("C4", t0, 60.0)


def test_c5_graph_family_continuity():
    t0 = time.perf_counter()
    n = 100_000
    us = [2.0 ** -k for k in range(1, 9)]
    dists, graph_ok = [], []
    for u in us:
        lam = graph_joining(HEIS, vertical_map(u), n, seed=1)
        dists.append(nillab.dist_to_diagonal(lam))
        graph_ok.append(nillab.graphness(lam) <= 3 * 0.05)
    decreasing = all(b <= a + 1e-3 for a, b in zip(dists, dists[1:]))
    ratio = dists[-1] / dists[0]
    ok = all(graph_ok) and decreasing and ratio <= 0.25
    _report("C5 graph family", ok,
            f"dist(2^-1)={dists[0]:.4f} dist(2^-8)={dists[-1]:.5f} ratio={ratio:.3f}")
    assert all(graph_ok)
    assert decreasing
    assert ratio <= 0.25
    _elapsed_ok("C5", t0, 60.0)


def test_c6_dichotomy_margin():
    t0 = time.perf_counter()
    rep = rigidity_sweep(HEIS, n=100_000, seed=1)
    ok = (rep.all_classified and rep.dichotomy_ok
          and rep.delta_hat > rep.max_graphlike_dist
          and rep.margin >= 2 * rep.noise_estimate)
    _report("C6 dichotomy margin", ok,
            f"delta_hat={rep.delta_hat:.4f} max_graphlike={rep.max_graphlike_dist:.4f} "
            f"noise={rep.noise_estimate:.4f} margin={rep.margin:.4f}")
    assert rep.all_classified
    assert rep.delta_hat > rep.max_graphlike_dist
    assert rep.margin >= 2 * rep.noise_estimate
    assert rep.dichotomy_ok
    _elapsed_ok("C6", t0, 120.0)


def test_c7_no_small_subnilmanifolds():
    t0 = time.perf_counter()
    catalog = default_catalog(seed=1, n_translates=10, qmax=10, sample_count=1000)
    lo = min_subnil_diameter(catalog, seed=1)
    fiber = subnil_diameter(SubnilDescriptor("central_fiber", sample_count=1000), seed=1)
    translates = [subnil_diameter(d, seed=1) for d in catalog
                  if d.kind == "translated_central_fiber"]
    spread = max(abs(v - fiber) / fiber for v in translates)
    single = subnil_diameter(SubnilDescriptor("singleton", base=(0.5, 0.5, 0.5)))
    ok = lo >= 0.2 and spread < 0.01 and single == 0.0
    _report("C7 subnilmanifold probe", ok,
            f"min={lo:.3f} translate-spread={spread:.2%} singleton={single}")
    assert lo >= 0.2
    assert spread < 0.01
    assert single == 0.0
    _elapsed_ok("C7", t0, 30.0)


def test_c8_equivariance_suite():
    t0 = time.perf_counter()
    pts = haar_sample(10_000, 104)
    us = np.random.default_rng(105).random(8)

    proj = np.abs(project_torus_factor(nilrotate(HEIS, pts))
                  - (project_torus_factor(pts) + HEIS.tau[:2]) % 1.0)
    proj_err = np.minimum(proj, 1 - proj).max()

    comm_err = 0.0
    fix_err = 0.0
    for u in us:
        a = vertical_rotate(nilrotate(HEIS, pts), u)
        b = nilrotate(HEIS, vertical_rotate(pts, u))
        d = np.abs(a - b)
        comm_err = max(comm_err, np.minimum(d, 1 - d).max())
        fix_err = max(fix_err, np.abs(
            project_torus_factor(vertical_rotate(pts, u)) - project_torus_factor(pts)).max())

    va = max(abs(vertical_average(VERT, p, 16)) for p in pts[:100])

    ok = proj_err < 1e-9 and comm_err < 1e-9 and fix_err == 0.0 and va <= 1e-10
    _report("C8 equivariance", ok,
            f"proj={proj_err:.2e} commute={comm_err:.2e} fiber-avg={va:.2e}")
    assert proj_err < 1e-9
    assert comm_err < 1e-9
    assert fix_err == 0.0
    assert va <= 1e-10
    _elapsed_ok("C8", t0, 5.0)


def test_c9_determinism_and_io(tmp_path):
    from dataclasses import replace
    from nillab.cli import RunConfig, emit_json, run, write_outputs

    cfg = replace(RunConfig(), command="joining", kind="counterexample",
                  n=20_000, out=str(tmp_path), name="det")
    env1 = run(cfg)
    write_outputs(env1, cfg)
    first = (tmp_path / "det.json").read_bytes()
    env2 = run(cfg)
    write_outputs(env2, cfg)
    second = (tmp_path / "det.json").read_bytes()
    byte_identical = first == second and emit_json(env1) == emit_json(env2)

    lossless = json.loads(json.dumps(env1)) == env1

    abelian_ok = True
    tor2 = torus_system((ALPHA, BETA))
    rng = np.random.default_rng(106)
    for v in [(ALPHA, BETA), (0.5, 0.25), tuple(rng.random(2)), tuple(rng.random(2))]:
        m = graph_joining(tor2, torus_translation(v), 20_000, seed=9)
        rep = analyze_joining(m, ClassifyConfig(fiber_diameter=0.5))
        abelian_ok &= rep.classification == "graph-like"

    ok = byte_identical and lossless and abelian_ok
    _report("C9 determinism & I/O", ok,
            f"byte-identical={byte_identical} roundtrip={lossless} abelian={abelian_ok}")
    assert byte_identical
    assert lossless
    assert abelian_ok
