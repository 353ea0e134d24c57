"""Dynamics: rotations, orbits, Birkhoff averages, factor maps, vertical rotations."""

import numpy as np
import pytest

from nillab.nilgroup import haar_sample, reduce_heis
from nillab.systems import (ALPHA, BETA, Observable, birkhoff_avg, heis_character,
                            heisenberg_system, nilrotate, orbit, parse_observable,
                            project_torus_factor, tau_power, torus_character,
                            torus_system, vertical_average, vertical_rotate)

HEIS = heisenberg_system()
TORUS = torus_system()


def _wrap_err(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b))
    return np.minimum(d, 1.0 - d).max()


def test_nilrotate_torus_circle():
    assert nilrotate(TORUS, np.zeros(1))[0] == pytest.approx(ALPHA, abs=1e-15)


def test_nilrotate_identity_rotation():
    sys_ = heisenberg_system(0.0, 0.0, 0.0)
    p = np.array([0.1, 0.2, 0.3])
    assert np.array_equal(nilrotate(sys_, p), p)
    with pytest.raises(ValueError):
        sys_.require_ergodic()


def test_nilrotate_two_steps_closed_form():
    p = np.zeros(3)
    q = nilrotate(HEIS, nilrotate(HEIS, p))
    expected = reduce_heis([2 * ALPHA, 2 * BETA, ALPHA * BETA])
    assert _wrap_err(q, expected) < 1e-12


def _iterated_orbit_reference(sys_, p0, n):
    # independent stepwise oracle: multiply and reduce in pure python
    out = np.empty((n, 3))
    p = np.asarray(p0, dtype=float)
    a, b, g = sys_.tau
    for k in range(n):
        out[k] = p
        lift = np.array([a + p[0], b + p[1], g + p[2] + a * p[1]])
        p = reduce_heis(lift)
    return out


def test_orbit_matches_iterated_reference():
    got = orbit(HEIS, np.array([0.3, 0.6, 0.9]), 1000)
    ref = _iterated_orbit_reference(HEIS, [0.3, 0.6, 0.9], 1000)
    assert _wrap_err(got, ref) < 1e-8


def test_orbit_matches_power_closed_form():
    p0 = np.array([0.25, 0.5, 0.75])
    got = orbit(HEIS, p0, 1000)
    ks = np.arange(1000, dtype=float)
    powers = np.stack([ks * ALPHA, ks * BETA, ks * (ks - 1) / 2 * ALPHA * BETA], axis=-1)
    lift = np.stack([powers[:, 0] + p0[0], powers[:, 1] + p0[1],
                     powers[:, 2] + p0[2] + ks * ALPHA * p0[1]], axis=-1)
    assert _wrap_err(got, reduce_heis(lift)) < 1e-8
    assert _wrap_err(tau_power(HEIS, 2), [2 * ALPHA, 2 * BETA, ALPHA * BETA]) < 1e-12


def test_orbit_torus_closed_form():
    p0 = np.array([0.1, 0.9])
    sys_ = torus_system((ALPHA, BETA))
    got = orbit(sys_, p0, 500)
    ks = np.arange(500, dtype=float)[:, None]
    assert _wrap_err(got, (p0 + ks * sys_.tau) % 1.0) < 1e-12


def test_orbit_single_point():
    p0 = np.array([0.3, 0.6, 0.9])
    assert np.array_equal(orbit(HEIS, p0, 1)[0], p0)
    with pytest.raises(ValueError):
        orbit(HEIS, p0, 0)


def test_birkhoff_constant_exact():
    c = 0.7 - 0.2j
    obs = Observable("const", lambda pts: np.full(len(pts), c))
    assert abs(birkhoff_avg(HEIS, obs, None, 10_000) - c) < 1e-12


def test_birkhoff_torus_character_geometric_bound():
    f = torus_character((1,))
    n = 100_000
    bound = 2.0 / (n * abs(1 - np.exp(2j * np.pi * ALPHA)))
    assert abs(birkhoff_avg(TORUS, f, None, n)) <= bound + 1e-12


def test_birkhoff_requires_ergodic():
    with pytest.raises(ValueError):
        birkhoff_avg(heisenberg_system(0, 0, 0), heis_character((1, 0, 0)), None, 10)


def test_birkhoff_heisenberg_equidistribution():
    n = 200_000
    for m in [(1, 0, 0), (0, 1, 0)]:
        assert abs(birkhoff_avg(HEIS, heis_character(m), None, n)) < 0.02


def test_birkhoff_matches_monte_carlo():
    # unique ergodicity: orbit averages equal Haar integrals
    n, n_mc = 200_000, 50_000
    pts = haar_sample(n_mc, 5)
    for m in [(1, 0, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1)]:
        f = heis_character(m)
        assert abs(birkhoff_avg(HEIS, f, None, n) - f(pts).mean()) < 0.02


def test_projection_examples():
    assert np.array_equal(project_torus_factor(np.array([0.5, 0.3, 0.7])), [0.5, 0.3])


def test_projection_equivariance():
    pts = haar_sample(10_000, 6)
    lhs = project_torus_factor(nilrotate(HEIS, pts))
    rhs = (project_torus_factor(pts) + HEIS.tau[:2]) % 1.0
    assert _wrap_err(lhs, rhs) < 1e-9


def test_projection_pushforward_uniform():
    n = 100_000
    proj = project_torus_factor(haar_sample(n, 8))
    assert np.abs(proj.mean(axis=0) - 0.5).max() < 3.0 / np.sqrt(n)


def test_vertical_rotate_group_action():
    pts = haar_sample(10_000, 9)
    assert np.array_equal(vertical_rotate(pts, 0.0), pts)
    back = vertical_rotate(vertical_rotate(pts, 0.3), 0.7)
    assert _wrap_err(back, pts) < 1e-12


def test_vertical_rotate_commutes_with_rotation():
    rng = np.random.default_rng(10)
    pts = rng.random((10_000, 3))
    us = rng.random(10_000)
    out1 = np.empty_like(pts)
    out2 = np.empty_like(pts)
    for u in np.unique(np.round(us, 2)):
        sel = np.round(us, 2) == u
        out1[sel] = vertical_rotate(nilrotate(HEIS, pts[sel]), u)
        out2[sel] = nilrotate(HEIS, vertical_rotate(pts[sel], u))
    assert _wrap_err(out1, out2) < 1e-9


def test_vertical_rotate_fixes_projection():
    pts = haar_sample(10_000, 11)
    assert np.array_equal(project_torus_factor(vertical_rotate(pts, 0.37)),
                          project_torus_factor(pts))


def test_vertical_rotate_preserves_haar():
    # pushing samples through V_u leaves every character integral unchanged
    # within Monte Carlo tolerance
    n = 100_000
    pts = haar_sample(n, 20)
    moved = vertical_rotate(pts, 0.37)
    tol = 3.0 / np.sqrt(n)
    for m in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]:
        f = heis_character(m)
        assert abs(f(pts).mean() - f(moved).mean()) < tol


def test_vertical_average_fiber_constant():
    f = heis_character((1, 1, 0))
    p = np.array([0.2, 0.6, 0.9])
    assert abs(vertical_average(f, p, 16) - complex(f(p[None])[0])) < 1e-12


def test_vertical_average_kills_vertical_character():
    f = heis_character((0, 0, 1))
    p = np.array([0.2, 0.6, 0.9])
    assert abs(vertical_average(f, p, 16)) < 1e-10


def test_vertical_average_invariant_under_fiber_shift():
    # exact for fiber trigonometric polynomials of degree < grid
    f = heis_character((1, 0, 1))
    p = np.array([0.2, 0.6, 0.9])
    a = vertical_average(f, p, 16)
    b = vertical_average(f, vertical_rotate(p, 0.41), 16)
    assert abs(a - b) < 1e-10


def test_observable_parsing():
    assert parse_observable("vert", "heisenberg", 3).name == "char:0,0,1"
    assert parse_observable("char:1,-2,0", "heisenberg", 3).continuous
    assert not parse_observable("char:0,0,3", "heisenberg", 3).continuous
    with pytest.raises(ValueError):
        parse_observable("vert", "torus", 1)
    with pytest.raises(ValueError):
        parse_observable("char:1,2", "heisenberg", 3)
    with pytest.raises(ValueError):
        parse_observable("spam", "heisenberg", 3)


def test_certificate_recorded():
    assert HEIS.certificate == ("1", "sqrt(2)-1", "sqrt(3)-1")
    assert len(torus_system((ALPHA, BETA)).certificate) == 3
