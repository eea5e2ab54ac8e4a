import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from spherical_maximal.arith import farey_dissection
from spherical_maximal.grid import GridFunction
from spherical_maximal.lattice import shell_count
from spherical_maximal.symbols import (PHI, PHI_TILDE, BumpSpec, QuadratureSpec, bump, bump_q,
                                       empirical_sphere_constant, eval_I, eval_J,
                                       eval_symbol_a_circle, eval_symbol_a_exact,
                                       eval_symbol_b, eval_symbol_c, eval_term_b, eval_term_c,
                                       lp_covering_range, lp_family, lp_partial_sum,
                                       normalization_discrepancy, p_le_multiplier,
                                       p_multiplier, project_P, project_P_le,
                                       residual_symbol, sphere_constant, sphere_hat)
from conftest import brute_shell


# --- bumps ---------------------------------------------------------------------

def test_bump_plateau_and_support():
    assert bump(np.zeros(5)) == 1
    assert bump(np.array([0.25, 0, 0])) == 0
    assert bump(np.array([0.3, -0.1])) == 0
    assert bump(np.full(3, 1 / 8)) == 1


@given(st.lists(st.floats(-0.6, 0.6), min_size=1, max_size=5))
def test_bump_range(xs):
    v = bump(np.array(xs))
    assert 0 <= v <= 1


def test_bump_q_rescaled_plateau(rng):
    for q in (1, 3, 7):
        eta = rng.uniform(-1, 1, 4) / (8 * q)
        assert bump_q(eta, q) == 1
        assert bump_q(np.array([1 / (4 * q), 0, 0, 0]), q) == 0
        assert bump_q(eta, q) == bump(q * eta)


def test_bump_tilde_plateau():
    assert bump(np.full(2, 0.24), PHI_TILDE) == 1
    assert bump(np.full(2, 0.38), PHI_TILDE) == 0
    with pytest.raises(ValueError):
        BumpSpec(0.3, 0.2)


def test_bump_is_smooth_at_transition():
    # finite differences of the profile stay small at the edges of the transition
    x = np.linspace(0.1, 0.3, 20001)
    y = PHI.profile(x)
    assert np.max(np.abs(np.diff(y))) < 1e-3


# --- oscillatory integrals --------------------------------------------------------

def test_sphere_constant_is_empirical_ratio(rng):
    for d in (5, 6):
        ratios = []
        for _ in range(5):
            xi = rng.uniform(-0.2, 0.2, d)
            ratios.append((eval_I(8 * 8, xi) / sphere_hat(64, xi)).real)
        assert np.ptp(ratios) / np.mean(ratios) < 1e-6
        assert empirical_sphere_constant(d) == pytest.approx(sphere_constant(d), rel=1e-9)


def test_eval_I_ratio_constant_over_random_xi(rng):
    xs = rng.uniform(-0.5, 0.5, (20, 5)) * 0.3
    r = np.array([(eval_I(64, x) / sphere_hat(64, x)).real for x in xs])
    assert np.ptp(r) / np.mean(r) < 1e-6


def test_eval_I_even_and_real(rng):
    xi = rng.uniform(-0.3, 0.3, 5)
    a, b = eval_I(64, xi), eval_I(64, -xi)
    assert abs(a - b) < 1e-10
    assert abs(a.imag) < 1e-9 * abs(a)


def test_eval_I_decays():
    small = eval_I(64, np.array([1 / 32, 0, 0, 0, 0]))
    big = eval_I(64, np.array([0.5, 0, 0, 0, 0]))
    assert abs(big) < abs(small)


def test_sphere_hat_against_direct_average():
    # d = 3: transform of the unit-sphere measure is sin(2 pi r) / (2 pi r)
    r = np.array([0.1, 0.37, 1.2])
    assert np.allclose(sphere_hat(1, np.stack([r, 0 * r, 0 * r], 1)),
                       np.sin(2 * np.pi * r) / (2 * np.pi * r))


def test_eval_J_zero_arc():
    arc = farey_dissection(4)[0]
    assert eval_J(arc, 20, np.zeros(5), arc_scale=0) == 0


def test_eval_J_gap_is_the_tail():
    n, d = 64, 5
    arc = farey_dissection(1)[0]
    J = eval_J(arc, n, np.zeros(d))
    I = eval_I(n, np.zeros(d))
    # independent tail: 2 Re int_{1/2}^inf e(-n t) (2(eps - i t))^{-d/2} dt by plain quad
    eps = 1 / n
    f = lambda t: (np.exp(-2j * np.pi * n * t) * (2 * (eps - 1j * t)) ** (-d / 2)).real
    tail = 0.0
    for k in range(2000):
        tail += integrate.quad(f, 0.5 + k / n, 0.5 + (k + 1) / n, epsabs=1e-15)[0]
    # the remaining tail beyond 0.5 + 2000/n is bounded by the envelope
    tail *= 2 * math.exp(2 * math.pi) / n ** ((d - 2) / 2)
    assert abs((I - J) - tail) < 1e-5
    assert abs(I - J) < 1e-3 * abs(I)


def test_quadrature_error_is_reported():
    from spherical_maximal.symbols import QuadratureError
    spec = QuadratureSpec(epsabs=1e-16, epsrel=1e-16, limit=3, accept=1e-30)
    with pytest.raises(QuadratureError) as ei:
        eval_I(256, np.full(5, 0.3), spec)
    assert ei.value.estimate > 0


# --- exact symbol ---------------------------------------------------------------

def test_exact_symbol_examples(rng):
    assert eval_symbol_a_exact(4, np.zeros(5)) == pytest.approx(1)
    assert eval_symbol_a_exact(1, np.array([0.5, 0.5])) == pytest.approx(-1)
    pts = np.array(brute_shell(5, 4))
    for _ in range(3):
        xi = rng.uniform(-0.5, 0.5, 5)
        direct = np.mean(np.exp(-2j * np.pi * pts @ xi))
        assert abs(eval_symbol_a_exact(4, xi) - direct) < 1e-13


def test_exact_symbol_empty_shell():
    with pytest.raises(ValueError):
        eval_symbol_a_exact(7, np.zeros(3))


@given(st.lists(st.floats(-0.5, 0.49), min_size=5, max_size=5), st.permutations(range(5)),
       st.lists(st.sampled_from([-1, 1]), min_size=5, max_size=5))
@settings(max_examples=30, deadline=None)
def test_exact_symbol_symmetry(xi, perm, signs):
    xi = np.array(xi)
    a = eval_symbol_a_exact(9, xi)
    b = eval_symbol_a_exact(9, (xi * np.array(signs))[list(perm)])
    assert abs(a - b) < 1e-12
    assert abs(a) <= 1 + 1e-12


# --- circle method ---------------------------------------------------------------

def test_circle_matches_exact(rng):
    for n in (16, 25, 36):
        for _ in range(4):
            xi = rng.uniform(-0.5, 0.5, 5)
            assert abs(eval_symbol_a_circle(n, 4, xi) - eval_symbol_a_exact(n, xi)) < 1e-5


def test_circle_at_zero_and_single_arc():
    assert abs(eval_symbol_a_circle(20, 4, np.zeros(5)) - 1) < 1e-8
    xi = np.array([0.1, -0.2, 0.05, 0.3, 0.0])
    assert abs(eval_symbol_a_circle(2, 1, xi) - eval_symbol_a_exact(2, xi)) < 1e-8


def test_printed_normalization_differs_by_count_ratio():
    xi = np.array([0.1, 0.0, -0.1, 0.2, 0.05])
    shell = eval_symbol_a_circle(25, 4, xi)
    printed = eval_symbol_a_circle(25, 4, xi, normalization="printed")
    assert abs(printed - normalization_discrepancy(5, 25) * shell) < 1e-8
    assert normalization_discrepancy(5, 25) == shell_count(5, 25) / 125


def test_scale_preconditions():
    with pytest.raises(ValueError):
        eval_symbol_c(10, 4, np.zeros(5))
    with pytest.raises(ValueError):
        eval_symbol_c(20, 3, np.zeros(5))


# --- main term and residual ---------------------------------------------------------

def test_c_at_zero_near_one():
    assert abs(eval_symbol_c(64, 8, np.zeros(5)) - 1) < 0.1
    assert abs(residual_symbol(64, 8, np.zeros(5))) < 0.1


def test_c_terms_add_up(rng):
    xi = rng.uniform(-0.5, 0.5, 5)
    from spherical_maximal.arith import iter_phases
    total = sum(eval_term_c(a, q, 64, xi) for a, q in iter_phases(8))
    c_printed = eval_symbol_c(64, 8, xi, normalization="printed")
    assert abs(total - c_printed) < 1e-12


def test_c_term_vanishes_off_support():
    xi = np.array([0.3, 0.0, 0.0, 0.0, 0.0])  # distance 0.3 > 1/4 from every integer
    assert eval_term_c(1, 1, 64, xi) == 0


def test_c_bessel_and_quadrature_paths_agree():
    xi = np.array([0.02, -0.01, 0.0, 0.03, 0.01])
    a = eval_symbol_c(64, 8, xi)
    b = eval_symbol_c(64, 8, xi, I_method="quadrature")
    assert abs(a - b) < 1e-9


def test_residual_bounded(rng):
    xs = rng.uniform(-0.5, 0.5, (50, 5))
    assert np.max(np.abs(residual_symbol(64, 8, xs))) <= 2


def test_b_approaches_c_as_arcs_widen():
    xi = np.full(5, 0.01)
    c = eval_term_c(1, 1, 64, xi)
    gaps = [abs(eval_term_b(1, 1, 64, 8, xi, arc_scale=s) - c) for s in (1, 4, 16, 64)]
    assert all(g2 < g1 for g1, g2 in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-5
    assert abs(eval_term_b(1, 1, 64, 8, xi, arc_scale=math.inf) - c) < 1e-9


def test_b_symbol_close_to_c():
    xi = np.full(5, 0.01)
    assert abs(eval_symbol_b(64, 8, xi) - eval_symbol_c(64, 8, xi)) < 0.1


# --- Littlewood-Paley ------------------------------------------------------------------

def test_partition_of_unity(rng):
    xs = rng.uniform(-0.5, 0.5, (100, 5))
    k0, k1 = lp_covering_range(xs)
    assert np.max(np.abs(lp_partial_sum(xs, k0, k1) - 1)) < 1e-12


def test_lp_support():
    assert lp_family(0, np.array([0.49, 0.0])) == 0
    assert lp_family(0, np.array([2.01, 0.0])) == 0
    assert lp_family(0, np.array([1.0, 0.0])) > 0


def test_P_le_passes_constants():
    f = GridFunction.constant(2, 32, 3.0)
    out = project_P_le(f, 0.25, 1)
    assert np.allclose(out.values, 3.0)


def test_P_kills_constants_when_windows_avoid_zero():
    f = GridFunction.constant(2, 64, 1.0)
    out = project_P(f, 1, 8, 2)
    assert np.allclose(out.values, 0.0, atol=1e-14)


def test_P_twice_is_squared_symbol():
    f = GridFunction.random(2, 64, 3, kind="complex", torus=True)
    m = p_multiplier(64, 2, 2, 8, 2)
    twice = project_P(project_P(f, 2, 8, 2), 2, 8, 2)
    once = np.fft.ifftn(np.fft.fftn(f.values) * m * m)
    assert np.allclose(twice.values, once, atol=1e-12)


def test_P_parseval():
    f = GridFunction.random(2, 64, 4, kind="complex", torus=True)
    m = p_multiplier(64, 2, 1, 8, 1)
    g = project_P(f, 1, 8, 1)
    spatial = np.sum(np.abs(g.values) ** 2)
    fourier = np.sum(np.abs(m * np.fft.fftn(f.values)) ** 2) / 64**2
    assert abs(spatial - fourier) < 1e-8 * spatial


def test_aliasing_guard():
    f = GridFunction.constant(2, 16)
    with pytest.raises(ValueError):
        project_P(f, 1, 8, 1)
    with pytest.raises(ValueError):
        p_le_multiplier(16, 2, 0.25, 1)
