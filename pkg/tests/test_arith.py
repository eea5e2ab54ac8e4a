import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spherical_maximal.arith import (RationalPhase, arcs_tile, farey_dissection,
                                     gauss_identity_residual, gauss_magnitudes, gauss_sum,
                                     gauss_sum_1d, gauss_sum_table, units_mod)


def test_units():
    assert units_mod(1) == [1]
    assert units_mod(6) == [1, 5]
    assert units_mod(12) == [1, 5, 7, 11]
    with pytest.raises(ValueError):
        units_mod(0)


def test_rational_phase_validation():
    assert RationalPhase(1, 1).value == 1
    with pytest.raises(ValueError):
        RationalPhase(2, 4)


def test_gauss_1d_small_values():
    assert abs(gauss_sum_1d(1, 1, 0) - 1) < 1e-15
    assert abs(gauss_sum_1d(1, 2, 0)) < 1e-15
    assert abs(gauss_sum_1d(1, 2, 1) - 1) < 1e-15


def test_gauss_d_dim_examples():
    assert abs(gauss_sum(3, 1, 1, (0, 0, 0)) - 1) < 1e-15
    assert abs(gauss_sum(2, 1, 2, (0, 1))) < 1e-15
    # direct 9-term oracle
    w = sum(cmath.exp(2j * math.pi * (n1 * n1 + n2 * n2) / 3) for n1 in range(3) for n2 in range(3)) / 9
    assert abs(gauss_sum(2, 1, 3, (0, 0)) - w) < 1e-14
    assert abs(gauss_sum(2, 1, 3, (0, 0), method="direct") - w) < 1e-14


def test_direct_path_cap():
    with pytest.raises(ValueError):
        gauss_sum(5, 1, 50, (0,) * 5, method="direct")


@given(st.integers(1, 12), st.integers(1, 3), st.data())
@settings(max_examples=60, deadline=None)
def test_product_equals_direct(q, d, data):
    a = data.draw(st.sampled_from(units_mod(q)))
    ell = data.draw(st.lists(st.integers(0, q - 1), min_size=d, max_size=d))
    assert abs(gauss_sum(d, a, q, ell) - gauss_sum(d, a, q, ell, method="direct")) < 1e-12


def test_table_is_product():
    T = gauss_sum_table(2, 2, 5)
    assert abs(T.values[1, 3] - gauss_sum_1d(2, 5, 1) * gauss_sum_1d(2, 5, 3)) < 1e-15


def test_magnitude_law_small():
    for q in range(1, 60):
        m = gauss_magnitudes(q).ravel()
        dist = np.min(np.abs(m[:, None] - np.array([0, 1, math.sqrt(2)])[None, :]), axis=1)
        assert dist.max() < 1e-9


def test_identity_residual_examples():
    assert gauss_identity_residual(1, 1) == 0 or gauss_identity_residual(1, 1) < 1e-15
    assert gauss_identity_residual(2, 4) < 1e-12
    assert gauss_identity_residual(3, 7) < 1e-12


def test_identity_residual_brute_force_d2():
    # independent evaluation of sum_ell G(a/q, ell) e(-y.ell/q) for small q
    q, d = 5, 2
    worst = 0.0
    for a in units_mod(q):
        for y in np.ndindex(q, q):
            s = sum(gauss_sum(d, a, q, ell, method="direct") *
                    cmath.exp(-2j * math.pi * (y[0] * ell[0] + y[1] * ell[1]) / q)
                    for ell in np.ndindex(q, q))
            worst = max(worst, abs(s - cmath.exp(2j * math.pi * (y[0] ** 2 + y[1] ** 2) * a / q)))
    assert worst < 1e-12
    assert gauss_identity_residual(d, q) < 1e-12


def test_farey_small_orders():
    arcs = farey_dissection(1)
    assert len(arcs) == 1 and arcs[0].length == 1
    arcs = farey_dissection(2)
    assert {(A.a, A.q) for A in arcs} == {(1, 1), (1, 2)}
    assert sum(A.length for A in arcs) == pytest.approx(1, abs=1e-12)
    arcs = farey_dissection(4)
    assert {(A.a, A.q) for A in arcs} == {(1, 1), (1, 2), (1, 3), (2, 3), (1, 4), (3, 4)}


@pytest.mark.parametrize("L", [1, 2, 4, 8, 16, 32, 64, 128, 256])
def test_farey_tiling(L):
    arcs = farey_dissection(L)
    assert arcs_tile(arcs)
    assert abs(sum(A.length for A in arcs) - 1) < 1e-12
    for A in arcs:
        assert 0 < A.alpha <= 1 and 0 < A.beta <= 1
        lo, hi = A.tau_interval
        assert lo < 0 < hi
        assert hi == pytest.approx(A.alpha / (A.q * L))
        assert -lo == pytest.approx(A.beta / (A.q * L))
    one = next(A for A in arcs if A.q == 1)
    assert one.alpha == one.beta
