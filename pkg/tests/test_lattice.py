import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spherical_maximal.lattice import (ShellCapError, enumerate_ball, enumerate_shell,
                                       restricted_shell_counts, shell_count,
                                       shell_count_reordered, shell_counts, shell_growth_fit)
from conftest import brute_shell


def test_trivial_counts():
    assert shell_count(5, 0) == 1
    assert shell_count(5, 1) == 10


def test_four_squares_against_jacobi():
    def jacobi(n):
        return 8 * sum(m for m in range(1, n + 1) if n % m == 0 and m % 4)
    assert shell_count(4, 2) == 24
    for n in range(1, 60):
        assert shell_count(4, n) == jacobi(n)


def test_two_squares_25():
    assert shell_count(2, 25) == len(brute_shell(2, 25)) == 12


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_counts_match_brute_force(d):
    nmax = 200 if d <= 3 else 60
    R = math.isqrt(nmax)
    tally = np.zeros(nmax + 1, dtype=np.int64)
    for p in itertools.product(range(-R, R + 1), repeat=d):
        s = sum(x * x for x in p)
        if s <= nmax:
            tally[s] += 1
    assert np.array_equal(shell_counts(d, nmax)[: nmax + 1], tally)


@pytest.mark.parametrize("d,R", [(2, 10), (3, 7), (4, 4)])
def test_ball_count_is_partial_sum(d, R):
    ball = enumerate_ball(d, R)
    assert ball.count == int(np.sum(shell_counts(d, R * R)[: R * R + 1]))
    assert np.all((ball.points**2).sum(1) <= R * R)


@given(st.permutations([1, 2, 3, 1]), st.integers(0, 80))
@settings(max_examples=30, deadline=None)
def test_convolution_order_invariance(dims, n):
    assert shell_count_reordered(list(dims), n) == shell_count(sum(dims), n)


def test_enumerate_small_shells():
    s = enumerate_shell(2, 1)
    assert {tuple(p) for p in s.points} == {(1, 0), (-1, 0), (0, 1), (0, -1)}
    assert enumerate_shell(5, 2).count == 40
    assert enumerate_shell(3, 7).count == 0


@given(st.integers(1, 5), st.integers(0, 40))
@settings(max_examples=40, deadline=None)
def test_shell_invariants(d, n):
    s = enumerate_shell(d, n)
    pts = s.points
    assert np.all((pts**2).sum(1) == n)
    assert s.count == shell_count(d, n) == len({tuple(p) for p in pts})
    as_set = {tuple(p) for p in pts}
    for p in pts[:20]:
        assert tuple(-p) in as_set
        assert tuple(p[::-1]) in as_set


def test_enumeration_cap():
    with pytest.raises(ShellCapError):
        enumerate_shell(5, 100, cap=10)


def test_restricted_counts_match_brute():
    d, s, nmax = 3, 2, 20
    tally = np.zeros(nmax + 1, dtype=np.int64)
    for p in itertools.product(range(-s, s + 1), repeat=d):
        v = sum(x * x for x in p)
        if v <= nmax:
            tally[v] += 1
    assert np.array_equal(restricted_shell_counts(d, nmax, radius=s), tally)


def test_large_counts_do_not_wrap():
    # r_8(n) grows like n^3; exact integer arithmetic must survive
    c = shell_count(8, 10**4)
    assert c == 16 * sum((-1) ** (10**4 + m) * m**3 for m in range(1, 10**4 + 1) if 10**4 % m == 0)


@pytest.mark.parametrize("d,target", [(5, 3.0), (6, 4.0)])
def test_growth_exponent(d, target):
    fit = shell_growth_fit(d, 64, 4096)
    assert abs(fit.slope - target) < 0.2
    assert not fit.outside_asymptotic_range


def test_growth_fit_degenerate():
    with pytest.raises(ValueError):
        shell_growth_fit(5, 100, 100)
    assert shell_growth_fit(3, 1, 100).outside_asymptotic_range
