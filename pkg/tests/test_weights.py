import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spherical_maximal.grid import GridFunction
from spherical_maximal.weights import (a2_characteristic, admissible_exponent, power_weight,
                                       power_weight_values, reverse_holder_check,
                                       weighted_bound_experiment, weighted_ratio)


def brute_a2(v, max_side):
    best = 1.0
    n = v.shape[0]
    for s in range(1, max_side + 1):
        for i in range(n - s + 1):
            for j in range(n - s + 1):
                blk = v[i:i + s, j:j + s]
                best = max(best, blk.mean() * (1 / blk).mean())
    return best


def test_constant_weight_has_characteristic_one():
    w = GridFunction(np.full((5, 5), 3.0), (0, 0))
    assert a2_characteristic(w, 5) == pytest.approx(1)
    assert reverse_holder_check(w, 2, 5) == pytest.approx(1)


def test_a2_against_brute_force(rng):
    v = rng.uniform(0.1, 5, (6, 6))
    w = GridFunction(v, (0, 0))
    assert a2_characteristic(w, 4) == pytest.approx(brute_a2(v, 4), rel=1e-12)


def test_two_point_weight():
    # <w>_Q <w^{-1}>_Q for w = (1, t) on two cells is (1 + t)(1 + 1/t) / 4
    w = GridFunction(np.array([1.0, 9.0]), (0,))
    assert a2_characteristic(w, 2) == pytest.approx(10 * (1 + 1 / 9) / 4)


@given(st.floats(0.1, 10), st.integers(0, 20))
@settings(max_examples=20, deadline=None)
def test_a2_scale_invariant(c, seed):
    v = np.random.default_rng(seed).uniform(0.5, 2, (4, 4))
    a = a2_characteristic(GridFunction(v, (0, 0)), 4)
    b = a2_characteristic(GridFunction(c * v, (0, 0)), 4)
    assert b == pytest.approx(a, rel=1e-12)


def test_weight_errors():
    w = GridFunction(np.array([1.0, 0.0]), (0,))
    with pytest.raises(ValueError):
        a2_characteristic(w, 2)
    ok = GridFunction(np.ones(2), (0,))
    with pytest.raises(ValueError):
        reverse_holder_check(ok, 1, 2)
    with pytest.raises(ValueError):
        a2_characteristic(ok, 0)


def test_reverse_holder_at_least_one(rng):
    w = GridFunction(rng.uniform(0.1, 3, (5, 5)), (0, 0))
    assert reverse_holder_check(w, 3, 5) >= 1


def test_power_weight():
    w = power_weight(2, 1.0, 2)
    assert w.value_at((0, 0)) == 1
    assert w.value_at((2, 0)) == pytest.approx(3)
    pts = np.array([[3.0, 4.0]])
    assert power_weight_values(pts, 2)[0] == pytest.approx(36)
    # power weights with |a| < d are A_2; the truncated characteristic stays moderate
    assert a2_characteristic(power_weight(2, 1.0, 6), 13) < 5


def test_admissible_exponent():
    assert admissible_exponent(5, 0.5, 0.1)
    assert not admissible_exponent(5, 1.0, 0.1)  # 1 * (5 + 0.1) > 5
    assert admissible_exponent(6, 1.0, 0.1)
    with pytest.raises(ValueError):
        admissible_exponent(4, 0.1, 0.1)


def test_weighted_ratio_unweighted_delta():
    d = GridFunction.delta(5)
    # with a = 0 the ratio is the l2 norm of the pointwise sup of normalized shells
    from spherical_maximal.lattice import shell_counts
    c = shell_counts(5, 4)
    want = math.sqrt(sum(1 / int(c[n]) for n in range(1, 5)))
    assert weighted_ratio(d, 2, 0.0) == pytest.approx(want)


def test_weighted_experiment_small():
    rep = weighted_bound_experiment(5, 0.5, 0.1, Lambdas=(1, 2, 3),
                                    corpus=[("delta", GridFunction.delta(5))])
    assert rep.admissible
    assert len(rep.rows()) == 3 and rep.rows()[0]["Lambda"] == 1
    assert rep.growth >= 1
    with pytest.raises(ValueError):
        weighted_bound_experiment(4, 0.5, 0.1)
