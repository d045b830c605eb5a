import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from miopt import (Interval, ZERO, add, cw_leq, cw_lt, gh_diff, hausdorff,
                   norm, scalar_mul)

# dyadic rationals keep every operation exact in binary floating point
dyadic = st.integers(-256, 256).map(lambda n: n / 16.0)


@st.composite
def intervals(draw):
    a = draw(dyadic)
    b = draw(dyadic)
    return Interval(min(a, b), max(a, b))


def test_construction_rejects_inverted_endpoints():
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)


def test_center_width_reconstruction():
    q = Interval(-0.75, 2.25)
    assert q.center == 0.75
    assert q.width == 1.5
    assert (q.center - q.width, q.center + q.width) == (q.lo, q.hi)


def test_add_examples():
    assert add(Interval(1, 2), Interval(3, 5)) == Interval(4, 7)
    assert add(Interval(-1, 1), Interval(-2, 0)) == Interval(-3, 1)
    q = Interval(-0.5, 3.5)
    assert add(q, ZERO) == q
    assert q + ZERO == q


def test_scalar_mul_examples():
    assert scalar_mul(0.0, Interval(1, 3)) == ZERO
    assert scalar_mul(-2.0, Interval(1, 3)) == Interval(-6, -2)
    assert scalar_mul(2.0, Interval(-1, 4)) == Interval(-2, 8)
    assert 2.0 * Interval(-1, 4) == Interval(-2, 8)


def test_gh_diff_examples():
    q = Interval(-1, 5)
    assert gh_diff(q, q) == ZERO
    assert gh_diff(Interval(5, 7), Interval(1, 2)) == Interval(4, 5)
    assert gh_diff(Interval(0, 2), Interval(0, 1)) == Interval(0, 1)


def test_hausdorff_examples():
    assert hausdorff(Interval(0, 1), Interval(0, 1)) == 0.0
    assert hausdorff(Interval(1, 2), Interval(3, 5)) == 3.0
    assert hausdorff(Interval(-1, 0), Interval(0, 2)) == 2.0


def test_norm_examples():
    assert norm(ZERO) == 0.0
    assert norm(Interval(-3, 2)) == 3.0
    assert norm(Interval(1, 4)) == 4.0


def test_cw_order_examples():
    q = Interval(0, 2)
    assert cw_leq(q, q)
    assert not cw_lt(q, q)
    assert cw_lt(Interval(1, 3), Interval(2, 6))
    assert not cw_leq(Interval(0, 1), Interval(2, 2.5))


@given(intervals(), intervals(), intervals())
def test_leq_is_partial_order(q, r, p):
    assert cw_leq(q, q)
    if cw_leq(q, r) and cw_leq(r, q):
        assert q.center == r.center and q.width == r.width
    if cw_leq(q, r) and cw_leq(r, p):
        assert cw_leq(q, p)


@given(intervals(), intervals(), intervals())
def test_translation_invariance(q, r, p):
    assert cw_leq(q, r) == cw_leq(add(q, p), add(r, p))
    assert cw_lt(q, r) == cw_lt(add(q, p), add(r, p))


@given(intervals(), intervals(), intervals(), intervals())
def test_addition_compatibility(q1, r1, q2, r2):
    if cw_leq(q1, r1) and cw_leq(q2, r2):
        assert cw_leq(add(q1, q2), add(r1, r2))
    if cw_lt(q1, r1) and cw_lt(q2, r2):
        assert cw_lt(add(q1, q2), add(r1, r2))


@given(st.integers(0, 64).map(lambda n: n / 16.0), intervals(), intervals())
def test_nonneg_scaling_preserves_order(alpha, q, r):
    if cw_leq(q, r):
        assert cw_leq(scalar_mul(alpha, q), scalar_mul(alpha, r))


@given(intervals(), intervals())
def test_strict_implies_nonstrict(q, r):
    if cw_lt(q, r):
        assert cw_leq(q, r)
    assert not cw_lt(q, q)


@given(intervals(), intervals(), intervals())
def test_hausdorff_is_a_metric(q, r, p):
    assert hausdorff(q, r) >= 0.0
    assert (hausdorff(q, r) == 0.0) == (q == r)
    assert hausdorff(q, r) == hausdorff(r, q)
    assert hausdorff(q, p) <= hausdorff(q, r) + hausdorff(r, p)


@given(intervals(), intervals())
def test_norm_of_gh_diff_equals_hausdorff(q, r):
    assert norm(gh_diff(q, r)) == hausdorff(q, r)


def discretized_hausdorff(q, r, spacing=1e-3):
    """Independent sup-inf oracle on uniformly sampled interval points."""
    import numpy as np

    def sample(iv):
        n = max(2, int(math.ceil((iv.hi - iv.lo) / spacing)) + 1)
        return np.linspace(iv.lo, iv.hi, n)

    a = sample(q)
    b = sample(r)

    def directed(x, y):
        # for each point of x, distance to the nearest point of y
        idx = np.searchsorted(y, x)
        idx = np.clip(idx, 1, len(y) - 1)
        nearest = np.minimum(np.abs(x - y[idx - 1]), np.abs(x - y[idx]))
        return float(nearest.max())

    return max(directed(a, b), directed(b, a))


def test_hausdorff_matches_discretized_oracle_smoke():
    import numpy as np

    rng = np.random.default_rng(7)
    for _ in range(25):
        a, b, c, d = rng.uniform(-3, 3, size=4)
        q = Interval(min(a, b), max(a, b))
        r = Interval(min(c, d), max(c, d))
        assert abs(hausdorff(q, r) - discretized_hausdorff(q, r)) <= 2e-3
