import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pkmsizing.errors import SingularMatrixError
from pkmsizing.planar_core import (
    Box,
    Mat2,
    Vec2,
    cond2,
    det2,
    singular_values2,
    singular_values2_arrays,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
mats = st.builds(Mat2, finite, finite, finite, finite)


def test_det2_examples():
    assert det2(Mat2.identity()) == 1.0
    assert det2(Mat2(-1, 0, 0, -1)) == 1.0
    for s in (0.3, -2.0, 7.5):
        # cofactor expansion by hand: (-s)(0) - (0)(s)
        assert det2(Mat2(-s, 0, s, 0)) == 0.0


def test_singular_values_examples():
    assert singular_values2(Mat2.identity()) == (1.0, 1.0)
    lo, hi = singular_values2(Mat2(1, -2 / 3, -2 / 3, 1))
    # symmetric: eigenvalues 1 -+ 2/3
    assert lo == pytest.approx(1 / 3, rel=1e-14)
    assert hi == pytest.approx(5 / 3, rel=1e-14)
    c = 0.75
    lo, hi = singular_values2(Mat2(1, -c, 1, c))
    # m^T m = diag(2, 2c^2)
    assert lo == pytest.approx(c * math.sqrt(2), rel=1e-14)
    assert hi == pytest.approx(math.sqrt(2), rel=1e-14)
    assert (lo, hi) == pytest.approx((1.06066, 1.41421), abs=1e-5)


def test_cond2_examples():
    assert cond2(Mat2.identity()) == 1.0
    assert cond2(Mat2.diag(3, 1)) == pytest.approx(3.0)
    for r in (0.1, 1.0, 4.2):
        assert cond2(Mat2(1, r, -r, 1)) == pytest.approx(1.0, abs=1e-14)


def test_cond2_singular_raises():
    with pytest.raises(SingularMatrixError):
        cond2(Mat2(1, 2, 2, 4))
    with pytest.raises(ArithmeticError):
        cond2(Mat2(0, 0, 0, 0))


def test_singular_values_match_eigensolver():
    rng = np.random.default_rng(7)
    for m in rng.normal(size=(1000, 4)) * rng.uniform(0.01, 100, size=(1000, 1)):
        M = Mat2(*m)
        lo, hi = singular_values2(M)
        ev = np.sqrt(np.clip(np.linalg.eigvalsh(M.to_array().T @ M.to_array()), 0, None))
        assert hi == pytest.approx(ev[1], rel=1e-10)
        assert lo == pytest.approx(ev[0], rel=1e-10, abs=1e-10 * ev[1])


def test_array_variant_matches_scalar():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(4, 500))
    lo, hi = singular_values2_arrays(*m)
    for k in range(500):
        s = singular_values2(Mat2(*m[:, k]))
        assert (lo[k], hi[k]) == pytest.approx(s, rel=1e-14)


@given(mats)
def test_det_equals_signed_product_of_singular_values(m):
    lo, hi = singular_values2(m)
    d = det2(m)
    assert abs(abs(d) - lo * hi) <= 1e-10 * max(1.0, hi * hi)
    assert lo <= hi


@given(mats, st.floats(-50, 50).filter(lambda k: abs(k) > 1e-3))
@settings(max_examples=200)
def test_cond_scale_invariant(m, k):
    try:
        c = cond2(m)
    except SingularMatrixError:
        return
    if c > 1e8:
        return
    assert cond2(m * k) == pytest.approx(c, rel=1e-9)


def test_mat_vec_algebra():
    m = Mat2(1, 2, 3, 4)
    assert m @ Vec2(1, 1) == Vec2(3, 7)
    assert (m @ m.inverse()).to_array() == pytest.approx(np.eye(2))
    assert m.transpose() == Mat2(1, 3, 2, 4)
    assert Mat2.from_rows([[1, 2], [3, 4]]) == m
    assert Vec2(3, 4).norm() == 5.0
    assert Vec2(1, 0).perp() == Vec2(0, 1)
    with pytest.raises(SingularMatrixError):
        Mat2(1, 2, 2, 4).inverse()
    with pytest.raises(ValueError):
        Vec2(0, 0).unit()


def test_box():
    b = Box(-1, -2, 3, 4)
    assert b.width == 4 and b.height == 6
    assert b.contains(Vec2(0, 0)) and not b.contains(Vec2(5, 0))
    assert b.scaled(2) == Box(-2, -4, 6, 8)
