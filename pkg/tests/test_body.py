import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conehull.body import (
    LinearImage,
    LpBall,
    ScaledL1,
    SymmetricHPolytope,
    body_from_dict,
    body_isotropic_constant,
    body_volume,
    box,
    cube,
    cross_polytope,
    family_body,
    isotropic_normalize,
    minkowski_functional,
    rotated_cube,
)
from conehull.errors import DimensionTooLarge, IllConditioned, SingularCovariance

from oracles import lp_ball_second_moment

# frozen from oracles.lp_ball_second_moment (1-D marginal quadrature)
B4_3_SECOND_MOMENT = 0.27416794862667804
INV_SQRT12 = 1.0 / math.sqrt(12.0)


def test_minkowski_examples():
    assert minkowski_functional(cube(2), [0.5, -0.2]) == pytest.approx(0.5)
    assert minkowski_functional(cross_polytope(2), [0.3, 0.3]) == pytest.approx(0.6)
    assert minkowski_functional(LinearImage(cross_polytope(2), 2 * np.eye(2)), [0.3, 0.3]) == pytest.approx(0.3)
    assert minkowski_functional(cube(3), np.zeros(3)) == 0.0


def test_volume_examples():
    assert body_volume(cross_polytope(2), exact=True) == 2
    assert body_volume(cross_polytope(3), exact=True) == Fraction(4, 3)
    assert body_volume(cube(3), exact=True) == 8
    assert body_volume(cross_polytope(3)) == pytest.approx(4 / 3, rel=1e-14)
    with pytest.raises(DimensionTooLarge):
        body_volume(cross_polytope(9), exact=True)


def test_lp_second_moment_matches_quadrature():
    assert LpBall(4, 3).second_moment_1d() == pytest.approx(B4_3_SECOND_MOMENT, rel=1e-12)
    assert lp_ball_second_moment(4, 3) == pytest.approx(B4_3_SECOND_MOMENT, rel=1e-12)
    for p, n in [(1, 2), (1, 5), (3, 4), (1.5, 2)]:
        assert LpBall(p, n).second_moment_1d() == pytest.approx(lp_ball_second_moment(p, n), rel=1e-9)


def test_exact_covariance_l1():
    cov = LpBall(1, 3).exact_covariance()
    assert cov[0][0] == Fraction(1, 10) and cov[0][1] == 0


def test_isotropic_normalize_examples():
    c = isotropic_normalize(cube(3))
    assert np.allclose(c.T, 0.5 * np.eye(3))
    b = isotropic_normalize(cross_polytope(2))
    assert np.allclose(b.T, np.eye(2) / math.sqrt(2))
    assert np.allclose(b.covariance(), np.eye(2) / 12)
    assert b.volume() == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("fam", ["l1", "cube", "l4", "box", "rotated_cube"])
def test_isotropic_position(fam):
    b = family_body(fam, 4, seed=3)
    assert b.volume() == pytest.approx(1.0, rel=1e-9)
    cov = b.covariance()
    L = b.isotropic_constant()
    assert np.abs(cov - L * L * np.eye(4)).max() <= 1e-6
    again = isotropic_normalize(b)
    assert np.allclose(again.T, b.T, atol=1e-9)


def test_isotropic_constant_examples():
    for n in (1, 2, 5):
        assert body_isotropic_constant(cube(n)) == pytest.approx(INV_SQRT12, rel=1e-12)
        assert body_isotropic_constant(box(np.arange(1, n + 1))) == pytest.approx(INV_SQRT12, rel=1e-12)
    assert body_isotropic_constant(cross_polytope(2)) == pytest.approx(INV_SQRT12, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), p=st.sampled_from([1.0, 2.0, 4.0, math.inf]), n=st.integers(1, 5))
def test_affine_invariance(seed, p, n):
    rng = np.random.default_rng(seed)
    T = rng.standard_normal((n, n))
    if np.linalg.cond(T) > 1e3:
        T = T + 3 * np.eye(n)
    K = LpBall(p, n)
    img = LinearImage(K, T)
    assert body_isotropic_constant(img) == pytest.approx(body_isotropic_constant(K), rel=1e-9)
    assert img.volume() == pytest.approx(abs(np.linalg.det(T)) * K.volume(), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**31),
    r=st.floats(0, 100),
    fam=st.sampled_from(["l1", "cube", "l4", "rotated_cube"]),
)
def test_homogeneity_and_symmetry(seed, r, fam):
    K = family_body(fam, 3, seed=seed % 7)
    x = np.random.default_rng(seed).standard_normal((5, 3))
    nx = K.norm(x)
    assert np.allclose(K.norm(r * x), r * nx, rtol=1e-12, atol=1e-300)
    assert np.array_equal(K.norm(-x), nx)


def test_h_polytope_body():
    sq = SymmetricHPolytope(np.eye(2), np.ones(2))
    assert sq.volume() == pytest.approx(4.0)
    assert minkowski_functional(sq, [0.5, -0.2]) == pytest.approx(0.5)
    assert sq.is_unconditional
    diamond = SymmetricHPolytope([[1, 1], [1, -1]], [1, 1])
    assert diamond.volume() == pytest.approx(2.0)
    assert np.allclose(diamond.covariance(), np.eye(2) / 6)


def test_unconditional_flags():
    assert cube(3).is_unconditional
    assert ScaledL1(2.0, 3).is_unconditional
    assert isotropic_normalize(cross_polytope(3)).is_unconditional
    assert not rotated_cube(3, seed=1).is_unconditional


def test_condition_cap_and_singular():
    with pytest.raises(IllConditioned):
        LinearImage(cube(2), np.diag([1.0, 1e-7]))
    with pytest.raises(SingularCovariance):
        from conehull.body import isotropic_constant_from

        isotropic_constant_from(1.0, np.diag([1.0, 0.0]))


def test_body_json_roundtrip():
    for b in [LpBall("inf", 2), ScaledL1(1.5, 3), family_body("rotated_cube", 3, seed=2)]:
        back = body_from_dict(b.to_dict())
        x = np.random.default_rng(0).standard_normal((4, b.dim))
        assert np.allclose(back.norm(x), b.norm(x))
    assert math.isinf(body_from_dict({"kind": "lp_ball", "p": "inf", "dim": 4}).p)
