import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conehull.body import family_body
from conehull.errors import DegenerateInput, DimensionTooLarge, NonSimplicialFacet
from conehull.hull import (
    SymmetricPolytope,
    build_hull,
    cone_simplex_moments,
    facet_sign_sum_max,
    integral_l1,
    integral_l2sq,
    polytope_covariance,
    polytope_volume,
    sample_in_polytope,
)
from conehull.isotropy import bound_chain
from conehull.sampling import make_rng, sample_cone_boundary

from oracles import brute_facet_sign_max, mc_polytope, simplex_second_moment_quadrature

# frozen from oracles.simplex_second_moment_quadrature on the matrix below
SIMPLEX = [[1, 0.2, 0], [0.1, 1, 0.3], [0.2, -0.1, 0.9]]
SIMPLEX_SECOND_MOMENT = [
    [0.021098, 0.013167, 0.013629],
    [0.013167, 0.017402, 0.011781],
    [0.013629, 0.011781, 0.018018],
]


def _random_hull(n, N, seed, fam="l4"):
    X = sample_cone_boundary(family_body(fam, n), N, seed=seed).points
    return build_hull(X, coplanar="triangulate")


def test_cross_polytope_facets():
    for n in range(1, 6):
        P = build_hull(np.eye(n))
        assert P.n_facets == 2**n and P.n_vertices == 2 * n


def test_interior_point_absorbed():
    P = build_hull([[1, 0], [0, 1], [0.1, 0.1]])
    assert P.n_facets == 4 and P.n_vertices == 4


def test_n_points_all_vertices():
    for n in (2, 3, 5):
        P = _random_hull(n, n, seed=n)
        assert P.n_vertices == 2 * n


def test_volume_examples():
    assert polytope_volume(build_hull(np.eye(3)), exact=True) == Fraction(4, 3)
    assert build_hull([[1, 1], [1, -1]]).volume == pytest.approx(4.0)
    assert polytope_volume(build_hull([[1, 1], [1, -1]]), exact=True) == 4


@pytest.mark.parametrize("n", range(1, 7))
def test_cross_polytope_exact_volume(n):
    assert polytope_volume(build_hull(np.eye(n)), exact=True) == Fraction(2**n, math.factorial(n))


def test_simplex_moment_examples():
    _, M = cone_simplex_moments(np.eye(2)[None])
    assert M[0, 0] == pytest.approx(1 / 12)
    _, M = cone_simplex_moments(np.asarray(SIMPLEX, float)[None])
    assert np.allclose(M, SIMPLEX_SECOND_MOMENT, atol=5e-7)
    assert np.allclose(M, simplex_second_moment_quadrature(SIMPLEX), rtol=1e-9)


def test_covariance_examples():
    P = build_hull(np.eye(2))
    assert polytope_covariance(P)[0, 0] == pytest.approx(1 / 3)
    exact = polytope_covariance(build_hull(np.eye(4)), exact=True)
    assert exact[0][0] == Fraction(2**4 * 2, math.factorial(6)) and exact[0][1] == 0


def test_permutation_invariant_covariance():
    P = build_hull(np.eye(3) * 0.7 + 0.1)
    C = np.array(polytope_covariance(P, exact=True), dtype=float)
    # a cyclic permutation leaves the generator set invariant: C commutes with it
    perm = np.roll(np.eye(3), 1, axis=0)
    assert np.allclose(perm @ C @ perm.T, C, atol=1e-12)
    assert np.allclose(C, C.T)


def test_random_volume_and_covariance_vs_mc():
    P = _random_hull(3, 10, seed=1)
    vol, se, pts = mc_polytope(P, 1_000_000, np.random.default_rng(0))
    assert abs(P.volume - vol) <= 4 * se
    x2 = pts[:, 0] ** 2
    box = float(np.prod(2 * np.abs(P.points).max(axis=0)))
    # int_P x_1^2 dx estimated as box * mean(1_P x_1^2)
    m = 1_000_000
    f = np.zeros(m)
    f[: x2.size] = x2
    est = box * f.mean()
    se2 = box * f.std(ddof=1) / math.sqrt(m)
    assert abs(P.second_moment[0, 0] - est) <= 4 * se2


def test_integral_l1_examples():
    assert integral_l1(build_hull(np.eye(2))) == pytest.approx(4 / 3, rel=1e-12)
    assert integral_l1(build_hull([[1, 1], [1, -1]])) == pytest.approx(4.0, rel=1e-12)
    assert integral_l1(build_hull(np.eye(3))) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DimensionTooLarge):
        integral_l1(build_hull(np.eye(5)))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_integral_l1_exact_vs_mc(n):
    P = _random_hull(n, 3 * n, seed=10 + n, fam="rotated_cube")
    exact = integral_l1(P, "exact")
    mc, se = integral_l1(P, "mc", samples=400_000, rng=make_rng(3, n), return_se=True)
    assert abs(exact - mc) <= 4 * se


def test_sample_in_polytope_inside_and_l2_identity():
    P = _random_hull(3, 12, seed=4)
    x = sample_in_polytope(P, 200_000, np.random.default_rng(1))
    assert P.contains(x, tol=1e-9).all()
    v = (x * x).sum(axis=1)
    assert abs(P.volume * v.mean() - integral_l2sq(P)) <= 4 * P.volume * v.std() / math.sqrt(v.size)


def test_facet_sign_sum_examples():
    P = build_hull(np.eye(2))
    assert facet_sign_sum_max(P, "l1") == 2.0
    assert facet_sign_sum_max(P, "l2sq") == 2.0


@pytest.mark.parametrize("seed", range(3))
def test_facet_sign_sum_brute_force(seed):
    P = _random_hull(3, 7, seed=seed)
    for norm in ("l1", "l2sq"):
        assert facet_sign_sum_max(P, norm) == pytest.approx(brute_facet_sign_max(P, norm), rel=1e-12)


def test_structure_invariants():
    P = _random_hull(4, 12, seed=5)
    N = P.n_generators
    verts = set(P.vertex_indices.tolist())
    assert verts == {(i + N) % (2 * N) for i in verts}
    antipodal = {tuple(sorted((i + N) % (2 * N) for i in f)) for f in P.facets}
    assert antipodal == {tuple(sorted(f)) for f in P.facets}
    assert np.all(np.linalg.det(P.facet_vectors) > 0)
    assert P.volume == pytest.approx(float(polytope_volume(P, exact=True)), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 4), extra=st.integers(1, 6))
def test_inclusion_monotone(seed, n, extra):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n + extra, n))
    small = build_hull(X[:-1], coplanar="triangulate") if n + extra - 1 >= n else None
    big = build_hull(X, coplanar="triangulate")
    if small is not None:
        assert big.volume >= small.volume * (1 - 1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 4), mult=st.integers(1, 4))
def test_facet_inequalities(seed, n, mult):
    P = _random_hull(n, mult * n + 1, seed=seed, fam="l1")
    bc = bound_chain(P)
    assert bc.facet_l1_ok and bc.facet_l2_ok and bc.l2_bound_ok


def test_errors():
    with pytest.raises(DegenerateInput):
        build_hull([[1, 0, 0], [0, 1, 0]])
    with pytest.raises(DimensionTooLarge):
        build_hull(np.eye(9))
    with pytest.raises(NonSimplicialFacet):
        build_hull([[1, 0], [0, 1], [0.5, 0.5]])
    P = build_hull([[1, 0], [0, 1], [0.5, 0.5]], coplanar="triangulate")
    assert P.coplanar > 0 and P.volume == pytest.approx(2.0)
    with pytest.raises(NonSimplicialFacet):
        build_hull([[1, 0, 0], [0, 1, 0], [0, 0, 1], [0.5, 0.5, 0]])


def test_cube_cone_points_need_triangulation_mode():
    X = sample_cone_boundary(family_body("cube", 4), 40, seed=3).points
    P = build_hull(X, coplanar="triangulate")
    assert P.contains(X, tol=1e-9).all()


def test_json_roundtrip():
    P = _random_hull(3, 6, seed=7)
    d = json.loads(P.to_json())
    assert set(d) >= {"generators", "facets", "normals", "volume"}
    Q = SymmetricPolytope.from_dict(d)
    assert Q.volume == pytest.approx(P.volume, rel=1e-14)


def test_linear_image_volume():
    P = _random_hull(3, 8, seed=8)
    T = np.array([[2.0, 0.3, 0], [0, 1, 0.5], [0.1, 0, 0.7]])
    assert P.transformed(T).volume == pytest.approx(abs(np.linalg.det(T)) * P.volume, rel=1e-10)


def test_one_dimensional():
    P = build_hull([[0.3], [-0.7]])
    assert P.volume == pytest.approx(1.4)
