"""Symmetric convex hulls ``conv{+-X_1, ..., +-X_N}`` with simplicial facets.

Qhull proposes the facets; every proposal is then certified. Each non-vertex
point is tested against the facet hyperplane with a float filter, and the
rare ambiguous cases are decided by an exact rational orientation
determinant. A ridge-closure check confirms the facet list is complete.

Moments are computed by decomposing the polytope into the cone simplices
``conv{0, y_1, ..., y_n}`` over its facets.
"""
from __future__ import annotations

import json
import math
from fractions import Fraction
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull, Delaunay, QhullError

from . import kernels
from .errors import DegenerateInput, DimensionTooLarge, NonSimplicialFacet
from .exact import exact_det, fraction_matrix, orientation

MAX_HULL_DIM = 8
MAX_EXACT_L1_DIM = 4
FILTER_RTOL = 1e-9

L1 = "l1"
L2SQ = "l2sq"
_NORM_CODES = {L1: kernels.L1, L2SQ: kernels.L2SQ}


# --------------------------------------------------------------------------
# cone-simplex moments


def cone_simplex_moments(simplices: np.ndarray):
    """Volume and ``int x x^T dx`` summed over cone simplices.

    ``simplices`` has shape (F, n, n); row ``k`` of ``simplices[f]`` is the
    vertex ``y_k`` of ``conv{0, y_1, ..., y_n}``.
    """
    simplices = np.asarray(simplices, dtype=np.float64)
    F, n, _ = simplices.shape
    vols = np.abs(np.linalg.det(simplices)) / math.factorial(n)
    w = vols / ((n + 1) * (n + 2))
    s = simplices.sum(axis=1)
    second = np.einsum("f,fki,fkj->ij", w, simplices, simplices) + np.einsum("f,fi,fj->ij", w, s, s)
    return float(vols.sum()), 0.5 * (second + second.T)


def exact_cone_simplex_moments(simplices):
    """Exact rational counterpart of :func:`cone_simplex_moments`."""
    simplices = np.asarray(simplices, dtype=np.float64)
    F, n, _ = simplices.shape
    nf = math.factorial(n)
    total = Fraction(0)
    second = [[Fraction(0)] * n for _ in range(n)]
    for f in range(F):
        Y = fraction_matrix(simplices[f])
        vol = abs(exact_det(Y)) / nf
        total += vol
        w = vol / ((n + 1) * (n + 2))
        s = [sum(Y[k][i] for k in range(n)) for i in range(n)]
        for i in range(n):
            for j in range(i, n):
                v = w * (sum(Y[k][i] * Y[k][j] for k in range(n)) + s[i] * s[j])
                second[i][j] += v
                if i != j:
                    second[j][i] += v
    return total, second


def boundary_cone_simplices(points) -> np.ndarray:
    """Triangulated boundary of ``conv(points)`` as cone simplices from the origin.

    Coplanar boundary points are allowed here (used for H-polytope bodies
    whose facets need not be simplices); the origin must be interior.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[1]
    if n == 1:
        return np.array([[[points.max()]], [[points.min()]]])
    hull = ConvexHull(points)
    return points[hull.simplices]


# --------------------------------------------------------------------------
# the polytope


class SymmetricPolytope:
    """``conv{+-g_1, ..., +-g_N}`` with certified simplicial facets.

    ``points`` stacks the generators and their negatives, so index ``i`` and
    ``i + N`` are antipodal. ``facets[f]`` lists ``n`` indices into
    ``points`` ordered so that ``det(points[facets[f]]) > 0``.
    """

    def __init__(self, generators, facets, normals, offsets, coplanar: int = 0):
        g = np.array(generators, dtype=np.float64)
        self.coplanar = int(coplanar)
        self.generators = g
        self.points = np.vstack([g, -g])
        self.facets = np.asarray(facets, dtype=np.int64)
        self.normals = np.asarray(normals, dtype=np.float64)
        self.offsets = np.asarray(offsets, dtype=np.float64)
        for a in (self.generators, self.points, self.facets, self.normals, self.offsets):
            a.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.generators.shape[1]

    @property
    def n_generators(self) -> int:
        return self.generators.shape[0]

    @property
    def n_facets(self) -> int:
        return self.facets.shape[0]

    @cached_property
    def vertex_indices(self) -> np.ndarray:
        return np.unique(self.facets)

    @property
    def n_vertices(self) -> int:
        return self.vertex_indices.size

    @cached_property
    def facet_vectors(self) -> np.ndarray:
        """(F, n, n) array; ``facet_vectors[f, k]`` is the k-th vertex of facet f."""
        return np.ascontiguousarray(self.points[self.facets])

    @cached_property
    def _moments(self):
        return cone_simplex_moments(self.facet_vectors)

    @property
    def volume(self) -> float:
        return self._moments[0]

    @property
    def second_moment(self) -> np.ndarray:
        """``int_P x x^T dx`` (not normalized by volume)."""
        return self._moments[1]

    @property
    def covariance(self) -> np.ndarray:
        """Covariance of the uniform distribution on P (barycenter is the origin)."""
        return self.second_moment / self.volume

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        slack = x @ self.normals.T - self.offsets
        scale = max(1.0, float(np.abs(self.offsets).max()))
        return np.all(slack <= tol * scale, axis=1)

    def scaled(self, r: float) -> "SymmetricPolytope":
        return SymmetricPolytope(r * self.generators, self.facets, self.normals, r * self.offsets, self.coplanar)

    def transformed(self, T) -> "SymmetricPolytope":
        """Image under an invertible linear map (facet combinatorics are preserved)."""
        T = np.asarray(T, dtype=np.float64)
        g = self.generators @ T.T
        pts = np.vstack([g, -g])
        facets = self.facets.copy()
        dets = np.linalg.det(pts[facets])
        flip = dets < 0
        facets[flip, 0], facets[flip, 1] = self.facets[flip, 1], self.facets[flip, 0]
        normals = self.normals @ np.linalg.inv(T)
        scale = np.linalg.norm(normals, axis=1)
        return SymmetricPolytope(g, facets, normals / scale[:, None], self.offsets / scale, self.coplanar)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "generators": self.generators.tolist(),
            "facets": self.facets.tolist(),
            "normals": self.normals.tolist(),
            "offsets": self.offsets.tolist(),
            "volume": self.volume,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SymmetricPolytope":
        return cls(d["generators"], d["facets"], d["normals"], d["offsets"])


# --------------------------------------------------------------------------
# construction


def _generators_of(points) -> np.ndarray:
    pts = getattr(points, "points", points)
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    if not np.all(np.isfinite(pts)):
        raise DegenerateInput("non-finite coordinates")
    return pts


def _build_1d(g):
    N = g.shape[0]
    i = int(np.argmax(np.abs(g[:, 0])))
    m = abs(g[i, 0])
    if m == 0:
        raise DegenerateInput("all points at the origin")
    top = i if g[i, 0] > 0 else i + N
    bottom = (top + N) % (2 * N)
    return SymmetricPolytope(g, [[top], [bottom]], [[1.0], [-1.0]], [m, m])


def _certify(points, simplices, equations, N, coplanar="raise") -> int:
    """Check each Qhull facet; returns the number of near-coplanar incidences.

    Points farther than the filter tolerance outside a facet are always an
    error. A point within tolerance of a facet hyperplane that is exactly on
    it, or on its far side, means Qhull merged and triangulated a flat
    region: an error for ``coplanar="raise"``, counted for ``"triangulate"``.
    """
    n = points.shape[1]
    normals = equations[:, :n]
    offsets = -equations[:, n]
    scale = max(1.0, float(np.abs(points).max()))
    tol = FILTER_RTOL * scale
    for f in np.flatnonzero(offsets <= tol):
        if orientation(np.vstack([points[simplices[f]], np.zeros((1, n))])) == 0:
            raise DegenerateInput("origin lies on a facet hyperplane")
    slack = points @ normals.T - offsets  # (2N, F); <= 0 inside
    on_facet = np.zeros_like(slack, dtype=bool)
    on_facet[simplices, np.arange(simplices.shape[0])[:, None]] = True
    ambiguous = (np.abs(slack) <= tol) & ~on_facet
    outside = (slack > tol) & ~on_facet
    if outside.any():
        raise RuntimeError("qhull facet failed certification (point strictly outside)")
    count = 0
    for p, f in zip(*np.nonzero(ambiguous)):
        verts = points[simplices[f]]
        # compare the side of p with the side of the origin
        s_p = orientation(np.vstack([verts, points[p][None]]))
        if s_p == orientation(np.vstack([verts, np.zeros((1, n))])):
            continue
        if coplanar == "raise":
            where = "on" if s_p == 0 else "just outside"
            raise NonSimplicialFacet(f"point {p} lies {where} the hyperplane of facet {f}")
        count += 1
    return count


def _check_closed(simplices, n_points):
    F, n = simplices.shape
    srt = np.sort(simplices, axis=1)
    cols = np.arange(n)
    ridges = np.concatenate([srt[:, cols != k] for k in range(n)])
    if float(n_points) ** (n - 1) < 2.0**62:
        base = n_points ** np.arange(n - 2, -1, -1, dtype=np.int64)
        keys = ridges @ base
    else:
        keys = ridges
    _, counts = np.unique(keys, axis=0 if keys.ndim > 1 else None, return_counts=True)
    if np.any(counts != 2):
        raise RuntimeError("facet list is not a closed simplicial surface")


def build_hull(points, *, max_dim: int = MAX_HULL_DIM, coplanar: str = "raise") -> SymmetricPolytope:
    """Symmetric convex hull of the rows of ``points`` (array or SampleBatch).

    Cone points of a polytopal body (cube, cross-polytope) share facet
    hyperplanes with positive probability; pass ``coplanar="triangulate"``
    to accept such flat facets as triangulated, within the filter tolerance.
    The count is kept in ``P.coplanar``.
    """
    if coplanar not in ("raise", "triangulate"):
        raise ValueError("coplanar must be 'raise' or 'triangulate'")
    g = _generators_of(points)
    N, n = g.shape
    if n > max_dim:
        raise DimensionTooLarge(f"exact hull limited to n <= {max_dim}, got {n}")
    if np.linalg.matrix_rank(g) < n:
        raise DegenerateInput(f"points span a space of dimension < {n}")
    if n == 1:
        return _build_1d(g)
    pts = np.vstack([g, -g])
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateInput(str(exc).splitlines()[0]) from exc
    simplices = np.asarray(hull.simplices, dtype=np.int64)
    equations = np.asarray(hull.equations, dtype=np.float64)
    flat = _certify(pts, simplices, equations, N, coplanar)
    _check_closed(simplices, pts.shape[0])

    dets = np.linalg.det(pts[simplices])
    flip = dets < 0
    simplices[flip, 0], simplices[flip, 1] = simplices[flip, 1].copy(), simplices[flip, 0].copy()
    normals = equations[:, :n]
    offsets = -equations[:, n]
    return SymmetricPolytope(g, simplices, normals, offsets, coplanar=flat)


# --------------------------------------------------------------------------
# measurements


def polytope_volume(P: SymmetricPolytope, exact: bool = False):
    """Sum of cone-simplex volumes ``|det[y_1..y_n]| / n!``; Fraction when exact."""
    if not exact:
        return P.volume
    nf = math.factorial(P.dim)
    return sum((abs(exact_det(Y)) for Y in P.facet_vectors), Fraction(0)) / nf


def polytope_covariance(P: SymmetricPolytope, exact: bool = False):
    """``int_P x x^T dx``; nested Fraction lists when exact."""
    if not exact:
        return P.second_moment
    return exact_cone_simplex_moments(P.facet_vectors)[1]


def _halfspace_linear_integral(V: np.ndarray, j: int) -> float:
    """``int_{S cap {x_j >= 0}} x_j dx`` for the simplex with vertex rows ``V``."""
    n = V.shape[1]
    vals = V[:, j]
    pos = vals > 0
    neg = vals < 0
    vol = abs(np.linalg.det(V[1:] - V[0])) / math.factorial(n)
    if not neg.any():
        return vol * vals.mean()
    if not pos.any():
        return 0.0
    keep = [V[vals >= 0]]
    for a in np.flatnonzero(pos):
        for b in np.flatnonzero(neg):
            t = vals[a] / (vals[a] - vals[b])
            keep.append((V[a] + t * (V[b] - V[a]))[None])
    Q = np.vstack(keep)
    tri = Delaunay(Q)
    S = Q[tri.simplices]
    vols = np.abs(np.linalg.det(S[:, 1:] - S[:, :1])) / math.factorial(n)
    return float(vols @ S[:, :, j].mean(axis=1))


def _exact_l1(P: SymmetricPolytope) -> float:
    Y = P.facet_vectors
    F, n, _ = Y.shape
    vols = np.abs(np.linalg.det(Y)) / math.factorial(n)
    lin = vols[:, None] * Y.sum(axis=1) / (n + 1)  # int_S x dx
    total = 0.0
    for j in range(n):
        col = Y[:, :, j]
        up = np.all(col >= 0, axis=1)
        down = np.all(col <= 0, axis=1)
        total += lin[up, j].sum() - lin[down, j].sum()
        for f in np.flatnonzero(~(up | down)):
            V = np.vstack([np.zeros((1, n)), Y[f]])
            total += 2.0 * _halfspace_linear_integral(V, j) - lin[f, j]
    return float(total)


def sample_in_polytope(P: SymmetricPolytope, count: int, rng) -> np.ndarray:
    """Exact uniform draws: pick a cone simplex by volume, then a Dirichlet point in it."""
    Y = P.facet_vectors
    n = P.dim
    vols = np.abs(np.linalg.det(Y))
    which = rng.choice(Y.shape[0], size=count, p=vols / vols.sum())
    w = rng.dirichlet(np.ones(n + 1), size=count)[:, 1:]
    return np.einsum("mk,mkj->mj", w, Y[which])


def integral_l1(P: SymmetricPolytope, mode: str = "exact", *, samples: int = 200_000, rng=None, return_se=False):
    """``int_P ||x||_1 dx`` by exact halfspace clipping (n <= 4) or Monte Carlo."""
    if mode == "exact":
        if P.dim > MAX_EXACT_L1_DIM:
            raise DimensionTooLarge(f"exact l1 integral limited to n <= {MAX_EXACT_L1_DIM}")
        val, se = _exact_l1(P), 0.0
    elif mode == "mc":
        if rng is None:
            raise ValueError("mc mode needs an rng")
        x = sample_in_polytope(P, samples, rng)
        v = np.abs(x).sum(axis=1)
        val = P.volume * float(v.mean())
        se = P.volume * float(v.std(ddof=1)) / math.sqrt(samples)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return (val, se) if return_se else val


def integral_l2sq(P: SymmetricPolytope) -> float:
    """``int_P ||x||_2^2 dx`` = trace of the second-moment matrix."""
    return float(np.trace(P.second_moment))


def facet_sign_sum_max(P: SymmetricPolytope, norm: str = L1) -> float:
    """Max over facets ``{y_1..y_n}`` and signs of ``||sum eps_i y_i||`` (l1 or squared l2)."""
    if P.dim > 20:
        raise DimensionTooLarge("sign enumeration limited to n <= 20")
    return float(kernels.sign_sum_max(P.facet_vectors, _NORM_CODES[norm]))
