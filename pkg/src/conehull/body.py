"""Origin-symmetric convex bodies with Minkowski-functional, volume and
second-moment oracles.

Four kinds are supported: l_p balls (``p`` in ``[1, inf]``), scaled l1
balls, symmetric H-polytopes ``{x : |<a_i, x>| <= b_i}`` and invertible
linear images of any of these. ``p = inf`` is stored as ``math.inf``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .errors import DimensionTooLarge, IllConditioned, SingularCovariance

MAX_CONDITION = 1e6
MAX_EXACT_DIM = 8


def _parse_p(p) -> float:
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "oo"):
            return math.inf
        p = float(p)
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    return p


class Body:
    """Common interface. Subclasses are immutable."""

    dim: int

    def norm(self, x) -> np.ndarray:
        """Minkowski functional, row-wise for 2-d input."""
        raise NotImplementedError

    def volume(self) -> float:
        raise NotImplementedError

    def exact_volume(self) -> Fraction:
        raise ValueError(f"{type(self).__name__} has no exact volume")

    def covariance(self) -> np.ndarray:
        """Second-moment matrix E[x x^T] of the uniform distribution on the body."""
        raise NotImplementedError

    def exact_covariance(self):
        raise ValueError(f"{type(self).__name__} has no exact covariance")

    @property
    def is_unconditional(self) -> bool:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def isotropic_constant(self) -> float:
        return body_isotropic_constant(self)

    def bounding_box(self) -> np.ndarray:
        """Half-widths h with body contained in prod [-h_i, h_i]."""
        raise NotImplementedError


@dataclass(frozen=True)
class LpBall(Body):
    p: float
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "p", _parse_p(self.p))
        if int(self.dim) < 1:
            raise ValueError("dim must be positive")
        object.__setattr__(self, "dim", int(self.dim))

    def norm(self, x):
        x = np.abs(np.asarray(x, dtype=np.float64))
        p = self.p
        if p in (1.0, 2.0) or math.isinf(p):
            return np.linalg.norm(x, ord=p, axis=-1)
        # rescale by the max so |x|^p neither underflows nor overflows
        m = x.max(axis=-1, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        return (safe * np.sum((x / safe) ** p, axis=-1, keepdims=True) ** (1.0 / p))[..., 0]

    def volume(self):
        n, p = self.dim, self.p
        if math.isinf(p):
            return 2.0**n
        return math.exp(n * (math.log(2.0) + gammaln(1.0 + 1.0 / p)) - gammaln(1.0 + n / p))

    def exact_volume(self):
        n = self.dim
        if math.isinf(self.p):
            return Fraction(2**n)
        if self.p == 1.0:
            return Fraction(2**n, math.factorial(n))
        return super().exact_volume()

    def second_moment_1d(self) -> float:
        """E[x_1^2] under the uniform distribution."""
        n, p = self.dim, self.p
        if math.isinf(p):
            return 1.0 / 3.0
        return math.exp(
            gammaln(3.0 / p) - gammaln(1.0 / p) + gammaln(1.0 + n / p) - gammaln(1.0 + (n + 2.0) / p)
        )

    def covariance(self):
        return self.second_moment_1d() * np.eye(self.dim)

    def exact_covariance(self):
        n = self.dim
        if math.isinf(self.p):
            v = Fraction(1, 3)
        elif self.p == 1.0:
            v = Fraction(2, (n + 1) * (n + 2))
        else:
            return super().exact_covariance()
        return [[v if i == j else Fraction(0) for j in range(n)] for i in range(n)]

    @property
    def is_unconditional(self):
        return True

    def bounding_box(self):
        return np.ones(self.dim)

    def to_dict(self):
        return {"kind": "lp_ball", "p": "inf" if math.isinf(self.p) else self.p, "dim": self.dim}


@dataclass(frozen=True)
class ScaledL1(Body):
    """The body ``c * B_1^n``."""

    c: float
    dim: int

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        object.__setattr__(self, "dim", int(self.dim))

    def norm(self, x):
        return np.abs(np.asarray(x, dtype=np.float64)).sum(axis=-1) / self.c

    def volume(self):
        n = self.dim
        return math.exp(n * math.log(2.0 * self.c) - math.lgamma(n + 1))

    def exact_volume(self):
        n = self.dim
        return Fraction(self.c) ** n * Fraction(2**n, math.factorial(n))

    def covariance(self):
        n = self.dim
        return self.c**2 * 2.0 / ((n + 1) * (n + 2)) * np.eye(n)

    def exact_covariance(self):
        n = self.dim
        v = Fraction(self.c) ** 2 * Fraction(2, (n + 1) * (n + 2))
        return [[v if i == j else Fraction(0) for j in range(n)] for i in range(n)]

    @property
    def is_unconditional(self):
        return True

    def bounding_box(self):
        return np.full(self.dim, float(self.c))

    def to_dict(self):
        return {"kind": "scaled_l1", "c": self.c, "dim": self.dim}


@dataclass(frozen=True, eq=False)
class SymmetricHPolytope(Body):
    """``{x : |<a_i, x>| <= b_i}`` with rows normalized to unit normals."""

    normals: np.ndarray
    offsets: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.normals, dtype=np.float64))
        b = np.asarray(self.offsets, dtype=np.float64).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError("normals and offsets disagree in length")
        if np.any(b <= 0):
            raise ValueError("offsets must be positive (origin in the interior)")
        scale = np.linalg.norm(A, axis=1)
        A = A / scale[:, None]
        b = b / scale
        if np.linalg.matrix_rank(A) < A.shape[1]:
            raise ValueError("normals do not span R^n; the set is unbounded")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", b)
        object.__setattr__(self, "dim", A.shape[1])

    def norm(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.max(np.abs(x @ self.normals.T) / self.offsets, axis=-1)

    def vertices(self) -> np.ndarray:
        from scipy.spatial import HalfspaceIntersection

        if self.dim > MAX_EXACT_DIM:
            raise DimensionTooLarge(f"H-to-V conversion limited to n <= {MAX_EXACT_DIM}")
        A, b = self.normals, self.offsets
        halfspaces = np.vstack([np.hstack([A, -b[:, None]]), np.hstack([-A, -b[:, None]])])
        hs = HalfspaceIntersection(halfspaces, np.zeros(self.dim))
        v = hs.intersections
        # merge duplicates produced at degenerate vertices
        key = np.round(v / max(1.0, np.abs(v).max()), 10)
        _, keep = np.unique(key, axis=0, return_index=True)
        return v[np.sort(keep)]

    def _moments(self):
        from .hull import boundary_cone_simplices, cone_simplex_moments

        simplices = boundary_cone_simplices(self.vertices())
        return cone_simplex_moments(simplices)

    def volume(self):
        return self._moments()[0]

    def covariance(self):
        vol, second = self._moments()
        return second / vol

    @property
    def is_unconditional(self):
        A, b = self.normals, self.offsets
        rows = np.hstack([A, b[:, None]])
        canon = _canonical_rows(rows)
        for j in range(self.dim):
            flipped = rows.copy()
            flipped[:, j] = -flipped[:, j]
            if not _same_row_set(canon, _canonical_rows(flipped)):
                return False
        return True

    def bounding_box(self):
        return np.abs(self.vertices()).max(axis=0)

    def to_dict(self):
        return {"kind": "h_polytope", "normals": self.normals.tolist(), "offsets": self.offsets.tolist()}


def _canonical_rows(rows):
    # a row and its negation describe the same slab |<a,x>| <= b
    out = rows.copy()
    for r in out:
        nz = np.flatnonzero(np.abs(r[:-1]) > 1e-12)
        if nz.size and r[nz[0]] < 0:
            r[:-1] = -r[:-1]
    return out[np.lexsort(np.round(out, 10).T[::-1])]


def _same_row_set(a, b):
    return a.shape == b.shape and np.allclose(a, b, atol=1e-10)


@dataclass(frozen=True, eq=False)
class LinearImage(Body):
    """The body ``T K`` for invertible ``T``."""

    inner: Body
    T: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.T, dtype=np.float64))
        n = self.inner.dim
        if T.shape != (n, n):
            raise ValueError(f"T must be {n}x{n}")
        cond = np.linalg.cond(T)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise IllConditioned(f"condition number {cond:.3g} exceeds {MAX_CONDITION:g}")
        T.setflags(write=False)
        T_inv = np.linalg.inv(T)
        T_inv.setflags(write=False)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "T_inv", T_inv)
        object.__setattr__(self, "dim", n)

    def norm(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.inner.norm(x @ self.T_inv.T)

    def volume(self):
        return abs(float(np.linalg.det(self.T))) * self.inner.volume()

    def exact_volume(self):
        from .exact import exact_det

        return abs(exact_det(self.T)) * self.inner.exact_volume()

    def covariance(self):
        return self.T @ self.inner.covariance() @ self.T.T

    def exact_covariance(self):
        from .exact import fraction_matrix

        C = self.inner.exact_covariance()
        T = fraction_matrix(self.T)
        n = self.dim
        TC = [[sum(T[i][k] * C[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
        return [[sum(TC[i][k] * T[j][k] for k in range(n)) for j in range(n)] for i in range(n)]

    @property
    def is_unconditional(self):
        # a signed permutation composed with a diagonal keeps coordinate symmetry
        nz = np.abs(self.T) > 0
        monomial = bool(np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1))
        return monomial and self.inner.is_unconditional

    def bounding_box(self):
        return np.abs(self.T) @ self.inner.bounding_box()

    def to_dict(self):
        return {"kind": "linear_image", "inner": self.inner.to_dict(), "T": self.T.tolist()}


# --------------------------------------------------------------------------
# public operations


def minkowski_functional(body: Body, x) -> np.ndarray | float:
    """``inf{r > 0 : x in r K}``; vectorized over rows."""
    out = body.norm(x)
    return float(out) if np.ndim(out) == 0 else out


def body_volume(body: Body, exact: bool = False):
    if exact:
        if body.dim > MAX_EXACT_DIM:
            raise DimensionTooLarge(f"exact volume limited to n <= {MAX_EXACT_DIM}")
        return body.exact_volume()
    return body.volume()


def _check_spd(C):
    C = np.asarray(C, dtype=np.float64)
    if not np.allclose(C, C.T, rtol=1e-10, atol=1e-14):
        raise SingularCovariance("covariance is not symmetric")
    w = np.linalg.eigvalsh(0.5 * (C + C.T))
    if not (np.all(np.isfinite(w)) and w.min() > 0):
        raise SingularCovariance(f"covariance not positive definite (min eigenvalue {w.min():.3g})")
    return C


def isotropic_constant_from(volume: float, cov: np.ndarray) -> float:
    """``det(cov)^(1/2n) / volume^(1/n)`` for the uniform distribution's second moments."""
    cov = _check_spd(cov)
    n = cov.shape[0]
    _, logdet = np.linalg.slogdet(cov)
    return math.exp(logdet / (2 * n) - math.log(volume) / n)


def body_isotropic_constant(body: Body) -> float:
    return isotropic_constant_from(body.volume(), body.covariance())


def isotropic_normalize(body: Body) -> LinearImage:
    """Linear image of ``body`` with volume 1 and covariance ``L_K^2 I``."""
    cov = _check_spd(body.covariance())
    L = isotropic_constant_from(body.volume(), cov)
    off = cov - np.diag(np.diag(cov))
    if np.all(off == 0):
        T = np.diag(L / np.sqrt(np.diag(cov)))
    else:
        w, V = np.linalg.eigh(0.5 * (cov + cov.T))
        T = L * (V / np.sqrt(w)) @ V.T
    if isinstance(body, LinearImage):
        return LinearImage(body.inner, T @ body.T)
    return LinearImage(body, T)


# --------------------------------------------------------------------------
# construction helpers


def cross_polytope(n: int) -> LpBall:
    return LpBall(1.0, n)


def cube(n: int) -> LpBall:
    return LpBall(math.inf, n)


def box(half_widths) -> LinearImage:
    h = np.asarray(half_widths, dtype=np.float64)
    return LinearImage(cube(h.size), np.diag(h))


def rotated_cube(n: int, seed: int = 0) -> LinearImage:
    """Cube under a Haar-random rotation; not unconditional for n >= 2."""
    from scipy.stats import ortho_group

    Q = ortho_group.rvs(n, random_state=np.random.default_rng(seed)) if n > 1 else np.eye(1)
    return LinearImage(cube(n), Q)


FAMILIES = ("l1", "cube", "l4", "box", "rotated_cube")


def family_body(name: str, n: int, seed: int = 0, normalize: bool = True) -> Body:
    """Named test bodies used by experiments and the verification suite."""
    if name == "l1":
        b = cross_polytope(n)
    elif name == "cube":
        b = cube(n)
    elif name == "l4":
        b = LpBall(4.0, n)
    elif name == "box":
        b = box(np.linspace(1.0, 2.0, n))
    elif name == "rotated_cube":
        b = rotated_cube(n, seed)
    else:
        raise ValueError(f"unknown body family {name!r}; choose from {FAMILIES}")
    return isotropic_normalize(b) if normalize else b


def body_from_dict(d: dict) -> Body:
    kind = d.get("kind")
    if kind == "lp_ball":
        return LpBall(d["p"], int(d["dim"]))
    if kind == "scaled_l1":
        return ScaledL1(float(d["c"]), int(d["dim"]))
    if kind == "h_polytope":
        return SymmetricHPolytope(np.asarray(d["normals"], float), np.asarray(d["offsets"], float))
    if kind == "linear_image":
        return LinearImage(body_from_dict(d["inner"]), np.asarray(d["T"], float))
    if kind == "family":
        return family_body(d["name"], int(d["dim"]), int(d.get("seed", 0)), bool(d.get("normalize", True)))
    raise ValueError(f"unknown body kind {kind!r}")


def body_to_dict(body: Body) -> dict:
    return body.to_dict()
