"""Isotropic constant of a built polytope and the chain of upper bounds that
controls it (l1 and l2 averages, facet sign-sum maxima, volume radius)."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from .body import isotropic_constant_from
from .errors import BudgetExceeded
from .hull import (
    L1,
    L2SQ,
    MAX_EXACT_L1_DIM,
    SymmetricPolytope,
    facet_sign_sum_max,
    integral_l1,
    integral_l2sq,
)

EXHAUSTIVE_CAP = 10**7
FACET_L1_FACTOR = 1.0 + math.sqrt(2.0)


def isotropic_constant_polytope(P: SymmetricPolytope) -> float:
    """Determinant closed form applied to the uniform probability measure on P."""
    return isotropic_constant_from(P.volume, P.covariance)


@dataclass(frozen=True)
class BoundChain:
    n: int
    l_exact: float
    l1_bound_raw: float  # int ||x||_1 / (n |P|^(1+1/n)), absolute constant not applied
    l2_bound: float
    facet_l1: float
    facet_l2sq: float
    volume_radius: float
    l1_mean: float  # (1/|P|) int ||x||_1
    l2sq_mean: float  # (1/|P|) int ||x||_2^2
    l1_se: float = 0.0
    l1_mode: str = "exact"

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def l2_bound_ok(self) -> bool:
        return self.l_exact <= self.l2_bound * (1.0 + 1e-12)

    @property
    def facet_l1_ok(self) -> bool:
        return self.l1_mean <= self.facet_l1 * (1.0 + 1e-12)

    @property
    def facet_l2_ok(self) -> bool:
        return self.l2sq_mean <= self.facet_l2sq * (1.0 + 1e-12)


def bound_chain(P: SymmetricPolytope, *, l1_mode: str = "auto", rng=None, samples: int = 200_000) -> BoundChain:
    """Evaluate every link of the bound chain for one polytope.

    ``l1_mode="auto"`` integrates ``||x||_1`` exactly up to dimension 4 and
    by Monte Carlo (with standard error) above that.
    """
    n = P.dim
    vol = P.volume
    if l1_mode == "auto":
        l1_mode = "exact" if n <= MAX_EXACT_L1_DIM else "mc"
    i1, se = integral_l1(P, l1_mode, samples=samples, rng=rng, return_se=True)
    i2 = integral_l2sq(P)
    return BoundChain(
        n=n,
        l_exact=isotropic_constant_polytope(P),
        l1_bound_raw=i1 / (n * vol ** (1.0 + 1.0 / n)),
        l2_bound=math.sqrt(i2 / (n * vol ** (1.0 + 2.0 / n))),
        facet_l1=FACET_L1_FACTOR / n * facet_sign_sum_max(P, L1),
        facet_l2sq=2.0 / ((n + 1) * (n + 2)) * facet_sign_sum_max(P, L2SQ),
        volume_radius=vol ** (1.0 / n),
        l1_mean=i1 / vol,
        l2sq_mean=i2 / vol,
        l1_se=se / vol,
        l1_mode=l1_mode,
    )


class SubsetMax(NamedTuple):
    value: float
    exhaustive: bool  # False means a lower bound from random subsets
    subsets: int


def subset_search_size(N: int, n: int) -> int:
    """Number of (subset, sign) pairs an exhaustive search visits."""
    return math.comb(2 * N, n) * (1 << (n - 1))


def max_subset_sign_sum(
    points,
    norm: str = "l1",
    subset_budget: int = 10_000,
    rng=None,
    *,
    exhaustive: bool | None = None,
    cap: int = EXHAUSTIVE_CAP,
) -> SubsetMax:
    """Max over n-subsets of ``{+-X_i}`` and signs of ``||sum eps_j X_ij||`` (l1 or l2).

    With ``exhaustive=None`` the search is exhaustive when it visits at most
    ``cap`` (subset, sign) pairs and otherwise samples ``subset_budget``
    random subsets, in which case the value is a lower bound.
    """
    X = np.atleast_2d(np.asarray(getattr(points, "points", points), dtype=np.float64))
    N, n = X.shape
    if N < n:
        raise ValueError("need at least n points")
    if subset_budget < 1:
        raise ValueError("subset_budget must be >= 1")
    if norm not in ("l1", "l2"):
        raise ValueError("norm must be 'l1' or 'l2'")
    kind = kernels.L1 if norm == "l1" else kernels.L2SQ
    V = np.ascontiguousarray(np.vstack([X, -X]))
    size = subset_search_size(N, n)
    if exhaustive is None:
        exhaustive = size <= cap
    if exhaustive:
        if size > cap:
            raise BudgetExceeded(f"exhaustive search needs {size:.3g} > {cap:.3g} evaluations")
        best = float(kernels.subset_sign_sum_max(V, n, kind))
        count = math.comb(2 * N, n)
    else:
        if rng is None:
            raise ValueError("random subset search needs an rng")
        best = 0.0
        done = 0
        chunk = max(1, min(subset_budget, 2_000_000 // V.shape[0]))
        while done < subset_budget:
            take = min(chunk, subset_budget - done)
            idx = np.argsort(rng.random((take, V.shape[0])), axis=1)[:, :n]
            best = max(best, float(kernels.sign_sum_max(np.ascontiguousarray(V[idx]), kind)))
            done += take
        count = subset_budget
    if norm == "l2":
        best = math.sqrt(best)
    return SubsetMax(best, bool(exhaustive), count)


__all__ = [
    "BoundChain",
    "SubsetMax",
    "bound_chain",
    "isotropic_constant_polytope",
    "max_subset_sign_sum",
    "subset_search_size",
    "L1",
    "L2SQ",
]
