"""Orlicz norms, exact l1-ball moments, the radial moment-transfer factor,
psi_2 / psi_1 estimates for linear functionals under the cone measure, and
the two Bernstein tail bounds.

Exact quantities are ``fractions.Fraction``; empirical ones carry standard
errors or bootstrap bands so that bound checks never pass by
under-estimation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np

from . import kernels
from .body import Body
from .errors import BudgetExceeded, Degenerate
from .exact import as_fraction
from .sampling import sample_cone_boundary, sample_uniform

PSI2_CONSTANT = 3.0
L1_BALL_PSI2_CONSTANT = math.sqrt(6.0)
TAIL_GRID = tuple(0.5 * k for k in range(1, 9))
MAX_SERIES_Q = 6
MAX_SERIES_N = 12


# --------------------------------------------------------------------------
# exact moments on B_1^n


@dataclass(frozen=True)
class MomentSpec:
    """Half-exponents ``q_i`` of the monomial ``prod x_i^(2 q_i)`` in dimension ``n``."""

    n: int
    q: tuple

    def __post_init__(self):
        q = tuple(int(v) for v in self.q)
        if len(q) != self.n or any(v < 0 for v in q) or self.n < 1:
            raise ValueError("q must hold n nonnegative integers")
        object.__setattr__(self, "q", q)

    @property
    def total_q(self) -> int:
        return sum(self.q)


def l1_ball_monomial_moment(spec: MomentSpec | int, q=None) -> Fraction:
    """``int_{B_1^n} prod x_i^(2 q_i) dx = 2^n prod (2 q_i)! / (n + 2 q)!``."""
    if not isinstance(spec, MomentSpec):
        spec = MomentSpec(int(spec), tuple(q))
    num = 2**spec.n
    for v in spec.q:
        num *= factorial(2 * v)
    return Fraction(num, factorial(spec.n + 2 * spec.total_q))


def moment_transfer_coefficient(n: int, p) -> Fraction | float:
    """Ratio of the uniform moment to the cone moment of order ``p``: ``n / (n + p)``.

    Exact when ``p`` is an integer.
    """
    if n < 1 or not p > 0:
        raise ValueError("need n >= 1 and p > 0")
    if float(p).is_integer():
        return Fraction(n, n + int(p))
    return n / (n + p)


def compositions(q: int, n: int):
    """All tuples of ``n`` nonnegative integers summing to ``q``."""
    if n == 1:
        yield (q,)
        return
    for first in range(q, -1, -1):
        for rest in compositions(q - first, n - 1):
            yield (first,) + rest


def cone_moment_linear(n: int, theta, q: int, scale_sq=1) -> Fraction:
    """``int |<x, theta>|^(2q) d mu`` over the boundary of ``s B_1^n``, exactly.

    Expands the power of the scalar product over compositions of ``q``,
    integrates monomials on the ball and converts with ``(n + 2q) / n``.
    ``scale_sq`` is ``s^2`` (default 1).
    """
    if q > MAX_SERIES_Q or n > MAX_SERIES_N:
        raise BudgetExceeded(f"composition enumeration limited to q <= {MAX_SERIES_Q}, n <= {MAX_SERIES_N}")
    if q < 0:
        raise ValueError("q must be nonnegative")
    th2 = [as_fraction(t) ** 2 for t in np.asarray(theta, dtype=np.float64).reshape(-1)]
    if len(th2) != n:
        raise ValueError("theta has the wrong length")
    if q == 0:
        return Fraction(1)
    vol = Fraction(2**n, factorial(n))
    total = Fraction(0)
    for comp in compositions(q, n):
        coef = factorial(2 * q)
        mono = Fraction(1)
        for qi, t2 in zip(comp, th2):
            coef //= factorial(2 * qi)
            if qi:
                mono *= t2**qi
        total += coef * mono * l1_ball_monomial_moment(MomentSpec(n, comp))
    uniform = total / vol
    return uniform * Fraction(n + 2 * q, n) * as_fraction(scale_sq) ** q


def comparison_body_scale_sq(n: int) -> Fraction:
    """``s^2`` for ``V = (sqrt(6)/2) n B_1^n``."""
    return Fraction(3 * n * n, 2)


# --------------------------------------------------------------------------
# Luxemburg (Orlicz) norms


@dataclass(frozen=True)
class OrliczEstimate:
    alpha: int
    value: float
    sample_count: int
    bisection_tolerance: float
    bracket: tuple
    iterations: int
    residual: float  # mean exp((|v|/value)^alpha) - 2
    band: tuple | None = None  # bootstrap percentile band
    se: float | None = None
    resamples: int = 0

    @property
    def upper(self) -> float:
        return self.band[1] if self.band is not None else self.value


def _initial_bracket(amax, m, alpha):
    lo = amax / math.log(2.0 * m) ** (1.0 / alpha)
    hi = amax / math.log(2.0) ** (1.0 / alpha)
    return lo, hi


def _solve(a, alpha, rtol, gtol):
    amax = float(a.max())
    m = a.size
    lo, hi = _initial_bracket(amax, m, alpha)
    if m == 1 or hi <= lo:
        return hi, (hi, hi), 0
    # guaranteed by construction; widen defensively for pathological rounding
    g_lo, _ = kernels._log_mean_exp_pow_np(a, lo, alpha)
    while g_lo < math.log(2.0):
        lo *= 0.5
        g_lo, _ = kernels._log_mean_exp_pow_np(a, lo, alpha)
    g_hi, _ = kernels._log_mean_exp_pow_np(a, hi, alpha)
    while g_hi > math.log(2.0):
        hi *= 2.0
        g_hi, _ = kernels._log_mean_exp_pow_np(a, hi, alpha)
    lam, blo, bhi, it = kernels.orlicz_root(a, float(alpha), lo, hi, rtol, gtol, 200)
    return float(lam), (float(blo), float(bhi)), int(it)


def empirical_orlicz_norm(
    values,
    alpha: int = 2,
    *,
    rtol: float = 1e-12,
    bootstrap: int = 0,
    rng=None,
    level: float = 0.95,
) -> OrliczEstimate:
    """Empirical ``psi_alpha`` norm: the ``lam`` with ``mean exp((|v|/lam)^alpha) = 2``.

    The root is bracketed by ``[max|v| / ln(2m)^(1/alpha), max|v| / ln(2)^(1/alpha)]``
    and refined by bracketed Newton/bisection. With ``bootstrap > 0`` the
    estimate carries a percentile band from that many resamples.
    """
    if alpha not in (1, 2):
        raise ValueError("alpha must be 1 or 2")
    a = np.abs(np.asarray(values, dtype=np.float64).reshape(-1))
    if a.size == 0:
        raise ValueError("values must be nonempty")
    if not np.any(a > 0):
        raise Degenerate("all values are zero")
    a = np.ascontiguousarray(a)
    gtol = 1e-13
    lam, bracket, it = _solve(a, alpha, rtol, gtol)
    g, _ = kernels._log_mean_exp_pow_np(a, lam, alpha)
    residual = math.exp(g) - 2.0
    band = se = None
    if bootstrap:
        if rng is None:
            raise ValueError("bootstrap needs an rng")
        reps = np.empty(bootstrap)
        for b in range(bootstrap):
            sample = a[rng.integers(0, a.size, size=a.size)]
            if not np.any(sample > 0):
                reps[b] = 0.0
                continue
            reps[b] = _solve(sample, alpha, 1e-9, 1e-10)[0]
        tail = 50.0 * (1.0 - level)
        band = (float(np.percentile(reps, tail)), float(np.percentile(reps, 100.0 - tail)))
        se = float(reps.std(ddof=1))
    return OrliczEstimate(alpha, lam, a.size, rtol, bracket, it, residual, band, se, bootstrap)


# --------------------------------------------------------------------------
# certified psi_2 bound on B_1^n via the moment series


def _series_terms(n, theta, q_max):
    """Exact ``m_q / q!`` for q = 1..q_max, ``m_q`` the cone moment of order 2q."""
    return [cone_moment_linear(n, theta, q) / factorial(q) for q in range(1, q_max + 1)]


def psi2_l1_ball_certificate(theta, q_max: int = MAX_SERIES_Q) -> dict:
    """Certify ``sqrt(n) ||<., theta>||_psi2(mu_{B_1^n}) <= sqrt(6) ||theta||_inf``.

    At ``lam = sqrt(6) ||theta||_inf / sqrt(n)`` the series
    ``sum_q m_q / (q! lam^(2q))`` is evaluated exactly up to ``q_max``; the
    tail uses ``m_q <= (q!/2) (2 alpha / n)^(2q)`` with
    ``alpha = sqrt(n) ||theta||_inf``, giving a geometric remainder with ratio
    ``r = (2 alpha / (n lam))^2 = 2/3``. The certificate holds when
    partial sum + remainder <= 1, i.e. the exponential moment is <= 2.

    Also returns ``lam_upper``: the smallest ``lam`` at which the same
    partial-sum-plus-remainder bound reaches 1 (an upper estimate of the norm).
    """
    th = np.asarray(theta, dtype=np.float64).reshape(-1)
    n = th.size
    tinf = as_fraction(np.abs(th).max())
    if tinf == 0:
        return {"n": n, "certified": True, "lam_claim": 0.0, "lam_upper": 0.0, "partial": 0.0, "remainder": 0.0}
    terms = _series_terms(n, th, q_max)
    lam2 = 6 * tinf**2 / n  # lam_claim^2, rational
    alpha2 = n * tinf**2
    r = 4 * alpha2 / (n * n * lam2)  # = 2/3 exactly
    partial = sum((t / lam2 ** (k + 1) for k, t in enumerate(terms)), Fraction(0))
    remainder = Fraction(1, 2) * r ** (q_max + 1) / (1 - r)
    certified = partial + remainder <= 1

    def excess(lam):
        l2 = lam * lam
        rr = 4.0 * float(alpha2) / (n * n * l2)
        if rr >= 1.0:
            return math.inf
        s = sum(float(t) / l2 ** (k + 1) for k, t in enumerate(terms))
        return s + 0.5 * rr ** (q_max + 1) / (1.0 - rr) - 1.0

    hi = math.sqrt(float(lam2))
    lo = 2.0 * math.sqrt(float(alpha2)) / n * (1.0 + 1e-12)
    if excess(hi) > 0:
        lam_upper = math.nan
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if excess(mid) > 0:
                lo = mid
            else:
                hi = mid
        lam_upper = hi
    return {
        "n": n,
        "certified": bool(certified),
        "lam_claim": math.sqrt(float(lam2)),
        "lam_upper": lam_upper,
        "partial": float(partial),
        "remainder": float(remainder),
        "q_max": q_max,
        "sqrt_n_lam_upper": math.sqrt(n) * lam_upper,
        "bound": L1_BALL_PSI2_CONSTANT * float(tinf),
    }


# --------------------------------------------------------------------------
# Bernstein tail bounds


def bernstein_bound(variant: str, R: float, t: float, n: int, *, cap: bool = False) -> float:
    """Upper bound on ``P(|Y_1 + ... + Y_n| > t n)`` for centred, independent Y_i.

    ``psi2``: ``2 exp(-t^2 n / (8 R^2))``; ``psi1``: ``2 exp(-(t n / (6 R)) min(t/R, 1))``.
    ``cap=True`` clips the value to 1 for reporting.
    """
    if not (R > 0 and t >= 0 and n >= 1):
        raise ValueError("need R > 0, t >= 0, n >= 1")
    if variant == "psi2":
        val = 2.0 * math.exp(-t * t * n / (8.0 * R * R))
    elif variant == "psi1":
        val = 2.0 * math.exp(-(t * n / (6.0 * R)) * min(t / R, 1.0))
    else:
        raise ValueError("variant must be 'psi2' or 'psi1'")
    return min(val, 1.0) if cap else val


def binomial_se(p: float, m: int) -> float:
    p = min(max(p, 0.0), 1.0)
    return math.sqrt(p * (1.0 - p) / m)


# --------------------------------------------------------------------------
# verification reports


def check_isotropic(body: Body, tol: float = 1e-6) -> float:
    """Raise unless ``body`` has volume 1 and scalar covariance; returns ``L_K``."""
    vol = body.volume()
    cov = body.covariance()
    L2 = float(np.trace(cov)) / body.dim
    if abs(vol - 1.0) > tol or np.abs(cov - L2 * np.eye(body.dim)).max() > tol * max(L2, 1.0):
        raise ValueError("body is not in isotropic position; use isotropic_normalize first")
    return math.sqrt(L2)


def _record(check, body, n, params, empirical, bound, passed, se=None, **extra):
    return {
        "check": check,
        "body": body.to_dict() if hasattr(body, "to_dict") else body,
        "n": n,
        "params": params,
        "empirical": empirical,
        "bound": bound,
        "pass": bool(passed),
        "se": se,
        **extra,
    }


def verify_psi2_unconditional(
    body: Body,
    thetas,
    sample_count: int,
    rng,
    *,
    bootstrap: int = 200,
    t_grid=TAIL_GRID,
    bound_constant: float = PSI2_CONSTANT,
    se_mult: float = 4.0,
    samples=None,
) -> list[dict]:
    """Empirical psi_2 norms of ``<X, theta>`` under the cone measure against
    ``C sqrt(n) ||theta||_inf`` (C = 3), plus tail frequencies
    ``P(|<X, theta>| >= t sqrt(n) ||theta||_inf)`` against ``2 exp(-t^2 / C^2)``.

    ``bound_constant`` exists so tests can sabotage the constant.
    """
    if not body.is_unconditional:
        raise ValueError("psi_2 estimate requires an unconditional body")
    check_isotropic(body)
    n = body.dim
    X = samples if samples is not None else sample_cone_boundary(body, sample_count, rng).points
    m = X.shape[0]
    out = []
    for theta in np.atleast_2d(np.asarray(thetas, dtype=np.float64)):
        tinf = float(np.abs(theta).max())
        v = X @ theta
        est = empirical_orlicz_norm(v, 2, bootstrap=bootstrap, rng=rng)
        bound = bound_constant * math.sqrt(n) * tinf
        tails = []
        for t in t_grid:
            freq = float(np.mean(np.abs(v) >= t * math.sqrt(n) * tinf))
            tb = 2.0 * math.exp(-t * t / bound_constant**2)
            se = binomial_se(min(tb, 1.0), m)
            tails.append({"t": t, "freq": freq, "bound": tb, "se": se, "pass": freq <= tb + se_mult * se})
        psi_ok = est.upper <= bound
        out.append(
            _record(
                "psi2_unconditional",
                body,
                n,
                {"theta": theta.tolist(), "samples": m, "bootstrap": bootstrap, "constant": bound_constant},
                est.value,
                bound,
                psi_ok and all(t["pass"] for t in tails),
                est.se,
                upper_band=est.upper,
                psi_pass=psi_ok,
                tails=tails,
            )
        )
    return out


def verify_psi1_general(
    body: Body,
    thetas,
    sample_count: int,
    rng,
    *,
    bootstrap: int = 200,
    samples=None,
) -> list[dict]:
    """Empirical psi_1 norms of ``<X, theta>`` (theta unit) reported as ratios to ``L_K``.

    The absolute constant is not known, so no fixed bound is asserted here;
    each record also checks ``psi_1 <= psi_2 / ln 2`` on the same sample.
    """
    L = check_isotropic(body)
    n = body.dim
    X = samples if samples is not None else sample_cone_boundary(body, sample_count, rng).points
    out = []
    for theta in np.atleast_2d(np.asarray(thetas, dtype=np.float64)):
        v = X @ theta
        e1 = empirical_orlicz_norm(v, 1, bootstrap=bootstrap, rng=rng)
        e2 = empirical_orlicz_norm(v, 2)
        consistent = e1.value <= e2.value / math.log(2.0)
        out.append(
            _record(
                "psi1_general",
                body,
                n,
                {"theta": theta.tolist(), "samples": X.shape[0], "bootstrap": bootstrap},
                e1.value,
                None,
                consistent,
                e1.se,
                upper_band=e1.upper,
                ratio_to_LK=e1.value / L,
                upper_ratio_to_LK=e1.upper / L,
                psi2=e2.value,
                L_K=L,
            )
        )
    return out


def psi1_family_boundedness(records: list[dict], factor: float = 1.5) -> dict:
    """No growth in dimension: every ratio stays within ``factor`` x the maximum
    ratio observed at the smallest dimension of the family."""
    dims = sorted({r["n"] for r in records})
    base = max(r["upper_ratio_to_LK"] for r in records if r["n"] == dims[0])
    worst = max(r["upper_ratio_to_LK"] for r in records)
    return {
        "check": "psi1_family_bounded",
        "reference_max": base,
        "observed_max": worst,
        "bound": factor * base,
        "pass": worst <= factor * base and all(math.isfinite(r["ratio_to_LK"]) for r in records),
    }


def empirical_sum_tail(
    body: Body,
    theta,
    n_terms: int,
    t_grid,
    trials: int,
    rng,
    *,
    variant: str = "psi2",
    psi1_R: float | None = None,
    se_mult: float = 4.0,
) -> dict:
    """Tail of ``S = <eps_1 X_1 + ... + eps_k X_k, theta>`` against Bernstein.

    ``psi2`` uses ``R = 3 sqrt(n) ||theta||_inf`` (giving ``2 exp(-t^2/72)``
    when k = n and ``||theta||_inf = 1``); ``psi1`` uses ``R = psi1_R`` or,
    if omitted, the upper bootstrap band of the observed psi_1 norm.
    """
    theta = np.asarray(theta, dtype=np.float64)
    n = body.dim
    X = sample_cone_boundary(body, trials * n_terms, rng).points.reshape(trials, n_terms, n)
    eps = rng.integers(0, 2, size=(trials, n_terms, 1)) * 2 - 1
    S = np.einsum("tkj,j->t", X * eps, theta)
    if variant == "psi2":
        R = PSI2_CONSTANT * math.sqrt(n) * float(np.abs(theta).max())
    elif variant == "psi1":
        if psi1_R is None:
            psi1_R = empirical_orlicz_norm(X.reshape(-1, n) @ theta, 1, bootstrap=100, rng=rng).upper
        R = psi1_R
    else:
        raise ValueError("variant must be 'psi2' or 'psi1'")
    rows = []
    for t in t_grid:
        freq = float(np.mean(np.abs(S) > t * n_terms))
        b = bernstein_bound(variant, R, t, n_terms)
        se = binomial_se(min(b, 1.0), trials)
        rows.append({"t": t, "freq": freq, "bound": b, "se": se, "pass": freq <= b + se_mult * se})
    return {
        "check": f"sum_tail_{variant}",
        "n": n,
        "n_terms": n_terms,
        "R": R,
        "trials": trials,
        "rows": rows,
        "max_abs_over_k": float(np.abs(S).max() / n_terms),
        "pass": all(r["pass"] for r in rows),
        "values": S,
    }


# --------------------------------------------------------------------------
# moment-level checks


def mc_cone_moment(points, theta, q: int):
    """Mean and standard error of ``|<X, theta>|^(2q)`` over sample rows."""
    v = np.abs(np.asarray(points) @ np.asarray(theta, dtype=np.float64)) ** (2 * q)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def comparison_check(body: Body, theta, q: int, sample_count: int, rng, *, se_mult=4.0, samples=None) -> dict:
    """Cone moment on the boundary of ``body`` vs the exact one on ``(sqrt 6 / 2) n B_1^n``."""
    n = body.dim
    X = samples if samples is not None else sample_cone_boundary(body, sample_count, rng).points
    mean, se = mc_cone_moment(X, theta, q)
    bound = float(cone_moment_linear(n, theta, q, comparison_body_scale_sq(n)))
    return _record(
        "comparison_moment",
        body,
        n,
        {"theta": list(map(float, theta)), "q": q, "samples": X.shape[0]},
        mean,
        bound,
        mean <= bound + se_mult * se,
        se,
    )


def transfer_ratio_check(body: Body, p: int, sample_count: int, rng, *, theta=None, se_mult=4.0) -> dict:
    """Uniform-to-cone moment ratio of ``|<x, theta>|^p`` against ``n / (n + p)``."""
    n = body.dim
    theta = np.eye(n)[0] if theta is None else np.asarray(theta, dtype=np.float64)
    u = np.abs(sample_uniform(body, sample_count, rng).points @ theta) ** p
    c = np.abs(sample_cone_boundary(body, sample_count, rng).points @ theta) ** p
    mu, mc = u.mean(), c.mean()
    ratio = mu / mc
    # delta method for a ratio of independent means
    se = ratio * math.sqrt((u.var(ddof=1) / u.size) / mu**2 + (c.var(ddof=1) / c.size) / mc**2)
    target = float(moment_transfer_coefficient(n, p))
    return _record(
        "transfer_ratio",
        body,
        n,
        {"p": p, "samples": sample_count},
        float(ratio),
        target,
        abs(ratio - target) <= se_mult * se,
        float(se),
    )
