"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest -m acceptance -s``. The no-growth trends take
the longest (about a quarter hour on one core).
"""
import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conehull.body import LpBall, family_body
from conehull.concentration import (
    l1_ball_monomial_moment,
    psi2_l1_ball_certificate,
    transfer_ratio_check,
    verify_psi2_unconditional,
)
from conehull.experiments import run_general_experiment, run_unconditional_experiment, run_volume_radius_check
from conehull.hull import build_hull, polytope_covariance, polytope_volume
from conehull.isotropy import bound_chain
from conehull.sampling import make_rng, sample_cone_boundary
from conehull.suite import run_verification_suite

from oracles import l1_ball_monomial_quadrature

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

SEED = 20240


@pytest.fixture
def report(capsys):
    start = time.perf_counter()

    def emit(num, title, ok, detail=""):
        with capsys.disabled():
            dt = time.perf_counter() - start
            print(f"\n[acceptance {num}] {'PASS' if ok else 'FAIL'} {title} ({dt:.1f}s) {detail}")
        return ok

    return emit


def _multi_indices(n, max_total):
    for q in itertools.product(range(max_total + 1), repeat=n):
        if sum(q) <= max_total:
            yield q


def test_1_exact_moments(report):
    worst = 0.0
    for n in range(1, 5):
        for q in _multi_indices(n, 3):
            exact = l1_ball_monomial_moment(n, q)
            quad = l1_ball_monomial_quadrature(q)
            worst = max(worst, abs(float(exact) - quad) / float(exact))
    n1 = all(l1_ball_monomial_moment(1, (q,)) == Fraction(2, 1 + 2 * q) for q in range(10))
    ok = worst <= 1e-9 and n1
    assert report(1, "exact moments vs quadrature", ok, f"max rel err {worst:.2e}, n=1 identity {n1}")


def test_2_transfer_coefficient(report):
    bad = []
    worst = 0.0
    for n in (2, 3, 4):
        for q in (1, 2, 3):
            r = transfer_ratio_check(LpBall(1, n), 2 * q, 1_000_000, make_rng(SEED, (2, n, q)))
            worst = max(worst, abs(r["empirical"] - r["bound"]) / r["se"])
            if not r["pass"]:
                bad.append((n, q))
    assert report(2, "uniform/cone moment ratio n/(n+2q)", not bad, f"max |z| {worst:.2f}, failures {bad}")


def test_3_psi2_bound(report):
    bad = []
    worst = 0.0
    for fam in ("l1", "cube", "l4"):
        for n in range(2, 9):
            body = family_body(fam, n)
            rng = make_rng(SEED, (3, ("l1", "cube", "l4").index(fam), n))
            thetas = rng.standard_normal((10, n))
            for r in verify_psi2_unconditional(body, thetas, 100_000, rng, bootstrap=200):
                worst = max(worst, r["upper_band"] / r["bound"])
                if not r["pass"]:
                    bad.append((fam, n))
    assert report(3, "psi_2 upper band <= 3 sqrt(n)|theta|_inf and tails", not bad,
                  f"max band/bound {worst:.3f}, failures {bad}")


def test_4_series_certificate(report):
    rng = make_rng(SEED, (4,))
    worst = 0.0
    ok = True
    for n in range(1, 9):
        for theta in rng.standard_normal((20, n)):
            c = psi2_l1_ball_certificate(theta)
            ok &= c["certified"] and c["sqrt_n_lam_upper"] <= c["bound"]
            worst = max(worst, c["sqrt_n_lam_upper"] / c["bound"])
    assert report(4, "certified B_1^n psi_2 series", ok, f"max certified/sqrt(6) {worst:.3f}")


def test_5_geometry_exactness(report):
    ok = True
    for n in range(1, 7):
        P = build_hull(np.eye(n))
        ok &= polytope_volume(P, exact=True) == Fraction(2**n, math.factorial(n))
        if n <= 4:
            C = polytope_covariance(P, exact=True)
            # Dirichlet integral: int_{B_1^n} x_1^2 = 2^n 2! / (n+2)!
            diag = Fraction(2**n * 2, math.factorial(n + 2))
            ok &= all(C[i][j] == (diag if i == j else 0) for i in range(n) for j in range(n))
    assert report(5, "cross-polytope hull exact volume and second moments", ok)


def test_6_facet_inequalities(report):
    counts = {"instances": 0, "facet_l1": 0, "facet_l2": 0, "l2": 0}
    for n in (3, 4, 5):
        body = family_body("l1", n)
        for N in (2 * n, 4 * n):
            rng = make_rng(SEED, (6, n, N))
            for _ in range(500):
                P = build_hull(sample_cone_boundary(body, N, rng).points, coplanar="triangulate")
                bc = bound_chain(P, rng=rng, samples=20_000)
                counts["instances"] += 1
                # the Monte Carlo l1 average (n = 5) gets 4 standard errors of slack
                counts["facet_l1"] += bc.l1_mean - 4 * bc.l1_se > bc.facet_l1 * (1 + 1e-12)
                counts["facet_l2"] += not bc.facet_l2_ok
                counts["l2"] += not bc.l2_bound_ok
    ok = counts["facet_l1"] == counts["facet_l2"] == counts["l2"] == 0
    assert report(6, "facet sign-sum inequalities on random K_N", ok, str(counts))


def test_7_coupling(report):
    rep = run_volume_radius_check({"families": ["l1"], "dims": [3, 4], "trials": 1000, "seed": SEED})
    s = rep.summary
    ok = s["inclusion_all"] and s["failures"] == 0
    trials = sum(c["trials"] for c in s["cells"])
    assert report(7, "coupling inclusion and volume order", ok, f"{trials} (trial, N) pairs, failures {s['failures']}")


def test_8_no_growth_trend(report):
    base = {"dims": [4, 5, 6, 7, 8], "n_schedule": ["2n", "3n", "4n"], "trials": 200, "seed": SEED,
            "l1_mode": "mc", "l1_samples": 2000}
    uncond = run_unconditional_experiment({**base, "families": ["l1"]}).summary
    with pytest.warns(UserWarning):
        general = run_general_experiment({**base, "families": ["rotated_cube"]}).summary
    lines = []
    for s in (uncond, general):
        for t in s["trends"]:
            lines.append(f"{t['body']} n={t['n']} slope {t['slope']:+.4f} band [{t['band'][0]:+.4f}, {t['band'][1]:+.4f}]")
    ok = uncond["pass"] and general["pass"]
    assert report(8, "no growth of median L in N", ok, "\n  " + "\n  ".join(lines))


def test_9_determinism(report):
    exp = {"families": ["l1"], "dims": [3, 4], "trials": 10, "seed": SEED, "trend_bootstrap": 50}
    gen = {**exp, "families": ["rotated_cube"], "regime": "general"}
    suite = {"sample_count": 2000, "bootstrap": 20, "dims": [2, 3], "thetas_per_body": 2, "certificate_thetas": 2,
             "polytope_instances": 2, "seed": SEED}
    outs = []
    for workers in (1, 2):
        with pytest.warns(UserWarning):
            g = run_general_experiment({**gen, "workers": workers}).to_csv()
        outs.append((
            run_unconditional_experiment({**exp, "workers": workers}).to_csv(),
            g,
            run_volume_radius_check({**exp, "workers": workers}).to_csv(),
            repr(run_verification_suite({**suite, "workers": workers})["checks"]),
        ))
    ok = outs[0] == outs[1]
    assert report(9, "byte-identical outputs across worker counts", ok)
