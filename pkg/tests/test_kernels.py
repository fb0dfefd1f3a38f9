"""The numba kernels and their numpy fallbacks must agree."""
import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conehull import kernels
from conehull._accel import HAVE_NUMBA

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def test_sign_matrix():
    S = kernels.sign_matrix(3)
    assert S.shape == (4, 3) and np.all(S[:, 0] == 1)
    assert len({tuple(r) for r in S}) == 4


@needs_numba
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), F=st.integers(1, 50), k=st.integers(1, 6), kind=st.sampled_from([0, 1]))
def test_sign_sum_max_backends(seed, F, k, kind):
    g = np.random.default_rng(seed).standard_normal((F, k, k))
    assert kernels._sign_sum_max_nb(g, kind) == pytest.approx(kernels._sign_sum_max_np(g, kind), rel=1e-12)


@needs_numba
@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), m=st.integers(2, 12), kind=st.sampled_from([0, 1]))
def test_subset_backends(seed, m, kind):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, min(m, 4) + 1))
    v = rng.standard_normal((m, 3))
    if k > m:
        return
    v = v[:, :k] if k <= 3 else rng.standard_normal((m, k))
    a = kernels._subset_sign_sum_max_nb(np.ascontiguousarray(v), k, kind)
    b = kernels._subset_sign_sum_max_np(np.ascontiguousarray(v), k, kind)
    assert a == pytest.approx(b, rel=1e-12)


@needs_numba
@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), m=st.integers(1, 500), alpha=st.sampled_from([1.0, 2.0]))
def test_orlicz_backends(seed, m, alpha):
    a = np.abs(np.random.default_rng(seed).standard_normal(m)) + 1e-3
    amax = a.max()
    lo = amax / math.log(2 * m) ** (1 / alpha)
    hi = amax / math.log(2) ** (1 / alpha)
    if m == 1:
        return
    x = kernels._orlicz_root_nb(a, alpha, lo, hi, 1e-12, 1e-13, 200)[0]
    y = kernels._orlicz_root_np(a, alpha, lo, hi, 1e-12, 1e-13, 200)[0]
    assert x == pytest.approx(y, rel=1e-9)


@needs_numba
def test_hit_and_run_backends_short_run():
    rng = np.random.default_rng(0)
    n = 4
    A = np.vstack([np.eye(n), rng.standard_normal((5, n))])
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    b = np.ones(A.shape[0])
    d = rng.standard_normal((40, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    u = rng.uniform(size=40)
    x = kernels._hit_and_run_nb(A, b, np.zeros(n), d, u, 0, 1)
    y = kernels._hit_and_run_np(A, b, np.zeros(n), d, u, 0, 1)
    # trajectories are chaotic over long runs; short runs agree closely
    assert np.allclose(x, y, rtol=1e-8, atol=1e-10)
    assert np.all(np.abs(x @ A.T) <= b + 1e-12)


def test_numpy_fallback_flag():
    env = dict(os.environ, CONEHULL_NO_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from conehull import kernels; print(kernels.BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_pipeline_under_numpy_backend():
    code = (
        "import numpy as np\n"
        "from conehull import build_hull, bound_chain, family_body, sample_cone_boundary\n"
        "X = sample_cone_boundary(family_body('l4', 3), 9, seed=1).points\n"
        "print(repr(bound_chain(build_hull(X)).facet_l1))\n"
    )
    env = dict(os.environ, CONEHULL_NO_NUMBA="1")
    a = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    b = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True)
    assert float(a.stdout) == pytest.approx(float(b.stdout), rel=1e-12)
