import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracspread import kernels


def test_saturation_values():
    s = np.array([-1.0, 0.0, 0.5, 2.0, 3.0])
    np.testing.assert_allclose(kernels.saturation(s, 1.0, 2.0), [0.0, 0.0, 0.25, 4.0, 8.0])
    np.testing.assert_allclose(kernels.saturation(s, 0.5, 2.0)[2], 0.5 ** 1.5)
    np.testing.assert_allclose(kernels.saturation_slope(s, 1.0, 2.0), [0.0, 0.0, 1.0, 4.0, 4.0])


@pytest.mark.skipif(not kernels.HAVE_EXTENSION, reason="compiled extension not built")
@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    m=st.integers(1, 4),
    delta=st.sampled_from([1.0, 0.5, 2.0]),
    h=st.floats(1e-4, 0.1),
)
def test_backends_agree(seed, m, delta, h):
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 2.5, size=(m, 257))
    K = rng.uniform(0.0, 1.0, size=(m, m))
    r = rng.uniform(-1, 1, size=m)
    q = rng.uniform(0.5, 2, size=m)
    a = kernels.numpy_reaction_rk4(u, K, r, q, delta, 2.0, h)
    b = kernels.cython_reaction_rk4(u, K, r, q, delta, 2.0, h)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-15)


def test_backend_selection_by_environment():
    env = dict(os.environ, FRACSPREAD_BACKEND="numpy")
    out = subprocess.run(
        [sys.executable, "-c", "from fracspread import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "numpy"
    if kernels.HAVE_EXTENSION and os.environ.get("FRACSPREAD_BACKEND", "") != "numpy":
        assert kernels.BACKEND == "cython"
