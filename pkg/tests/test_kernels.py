import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plaplab import _kernels, stencil

from ._util import random_domain, random_graph, seeds

pytestmark = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


@given(seeds, st.floats(min_value=2.0, max_value=6.0))
def test_numba_and_numpy_rows_agree(seed, p):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    f = rng.normal(size=g.n)
    args = (g.indptr, g.indices, g.weights, g.measure, f, f, p)
    a = _kernels.plap_rows_numpy(*args)
    b = _kernels.plap_rows_numba(*args)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13 * (1 + np.abs(a).max()))


@given(seeds, st.floats(min_value=2.05, max_value=6.0))
def test_numba_and_numpy_batch_agree(seed, p):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    dom = random_domain(rng, g)
    s = stencil(g, dom)
    F = rng.normal(size=(5, dom.m))
    F_ext = np.ascontiguousarray(np.concatenate((F, np.zeros((5, len(dom.boundary)))), axis=1))
    args = (s.indptr, s.cols, s.weights, s.mu, F_ext, F, p)
    a = _kernels.plap_rows_batch_numpy(*args)
    b = _kernels.plap_rows_batch_numba(*args)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13 * (1 + np.abs(a).max()))
    single = np.array([s.apply(row, p) for row in F])
    assert np.allclose(single, a, rtol=1e-13, atol=1e-13 * (1 + np.abs(a).max()))


@pytest.mark.parametrize("p", [2.0, 2.5, 3.0, 3.5, 4.0, 6.0, 3.3])
def test_exponent_fast_paths_agree(p):
    rng = np.random.default_rng(int(p * 10))
    g = random_graph(rng, n=10)
    f = rng.normal(size=g.n)
    f[3] = f[4]  # a zero difference on some edge, if adjacent
    args = (g.indptr, g.indices, g.weights, g.measure, f, f, p)
    a = _kernels.plap_rows_numpy(*args)
    b = _kernels.plap_rows_numba(*args)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-13 * (1 + np.abs(a).max()))


@pytest.mark.parametrize("backend", ["numba", "numpy"])
def test_backend_env_flag(backend):
    env = dict(os.environ, PLAPLAB_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", "import plaplab; print(plaplab.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == backend


def test_bad_backend_flag_fails_loudly():
    env = dict(os.environ, PLAPLAB_BACKEND="fortran")
    out = subprocess.run([sys.executable, "-c", "import plaplab"], env=env, capture_output=True, text=True)
    assert out.returncode != 0 and "PLAPLAB_BACKEND" in out.stderr
