"""The numba kernels and their numpy fallbacks must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from superensemble import rbfn, tree
from superensemble._accel import HAS_NUMBA

needs_numba = pytest.mark.skipif(not HAS_NUMBA, reason="numba backend unavailable")


def _py(func):
    """The undecorated python function behind a numba dispatcher (or the function itself)."""
    return getattr(func, "py_func", func)


@needs_numba
@pytest.mark.parametrize("code", [0, 1, 2, 3])
def test_scan_numeric_agrees(code):
    rng = np.random.default_rng(code)
    for _ in range(50):
        n = int(rng.integers(2, 200))
        values = np.sort(rng.integers(0, 30, n).astype(float))
        labels = rng.integers(0, 2, n).astype(np.int8)
        labels[:2] = (0, 1)
        s_nb, c_nb = tree._scan_numeric_nb(values, labels, code)
        s_np, c_np = tree._scan_numeric_np(values, labels, code)
        assert np.array_equal(c_nb, c_np)
        np.testing.assert_allclose(s_nb, s_np, rtol=1e-13, atol=1e-15)


@needs_numba
def test_route_agrees():
    rng = np.random.default_rng(4)
    X = rng.integers(0, 4, (300, 4)).astype(float)
    y = (X[:, 0] + X[:, 2] + rng.integers(0, 2, 300) > 3).astype(np.int8)
    t = tree.grow_tree(X, y, categorical=[False, True, False, True], minsplit=4)
    args = (X, t.feature, t.threshold, t.is_categorical, t.left, t.right, t.label)
    assert np.array_equal(tree._route_nb(*args), tree._route_np(*args))


@needs_numba
def test_rbf_kernels_agree():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n, d, k = int(rng.integers(1, 80)), int(rng.integers(1, 6)), int(rng.integers(1, 8))
        Z = rng.normal(size=(n, d))
        c, s, w = rng.normal(size=(k, d)), rng.uniform(0.3, 2.0, k), rng.normal(size=k)
        y = rng.integers(0, 2, n).astype(float)
        v = rng.uniform(0.5, 2.0, n)
        for a, b in zip(rbfn._activations_nb(Z, c, s), rbfn._activations_np(Z, c, s)):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)
        for a, b in zip(rbfn._gradients_nb(Z, y, v, c, s, w, 0.2), rbfn._gradients_np(Z, y, v, c, s, w, 0.2)):
            np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-13)


def test_python_kernels_run_without_numba():
    # the undecorated numba kernels are valid python and match the numpy versions
    values = np.array([0.0, 1.0, 1.0, 2.0])
    labels = np.array([1, 0, 1, 0], dtype=np.int8)
    s_py, c_py = _py(tree._scan_numeric_nb)(values, labels, 0)
    s_np, c_np = tree._scan_numeric_np(values, labels, 0)
    assert np.array_equal(c_py, c_np)
    np.testing.assert_allclose(s_py, s_np, rtol=1e-14)


SCRIPT = """
from superensemble import backend, load_bundled, run_benchmark, emit_report
rep = run_benchmark(load_bundled('breast_cancer'), repeats=2, seed=5)
print(backend())
print(emit_report(rep, 'csv'), end='')
"""


def _run(no_numba):
    env = dict(os.environ, SUPERENSEMBLE_NO_NUMBA="1" if no_numba else "0")
    res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True, check=True)
    return res.stdout.split("\n", 1)


def test_env_flag_selects_numpy():
    name, _ = _run(True)
    assert name == "numpy"


@needs_numba
def test_backends_give_same_report():
    nb_name, nb_report = _run(False)
    np_name, np_report = _run(True)
    assert (nb_name, np_name) == ("numba", "numpy")
    assert nb_report == np_report
