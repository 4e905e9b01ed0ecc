import os
import subprocess
import sys

import numpy as np
import pytest

from samkl import accel


def test_backend_name():
    assert accel.backend() in ("numba", "numpy")


def test_env_flag_forces_numpy_backend():
    code = (
        "from samkl import accel; "
        "print(accel.backend(), accel.USE_NUMBA)"
    )
    env = dict(os.environ, SAMKL_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["numpy", "False"]


def _hadamard(d: int) -> np.ndarray:
    H = np.array([[1.0]])
    while H.shape[0] < d:
        H = np.block([[H, H], [H, -H]])
    return H


def test_fwht_matches_hadamard_matrix():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((5, 8))
    expect = a @ _hadamard(8).T  # symmetric, but keep the transform order
    work = a.copy()
    accel.fwht_rows(work)
    assert np.allclose(work, expect, atol=1e-12)


def test_fwht_twice_scales_by_length():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((3, 16))
    work = a.copy()
    accel.fwht_rows(work)
    accel.fwht_rows(work)
    assert np.allclose(work, 16.0 * a, atol=1e-10)


def test_fwht_rejects_non_power_of_two():
    with pytest.raises(ValueError, match="power of two"):
        accel.fwht_rows(np.zeros((2, 6)))


def test_fwht_backends_agree_bitwise():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((7, 32))
    x = a.copy()
    y = a.copy()
    accel._fwht_rows_np(x)
    if accel.HAS_NUMBA:
        accel._fwht_rows_nb(y)
        assert np.array_equal(x, y)


def test_interleave_sincos_layout():
    z = np.array([[0.3, -1.2]])
    out = accel.interleave_sincos(z, 2.0)
    expect = 2.0 * np.array(
        [[np.sin(0.3), np.cos(0.3), np.sin(-1.2), np.cos(-1.2)]]
    )
    assert np.allclose(out, expect, atol=1e-15)
    assert out.shape == (1, 4)


def test_interleave_backends_agree():
    rng = np.random.default_rng(3)
    z = rng.standard_normal((6, 17))
    a = accel._interleave_sincos_np(
        np.ascontiguousarray(z), 0.5
    )
    if accel.HAS_NUMBA:
        b = accel._interleave_sincos_nb(np.ascontiguousarray(z), 0.5)
        # libm vs vectorized sin/cos may differ in the final ulp
        assert np.allclose(a, b, rtol=0, atol=1e-15)


def test_pairwise_sq_dists_values():
    x = np.array([[0.0, 0.0], [1.0, 2.0]])
    y = np.array([[0.0, 0.0], [3.0, 4.0], [1.0, 2.0]])
    out = accel.pairwise_sq_dists(x, y)
    assert np.allclose(out, [[0.0, 25.0, 5.0], [5.0, 8.0, 0.0]], atol=1e-15)
    assert np.all(out >= 0.0)


def test_pairwise_backends_agree_bitwise():
    rng = np.random.default_rng(4)
    x = rng.standard_normal((9, 5))
    y = rng.standard_normal((4, 5))
    a = accel._pairwise_sq_dists_np(x, y)
    if accel.HAS_NUMBA:
        b = accel._pairwise_sq_dists_nb(
            np.ascontiguousarray(x), np.ascontiguousarray(y)
        )
        assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_pairwise_dim_mismatch():
    with pytest.raises(ValueError, match="dim mismatch"):
        accel.pairwise_sq_dists(np.zeros((2, 3)), np.zeros((2, 4)))


def test_feature_maps_identical_across_backends(tmp_path):
    """End-to-end: rff/fastfood features computed with numba on and off."""
    code = """
import sys
import numpy as np
from samkl.featmap import (map_rff_batch, map_fastfood_batch,
                           sample_rff_params, build_fastfood)
X = np.random.default_rng(11).standard_normal((8, 10))
r = map_rff_batch(X, sample_rff_params(10, 64, 1.0, seed=3))
f = map_fastfood_batch(X, build_fastfood(10, 64, 1.0, seed=3))
np.save(sys.argv[1], r)
np.save(sys.argv[2], f)
"""
    nb = (tmp_path / "rff_nb.npy", tmp_path / "ff_nb.npy")
    np_ = (tmp_path / "rff_np.npy", tmp_path / "ff_np.npy")
    subprocess.run([sys.executable, "-c", code, str(nb[0]), str(nb[1])],
                   env=dict(os.environ), check=True)
    subprocess.run([sys.executable, "-c", code, str(np_[0]), str(np_[1])],
                   env=dict(os.environ, SAMKL_NO_NUMBA="1"), check=True)
    assert np.allclose(np.load(nb[0]), np.load(np_[0]), rtol=0, atol=1e-15)
    assert np.allclose(np.load(nb[1]), np.load(np_[1]), rtol=0, atol=1e-15)
