import numpy as np

from samkl.weights import encode_pattern, eta_mamkl, eta_samkl, init_params


def test_encode_pattern_hand_example():
    p = encode_pattern([1, 0, 1])
    assert p.tolist() == [1, 0, 1, 0, 1, 0]


def test_encode_pattern_all_present():
    p = encode_pattern([1, 1, 1, 1])
    assert p.tolist() == [1, 1, 1, 1, 0, 0, 0, 0]


def test_encode_pattern_sums_to_s():
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = int(rng.integers(1, 9))
        present = rng.integers(0, 2, s)
        assert encode_pattern(present).sum() == s


def test_eta_mamkl_identity_embedding():
    """With V = I the latent inner products are delta functions, so
    eta_m collapses to the presence bit itself."""
    s = 4
    V = np.eye(2 * s)
    p = encode_pattern([1, 0, 1, 1])
    eta = eta_mamkl(p, V)
    assert np.allclose(eta, p[:s], atol=1e-15)


def test_eta_mamkl_ones_row():
    # k=1 all-ones embedding: every inner product is 1 and sum(p)=s,
    # so each present channel gets weight s.
    s = 5
    V = np.ones((1, 2 * s))
    p = encode_pattern([1, 1, 0, 1, 0])
    eta = eta_mamkl(p, V)
    expected = p[:s] * s
    assert np.allclose(eta, expected, atol=1e-15)


def test_eta_mamkl_zero_for_missing():
    rng = np.random.default_rng(3)
    for _ in range(25):
        s = int(rng.integers(2, 7))
        V = rng.standard_normal((3, 2 * s))
        present = rng.integers(0, 2, s)
        eta = eta_mamkl(encode_pattern(present), V)
        assert np.all(eta[present == 0] == 0.0)


def test_eta_samkl_reduces_to_mamkl_with_unit_a():
    rng = np.random.default_rng(7)
    for _ in range(100):
        s = int(rng.integers(2, 7))
        k = int(rng.integers(1, 5))
        V = rng.standard_normal((k, 2 * s))
        p = encode_pattern(rng.integers(0, 2, s))
        a = np.ones(2 * s)
        core = eta_samkl(p, V, a)
        # the samkl form omits the leading p_m factor; on present
        # channels the two variants must agree bit for bit
        ref = eta_mamkl(p, V)
        pres = p[:s] == 1.0
        assert np.array_equal(core[pres], ref[pres])


def test_eta_samkl_linear_in_a():
    rng = np.random.default_rng(11)
    s, k = 4, 3
    V = rng.standard_normal((k, 2 * s))
    p = encode_pattern([1, 1, 0, 1])
    a = np.ones(2 * s)
    assert np.allclose(eta_samkl(p, V, 2 * a), 2 * eta_samkl(p, V, a), atol=1e-12)


def test_eta_scale_covariance():
    rng = np.random.default_rng(13)
    s, k, c = 3, 2, 1.7
    V = rng.standard_normal((k, 2 * s))
    p = encode_pattern([1, 0, 1])
    a = rng.uniform(0, 2, 2 * s)
    assert np.allclose(eta_mamkl(p, c * V), c**2 * eta_mamkl(p, V), atol=1e-12)
    assert np.allclose(eta_samkl(p, c * V, a), c**2 * eta_samkl(p, V, a), atol=1e-12)


def test_eta_samkl_absence_half_hand_expansion():
    """s=2, both channels absent: p = [0,0,1,1], so eta_m is row m of
    V^T V applied to the absence-half entries of a only."""
    V = np.array([[1.0, 2.0, 3.0, 4.0],
                  [0.5, -1.0, 2.0, 0.0]])
    a = np.array([9.0, 9.0, 2.0, 3.0])  # present-half values must not matter
    p = encode_pattern([0, 0])
    G = V.T @ V
    expected = np.array([
        G[0, 2] * 1.0 * a[2] + G[0, 3] * 1.0 * a[3],
        G[1, 2] * 1.0 * a[2] + G[1, 3] * 1.0 * a[3],
    ])
    assert np.allclose(eta_samkl(p, V, a), expected, atol=1e-12)


def test_init_params():
    V, A = init_params(s=4, k=3, num_groups=5, seed=0)
    assert V.shape == (3, 8) and A.shape == (8, 5)
    assert np.all(A == 1.0)
    assert np.all((V >= 0.0) & (V < 1.0))
    V2, _ = init_params(4, 3, 5, seed=0)
    assert np.array_equal(V, V2)
    V3, _ = init_params(4, 3, 5, seed=1)
    assert not np.array_equal(V, V3)
