"""Slow, independent reference computations used to verify the fast paths.

Everything here is deliberately direct: exact Gram matrices from raw
vectors, eigenvalue PSD checks, central finite differences, and
brute-force O(n^2) ranking metrics.  These oracles are used by the test
suite and the ``gradcheck`` CLI command; nothing in the training path
depends on them.
"""

from dataclasses import dataclass

import numpy as np

from . import accel
from .weights import encode_pattern, eta_samkl

MAX_ORACLE_N = 500


@dataclass
class ExactKernel:
    """Exact combined kernel with its per-channel parts and weights."""

    K_eta: np.ndarray   # (n, n)
    base: list          # s matrices (n, n)
    etas: np.ndarray    # (n, s) per-sample channel weights


def _base_kernel(X: np.ndarray, present: np.ndarray, kind: str, bandwidth) -> np.ndarray:
    """Exact kernel matrix with zero rows/columns for absent samples."""
    n = X.shape[0]
    idx = np.flatnonzero(present)
    K = np.zeros((n, n))
    if idx.size == 0:
        return K
    Xp = X[idx]
    if kind == "linear":
        sub = Xp @ Xp.T
    elif kind == "rbf":
        if bandwidth is None or not bandwidth > 0:
            raise ValueError("rbf kernel requires a positive bandwidth")
        sq = accel.pairwise_sq_dists(Xp, Xp)
        sub = np.exp(-sq / (2.0 * bandwidth**2))
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    K[np.ix_(idx, idx)] = sub
    return K


def exact_kernel_matrix(channel_data, presence, kernels, V, A=None, groups=None) -> ExactKernel:
    """Exact combined kernel ``K(i,j) = sum_m eta_m(i) eta_m(j) K_m(i,j)``.

    Parameters
    ----------
    channel_data : list of ``(n, d_m)`` arrays of raw vectors (rows of
        absent samples are ignored).
    presence : ``(n, s)`` boolean array.
    kernels : list of ``(kind, bandwidth)`` pairs, one per channel.
    V : pattern embedding ``(k, 2s)``.
    A : optional group modulation ``(2s, T)``; all-ones when omitted.
    groups : optional ``(n,)`` group ids, required when ``A`` is given.
    """
    presence = np.asarray(presence, dtype=bool)
    n, s = presence.shape
    if n > MAX_ORACLE_N:
        raise ValueError(f"exact kernel oracle limited to n <= {MAX_ORACLE_N}, got {n}")
    if len(channel_data) != s or len(kernels) != s:
        raise ValueError("channel_data, presence and kernels disagree on s")
    if A is None:
        A = np.ones((2 * s, 1))
        groups = np.zeros(n, dtype=int)
    elif groups is None:
        raise ValueError("groups are required when A is given")

    etas = np.empty((n, s))
    for i in range(n):
        p = encode_pattern(presence[i].astype(float))
        etas[i] = eta_samkl(p, V, A[:, int(groups[i])])

    base = []
    K_eta = np.zeros((n, n))
    for m in range(s):
        kind, bw = kernels[m]
        K_m = _base_kernel(np.asarray(channel_data[m], dtype=np.float64),
                           presence[:, m], kind, bw)
        base.append(K_m)
        K_eta += np.outer(etas[:, m], etas[:, m]) * K_m
    return ExactKernel(K_eta=K_eta, base=base, etas=etas)


@dataclass
class PsdResult:
    lambda_min: float
    lambda_max: float
    passed: bool


def check_psd(K: np.ndarray, tol: float = 1e-8) -> PsdResult:
    """Eigenvalue test: pass iff ``lambda_min >= -tol * max(1, lambda_max)``."""
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {K.shape}")
    asym = np.max(np.abs(K - K.T)) if K.size else 0.0
    if asym > 1e-12:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    evals = np.linalg.eigvalsh(K)
    lo, hi = float(evals[0]), float(evals[-1])
    return PsdResult(lambda_min=lo, lambda_max=hi, passed=lo >= -tol * max(1.0, hi))


def finite_diff_grad(f, theta: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of ``f`` around ``theta``."""
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        bump = np.zeros_like(theta)
        bump[i] = step
        grad[i] = (f(theta + bump) - f(theta - bump)) / (2.0 * step)
    return grad


def _check_binary(labels: np.ndarray):
    pos = labels == 1
    neg = labels == -1
    if not np.all(pos | neg):
        raise ValueError("labels must be +1/-1")
    if not pos.any() or not neg.any():
        raise ValueError("metrics need both classes present")
    return pos, neg


def brute_auroc(scores, labels) -> float:
    """Pairwise counting AUROC; ties between classes earn half credit."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos, neg = _check_binary(labels)
    ps = scores[pos]
    ns = scores[neg]
    total = 0.0
    for a in ps:
        for b in ns:
            if a > b:
                total += 1.0
            elif a == b:
                total += 0.5
    return total / (ps.size * ns.size)


def brute_auprc(scores, labels) -> float:
    """Area under the precision-recall step curve by threshold enumeration."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos, _ = _check_binary(labels)
    n_pos = int(pos.sum())
    thresholds = np.unique(scores)[::-1]
    area = 0.0
    prev_recall = 0.0
    for th in thresholds:
        sel = scores >= th
        tp = int(np.sum(sel & pos))
        fp = int(np.sum(sel & ~pos))
        recall = tp / n_pos
        precision = tp / (tp + fp)
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return area


# ---------------------------------------------------------------------------
# Random instance builders for verification suites
# ---------------------------------------------------------------------------


def random_kernel_instance(seed: int, max_n: int = 50, max_s: int = 5, max_k: int = 4,
                           max_missing: float = 0.5):
    """A random raw-space instance for the PSD suite.

    Returns ``(channel_data, presence, kernels, V, A, groups)`` with V in
    U(-1, 1), A in U(0, 2) and per-channel missingness up to
    ``max_missing`` (every sample keeps at least one present channel).
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_n + 1))
    s = int(rng.integers(1, max_s + 1))
    k = int(rng.integers(1, max_k + 1))
    T = int(rng.integers(1, 4))
    dims = rng.integers(1, 7, size=s)
    presence = rng.random((n, s)) >= rng.random(s) * max_missing
    for i in range(n):
        if not presence[i].any():
            presence[i, rng.integers(0, s)] = True
    channel_data = [rng.normal(size=(n, d)) for d in dims]
    kernels = []
    for _ in range(s):
        if rng.random() < 0.5:
            kernels.append(("linear", None))
        else:
            kernels.append(("rbf", float(rng.uniform(0.5, 3.0))))
    V = rng.uniform(-1.0, 1.0, size=(k, 2 * s))
    A = rng.uniform(0.0, 2.0, size=(2 * s, T))
    groups = rng.integers(0, T, size=n)
    return channel_data, presence, kernels, V, A, groups


def random_mapped_design(n: int, s: int, k: int, T: int, seed: int, dims=None):
    """A random already-mapped state for gradient checking.

    Returns a dict with per-channel feature matrices (zero rows where the
    pattern marks a channel absent), the pattern matrix, groups, labels,
    and random parameters ``omegas, b, V, A``.
    """
    rng = np.random.default_rng(seed)
    if dims is None:
        dims = [int(d) for d in rng.integers(3, 8, size=s)]
    presence = rng.random((n, s)) < 0.7
    for i in range(n):
        if not presence[i].any():
            presence[i, rng.integers(0, s)] = True
    phis = []
    for m in range(s):
        phi = rng.normal(size=(n, dims[m]))
        phi[~presence[:, m]] = 0.0
        phis.append(phi)
    pres = presence.astype(np.float64)
    pattern = np.hstack([pres, 1.0 - pres])
    groups = rng.integers(0, T, size=n)
    y = rng.choice([-1.0, 1.0], size=n)
    omegas = [rng.normal(scale=0.5, size=d) for d in dims]
    V = rng.uniform(0.2, 1.0, size=(k, 2 * s))
    A = rng.uniform(0.5, 1.5, size=(2 * s, T))
    b = float(rng.normal(scale=0.1))
    return {
        "phis": phis,
        "pattern": pattern,
        "groups": groups,
        "y": y,
        "omegas": omegas,
        "V": V,
        "A": A,
        "b": b,
        "dims": dims,
    }
