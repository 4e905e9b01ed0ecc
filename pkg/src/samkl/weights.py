"""Kernel-weight machinery: missing-pattern encodings and adaptive weights.

Shape conventions used throughout the package:

* ``p`` -- missing-pattern vector of length ``2s`` for ``s`` channels.
  ``p[m] = 1`` iff channel ``m`` is present, ``p[s+m] = 1 - p[m]``, so
  ``p.sum() == s`` always.
* ``V`` -- pattern-embedding matrix of shape ``(k, 2s)``: one latent
  column per pattern position.
* ``A`` -- per-group modulation matrix of shape ``(2s, T)``, initialized
  to all ones; column ``t`` rescales the pattern positions for group ``t``.

The pattern-adaptive weight of channel ``m`` is
``eta_m = p_m * v_m^T (V p)`` and its sample-adaptive generalization is
``eta_m = (V^T V (p * a))_m`` where ``a`` is the group's column of ``A``.
The sample-adaptive form intentionally carries no leading ``p_m`` factor:
absent channels are mapped to zero feature vectors, so their decision
contribution vanishes regardless of the weight value.
"""

import numpy as np


def encode_pattern(present) -> np.ndarray:
    """Encode a per-channel presence vector into a length-``2s`` pattern.

    ``present`` is a boolean/0-1 sequence of length ``s``.  The first half
    of the result marks present channels, the second half absent ones, so
    the encoding always sums to ``s``.
    """
    present = np.asarray(present, dtype=np.float64)
    if present.ndim != 1 or present.size == 0:
        raise ValueError("present must be a non-empty 1-d vector")
    if not np.all((present == 0.0) | (present == 1.0)):
        raise ValueError("present must contain only 0/1 entries")
    return np.concatenate([present, 1.0 - present])


def eta_samkl(p: np.ndarray, V: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Sample-adaptive channel weights ``eta_m = (V^T V (p * a))_m``.

    Returns the first ``s`` entries (one weight per channel).  Reduces to
    :func:`eta_mamkl` on present channels when ``a`` is all ones.
    """
    p = np.asarray(p, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    two_s = p.shape[0]
    if two_s % 2:
        raise ValueError(f"pattern length must be even, got {two_s}")
    if V.shape[1] != two_s:
        raise ValueError(f"V has {V.shape[1]} columns, pattern has length {two_s}")
    if a.shape[0] != two_s:
        raise ValueError(f"a has length {a.shape[0]}, expected {two_s}")
    s = two_s // 2
    reduced = V @ (p * a)  # (k,)
    return V[:, :s].T @ reduced


def eta_mamkl(p: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Pattern-adaptive channel weights ``eta_m = p_m * v_m^T (V p)``.

    Identical to ``eta_samkl(p, V, ones)`` on present channels; absent
    channels get an exact zero from the leading ``p_m`` factor.
    """
    p = np.asarray(p, dtype=np.float64)
    s = p.shape[0] // 2
    ones = np.ones_like(p)
    return p[:s] * eta_samkl(p, V, ones)


def init_params(s: int, k: int, num_groups: int, seed: int):
    """Initial ``(V, A)`` for training.

    ``V`` is drawn entrywise from U(0, 1); ``A`` starts as all ones so the
    sample-adaptive model coincides with the pattern-adaptive one.
    """
    if s < 1 or k < 1 or num_groups < 1:
        raise ValueError(
            f"s, k and num_groups must be positive, got {(s, k, num_groups)}"
        )
    rng = np.random.default_rng(seed)
    V = rng.random((k, 2 * s))
    A = np.ones((2 * s, num_groups), dtype=np.float64)
    return V, A
