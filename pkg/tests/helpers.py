"""Shared generators for randomized test instances."""

import numpy as np


def make_lasso_instance(seed, m=10, n=8, sigma=0.1, n_spikes=3):
    """Random sparse-recovery instance with a controlled spectrum.

    The operator is built from random orthonormal factors with singular
    values drawn uniformly from [0.3, 1] and normalized so the largest
    is 1. Keeping the spectrum away from zero keeps every reduced Gram
    matrix comfortably invertible, so enumeration and splitting solvers
    both operate far from degeneracy.
    """
    rng = np.random.default_rng(seed)
    q = min(m, n)
    Q, _ = np.linalg.qr(rng.standard_normal((m, q)))
    V, _ = np.linalg.qr(rng.standard_normal((n, q)))
    s = np.sort(rng.uniform(0.3, 1.0, q))[::-1]
    s = s / s[0]
    A = Q @ (s[:, None] * V.T)
    x0 = np.zeros(n)
    hot = rng.choice(n, size=n_spikes, replace=False)
    x0[hot] = rng.uniform(0.5, 1.5, n_spikes) * rng.choice([-1.0, 1.0], n_spikes)
    y = A @ x0 + sigma * rng.standard_normal(m)
    return A, y, x0


def alpha_span(A, y, count, lo_frac=1e-3, hi_frac=2.0):
    """Log-spaced penalties bracketing the largest useful value."""
    amax = float(np.max(np.abs(A.T @ y)))
    return np.geomspace(lo_frac * amax, hi_frac * amax, count)
