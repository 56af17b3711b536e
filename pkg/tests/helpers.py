"""Shared independent oracles for the test suite.

These stay deliberately separate from the library code paths they check:
central finite differences for gradients, and sphere-based Monte Carlo with
antithetic pairs for smoothed gradients.
"""

from __future__ import annotations

import numpy as np


def fd_gradient(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(float(np.linalg.norm(b)), 1e-12)
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b))) / denom


def mc_smoothed_gradient(f, phi: np.ndarray, delta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo estimate of (d/delta) E[f(phi + delta u) u] over the unit sphere.

    Uses antithetic pairs (u, -u): same expectation by sphere symmetry, far less
    variance from the constant part of f.
    """
    phi = np.asarray(phi, dtype=float)
    d = phi.shape[0]
    u = rng.standard_normal((n, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    plus = np.array([f(phi + delta * ui) for ui in u])
    minus = np.array([f(phi - delta * ui) for ui in u])
    return (d / (2.0 * delta)) * np.mean((plus - minus)[:, None] * u, axis=0)


def random_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish random orthogonal matrix via QR with sign fixing."""
    a = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(a)
    return q * np.sign(np.diag(r))
