"""Euclidean projection onto the probability simplex, and label sampling.

The projection is the threshold operator ``[v - mu]_+``: sort ``v`` in
decreasing order, take ``K`` as the largest index with
``v'_K - (sum_{j<=K} v'_j - 1) / K > 0`` and set
``mu = (sum_{j<=K} v'_j - 1) / K``.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    InvalidAdvantageError,
    InvalidDistributionError,
    InvalidIntervalError,
    NonFiniteInputError,
)

SIMPLEX_TOL = 1e-9


def project_simplex(v) -> np.ndarray:
    """Project a vector, or each row of a matrix, onto the probability simplex.

    The strict ``> 0`` test selecting ``K`` is evaluated exactly, without an
    epsilon.  Ties in the sort are broken by index so equal coordinates are
    treated identically everywhere.
    """
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NonFiniteInputError("cannot project a vector with NaN or inf entries")
    squeeze = v.ndim == 1
    V = np.atleast_2d(v)
    k = V.shape[1]
    order = np.argsort(-V, axis=1, kind="stable")
    s = np.take_along_axis(V, order, axis=1)
    css = np.cumsum(s, axis=1) - 1.0
    ranks = np.arange(1, k + 1)
    active = s - css / ranks > 0
    # the first coordinate always qualifies, so K >= 1
    K = k - np.argmax(active[:, ::-1], axis=1)
    mu = css[np.arange(V.shape[0]), K - 1] / K
    out = np.maximum(V - mu[:, None], 0.0)
    return out[0] if squeeze else out


def project_scaled_votes(vote_sum, gamma: float, n: int) -> np.ndarray:
    """``project_simplex(vote_sum / (gamma * n))``: the booster's vote aggregation."""
    check_gamma(gamma)
    if int(n) != n or n < 1:
        raise InvalidAdvantageError(f"vote count must be a positive integer, got {n!r}")
    return project_simplex(np.asarray(vote_sum, dtype=float) / (gamma * n))


def check_gamma(gamma: float) -> float:
    if not (0.0 < gamma <= 1.0):
        raise InvalidAdvantageError(f"advantage gamma must lie in (0, 1], got {gamma!r}")
    return float(gamma)


def check_distribution(p, tol: float = SIMPLEX_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise InvalidDistributionError(f"not a point of the simplex: {p!r}")
    return p


def sample_label(dist, rng: np.random.Generator) -> int:
    """Draw a 1-based label from ``dist`` by inverse CDF over coordinates 1..k."""
    p = check_distribution(dist)
    cdf = np.cumsum(p)
    j = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    if j >= p.size:
        j = int(np.flatnonzero(p > 0)[-1])
    return j + 1


def sample_labels(P, rng: np.random.Generator) -> np.ndarray:
    """Row-wise inverse-CDF sampling; returns 1-based labels for each row of ``P``."""
    P = np.asarray(P, dtype=float)
    cdf = np.cumsum(P, axis=1)
    u = rng.random(P.shape[0]) * cdf[:, -1]
    idx = (cdf <= u[:, None]).sum(axis=1)
    last_pos = P.shape[1] - 1 - np.argmax(P[:, ::-1] > 0, axis=1)
    return np.minimum(idx, last_pos) + 1


def project_interval(x, lo: float, hi: float):
    """Clamp ``x`` to ``[lo, hi]``."""
    if lo > hi:
        raise InvalidIntervalError(f"empty interval [{lo}, {hi}]")
    out = np.clip(x, lo, hi)
    return float(out) if np.ndim(out) == 0 else out
