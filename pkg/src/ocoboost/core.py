"""Label encodings and the gain functions used throughout the library.

Class labels are 1-based integers in ``1..k``.  Wherever a formula needs a
label as a vector it uses the basis vector ``e_label`` of length ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionError,
    InvalidDistributionError,
    InvalidLabelError,
    InvalidPairError,
)

DISTRIBUTION_TOL = 1e-9


def check_k(k: int) -> int:
    if int(k) != k or k < 2:
        raise InvalidLabelError(f"class count must be an integer >= 2, got {k!r}")
    return int(k)


def one_hot(index: int, k: int) -> np.ndarray:
    """Basis vector of length ``k`` with a 1 at 1-based position ``index``."""
    k = check_k(k)
    if int(index) != index or not 1 <= index <= k:
        raise InvalidLabelError(f"label {index!r} outside 1..{k}")
    v = np.zeros(k)
    v[int(index) - 1] = 1.0
    return v


@dataclass(frozen=True)
class LabelVector:
    """A class label together with the number of classes."""

    index: int
    k: int

    def __post_init__(self):
        check_k(self.k)
        if int(self.index) != self.index or not 1 <= self.index <= self.k:
            raise InvalidLabelError(f"label {self.index!r} outside 1..{self.k}")

    @property
    def vector(self) -> np.ndarray:
        return one_hot(self.index, self.k)

    def __array__(self, dtype=None, copy=None):
        v = self.vector
        return v if dtype is None else v.astype(dtype)


@dataclass(frozen=True)
class Example:
    features: np.ndarray
    label: Optional[int] = None


def _as_vec(v) -> np.ndarray:
    return np.asarray(v, dtype=float).reshape(-1)


def zero_one_gain(pred, truth) -> float:
    """``2 pred . truth - 1``: +1 for a correct prediction, -1 otherwise."""
    p, t = _as_vec(pred), _as_vec(truth)
    if p.shape != t.shape:
        raise DimensionError(f"label vectors of length {p.size} and {t.size}")
    return float(2.0 * (p @ t) - 1.0)


def sigma_gain(z, y, ell) -> float:
    """Pairwise gain ``1{z = y} - 1{z = ell}`` for the task "y versus ell"."""
    z, y, ell = _as_vec(z), _as_vec(y), _as_vec(ell)
    if not z.shape == y.shape == ell.shape:
        raise DimensionError("label vectors have different lengths")
    if np.array_equal(y, ell):
        raise InvalidPairError("reference label must differ from the true label")
    return float(z @ y - z @ ell)


def multiclass_correlation(hyp_outputs, labels, weights) -> float:
    """Weighted average of ``h(x_i) . (2 y_i - 1)``.

    ``hyp_outputs`` is an ``(m, k)`` array of output vectors (one-hot or
    points of the simplex); ``labels`` holds either 1-based integers or
    one-hot rows.
    """
    H = np.atleast_2d(np.asarray(hyp_outputs, dtype=float))
    m, k = H.shape
    Y = labels_to_onehot(labels, k)
    w = _as_vec(weights)
    if Y.shape[0] != m or w.size != m:
        raise DimensionError("outputs, labels and weights differ in length")
    if np.any(w < 0) or abs(w.sum() - 1.0) > DISTRIBUTION_TOL:
        raise InvalidDistributionError(f"weights sum to {w.sum()!r}, expected 1")
    return float(w @ np.einsum("ij,ij->i", H, 2.0 * Y - 1.0))


def labels_to_onehot(labels, k: int) -> np.ndarray:
    """Turn 1-based integer labels (or already one-hot rows) into an (m, k) array."""
    arr = np.asarray(labels)
    if arr.ndim == 2:
        if arr.shape[1] != k:
            raise DimensionError(f"one-hot rows of length {arr.shape[1]}, expected {k}")
        return arr.astype(float)
    idx = arr.astype(int).reshape(-1)
    if idx.size and (idx.min() < 1 or idx.max() > k):
        raise InvalidLabelError(f"labels outside 1..{k}")
    out = np.zeros((idx.size, k))
    out[np.arange(idx.size), idx - 1] = 1.0
    return out


def argmax_label(scores: Sequence[float]) -> int:
    """1-based argmax; ties go to the lowest index."""
    return int(np.argmax(np.asarray(scores))) + 1
