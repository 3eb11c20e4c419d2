"""Finite hypothesis classes, online weak learners and weak-learning audits.

Two families of experts are enumerable on a discretization grid of
``[0, 1)`` with step ``delta``:

* weight matrices ``W`` in ``{0, delta, 2 delta, ...}^(k x d)`` predicting
  ``argmax W x``;
* depth-1 trees on one feature, either with ``k - 1`` sorted thresholds and
  ``k`` leaves (``kwise``) or one threshold and two leaves (``binary``).
  Thresholds are taken from the interior grid points ``delta, 2 delta, ...``.

:class:`RewaLearner` runs randomized exponential weights over such a class;
:class:`StumpLearner` is the cheap streaming learner used by the boosters.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .core import check_k
from .errors import (
    ClassTooLargeError,
    DimensionError,
    InvalidConfigError,
    InvalidLabelError,
    InvalidPairError,
    InvalidWeightError,
)

DEFAULT_CAP = 10**6


# -- hypotheses ---------------------------------------------------------------


@dataclass(frozen=True)
class ConstantHypothesis:
    label: int

    def predict(self, x) -> int:
        return self.label

    def predict_many(self, X) -> np.ndarray:
        return np.full(np.asarray(X).shape[0], self.label, dtype=int)


@dataclass(frozen=True)
class WeightMatrixHypothesis:
    W: np.ndarray = field(repr=False)

    def predict(self, x) -> int:
        return int(np.argmax(self.W @ np.asarray(x, dtype=float))) + 1

    def predict_many(self, X) -> np.ndarray:
        return np.argmax(np.asarray(X, dtype=float) @ self.W.T, axis=1) + 1


@dataclass(frozen=True)
class StumpHypothesis:
    """Leaf ``j`` covers ``thresholds[j-1] < x[feature] <= thresholds[j]``."""

    feature: int
    thresholds: Tuple[float, ...]
    leaves: Tuple[int, ...]

    def predict(self, x) -> int:
        j = int(np.searchsorted(self.thresholds, x[self.feature], side="left"))
        return self.leaves[j]

    def predict_many(self, X) -> np.ndarray:
        col = np.asarray(X, dtype=float)[:, self.feature]
        j = np.searchsorted(self.thresholds, col, side="left")
        return np.asarray(self.leaves, dtype=int)[j]


Hypothesis = Union[ConstantHypothesis, WeightMatrixHypothesis, StumpHypothesis]


# -- hypothesis classes -------------------------------------------------------


def _grid_levels(delta: float) -> int:
    if not 0.0 < delta < 1.0:
        raise InvalidConfigError(f"discretization delta must lie in (0, 1), got {delta!r}")
    return int(math.ceil(1.0 / delta - 1e-9))


def interior_thresholds(delta: float) -> np.ndarray:
    """Grid points ``delta, 2 delta, ...`` strictly inside ``(0, 1)``."""
    n = _grid_levels(delta)
    return np.round(np.arange(1, n) * delta, 12)


class HypothesisClass:
    """A finite class with vectorized prediction over all members."""

    k: int
    delta: Optional[float] = None

    def __len__(self) -> int:
        raise NotImplementedError

    def __getitem__(self, i: int) -> Hypothesis:
        raise NotImplementedError

    @property
    def members(self):
        return [self[i] for i in range(len(self))]

    def predict_all(self, X) -> np.ndarray:
        """``(len(self), T)`` array of 1-based member predictions."""
        raise NotImplementedError

    def predictions_at(self, x) -> np.ndarray:
        return self.predict_all(np.asarray(x, dtype=float)[None, :])[:, 0]


class ExplicitClass(HypothesisClass):
    def __init__(self, members: Sequence[Hypothesis], k: int):
        if not members:
            raise InvalidConfigError("hypothesis class must be nonempty")
        self._members = list(members)
        self.k = check_k(k)

    def __len__(self):
        return len(self._members)

    def __getitem__(self, i):
        return self._members[i]

    def predict_all(self, X):
        return np.stack([h.predict_many(X) for h in self._members])


class WeightMatrixClass(HypothesisClass):
    def __init__(self, weights: np.ndarray, k: int, delta: Optional[float] = None):
        self.weights = np.asarray(weights, dtype=float)
        self.k = check_k(k)
        self.delta = delta

    def __len__(self):
        return self.weights.shape[0]

    def __getitem__(self, i):
        return WeightMatrixHypothesis(self.weights[i])

    def predict_all(self, X):
        scores = np.einsum("nkd,td->ntk", self.weights, np.asarray(X, dtype=float))
        return np.argmax(scores, axis=2) + 1


class StumpClass(HypothesisClass):
    def __init__(self, features, thresholds, leaves, k: int, delta: Optional[float] = None,
                 splits: str = "kwise"):
        self.features = np.asarray(features, dtype=int)
        self.thresholds = np.asarray(thresholds, dtype=float)
        self.leaves = np.asarray(leaves, dtype=int)
        self.k = check_k(k)
        self.delta = delta
        self.splits = splits

    def __len__(self):
        return self.features.size

    def __getitem__(self, i):
        return StumpHypothesis(int(self.features[i]), tuple(self.thresholds[i].tolist()),
                               tuple(self.leaves[i].tolist()))

    def predict_all(self, X):
        X = np.asarray(X, dtype=float)
        cols = X[:, self.features].T  # (n, T)
        leaf = (cols[:, None, :] > self.thresholds[:, :, None]).sum(axis=1)
        return np.take_along_axis(self.leaves, leaf, axis=1)


def enumerate_weight_matrices(d: int, k: int, delta: float, cap: int = DEFAULT_CAP) -> WeightMatrixClass:
    """All ``k x d`` matrices with entries on the delta-grid of ``[0, 1)``."""
    k = check_k(k)
    levels = _grid_levels(delta)
    size = levels ** (k * d)
    if size > cap:
        raise ClassTooLargeError(f"{size} weight matrices exceed the cap; need cap >= {size}")
    grid = np.arange(levels) * delta
    flat = np.array(list(itertools.product(grid, repeat=k * d)), dtype=float)
    return WeightMatrixClass(flat.reshape(size, k, d), k, delta)


def stump_class_size(d: int, k: int, delta: float, splits: str = "kwise") -> int:
    g = _grid_levels(delta) - 1
    if splits == "binary":
        return d * g * k * k
    if splits == "kwise":
        return d * math.comb(g + k - 2, k - 1) * k**k
    raise InvalidConfigError(f"unknown split type {splits!r}")


def enumerate_stumps(d: int, k: int, delta: float, splits: str = "kwise",
                     cap: int = DEFAULT_CAP) -> StumpClass:
    """Depth-1 trees on the interior threshold grid.

    ``kwise``: every non-decreasing choice of ``k - 1`` thresholds and every
    assignment of labels to the ``k`` leaves.  ``binary``: one threshold and
    every ordered pair of leaf labels.
    """
    k = check_k(k)
    size = stump_class_size(d, k, delta, splits)
    if size > cap:
        raise ClassTooLargeError(f"{size} stumps exceed the cap; need cap >= {size}")
    grid = interior_thresholds(delta)
    if grid.size == 0:
        raise InvalidConfigError(f"delta={delta} leaves no interior thresholds")
    n_thr = 1 if splits == "binary" else k - 1
    n_leaves = n_thr + 1
    thr_sets = np.array(list(itertools.combinations_with_replacement(grid, n_thr)), dtype=float)
    leaf_sets = np.array(list(itertools.product(range(1, k + 1), repeat=n_leaves)), dtype=int)
    per_feature = len(thr_sets) * len(leaf_sets)
    features = np.repeat(np.arange(d), per_feature)
    thresholds = np.tile(np.repeat(thr_sets, len(leaf_sets), axis=0), (d, 1))
    leaves = np.tile(np.tile(leaf_sets, (len(thr_sets), 1)), (d, 1))
    return StumpClass(features, thresholds, leaves, k, delta, splits)


# -- weak learners ------------------------------------------------------------


def _check_weight(weight: float) -> float:
    if not 0.0 <= weight <= 1.0:
        raise InvalidWeightError(f"update weight must lie in [0, 1], got {weight!r}")
    return float(weight)


def rewa_advantage(eta: float) -> float:
    """Loss-form advantage ``2 eta / (1 - exp(-eta))`` of exponential weights."""
    if not eta > 0:
        raise InvalidConfigError(f"learning rate must be positive, got {eta!r}")
    return 2.0 * eta / -math.expm1(-eta)


class RewaLearner:
    """Randomized exponentially weighted average forecaster over a finite class.

    Each prediction samples an expert with probability proportional to
    ``exp(log_weight)``; an update subtracts ``eta * weight`` from the log
    weight of every expert that mislabels the example.
    """

    def __init__(self, hclass: HypothesisClass, eta: float = 1.0,
                 rng: Optional[np.random.Generator] = None):
        if not eta > 0:
            raise InvalidConfigError(f"learning rate must be positive, got {eta!r}")
        self.hclass = hclass
        self.k = hclass.k
        self.eta = float(eta)
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.reset()

    def reset(self) -> "RewaLearner":
        self.log_weights = np.zeros(len(self.hclass))
        return self

    def distribution(self) -> np.ndarray:
        w = np.exp(self.log_weights - self.log_weights.max())
        return w / w.sum()

    def _sample_member(self) -> int:
        cdf = np.cumsum(self.distribution())
        i = int(np.searchsorted(cdf, self.rng.random() * cdf[-1], side="right"))
        return min(i, len(cdf) - 1)

    def predict(self, x) -> int:
        return int(self.hclass[self._sample_member()].predict(np.asarray(x, dtype=float)))

    def update(self, x, y: int, weight: float = 1.0) -> "RewaLearner":
        weight = _check_weight(weight)
        if weight == 0.0:
            return self
        preds = self.hclass.predictions_at(x)
        self.update_from_predictions(preds, y, weight)
        return self

    def update_from_predictions(self, preds: np.ndarray, y: int, weight: float = 1.0) -> None:
        """Update when every member's prediction at the current example is known."""
        self.log_weights -= self.eta * weight * (preds != y)
        self.log_weights -= self.log_weights.max()

    def freeze(self) -> Hypothesis:
        return self.hclass[self._sample_member()]


class StumpLearner:
    """Streaming binary-split decision stump with weighted class counts.

    For every feature and every cell between consecutive grid thresholds it
    accumulates the weight seen per class.  The prediction comes from the
    single-threshold stump whose majority leaves carry the most weight;
    ties go to the lowest feature, then the lowest threshold, then the
    lowest label.  With no weight seen yet it predicts class 1.
    """

    def __init__(self, d: int, k: int, delta: float = 0.1, rng=None):
        self.d = int(d)
        self.k = check_k(k)
        self.delta = delta
        self.thresholds = interior_thresholds(delta)
        if self.thresholds.size == 0:
            raise InvalidConfigError(f"delta={delta} leaves no interior thresholds")
        self.reset()

    def reset(self) -> "StumpLearner":
        g = self.thresholds.size
        self.counts = np.zeros((self.d, g + 1, self.k))
        self.total_weight = 0.0
        self._best = ConstantHypothesis(1)
        self._dirty = False
        return self

    def _cells(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise DimensionError(f"expected {self.d} features, got shape {x.shape}")
        return np.searchsorted(self.thresholds, x, side="left")

    def update(self, x, y: int, weight: float = 1.0) -> "StumpLearner":
        weight = _check_weight(weight)
        if not 1 <= y <= self.k:
            raise InvalidLabelError(f"label {y!r} outside 1..{self.k}")
        cells = self._cells(x)
        if weight == 0.0:
            return self
        self.counts[np.arange(self.d), cells, y - 1] += weight
        self.total_weight += weight
        self._dirty = True
        return self

    def update_fractional(self, x, weights) -> "StumpLearner":
        """Add ``weights[l-1]`` to label ``l`` for every label in one pass."""
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.k,) or np.any(w < 0) or np.any(w > 1):
            raise InvalidWeightError(f"fractional weights must be {self.k} values in [0, 1]")
        cells = self._cells(x)
        self.counts[np.arange(self.d), cells, :] += w
        self.total_weight += float(w.sum())
        self._dirty = True
        return self

    def _refit(self) -> None:
        self._dirty = False
        if self.total_weight <= 0.0:
            self._best = ConstantHypothesis(1)
            return
        g = self.thresholds.size
        left = np.cumsum(self.counts, axis=1)[:, :g, :]
        right = self.counts.sum(axis=1)[:, None, :] - left
        score = left.max(axis=2) + right.max(axis=2)
        j, i = np.unravel_index(int(np.argmax(score)), score.shape)
        self._best = StumpHypothesis(
            int(j), (float(self.thresholds[i]),),
            (int(np.argmax(left[j, i])) + 1, int(np.argmax(right[j, i])) + 1),
        )

    def predict(self, x) -> int:
        if self._dirty:
            self._refit()
        return self._best.predict(x)

    def freeze(self) -> Hypothesis:
        if self._dirty:
            self._refit()
        return self._best


WeakLearner = Union[RewaLearner, StumpLearner]


def train_stump_oracle(X, y, k: int, delta: float = 0.1, weights=None) -> Hypothesis:
    """Batch weak oracle: fit a fresh :class:`StumpLearner` on the rows and freeze it."""
    X = np.asarray(X, dtype=float)
    learner = StumpLearner(X.shape[1], k, delta)
    w = np.ones(len(y)) if weights is None else np.asarray(weights, dtype=float)
    cells = np.searchsorted(learner.thresholds, X, side="left")  # (m, d)
    for j in range(learner.d):
        np.add.at(learner.counts[j], (cells[:, j], np.asarray(y, dtype=int) - 1), w)
    learner.total_weight = float(w.sum())
    learner._dirty = True
    return learner.freeze()


# -- audits -------------------------------------------------------------------


CONDITIONS = ("def1", "def5", "def6", "def7")


@dataclass
class AuditReport:
    """Measured weak-learning excess for one condition.

    ``regret_excess = gamma * best_competitor_gain - learner_gain`` is the
    empirical counterpart of the additive regret term.  The loss-form
    fields restate the pairwise audit in terms of ``(1 - sigma) / 2`` and
    the 0-1 loss, which is the form exponential weights is analysed in.
    """

    condition: str
    learner_gain: float
    best_competitor_gain: float
    gamma: float
    regret_excess: float
    T: int
    trials: int
    reference_label: Optional[int] = None
    learner_loss: Optional[float] = None
    best_competitor_loss: Optional[float] = None
    learner_zero_one_loss: Optional[float] = None
    best_zero_one_loss: Optional[float] = None
    chain_holds: Optional[bool] = None


def default_reference_labels(preds, y, k: int, rng: np.random.Generator) -> np.ndarray:
    """``ell_t = W(x_t)`` where the learner errs, else a uniform label other than ``y_t``."""
    preds = np.asarray(preds, dtype=int)
    y = np.asarray(y, dtype=int)
    other = rng.integers(1, k, size=y.size)  # 1..k-1, shifted past y
    other = other + (other >= y)
    return np.where(preds != y, preds, other)


def loss_chain(y, ells, learner_preds, member_preds) -> dict:
    """Measured terms of the pairwise-loss versus 0-1-loss chain.

    Returns the learner's pairwise loss and 0-1 loss, the best member's of
    each, and whether both deterministic inequalities hold.
    """
    y = np.asarray(y)
    ells = np.asarray(ells)
    W = np.asarray(learner_preds)
    H = np.atleast_2d(member_preds)
    pair_w = float(np.sum(np.where(W == y, 0.0, np.where(W == ells, 1.0, 0.5))))
    zo_w = float(np.sum(W != y))
    pair_h = np.where(H == y, 0.0, np.where(H == ells, 1.0, 0.5)).sum(axis=1)
    zo_h = (H != y).sum(axis=1)
    best_pair, best_zo = float(pair_h.min()), float(zo_h.min())
    return {
        "learner_pair_loss": pair_w,
        "learner_zero_one_loss": zo_w,
        "best_pair_loss": best_pair,
        "best_zero_one_loss": best_zo,
        "holds": bool(pair_w <= zo_w and 0.5 * best_zo <= best_pair),
    }


def _run_online(learner, X, y) -> np.ndarray:
    preds = np.empty(len(y), dtype=int)
    for t in range(len(y)):
        preds[t] = learner.predict(X[t])
        learner.update(X[t], int(y[t]), 1.0)
    return preds


def audit_condition(learner, X, y, hclass: HypothesisClass, gamma: float,
                    condition: str = "def1", ells=None, trials: int = 1,
                    rng: Optional[np.random.Generator] = None) -> AuditReport:
    """Run ``learner`` over the stream and measure a weak-learning condition.

    ``learner`` is either a learner object (reset between trials, its own
    random source keeps running) or a factory ``rng -> learner``.  Expected
    values are averages over ``trials`` runs; the comparator maximum is
    taken over the averaged per-member gains.
    """
    if condition not in CONDITIONS:
        raise InvalidConfigError(f"unknown condition {condition!r}")
    rng = rng if rng is not None else np.random.default_rng(0)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    k = hclass.k
    T = y.size
    if ells is not None:
        ells = np.asarray(ells, dtype=int)
        if np.any(ells == y):
            raise InvalidPairError("reference labels must differ from the true labels")
    H = hclass.predict_all(X)

    learner_gain = 0.0
    member_gain = np.zeros(len(hclass)) if condition != "def6" else np.zeros((k, len(hclass)))
    learner_by_label = np.zeros(k)
    pair_w = zo_w = pair_best = zo_best = 0.0
    chain = True
    for trial in range(trials):
        if callable(learner) and not hasattr(learner, "predict"):
            agent = learner(np.random.default_rng(rng.integers(2**63)))
        else:
            agent = learner if trial == 0 else learner.reset()
        W = _run_online(agent, X, y)
        if condition == "def1":
            ell = ells if ells is not None else default_reference_labels(W, y, k, rng)
            learner_gain += float(np.sum((W == y).astype(float) - (W == ell)))
            member_gain += ((H == y).astype(float) - (H == ell)).sum(axis=1)
            terms = loss_chain(y, ell, W, H)
            pair_w += terms["learner_pair_loss"]
            zo_w += terms["learner_zero_one_loss"]
            pair_best += terms["best_pair_loss"]
            zo_best += terms["best_zero_one_loss"]
            chain = chain and terms["holds"]
        elif condition in ("def5", "def7"):
            learner_gain += float(np.sum(2.0 * (W == y) - 1.0))
            if condition == "def5":
                member_gain += (2.0 * (H == y) - 1.0).sum(axis=1)
            else:
                member_gain += ((k * (H == y) - 1.0) / (k - 1)).sum(axis=1)
        else:
            for ell in range(1, k + 1):
                mask = y == ell
                learner_by_label[ell - 1] += float(np.sum(2.0 * (W[mask] == ell) - 1.0))
                member_gain[ell - 1] += (2.0 * (H[:, mask] == ell) - 1.0).sum(axis=1)

    n = float(trials)
    if condition == "def6":
        best = member_gain.max(axis=1) / n
        excess = gamma * best - learner_by_label / n
        ell = int(np.argmax(excess))
        return AuditReport(condition, float(learner_by_label[ell] / n), float(best[ell]), gamma,
                           float(excess[ell]), T, trials, reference_label=ell + 1)
    best = float(member_gain.max() / n)
    report = AuditReport(condition, learner_gain / n, best, gamma,
                         gamma * best - learner_gain / n, T, trials)
    if condition == "def1":
        report.learner_loss = pair_w / n
        report.best_competitor_loss = pair_best / n
        report.learner_zero_one_loss = zo_w / n
        report.best_zero_one_loss = zo_best / n
        report.chain_holds = chain
    return report
