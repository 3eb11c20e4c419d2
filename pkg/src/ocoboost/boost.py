"""Boosting by reduction to online convex optimization.

* :class:`OnlineBooster` -- the online booster over ``N`` weak learners, in
  agnostic mode (relabeling through an OCO game on the simplex) or
  realizable mode (reweighting through an OCO game on ``[0, 1]``).
* :func:`improper_game_play` -- repeated play of a decomposable zero-sum
  game where the minimizing player runs one OCO instance per component and
  the maximizer answers through an approximate best-response oracle.
* :class:`BatchBooster` -- the statistical boosters built on that game,
  returning a :class:`FinalHypothesis`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .core import check_k, labels_to_onehot
from .errors import (
    ClassTooLargeError,
    DimensionError,
    InvalidConfigError,
    InvalidLabelError,
    ProtocolOrderError,
)
from .oco import (
    IntervalDomain,
    OGDPool,
    OnlineGradientDescent,
    SimplexDomain,
    agnostic_gradient_bound,
    realizable_gradient_bound,
)
from .simplex import check_gamma, project_scaled_votes, project_simplex, sample_label, sample_labels
from .weak import DEFAULT_CAP, HypothesisClass, train_stump_oracle

logger = logging.getLogger(__name__)

MODES = ("agnostic", "realizable")
RELABEL = ("random", "fractional")


def agnostic_loss(vote: int, y: int, k: int, gamma: float) -> np.ndarray:
    """Coefficients of ``p -> p . ((2 e_vote - 1) / gamma - (2 e_y - 1))``."""
    c = np.full(k, -1.0 / gamma + 1.0)
    c[vote - 1] += 2.0 / gamma
    c[y - 1] -= 2.0
    return c


def realizable_loss(vote: int, y: int, gamma: float) -> float:
    """Coefficient of ``p -> p ((2 e_vote . e_y - 1) / gamma - 1)``."""
    return (2.0 * (vote == y) - 1.0) / gamma - 1.0


@dataclass
class OnlineTrace:
    """Everything needed to audit one pass of an online booster."""

    X: np.ndarray
    y: np.ndarray
    predictions: np.ndarray
    distributions: np.ndarray
    k: int
    gamma: float
    n_learners: int
    mode: str
    oco_regrets: np.ndarray

    @property
    def accuracy(self) -> float:
        return float(np.mean(self.predictions == self.y)) if self.y.size else 0.0


class OnlineBooster:
    """Online multiclass booster over ``N`` weak learners.

    Each round is ``predict(x)`` followed by ``observe(y)``.  Prediction
    sums the learners' one-hot votes, projects ``votes / (gamma N)`` onto
    the simplex and samples.  Observation replays an ``N``-step OCO game in
    which learner ``i`` is updated from the OCO play ``p_i`` and then
    reveals its loss; the OCO instance is reset after every round while
    the learners keep their state.
    """

    def __init__(self, learners: Sequence, k: int, gamma: float, mode: str = "agnostic",
                 relabel: str = "fractional", rng: Optional[np.random.Generator] = None):
        if not learners:
            raise InvalidConfigError("booster needs at least one weak learner")
        if mode not in MODES:
            raise InvalidConfigError(f"mode must be one of {MODES}, got {mode!r}")
        if relabel not in RELABEL:
            raise InvalidConfigError(f"relabel must be one of {RELABEL}, got {relabel!r}")
        self.learners = list(learners)
        self.k = check_k(k)
        self.gamma = check_gamma(gamma)
        self.mode = mode
        self.relabel = relabel
        self.rng = rng if rng is not None else np.random.default_rng(0)
        if mode == "agnostic":
            self.oco = OnlineGradientDescent(SimplexDomain(self.k), agnostic_gradient_bound(gamma, self.k))
        else:
            self.oco = OnlineGradientDescent(IntervalDomain(0.0, 1.0), realizable_gradient_bound(gamma))
        self.round = 0
        self.oco_regrets: List[float] = []
        self._pending = None
        self.last_distribution: Optional[np.ndarray] = None

    @property
    def n_learners(self) -> int:
        return len(self.learners)

    def predict(self, x) -> int:
        if self._pending is not None:
            raise ProtocolOrderError("predict called twice without observing the label")
        x = np.asarray(x, dtype=float)
        votes = np.array([w.predict(x) for w in self.learners], dtype=int)
        vote_sum = np.bincount(votes - 1, minlength=self.k).astype(float)
        dist = project_scaled_votes(vote_sum, self.gamma, self.n_learners)
        y_hat = sample_label(dist, self.rng)
        self._pending = (x, votes)
        self.last_distribution = dist
        return y_hat

    @property
    def cached_votes(self) -> Optional[np.ndarray]:
        return None if self._pending is None else self._pending[1].copy()

    def observe(self, y: int) -> "OnlineBooster":
        if self._pending is None:
            raise ProtocolOrderError("observe called before predict")
        if not 1 <= y <= self.k:
            raise InvalidLabelError(f"label {y!r} outside 1..{self.k}")
        x, votes = self._pending
        if self.mode == "agnostic":
            self._observe_agnostic(x, int(y), votes)
        else:
            self._observe_realizable(x, int(y), votes)
        self.oco_regrets.append(self.oco.regret())
        self.oco.reset()
        self._pending = None
        self.round += 1
        return self

    def _observe_agnostic(self, x, y, votes) -> None:
        labels = np.arange(1, self.k + 1)
        for learner, vote in zip(self.learners, votes):
            p = self.oco.play()
            if self.relabel == "random":
                learner.update(x, sample_label(p, self.rng), 1.0)
            elif hasattr(learner, "update_fractional"):
                learner.update_fractional(x, p)
            else:
                for ell, w in zip(labels, p):
                    learner.update(x, int(ell), float(w))
            self.oco.observe(agnostic_loss(int(vote), y, self.k, self.gamma))

    def _observe_realizable(self, x, y, votes) -> None:
        for learner, vote in zip(self.learners, votes):
            p = self.oco.play()
            if self.relabel == "random":
                if self.rng.random() < p:
                    learner.update(x, y, 1.0)
            elif p > 0.0:
                learner.update(x, y, float(p))
            self.oco.observe(realizable_loss(int(vote), y, self.gamma))

    def run(self, X, y) -> OnlineTrace:
        """Stream the examples once in the predict-then-observe order."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        preds = np.empty(y.size, dtype=int)
        dists = np.empty((y.size, self.k))
        start = len(self.oco_regrets)
        for t in range(y.size):
            preds[t] = self.predict(X[t])
            dists[t] = self.last_distribution
            self.observe(int(y[t]))
        return OnlineTrace(X, y, preds, dists, self.k, self.gamma, self.n_learners, self.mode,
                           np.asarray(self.oco_regrets[start:]))


# -- regret audit -------------------------------------------------------------


@dataclass
class RegretAudit:
    T: int
    best_gain: float
    booster_gain: float
    avg_regret: float
    avg_regret_mistakes: float
    expected_avg_regret: float
    oco_term: float
    measured_oco_term: float
    weak_term: Optional[float] = None
    bound: Optional[float] = None


def booster_regret_audit(trace: OnlineTrace, hclass: HypothesisClass,
                         weak_regret: Optional[float] = None,
                         cap: int = DEFAULT_CAP) -> RegretAudit:
    """Average regret of a booster run against the best member of ``hclass``.

    The comparator is found by enumeration.  The bound side combines the
    OGD guarantee ``1.5 G D sqrt(N) / N`` with ``weak_regret / (gamma T)``
    when a measured weak-learner regret is supplied.
    """
    if len(hclass) > cap:
        raise ClassTooLargeError(f"{len(hclass)} members exceed the audit cap {cap}")
    y = trace.y
    T = y.size
    H = hclass.predict_all(trace.X)
    best = float(np.max((2.0 * (H == y) - 1.0).sum(axis=1))) if T else 0.0
    gain = float(np.sum(2.0 * (trace.predictions == y) - 1.0))
    expected_gain = float(np.sum(2.0 * trace.distributions[np.arange(T), y - 1] - 1.0))
    n = trace.n_learners
    if trace.mode == "agnostic":
        G, D = agnostic_gradient_bound(trace.gamma, trace.k), math.sqrt(2.0)
    else:
        G, D = realizable_gradient_bound(trace.gamma), 1.0
    oco_term = 1.5 * G * D * math.sqrt(n) / n
    measured = float(np.mean(trace.oco_regrets)) / n if trace.oco_regrets.size else 0.0
    avg = (best - gain) / T if T else 0.0
    audit = RegretAudit(T, best, gain, avg, avg / 2.0, (best - expected_gain) / T if T else 0.0,
                        oco_term, measured)
    if weak_regret is not None:
        audit.weak_term = weak_regret / (trace.gamma * T)
        audit.bound = audit.weak_term + oco_term
    return audit


# -- improper game playing ----------------------------------------------------


@dataclass(frozen=True)
class BilinearPayoff:
    """``f(p, q) = p . (A q)``: linear in ``p`` for every fixed ``q``."""

    A: np.ndarray

    def value(self, p, q) -> float:
        return float(np.asarray(p) @ (self.A @ np.asarray(q)))

    def gradient(self, q) -> np.ndarray:
        return self.A @ np.asarray(q, dtype=float)


@dataclass
class GameResult:
    strategies: list
    plays: np.ndarray
    payoffs: np.ndarray
    regrets: np.ndarray

    @property
    def average_strategy(self):
        return np.mean(np.asarray(self.strategies, dtype=float), axis=0)

    @property
    def average_payoff(self) -> float:
        return float(np.mean(self.payoffs))


def improper_game_play(payoffs: Sequence, oracle: Callable, pool: OGDPool, T: int) -> GameResult:
    """Play ``T`` rounds of the decomposable game ``g(P, q) = sum_i f_i(P[i], q)``.

    Player A plays row ``i`` of ``P`` from OCO instance ``i`` of ``pool``;
    player B answers ``q_t = oracle(P_t)``; instance ``i`` then observes
    the linear loss ``p -> f_i(p, q_t)`` through ``payoffs[i].gradient``.
    """
    if len(payoffs) != pool.m:
        raise DimensionError(f"{len(payoffs)} payoffs for a pool of {pool.m} instances")
    strategies, plays, values = [], [], []
    for _ in range(T):
        P = pool.play()
        q = oracle(P)
        values.append(sum(f.value(P[i], q) for i, f in enumerate(payoffs)))
        pool.observe(np.stack([f.gradient(q) for f in payoffs]))
        strategies.append(q)
        plays.append(P)
    return GameResult(strategies, np.asarray(plays), np.asarray(values), pool.regrets())


# -- statistical boosters ----------------------------------------------------


@dataclass(frozen=True)
class FinalHypothesis:
    """Averaged weak hypotheses; predicts by projecting ``mean(h_t(x)) / gamma`` and sampling."""

    members: tuple
    gamma: float
    k: int

    def distributions(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.members:
            raise InvalidConfigError("final hypothesis has no members")
        votes = np.zeros((X.shape[0], self.k))
        rows = np.arange(X.shape[0])
        for h in self.members:
            votes[rows, h.predict_many(X) - 1] += 1.0
        return project_simplex(votes / (self.gamma * len(self.members)))

    def predict(self, x, rng: np.random.Generator) -> int:
        return sample_label(self.distributions(x)[0], rng)

    def predict_many(self, X, rng: np.random.Generator) -> np.ndarray:
        return sample_labels(self.distributions(X), rng)

    def expected_correlation(self, X, y) -> float:
        """Correlation on the uniform sample, in expectation over the final sampling step."""
        D = self.distributions(X)
        Y = labels_to_onehot(y, self.k)
        return float(np.mean(np.einsum("ij,ij->i", D, 2.0 * Y - 1.0)))


def final_predict(h_bar: FinalHypothesis, x, rng: np.random.Generator) -> int:
    return h_bar.predict(x, rng)


class BatchBooster:
    """Statistical booster keeping one OCO instance per sample point.

    Agnostic mode relabels: row ``i`` of ``P`` is a distribution over
    labels from which example ``i`` draws its training label.  Realizable
    mode reweights: ``P[i]`` in ``[0, 1]`` is the (unnormalized) chance of
    drawing example ``i`` with its true label.

    ``oracle(X, y)`` must return a hypothesis with ``predict_many``.  When
    ``audit_class`` is given, every round also measures the weak learner's
    per-label slack against that class on the relabeled sample.
    """

    def __init__(self, X, y, k: int, gamma: float, mode: str = "agnostic",
                 m0: Optional[int] = None, oracle: Optional[Callable] = None,
                 rng: Optional[np.random.Generator] = None,
                 audit_class: Optional[HypothesisClass] = None):
        if mode not in MODES:
            raise InvalidConfigError(f"mode must be one of {MODES}, got {mode!r}")
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=int)
        self.m = self.y.size
        if self.m < 1 or self.X.shape[0] != self.m:
            raise DimensionError("sample must contain matching features and labels")
        self.k = check_k(k)
        self.gamma = check_gamma(gamma)
        self.mode = mode
        self.m0 = self.m if m0 is None else int(m0)
        if self.m0 < 1:
            raise InvalidConfigError("m0 must be at least 1")
        self.oracle = oracle or (lambda Xs, ys: train_stump_oracle(Xs, ys, self.k))
        self.rng = rng if rng is not None else np.random.default_rng(0)
        if mode == "agnostic":
            self.pool = OGDPool(SimplexDomain(self.k), self.m, agnostic_gradient_bound(gamma, self.k))
        else:
            self.pool = OGDPool(IntervalDomain(0.0, 1.0), self.m, realizable_gradient_bound(gamma),
                                initial_point=1.0 / self.m)
        self.Y = labels_to_onehot(self.y, self.k)
        self.hypotheses: list = []
        self.weak_slack: List[float] = []
        self._audit_preds = None if audit_class is None else audit_class.predict_all(self.X)

    @property
    def P(self) -> np.ndarray:
        return self.pool.play()

    def step(self) -> None:
        P = self.pool.play()
        if self.mode == "agnostic":
            # relabel every point once, then draw uniformly; same law as relabeling per draw
            relabeled = sample_labels(P, self.rng)
            idx = self.rng.integers(0, self.m, size=self.m0)
            h = self.oracle(self.X[idx], relabeled[idx])
            H = labels_to_onehot(h.predict_many(self.X), self.k)
            C = (2.0 * H - 1.0) / self.gamma - (2.0 * self.Y - 1.0)
            if self._audit_preds is not None:
                self.weak_slack.append(self._slack(H, relabeled))
        else:
            total = P.sum()
            if total <= 0.0:
                logger.warning("all sample weights vanished; drawing uniformly this round")
                probs = np.full(self.m, 1.0 / self.m)
            else:
                probs = P / total
            idx = self.rng.choice(self.m, size=self.m0, p=probs)
            h = self.oracle(self.X[idx], self.y[idx])
            hits = (h.predict_many(self.X) == self.y).astype(float)
            C = (2.0 * hits - 1.0) / self.gamma - 1.0
        self.pool.observe(C)
        self.hypotheses.append(h)

    def _slack(self, H: np.ndarray, labels: np.ndarray) -> float:
        """Smallest per-sample eps making the per-label weak-learning inequality hold."""
        worst = 0.0
        hits_w = H[np.arange(self.m), labels - 1]
        for ell in range(1, self.k + 1):
            mask = labels == ell
            if not mask.any():
                continue
            comp = (2.0 * (self._audit_preds[:, mask] == ell) - 1.0).sum(axis=1).max()
            learner = float(np.sum(2.0 * hits_w[mask] - 1.0))
            worst = max(worst, (self.gamma * comp - learner) / self.m)
        return worst

    def fit(self, T: int) -> FinalHypothesis:
        if T < 1:
            raise InvalidConfigError("T must be at least 1")
        for _ in range(T):
            self.step()
        return self.final()

    def final(self) -> FinalHypothesis:
        return FinalHypothesis(tuple(self.hypotheses), self.gamma, self.k)

    def oco_regret(self) -> float:
        """Largest realized regret among the per-example OCO instances."""
        return float(self.pool.regrets().max())


def batch_fit_agnostic(X, y, k: int, T: int, gamma: float, m0: Optional[int] = None,
                       oracle: Optional[Callable] = None,
                       rng: Optional[np.random.Generator] = None) -> FinalHypothesis:
    return BatchBooster(X, y, k, gamma, "agnostic", m0, oracle, rng).fit(T)


def batch_fit_realizable(X, y, k: int, T: int, gamma: float, m0: Optional[int] = None,
                         oracle: Optional[Callable] = None,
                         rng: Optional[np.random.Generator] = None) -> FinalHypothesis:
    return BatchBooster(X, y, k, gamma, "realizable", m0, oracle, rng).fit(T)
