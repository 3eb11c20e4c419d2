"""Numerical checks of the inequalities and identities the boosters rely on.

Every ``check_*`` function is pure given its random source and returns a
:class:`LemmaCheckResult`.  Deterministic statements are tested against a
fixed tolerance; statistical ones against three standard errors of a
paired difference.  A failing result carries the inputs that produced the
worst violation so it can be replayed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .core import check_k
from .errors import InvalidConfigError, OracleBudgetError
from .simplex import check_gamma, project_simplex, sample_labels

IDENTITY_TOL = 1e-12
PROJECTION_TOL = 1e-9
DEFAULT_GAMMAS = (0.1, 0.25, 0.5, 0.75, 1.0)
GRID_MAX_K = 4
GRID_MAX_CELLS = 10**7


@dataclass
class LemmaCheckResult:
    lemma_id: str
    passed: bool
    worst_violation: float
    witness: Dict[str, Any] = field(default_factory=dict)
    tolerance: float = 0.0

    def to_dict(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "passed": self.passed,
            "worst_violation": self.worst_violation,
            "tolerance": self.tolerance,
            "witness": _jsonable(self.witness),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _rng(rng) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(0)


def _result(lemma_id: str, violations: np.ndarray, witnesses, tol: float) -> LemmaCheckResult:
    """Summarize per-sample violations (positive = bound broken by that much)."""
    if violations.size == 0:
        return LemmaCheckResult(lemma_id, True, 0.0, {}, tol)
    i = int(np.argmax(violations))
    worst = float(violations[i])
    return LemmaCheckResult(lemma_id, worst <= tol, worst, witnesses(i), tol)


def _dirichlet_with_vertices(rng, k: int, trials: int) -> np.ndarray:
    return np.vstack([rng.dirichlet(np.ones(k), size=trials), np.eye(k)])


# -- deterministic lemmas -----------------------------------------------------


def check_lowerbound(k: int, trials: int = 10_000, rng=None) -> LemmaCheckResult:
    """``p . (2h - 2y) >= 2 (h . y - 1)`` for basis vectors ``h, y`` and ``p`` in the simplex."""
    k = check_k(k)
    P = _dirichlet_with_vertices(_rng(rng), k, trials)
    a, b = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    a, b = a.ravel(), b.ravel()
    lhs = 2.0 * (P[:, a] - P[:, b])                 # (samples, pairs)
    rhs = 2.0 * ((a == b).astype(float) - 1.0)
    gap = rhs[None, :] - lhs

    def witness(i):
        s, j = np.unravel_index(i, gap.shape)
        return {"k": k, "p": P[s], "h": int(a[j]) + 1, "y": int(b[j]) + 1,
                "lhs": float(lhs[s, j]), "rhs": float(rhs[j])}

    return _result("lowerbound", gap.ravel(), witness, PROJECTION_TOL)


def _upper_terms(H: np.ndarray, gamma: float):
    proj = project_simplex(H / gamma)
    zeros = (proj == 0.0).sum(axis=1)
    return proj, zeros


def check_upperbound(k: int, gammas: Sequence[float] = DEFAULT_GAMMAS, trials: int = 10_000,
                     rng=None) -> LemmaCheckResult:
    """Some vertex ``p`` has ``p . ((2h-1)/gamma - (2y-1)) <= 2 (Pi(h/gamma) . y - 1)``.

    Besides the minimum over all vertices, the specific witness used in the
    existence argument is checked: ``p = y`` unless ``Pi(h/gamma)`` is the
    basis vector ``y``, in which case the best other vertex.
    """
    k = check_k(k)
    rng = _rng(rng)
    worst, witness = -np.inf, {}
    for gamma in gammas:
        gamma = check_gamma(gamma)
        H = _dirichlet_with_vertices(rng, k, trials)
        proj, zeros = _upper_terms(H, gamma)
        for y in range(k):
            C = (2.0 * H - 1.0) / gamma + 1.0
            C[:, y] -= 2.0                          # coefficients of the linear loss in p
            rhs = 2.0 * (proj[:, y] - 1.0)
            vertex_gap = C.min(axis=1) - rhs
            onehot_at_y = (zeros == k - 1) & (proj[:, y] > 0.0)
            others = np.delete(C, y, axis=1).min(axis=1)
            constructive = np.where(onehot_at_y, others, C[:, y]) - rhs
            gap = np.maximum(vertex_gap, constructive)
            i = int(np.argmax(gap))
            if gap[i] > worst:
                worst = float(gap[i])
                witness = {"k": k, "gamma": gamma, "h": H[i], "y": y + 1,
                           "projection": proj[i], "vertex_gap": float(vertex_gap[i]),
                           "constructive_gap": float(constructive[i])}
    return LemmaCheckResult("upperbound", worst <= PROJECTION_TOL, worst, witness, PROJECTION_TOL)


def check_upperbound_real(k: int, gammas: Sequence[float] = DEFAULT_GAMMAS, trials: int = 10_000,
                          rng=None) -> LemmaCheckResult:
    """Some ``p`` in ``{0, 1}`` has ``p ((2 h.y - 1)/gamma - 1) <= 2 (Pi(h/gamma) . y - 1)``."""
    k = check_k(k)
    rng = _rng(rng)
    worst, witness = -np.inf, {}
    for gamma in gammas:
        gamma = check_gamma(gamma)
        H = _dirichlet_with_vertices(rng, k, trials)
        proj, _ = _upper_terms(H, gamma)
        for y in range(k):
            lhs = np.minimum(0.0, (2.0 * H[:, y] - 1.0) / gamma - 1.0)
            gap = lhs - 2.0 * (proj[:, y] - 1.0)
            i = int(np.argmax(gap))
            if gap[i] > worst:
                worst = float(gap[i])
                witness = {"k": k, "gamma": gamma, "h": H[i], "y": y + 1, "projection": proj[i]}
    return LemmaCheckResult("upperbound_real", worst <= PROJECTION_TOL, worst, witness, PROJECTION_TOL)


def check_equivalence(trials: int = 100_000, rng=None, ks: Sequence[int] = (2, 3, 4, 5, 6),
                      gamma_low: float = 0.05) -> LemmaCheckResult:
    """``p . ((2h - 1)/gamma - (2y - 1)) == (2p - 1) . (h/gamma - y)`` up to rounding.

    ``gamma`` is drawn uniformly from ``[gamma_low, 1]``: both sides scale
    like ``1/gamma``, so the absolute rounding error grows without bound as
    ``gamma -> 0`` even though the identity is exact.
    """
    rng = _rng(rng)
    ks = [check_k(k) for k in ks]
    per_k = np.full(len(ks), trials // len(ks))
    per_k[: trials % len(ks)] += 1
    worst, witness = 0.0, {}
    for k, n in zip(ks, per_k):
        if n == 0:
            continue
        P = rng.dirichlet(np.ones(k), size=n)
        H = rng.dirichlet(np.ones(k), size=n)
        Y = np.eye(k)[rng.integers(0, k, size=n)]
        g = rng.uniform(gamma_low, 1.0, size=n)[:, None]
        lhs = np.sum(P * ((2.0 * H - 1.0) / g - (2.0 * Y - 1.0)), axis=1)
        rhs = np.sum((2.0 * P - 1.0) * (H / g - Y), axis=1)
        gap = np.abs(lhs - rhs)
        i = int(np.argmax(gap))
        if gap[i] > worst:
            worst = float(gap[i])
            witness = {"k": k, "p": P[i], "h": H[i], "y": int(Y[i].argmax()) + 1,
                       "gamma": float(g[i, 0]), "lhs": float(lhs[i]), "rhs": float(rhs[i])}
    return LemmaCheckResult("equivalence", worst <= IDENTITY_TOL, worst, witness, IDENTITY_TOL)


# -- statistical lemmas -------------------------------------------------------


def _three_sigma(lemma_id: str, diffs: np.ndarray, witness: dict) -> LemmaCheckResult:
    """Pass when every column mean of ``diffs`` is within 3 standard errors of 0."""
    diffs = np.atleast_2d(diffs.T).T
    n = diffs.shape[0]
    mean = diffs.mean(axis=0)
    se = diffs.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
    excess = np.abs(mean) - 3.0 * se
    j = int(np.argmax(excess))
    witness = dict(witness, mean_gap=mean, standard_error=se, coordinate=j + 1)
    return LemmaCheckResult(lemma_id, bool(np.all(excess <= 0.0)), float(np.abs(mean[j])),
                            witness, float(3.0 * se[j]))


def check_expectation(trials: int = 100_000, rng=None, k: int = 3,
                      dependent: bool = False, point_mass: bool = False) -> LemmaCheckResult:
    """Monte Carlo check of ``E[y . W] = E[p . W]`` when ``y ~ p`` independently of ``W``.

    Each sample draws ``p`` from a Dirichlet, a label ``y ~ p`` and a
    prediction ``W`` from a randomized predictor whose law may depend on
    ``p`` but not on ``y``.  ``dependent=True`` sets ``W = y`` instead,
    which breaks the independence the identity needs; the check is then
    expected to fail.  ``point_mass=True`` draws ``p`` among the vertices,
    which makes both sides coincide sample by sample.
    """
    k = check_k(k)
    rng = _rng(rng)
    if point_mass:
        P = np.eye(k)[rng.integers(0, k, size=trials)]
    else:
        P = rng.dirichlet(np.ones(k), size=trials)
    y = sample_labels(P, rng)
    if dependent:
        W = y
    else:
        Q = 0.5 * P + 0.5 * rng.dirichlet(np.ones(k), size=trials)
        W = sample_labels(Q, rng)
    rows = np.arange(trials)
    diffs = (y == W).astype(float) - P[rows, W - 1]
    return _three_sigma("expectation", diffs, {"k": k, "trials": trials, "dependent": dependent})


def check_prediction(trials: int = 100_000, rng=None, k: int = 3, n_learners: int = 10,
                     gamma: float = 0.5, marginals: Optional[np.ndarray] = None) -> LemmaCheckResult:
    """Monte Carlo check that the sampled prediction has mean ``E[Pi(votes / (gamma N))]``.

    Weak learner ``i`` votes by drawing from row ``i`` of ``marginals``
    (random Dirichlet rows by default; one-hot rows make the votes
    deterministic).  The sampled one-hot prediction minus the projected
    distribution is averaged per coordinate.
    """
    k = check_k(k)
    gamma = check_gamma(gamma)
    rng = _rng(rng)
    M = rng.dirichlet(np.ones(k), size=n_learners) if marginals is None else np.asarray(marginals, float)
    if M.shape[1] != k:
        raise InvalidConfigError("marginals must have k columns")
    n = M.shape[0]
    votes = np.zeros((trials, k))
    for i in range(n):
        labels = sample_labels(np.broadcast_to(M[i], (trials, k)), rng)
        votes[np.arange(trials), labels - 1] += 1.0
    D = project_simplex(votes / (gamma * n))
    y_hat = sample_labels(D, rng)
    diffs = np.eye(k)[y_hat - 1] - D
    return _three_sigma("prediction", diffs, {"k": k, "trials": trials, "gamma": gamma,
                                              "marginals": M})


# -- projection oracles -------------------------------------------------------


def _exact_projection_one(v: Sequence[float]) -> np.ndarray:
    s = sorted((float(x) for x in v), reverse=True)
    running, theta = 0.0, 0.0
    for j, value in enumerate(s, start=1):
        running += value
        t = (running - 1.0) / j
        if value - t > 0:
            theta = t
        else:
            break
    return np.array([max(float(x) - theta, 0.0) for x in v])


def _grid_projection(V: np.ndarray, units: int, chunk: int = 512) -> np.ndarray:
    """Nearest point of ``{a / units : a integer >= 0, sum a = units}`` to each row.

    ``||a/n - v||^2`` is separable and convex in each integer ``a_i``, so
    taking the ``units`` cheapest marginal increments over all coordinates
    yields an exact minimizer (ties give equal objective values).
    """
    m, k = V.shape
    r = 1.0 / units
    steps = np.arange(units)                          # a_i before the increment
    out = np.empty_like(V)
    for lo in range(0, m, chunk):
        block = V[lo:lo + chunk]
        # cost of raising a_i from s to s + 1
        marg = r * r * (2.0 * steps[None, None, :] + 1.0) - 2.0 * r * block[:, :, None]
        flat = marg.reshape(block.shape[0], -1)
        chosen = np.argpartition(flat, units - 1, axis=1)[:, :units] // units
        counts = np.stack([np.bincount(row, minlength=k) for row in chosen])
        out[lo:lo + chunk] = counts * r
    return out


def enumerate_grid_projection(v, resolution: float) -> np.ndarray:
    """Literal search over every grid point of the simplex; only for coarse grids."""
    v = np.asarray(v, dtype=float)
    k = v.size
    units = int(round(1.0 / resolution))
    size = math.comb(units + k - 1, k - 1)
    if size > 2 * 10**6:
        raise OracleBudgetError(f"{size} grid points exceed the enumeration budget")
    best, best_d = None, np.inf
    for bars in _compositions(units, k):
        p = np.asarray(bars, dtype=float) / units
        dist = float(np.sum((p - v) ** 2))
        if dist < best_d:
            best, best_d = p, dist
    return best


def _compositions(n: int, k: int):
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def brute_force_projection(v, resolution: float = 1e-3, mode: str = "grid") -> np.ndarray:
    """Reference projections for testing :func:`project_simplex`.

    ``mode="grid"`` returns the point of the resolution grid on the simplex
    closest to ``v`` (``k <= 4``); ``mode="exact"`` is a separately written
    scalar sort-and-threshold routine.  ``v`` may be one vector or a matrix
    of row vectors.
    """
    V = np.atleast_2d(np.asarray(v, dtype=float))
    single = np.ndim(v) == 1
    if mode == "exact":
        out = np.stack([_exact_projection_one(row) for row in V])
    elif mode == "grid":
        k = V.shape[1]
        if not 0 < resolution <= 1:
            raise InvalidConfigError(f"resolution must lie in (0, 1], got {resolution!r}")
        units = int(round(1.0 / resolution))
        if k > GRID_MAX_K or k * units > GRID_MAX_CELLS:
            raise OracleBudgetError(f"grid oracle limited to k <= {GRID_MAX_K}; got k={k}")
        out = _grid_projection(V, units)
    else:
        raise InvalidConfigError(f"unknown oracle mode {mode!r}")
    return out[0] if single else out


# -- suite --------------------------------------------------------------------


def run_all(seed: int = 0, trials: int = 10_000, mc_trials: int = 100_000,
            ks: Sequence[int] = (2, 3, 4, 5, 6)) -> list:
    """Every check at its default size, each with its own child seed."""
    seeds = np.random.SeedSequence(seed).spawn(3 * len(ks) + 3)
    rngs = iter(np.random.default_rng(s) for s in seeds)
    results = []
    for k in ks:
        results.append(check_lowerbound(k, trials, next(rngs)))
        results.append(check_upperbound(k, DEFAULT_GAMMAS, trials, next(rngs)))
        results.append(check_upperbound_real(k, DEFAULT_GAMMAS, trials, next(rngs)))
    results.append(check_equivalence(mc_trials, next(rngs), ks))
    results.append(check_expectation(mc_trials, next(rngs)))
    results.append(check_prediction(mc_trials, next(rngs)))
    return results
