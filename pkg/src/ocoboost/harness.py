"""Datasets, synthetic streams and the experiment runner.

An experiment streams a dataset once per shuffle through a booster and
records the prequential accuracy.  Each value of ``gamma`` in the grid is
one *arm*; every (shuffle, arm) pair gets its own random source derived
from the master seed, keyed by the shuffle index and the value of
``gamma`` rather than by position, so adding arms never changes existing
ones.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .boost import BatchBooster, OnlineBooster, booster_regret_audit
from .core import Example, check_k
from .errors import ClassTooLargeError, IngestionError, InvalidConfigError
from .simplex import check_gamma
from .weak import (
    HypothesisClass,
    RewaLearner,
    StumpHypothesis,
    StumpLearner,
    enumerate_stumps,
    enumerate_weight_matrices,
    interior_thresholds,
    stump_class_size,
)

DEFAULT_GAMMA_GRID = (0.1, 0.3, 0.5, 0.7, 1.0)
ALGORITHMS = ("online-agnostic", "online-realizable", "batch-agnostic", "batch-realizable")
SYNTH_KINDS = ("realizable-stump", "label-noise", "adversarial-drift", "balance-scale")
REWA_CLASSES = ("stumps-binary", "stumps-kwise", "weight-matrix")
MISSING = {"", "?", "na", "nan", "NA", "NaN"}
COMPARATOR_CAP = 20_000


# -- data ---------------------------------------------------------------------


@dataclass
class Dataset:
    """Features in ``[0, 1]`` (one row per example) with labels in ``1..k``."""

    X: np.ndarray
    y: np.ndarray
    k: int
    label_map: Dict[str, int] = field(default_factory=dict)
    name: str = "data"
    meta: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        check_k(self.k)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.size:
            raise IngestionError("features must be a matrix with one row per label")
        if self.y.size and (self.y.min() < 1 or self.y.max() > self.k):
            raise IngestionError(f"labels outside 1..{self.k}")

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.y.size

    @property
    def examples(self) -> List[Example]:
        return [Example(x, int(label)) for x, label in zip(self.X, self.y)]


def _parse_float(s: str) -> Optional[float]:
    try:
        v = float(s)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def load_csv(path, has_header: bool = False, label_col: int = -1) -> Dataset:
    """Read a comma-separated file into a normalized :class:`Dataset`.

    Labels are numbered in order of first appearance.  Columns holding any
    non-numeric entry are one-hot encoded; in numeric columns missing
    entries (empty, ``?`` or ``NA``) take the column mean.  Every resulting
    column is min-max scaled to ``[0, 1]`` (constant columns become 0).
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    if has_header and rows:
        rows = rows[1:]
    if not rows:
        raise IngestionError(f"{path} contains no data rows")
    width = len(rows[0])
    for n, r in enumerate(rows, start=2 if has_header else 1):
        if len(r) != width:
            raise IngestionError(f"row {n} has {len(r)} fields, expected {width}")
    if width < 2:
        raise IngestionError("need at least one feature column and a label column")
    lc = label_col if label_col >= 0 else width + label_col
    if not 0 <= lc < width:
        raise IngestionError(f"label column {label_col} outside the {width} columns")

    label_map: Dict[str, int] = {}
    y = []
    for n, r in enumerate(rows):
        raw = r[lc].strip()
        if raw in MISSING:
            raise IngestionError(f"data row {n + 1} has no label")
        y.append(label_map.setdefault(raw, len(label_map) + 1))
    if len(label_map) < 2:
        raise IngestionError("need at least two distinct labels")

    columns = []
    for c in range(width):
        if c == lc:
            continue
        cells = [r[c].strip() for r in rows]
        present = [s for s in cells if s not in MISSING]
        values = [_parse_float(s) for s in present]
        if present and all(v is not None for v in values):
            mean = float(np.mean(values))
            col = np.array([mean if s in MISSING else float(s) for s in cells])
            columns.append(col[:, None])
        else:
            cats = list(dict.fromkeys(present))
            onehot = np.zeros((len(rows), len(cats)))
            index = {cat: j for j, cat in enumerate(cats)}
            for i, s in enumerate(cells):
                if s not in MISSING:
                    onehot[i, index[s]] = 1.0
            columns.append(onehot)
    X = np.hstack(columns)
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    X = (X - lo) / span
    return Dataset(X, np.array(y), len(label_map), label_map, name=os.path.basename(str(path)))


def balance_scale() -> Dataset:
    """The 625-row balance-scale problem, generated from its defining rule.

    Attributes are left weight, left distance, right weight and right
    distance, each in ``1..5``; the scale tips to the side with the larger
    weight times distance.  Rows follow the canonical file order, so the
    first-appearance label map is ``B -> 1, R -> 2, L -> 3``.
    """
    rows, labels = [], []
    for lw, ld, rw, rd in itertools.product(range(1, 6), repeat=4):
        left, right = lw * ld, rw * rd
        rows.append((lw, ld, rw, rd))
        labels.append("L" if left > right else "R" if right > left else "B")
    label_map: Dict[str, int] = {}
    y = [label_map.setdefault(s, len(label_map) + 1) for s in labels]
    X = (np.array(rows, dtype=float) - 1.0) / 4.0
    return Dataset(X, np.array(y), 3, label_map, name="balance-scale")


def write_balance_scale_csv(path) -> None:
    """Write the balance-scale rows in the usual file layout (class label first)."""
    inverse = {v: k for k, v in balance_scale().label_map.items()}
    data = balance_scale()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        for x, label in zip(data.X, data.y):
            w.writerow([inverse[int(label)]] + [int(v) for v in x * 4 + 1])


def _random_kwise_stump(rng: np.random.Generator, d: int, k: int, delta: float,
                        avoid: Optional[StumpHypothesis] = None) -> StumpHypothesis:
    # thresholds on the grid nearest to j/k keep every leaf's mass near 1/k,
    # so no single split explains most of the labels
    grid = interior_thresholds(delta)
    nearest = np.unique(grid[np.abs(grid[None, :] - np.arange(1, k)[:, None] / k).argmin(axis=1)])
    if nearest.size < k - 1:
        raise InvalidConfigError(f"delta={delta} is too coarse for {k} leaves")
    thr = tuple(float(t) for t in nearest)
    while True:
        feature = int(rng.integers(d))
        leaves = tuple(int(v) for v in rng.permutation(k) + 1)
        stump = StumpHypothesis(feature, thr, leaves)
        if avoid is None or (stump.feature, stump.leaves) != (avoid.feature, avoid.leaves):
            return stump


def synth_stream(kind: str, k: int = 3, d: int = 2, T: int = 1000, seed: int = 0,
                 rate: float = 0.2, delta: float = 0.1) -> Dataset:
    """Controlled streams for audits.

    ``realizable-stump`` labels uniform points by a hidden depth-1 tree
    with ``k`` leaves on the delta-grid; ``label-noise`` then replaces each
    label by a uniformly chosen wrong one with probability ``rate``;
    ``adversarial-drift`` switches to a different hidden tree at ``T/2``.
    ``balance-scale`` ignores the size arguments.  The hidden trees are
    stored in ``meta``.
    """
    if kind == "balance-scale":
        return balance_scale()
    if kind not in SYNTH_KINDS:
        raise InvalidConfigError(f"unknown stream kind {kind!r}; choose from {SYNTH_KINDS}")
    k = check_k(k)
    if d < 1 or T < 1:
        raise InvalidConfigError("need d >= 1 and T >= 1")
    rng = np.random.default_rng(seed)
    X = rng.random((T, d))
    truth = _random_kwise_stump(rng, d, k, delta)
    y = truth.predict_many(X)
    meta: Dict[str, object] = {"kind": kind, "truth": [_stump_dict(truth)]}
    if kind == "adversarial-drift":
        second = _random_kwise_stump(rng, d, k, delta, avoid=truth)
        half = T // 2
        y[half:] = second.predict_many(X[half:])
        meta["truth"].append(_stump_dict(second))
        meta["switch"] = half
    if kind == "label-noise":
        if not 0.0 <= rate <= 1.0:
            raise InvalidConfigError(f"noise rate must lie in [0, 1], got {rate!r}")
        flip = rng.random(T) < rate
        shift = rng.integers(1, k, size=T)
        y = np.where(flip, (y - 1 + shift) % k + 1, y)
        meta["rate"] = rate
        meta["clean_labels"] = truth.predict_many(X).tolist()
    return Dataset(X, y, k, {str(i): i for i in range(1, k + 1)}, name=kind, meta=meta)


def _stump_dict(s: StumpHypothesis) -> dict:
    return {"feature": s.feature, "thresholds": list(s.thresholds), "leaves": list(s.leaves)}


# -- configuration and reports --------------------------------------------------


@dataclass
class ExperimentConfig:
    algorithm: str = "online-agnostic"
    n_learners: int = 100
    rounds: Optional[int] = None
    gamma_grid: Tuple[float, ...] = DEFAULT_GAMMA_GRID
    relabel: str = "fractional"
    weak_learner: str = "stump"
    rewa_class: str = "stumps-binary"
    rewa_eta: float = 1.0
    delta: float = 0.1
    shuffles: int = 5
    seed: int = 0
    m0: Optional[int] = None

    def __post_init__(self):
        self.gamma_grid = tuple(float(g) for g in self.gamma_grid)
        self.validate()

    def validate(self) -> "ExperimentConfig":
        if self.algorithm not in ALGORITHMS:
            raise InvalidConfigError(f"algorithm must be one of {ALGORITHMS}")
        if not self.gamma_grid:
            raise InvalidConfigError("gamma grid is empty")
        for g in self.gamma_grid:
            check_gamma(g)
        if self.shuffles < 1:
            raise InvalidConfigError("shuffles must be at least 1")
        if self.n_learners < 1:
            raise InvalidConfigError("need at least one weak learner")
        if self.rounds is not None and self.rounds < 1:
            raise InvalidConfigError("rounds must be positive")
        if self.relabel not in ("random", "fractional"):
            raise InvalidConfigError("relabel must be 'random' or 'fractional'")
        if self.weak_learner not in ("stump", "rewa"):
            raise InvalidConfigError("weak learner must be 'stump' or 'rewa'")
        if self.rewa_class not in REWA_CLASSES:
            raise InvalidConfigError(f"rewa class must be one of {REWA_CLASSES}")
        if self.m0 is not None and self.m0 < 1:
            raise InvalidConfigError("m0 must be positive")
        return self

    def with_gamma(self, gamma: float) -> "ExperimentConfig":
        cfg = asdict(self)
        cfg["gamma_grid"] = (gamma,)
        return ExperimentConfig(**cfg)


@dataclass
class ArmResult:
    gamma: float
    shuffle: int
    accuracy: float
    avg_regret: Optional[float]
    predictions: List[int]
    truths: List[int]
    wall_time_seconds: float


@dataclass
class RunReport:
    """Outcome of an experiment.

    ``accuracy`` averages, over shuffles, the best arm of each shuffle.
    ``per_gamma`` holds one row per arm with its accuracy averaged over
    shuffles.  Timing lives only in fields named ``wall_time_seconds``.
    """

    config: dict
    dataset: dict
    accuracy: float
    shuffle_accuracies: List[float]
    best_gammas: List[float]
    avg_regret: Optional[float]
    per_gamma: List[dict]
    seed: int
    trace: List[dict]
    wall_time_seconds: float

    def to_dict(self, include_trace: bool = True, include_timing: bool = True) -> dict:
        out = asdict(self)
        if not include_trace:
            out.pop("trace")
        if not include_timing:
            out = strip_timing(out)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        data = dict(data)
        data.setdefault("trace", [])
        data.setdefault("wall_time_seconds", 0.0)
        return cls(**data)


def strip_timing(obj):
    """Drop every ``wall_time_seconds`` entry, recursively."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k != "wall_time_seconds"}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def emit_report(report: RunReport, path, trace: bool = False) -> None:
    """Write ``report`` as UTF-8 JSON with sorted keys; per-round arrays only if ``trace``."""
    text = report_json(report, trace)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def report_json(report: RunReport, trace: bool = False, timing: bool = True) -> str:
    return json.dumps(report.to_dict(include_trace=trace, include_timing=timing), sort_keys=True,
                      indent=2, ensure_ascii=False) + "\n"


def load_report(path) -> RunReport:
    with open(path, encoding="utf-8") as fh:
        return RunReport.from_dict(json.load(fh))


# -- running ------------------------------------------------------------------


def arm_seed(master: int, shuffle: int, gamma: float) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=(1, int(shuffle), int(round(gamma * 1e6))))


def shuffle_seed(master: int, shuffle: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=(0, int(shuffle)))


def build_class(cfg: ExperimentConfig, d: int, k: int) -> HypothesisClass:
    if cfg.rewa_class == "weight-matrix":
        return enumerate_weight_matrices(d, k, cfg.delta)
    splits = "binary" if cfg.rewa_class == "stumps-binary" else "kwise"
    return enumerate_stumps(d, k, cfg.delta, splits)


def comparator_class(cfg: ExperimentConfig, d: int, k: int) -> Optional[HypothesisClass]:
    """The enumerable class regret is measured against, or ``None`` if too large."""
    try:
        if cfg.weak_learner == "rewa":
            return build_class(cfg, d, k)
        if stump_class_size(d, k, cfg.delta, "binary") > COMPARATOR_CAP:
            return None
        return enumerate_stumps(d, k, cfg.delta, "binary")
    except ClassTooLargeError:
        return None


def make_learners(cfg: ExperimentConfig, d: int, k: int, rng: np.random.Generator,
                  hclass: Optional[HypothesisClass] = None) -> list:
    if cfg.weak_learner == "stump":
        return [StumpLearner(d, k, cfg.delta) for _ in range(cfg.n_learners)]
    hclass = hclass if hclass is not None else build_class(cfg, d, k)
    seeds = rng.integers(2**63, size=cfg.n_learners)
    return [RewaLearner(hclass, cfg.rewa_eta, np.random.default_rng(int(s))) for s in seeds]


def _run_arm(args) -> ArmResult:
    cfg, X, y, k, gamma, shuffle = args
    start = time.perf_counter()
    rng = np.random.default_rng(arm_seed(cfg.seed, shuffle, gamma))
    d = X.shape[1]
    hclass = comparator_class(cfg, d, k)
    avg_regret = None
    if cfg.algorithm.startswith("online"):
        mode = cfg.algorithm.split("-")[1]
        learners = make_learners(cfg, d, k, rng, hclass if cfg.weak_learner == "rewa" else None)
        booster = OnlineBooster(learners, k, gamma, mode=mode, relabel=cfg.relabel, rng=rng)
        trace = booster.run(X, y)
        preds = trace.predictions
        if hclass is not None:
            avg_regret = booster_regret_audit(trace, hclass).avg_regret
    else:
        mode = cfg.algorithm.split("-")[1]
        T = cfg.rounds if cfg.rounds is not None else 100
        booster = BatchBooster(X, y, k, gamma, mode, m0=cfg.m0, rng=rng)
        final = booster.fit(T)
        preds = final.predict_many(X, rng)
        if hclass is not None:
            H = hclass.predict_all(X)
            best = float(np.max((2.0 * (H == y) - 1.0).sum(axis=1)))
            avg_regret = (best - float(np.sum(2.0 * (preds == y) - 1.0))) / y.size
    acc = float(np.mean(preds == y))
    return ArmResult(gamma, shuffle, acc, avg_regret, preds.tolist(), y.tolist(),
                     time.perf_counter() - start)


def _workers() -> int:
    env = os.environ.get("OCO_BOOST_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidConfigError(f"OCO_BOOST_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _prepare(data: Dataset, cfg: ExperimentConfig, shuffle: int):
    rng = np.random.default_rng(shuffle_seed(cfg.seed, shuffle))
    order = rng.permutation(len(data))
    if cfg.rounds is not None and cfg.algorithm.startswith("online"):
        order = order[: cfg.rounds]
    return data.X[order], data.y[order]


def run_arms(data: Dataset, cfg: ExperimentConfig) -> List[ArmResult]:
    """Run every (shuffle, gamma) pair; results come back in a fixed order."""
    cfg.validate()
    if len(data) == 0:
        raise InvalidConfigError("dataset is empty")
    if data.y.max() > data.k:
        raise InvalidConfigError("labels exceed the configured class count")
    jobs = []
    for s in range(cfg.shuffles):
        X, y = _prepare(data, cfg, s)
        for g in cfg.gamma_grid:
            jobs.append((cfg, X, y, data.k, g, s))
    workers = min(_workers(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_arm, jobs))
    return [_run_arm(j) for j in jobs]


def _dataset_summary(data: Dataset) -> dict:
    return {"name": data.name, "n": len(data), "d": data.d, "k": data.k,
            "label_map": dict(data.label_map)}


def _per_gamma(cfg: ExperimentConfig, arms: List[ArmResult]) -> List[dict]:
    rows = []
    for g in cfg.gamma_grid:
        mine = [a for a in arms if a.gamma == g]
        regrets = [a.avg_regret for a in mine if a.avg_regret is not None]
        rows.append({
            "gamma": g,
            "accuracy": float(np.mean([a.accuracy for a in mine])),
            "shuffle_accuracies": [a.accuracy for a in mine],
            "avg_regret": float(np.mean(regrets)) if regrets else None,
            "wall_time_seconds": float(np.mean([a.wall_time_seconds for a in mine])),
        })
    return rows


def _best_index(values: Sequence[float], gammas: Sequence[float]) -> int:
    """Index of the largest value; ties go to the smaller gamma."""
    return min(range(len(values)), key=lambda i: (-values[i], gammas[i]))


def _report(data: Dataset, cfg: ExperimentConfig, chosen: List[ArmResult],
            per_gamma: List[dict]) -> RunReport:
    regrets = [a.avg_regret for a in chosen if a.avg_regret is not None]
    return RunReport(
        config=_config_dict(cfg),
        dataset=_dataset_summary(data),
        accuracy=float(np.mean([a.accuracy for a in chosen])),
        shuffle_accuracies=[a.accuracy for a in chosen],
        best_gammas=[a.gamma for a in chosen],
        avg_regret=float(np.mean(regrets)) if regrets else None,
        per_gamma=per_gamma,
        seed=cfg.seed,
        trace=[{"shuffle": a.shuffle, "gamma": a.gamma, "predictions": a.predictions,
                "truths": a.truths} for a in chosen],
        wall_time_seconds=float(np.mean([a.wall_time_seconds for a in chosen])),
    )


def _config_dict(cfg: ExperimentConfig) -> dict:
    out = asdict(cfg)
    out["gamma_grid"] = list(cfg.gamma_grid)
    return out


def run_experiment(data: Dataset, cfg: ExperimentConfig) -> RunReport:
    """Stream the data through the booster once per shuffle and per gamma.

    For each shuffle the best arm is kept; the reported accuracy is the
    mean of those per-shuffle best accuracies.
    """
    arms = run_arms(data, cfg)
    chosen = []
    for s in range(cfg.shuffles):
        mine = [a for a in arms if a.shuffle == s]
        chosen.append(mine[_best_index([a.accuracy for a in mine], [a.gamma for a in mine])])
    return _report(data, cfg, chosen, _per_gamma(cfg, arms))


def gamma_sweep(data: Dataset, cfg: ExperimentConfig) -> RunReport:
    """Run every arm and report the single gamma with the best mean accuracy."""
    arms = run_arms(data, cfg)
    table = _per_gamma(cfg, arms)
    best = _best_index([r["accuracy"] for r in table], list(cfg.gamma_grid))
    g = cfg.gamma_grid[best]
    chosen = sorted((a for a in arms if a.gamma == g), key=lambda a: a.shuffle)
    return _report(data, cfg, chosen, table)
