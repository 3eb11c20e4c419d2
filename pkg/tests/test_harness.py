import json

import numpy as np
import pytest

from ocoboost.errors import IngestionError, InvalidConfigError
from ocoboost.harness import (
    ExperimentConfig,
    balance_scale,
    emit_report,
    gamma_sweep,
    load_csv,
    load_report,
    report_json,
    run_experiment,
    strip_timing,
    synth_stream,
    _prepare,
    write_balance_scale_csv,
)
from ocoboost.weak import enumerate_stumps


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_label_map_first_appearance(tmp_path):
    data = load_csv(write(tmp_path, "1,a\n2,b\n3,a\n"))
    assert data.k == 2
    assert data.label_map == {"a": 1, "b": 2}
    assert data.y.tolist() == [1, 2, 1]


def test_min_max_normalization(tmp_path):
    data = load_csv(write(tmp_path, "0,x\n5,y\n10,x\n"))
    assert data.X[:, 0].tolist() == [0.0, 0.5, 1.0]


def test_missing_value_mean_imputation(tmp_path):
    # column mean of (0, 0.8) is 0.4; it is imputed before scaling
    data = load_csv(write(tmp_path, "0,1,a\n?,2,b\n0.8,3,a\n"))
    np.testing.assert_allclose(data.X[:, 0], [0.0, 0.5, 1.0])


def test_header_and_label_column(tmp_path):
    data = load_csv(write(tmp_path, "cls,f1,f2\nL,1,5\nR,2,5\nL,3,5\n"), has_header=True,
                    label_col=0)
    assert data.label_map == {"L": 1, "R": 2}
    assert data.d == 2
    assert data.X[:, 1].tolist() == [0.0, 0.0, 0.0]


def test_non_numeric_columns_one_hot(tmp_path):
    data = load_csv(write(tmp_path, "red,1,a\nblue,2,b\nred,3,a\n"))
    assert data.d == 3
    assert data.X[:, :2].tolist() == [[1, 0], [0, 1], [1, 0]]


@pytest.mark.parametrize("text,match", [
    ("1,a\n2,a\n", "two distinct"),
    ("1,a\n2,3,b\n", "fields"),
    ("", "no data"),
])
def test_ingestion_errors(tmp_path, text, match):
    with pytest.raises(IngestionError, match=match):
        load_csv(write(tmp_path, text))


def test_unreadable_file(tmp_path):
    with pytest.raises(IngestionError):
        load_csv(tmp_path / "missing.csv")


def test_balance_scale_shape():
    data = balance_scale()
    assert (len(data), data.d, data.k) == (625, 4, 3)
    assert data.label_map == {"B": 1, "R": 2, "L": 3}
    assert np.bincount(data.y).tolist() == [0, 49, 288, 288]


def test_balance_scale_csv_roundtrip(tmp_path):
    path = tmp_path / "balance.csv"
    write_balance_scale_csv(path)
    loaded = load_csv(path, label_col=0)
    ref = balance_scale()
    np.testing.assert_allclose(loaded.X, ref.X)
    assert loaded.y.tolist() == ref.y.tolist()


def test_realizable_stream_has_perfect_member():
    data = synth_stream("realizable-stump", k=3, d=2, T=500, seed=1)
    hc = enumerate_stumps(2, 3, 0.1, "kwise")
    assert (hc.predict_all(data.X) == data.y).all(axis=1).any()
    assert data.meta["truth"][0]["feature"] in (0, 1)


def test_label_noise_rate():
    T = 20_000
    data = synth_stream("label-noise", k=2, d=1, T=T, seed=2, rate=0.2)
    clean = np.asarray(data.meta["clean_labels"])
    acc = np.mean(clean == data.y)
    assert abs(acc - 0.8) <= 3 * np.sqrt(0.16 / T)


def test_adversarial_drift_caps_fixed_members():
    data = synth_stream("adversarial-drift", k=3, d=2, T=400, seed=3)
    half = data.meta["switch"]
    H = enumerate_stumps(2, 3, 0.1, "kwise").predict_all(data.X)
    overall = (H == data.y).mean(axis=1)
    first = (H[:, :half] == data.y[:half]).mean(axis=1)
    second = (H[:, half:] == data.y[half:]).mean(axis=1)
    assert np.all(overall <= np.maximum(first, second) + 1e-12)
    assert overall.max() < 1.0


def test_unknown_stream_kind():
    with pytest.raises(InvalidConfigError):
        synth_stream("sine", k=2)


def test_config_validation():
    with pytest.raises(Exception):
        ExperimentConfig(gamma_grid=(0.0,))
    with pytest.raises(InvalidConfigError):
        ExperimentConfig(shuffles=0)
    with pytest.raises(InvalidConfigError):
        ExperimentConfig(gamma_grid=())
    with pytest.raises(InvalidConfigError):
        ExperimentConfig(algorithm="offline")


def small_config(**kw):
    base = dict(n_learners=5, gamma_grid=(0.5,), shuffles=2, seed=11)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def stream():
    return synth_stream("realizable-stump", k=3, d=2, T=150, seed=4)


def test_one_prediction_per_round(stream):
    report = run_experiment(stream, small_config())
    assert all(len(t["predictions"]) == 150 for t in report.trace)
    preds = np.array(report.trace[0]["predictions"])
    truths = np.array(report.trace[0]["truths"])
    assert report.shuffle_accuracies[0] == pytest.approx(np.mean(preds == truths))


def test_determinism_modulo_wall_time(stream):
    a = run_experiment(stream, small_config(gamma_grid=(0.3, 1.0)))
    b = run_experiment(stream, small_config(gamma_grid=(0.3, 1.0)))
    assert report_json(a, trace=True, timing=False) == report_json(b, trace=True, timing=False)
    assert strip_timing(a.to_dict()) == strip_timing(b.to_dict())


def test_adding_arms_keeps_existing_arms(stream):
    one = run_experiment(stream, small_config(gamma_grid=(0.5,)))
    two = run_experiment(stream, small_config(gamma_grid=(0.5, 0.9)))
    assert one.per_gamma[0]["shuffle_accuracies"] == two.per_gamma[0]["shuffle_accuracies"]


def test_shuffles_differ(stream):
    report = run_experiment(stream, small_config(shuffles=3))
    orders = [tuple(t["truths"]) for t in report.trace]
    assert len(set(orders)) == 3


def test_single_gamma_sweep_equals_run(stream):
    cfg = small_config()
    a, b = run_experiment(stream, cfg), gamma_sweep(stream, cfg)
    assert strip_timing(a.to_dict()) == strip_timing(b.to_dict())


def test_sweep_table_and_tie_break(stream, monkeypatch):
    cfg = small_config(gamma_grid=(0.1, 0.3, 0.5, 0.7, 1.0), shuffles=1)
    report = gamma_sweep(stream, cfg)
    assert len(report.per_gamma) == 5
    best = max(r["accuracy"] for r in report.per_gamma)
    assert report.accuracy == pytest.approx(best)

    import ocoboost.harness as H
    real = H._run_arm

    def flat(args):
        arm = real(args)
        arm.accuracy = 0.5
        return arm

    monkeypatch.setattr(H, "_run_arm", flat)
    tied = gamma_sweep(stream, small_config(gamma_grid=(0.7, 0.3), shuffles=1))
    assert tied.best_gammas == [0.3]


def test_other_algorithms_run(stream):
    for algo in ("online-realizable", "batch-agnostic", "batch-realizable"):
        report = run_experiment(stream, small_config(algorithm=algo, rounds=10, shuffles=1))
        assert 0.0 <= report.accuracy <= 1.0
        assert report.avg_regret is not None


def test_rewa_weak_learner(stream):
    cfg = small_config(weak_learner="rewa", rewa_class="stumps-binary", delta=0.25, shuffles=1,
                       n_learners=3)
    report = run_experiment(stream, cfg)
    assert report.avg_regret is not None


def test_regret_consistent_with_mistakes(stream):
    cfg = small_config(shuffles=1)
    report = run_experiment(stream, cfg)
    preds = np.array(report.trace[0]["predictions"])
    X, y = _prepare(stream, cfg, 0)
    assert y.tolist() == report.trace[0]["truths"]
    H = enumerate_stumps(2, 3, 0.1, "binary").predict_all(X)
    best_mistakes = (H != y).sum(axis=1).min()
    expected = (np.sum(preds != y) - best_mistakes) / y.size
    assert report.avg_regret / 2 == pytest.approx(expected)


def test_emit_report_roundtrip(tmp_path, stream):
    report = run_experiment(stream, small_config())
    with_trace = tmp_path / "a.json"
    without = tmp_path / "b.json"
    emit_report(report, with_trace, trace=True)
    emit_report(report, without, trace=False)
    assert load_report(with_trace) == report
    assert "trace" not in json.loads(without.read_text())
    again = tmp_path / "c.json"
    emit_report(load_report(with_trace), again, trace=True)
    assert again.read_bytes() == with_trace.read_bytes()


def test_parallel_matches_serial(stream, monkeypatch):
    cfg = small_config(gamma_grid=(0.3, 0.7))
    monkeypatch.setenv("OCO_BOOST_THREADS", "1")
    serial = run_experiment(stream, cfg)
    monkeypatch.setenv("OCO_BOOST_THREADS", "2")
    parallel = run_experiment(stream, cfg)
    assert strip_timing(serial.to_dict()) == strip_timing(parallel.to_dict())
