import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ocoboost.errors import DimensionError, InvalidConfigError, InvalidIntervalError
from ocoboost.oco import (
    IntervalDomain,
    OGDPool,
    SimplexDomain,
    agnostic_gradient_bound,
    measure_regret,
    oco_new,
)


def test_initial_points():
    np.testing.assert_allclose(oco_new(SimplexDomain(3), 1.0).play(), [1 / 3] * 3)
    assert oco_new(IntervalDomain(0, 1), 1.0).play() == 0.5
    assert oco_new(SimplexDomain(2), 1.0).diameter == pytest.approx(math.sqrt(2))


def test_invalid_construction():
    with pytest.raises(InvalidConfigError):
        oco_new(SimplexDomain(2), 0.0)
    with pytest.raises(InvalidIntervalError):
        IntervalDomain(1.0, 0.0)


def test_play_does_not_mutate():
    oco = oco_new(SimplexDomain(2), 2.0)
    oco.play()[0] = 99.0
    np.testing.assert_allclose(oco.play(), [0.5, 0.5])


def test_zero_loss_keeps_point():
    oco = oco_new(SimplexDomain(2), 2.0)
    oco.observe([0.0, 0.0])
    np.testing.assert_allclose(oco.play(), [0.5, 0.5])


def test_first_step_with_default_schedule():
    oco = oco_new(SimplexDomain(2), 2.0)
    oco.observe([1.0, -1.0])
    np.testing.assert_allclose(oco.play(), [0.0, 1.0], atol=1e-12)


def test_forced_step_sizes():
    oco = oco_new(SimplexDomain(2), 2.0)
    oco.observe([1.0, -1.0], eta=0.25)
    np.testing.assert_allclose(oco.play(), [0.25, 0.75])
    interval = oco_new(IntervalDomain(0, 1), 2.0)
    interval.observe(2.0, eta=0.5)
    assert interval.play() == 0.0


def test_observe_checks_dimension():
    with pytest.raises(DimensionError):
        oco_new(SimplexDomain(3), 1.0).observe([1.0, 2.0])


def test_reset_matches_fresh_instance():
    rng = np.random.default_rng(0)
    losses = rng.normal(size=(20, 3))
    used = oco_new(SimplexDomain(3), 5.0)
    for c in losses:
        used.observe(c)
    used.reset().reset()
    fresh = oco_new(SimplexDomain(3), 5.0)
    assert used.step_index == 1
    for c in losses[::-1]:
        np.testing.assert_array_equal(used.play(), fresh.play())
        used.observe(c)
        fresh.observe(c)


def test_measure_regret_examples():
    assert measure_regret([], []) == 0.0
    assert measure_regret([[1.0, -1.0]], [[0.5, 0.5]]) == pytest.approx(1.0)
    assert measure_regret([[0.0, 0.0]] * 3, [[0.5, 0.5]] * 3) == 0.0
    assert measure_regret([[1.0, -1.0]] * 3, [[0.0, 1.0]] * 3) == pytest.approx(0.0)
    with pytest.raises(DimensionError):
        measure_regret([[1.0, 0.0]], [])


def test_measure_regret_on_interval():
    # comparator is the best endpoint
    assert measure_regret([1.0, 1.0], [0.5, 0.5]) == pytest.approx(1.0)
    assert measure_regret([-1.0], [0.0]) == pytest.approx(1.0)


def test_internal_regret_matches_measure():
    rng = np.random.default_rng(2)
    oco = oco_new(SimplexDomain(4), 4.0)
    plays, losses = [], []
    for _ in range(50):
        c = rng.uniform(-1, 1, 4)
        plays.append(oco.play())
        losses.append(c)
        oco.observe(c)
    assert oco.regret() == pytest.approx(measure_regret(losses, plays), abs=1e-9)


@given(st.integers(2, 6), st.integers(1, 200), st.integers(0, 2**32 - 1))
def test_plays_stay_in_domain_and_regret_bounded(k, n, seed):
    rng = np.random.default_rng(seed)
    G = 3.0
    oco = oco_new(SimplexDomain(k), G)
    for _ in range(n):
        c = rng.normal(size=k)
        c *= G * rng.random() / max(np.linalg.norm(c), 1e-12)
        oco.observe(c)
        p = oco.play()
        assert np.all(p >= 0) and p.sum() == pytest.approx(1.0, abs=1e-9)
    assert oco.regret() <= oco.regret_bound() + 1e-9


def test_deterministic_play_sequence():
    rng = np.random.default_rng(5)
    losses = rng.normal(size=(30, 3))
    runs = []
    for _ in range(2):
        oco = oco_new(SimplexDomain(3), 3.0)
        seq = []
        for c in losses:
            seq.append(oco.play())
            oco.observe(c)
        runs.append(np.array(seq))
    np.testing.assert_array_equal(runs[0], runs[1])


def test_pool_matches_independent_instances():
    rng = np.random.default_rng(4)
    pool = OGDPool(SimplexDomain(3), 5, 2.0)
    singles = [oco_new(SimplexDomain(3), 2.0) for _ in range(5)]
    for _ in range(25):
        C = rng.normal(size=(5, 3))
        pool.observe(C)
        for s, c in zip(singles, C):
            s.observe(c)
    np.testing.assert_allclose(pool.play(), np.stack([s.play() for s in singles]), atol=1e-12)
    np.testing.assert_allclose(pool.regrets(), [s.regret() for s in singles], atol=1e-9)


def test_interval_pool_with_initial_point():
    pool = OGDPool(IntervalDomain(), 3, 2.0, initial_point=0.1)
    np.testing.assert_allclose(pool.play(), [0.1] * 3)
    pool.observe([1.0, -1.0, 0.0])
    assert pool.play().shape == (3,)


def test_agnostic_gradient_bound_covers_losses():
    from ocoboost.boost import agnostic_loss
    for k in range(2, 6):
        for gamma in (0.1, 0.5, 1.0):
            worst = max(np.linalg.norm(agnostic_loss(v, y, k, gamma))
                        for v in range(1, k + 1) for y in range(1, k + 1))
            assert worst <= agnostic_gradient_bound(gamma, k)
