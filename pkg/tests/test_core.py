import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ocoboost.core import (
    LabelVector,
    argmax_label,
    labels_to_onehot,
    multiclass_correlation,
    one_hot,
    sigma_gain,
    zero_one_gain,
)
from ocoboost.errors import (
    DimensionError,
    InvalidDistributionError,
    InvalidLabelError,
    InvalidPairError,
)


@pytest.mark.parametrize("index,k,expected", [(1, 3, [1, 0, 0]), (3, 3, [0, 0, 1]), (2, 2, [0, 1])])
def test_one_hot(index, k, expected):
    assert one_hot(index, k).tolist() == expected


@pytest.mark.parametrize("index,k", [(0, 3), (4, 3), (1, 1), (1.5, 3)])
def test_one_hot_rejects_bad_input(index, k):
    with pytest.raises(InvalidLabelError):
        one_hot(index, k)


def test_label_vector_behaves_like_array():
    lv = LabelVector(2, 4)
    assert np.asarray(lv).tolist() == [0, 1, 0, 0]
    with pytest.raises(InvalidLabelError):
        LabelVector(5, 4)


def test_zero_one_gain_examples():
    assert zero_one_gain(one_hot(1, 2), one_hot(1, 2)) == 1
    assert zero_one_gain(one_hot(1, 2), one_hot(2, 2)) == -1
    assert zero_one_gain(one_hot(3, 5), one_hot(3, 5)) == 1
    with pytest.raises(DimensionError):
        zero_one_gain(one_hot(1, 2), one_hot(1, 3))


def test_sigma_gain_cases():
    y, ell = one_hot(1, 3), one_hot(2, 3)
    assert sigma_gain(y, y, ell) == 1
    assert sigma_gain(ell, y, ell) == -1
    assert sigma_gain(one_hot(3, 3), y, ell) == 0
    with pytest.raises(InvalidPairError):
        sigma_gain(y, y, y)


labels = st.integers(2, 7).flatmap(
    lambda k: st.tuples(st.just(k), st.integers(1, k), st.integers(1, k), st.integers(1, k)))


@given(labels)
def test_zero_one_gain_mistake_form(args):
    k, p, y, _ = args
    assert zero_one_gain(one_hot(p, k), one_hot(y, k)) == 1 - 2 * (p != y)


@given(labels)
def test_sigma_gain_antisymmetric(args):
    k, z, y, ell = args
    if y == ell:
        return
    zv, yv, lv = one_hot(z, k), one_hot(y, k), one_hot(ell, k)
    assert sigma_gain(zv, yv, lv) == -sigma_gain(zv, lv, yv)


def test_correlation_examples():
    y = [1, 2, 1, 2]
    right = one_hot_rows([1, 2, 1, 2], 2)
    wrong = one_hot_rows([2, 1, 2, 1], 2)
    half = one_hot_rows([1, 2, 2, 1], 2)
    w = np.full(4, 0.25)
    assert multiclass_correlation(right, y, w) == pytest.approx(1)
    assert multiclass_correlation(wrong, y, w) == pytest.approx(-1)
    assert multiclass_correlation(half, y, w) == pytest.approx(0)


def test_correlation_rejects_unnormalized_weights():
    with pytest.raises(InvalidDistributionError):
        multiclass_correlation(one_hot_rows([1, 2], 2), [1, 2], [0.5, 0.6])


@given(st.integers(2, 6), st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_correlation_bounded_and_affine(k, m, seed):
    rng = np.random.default_rng(seed)
    H1 = rng.dirichlet(np.ones(k), size=m)
    H2 = rng.dirichlet(np.ones(k), size=m)
    y = rng.integers(1, k + 1, size=m)
    w = rng.dirichlet(np.ones(m))
    c1, c2 = multiclass_correlation(H1, y, w), multiclass_correlation(H2, y, w)
    assert -1 - 1e-12 <= c1 <= 1 + 1e-12
    a = rng.random()
    mix = multiclass_correlation(a * H1 + (1 - a) * H2, y, w)
    assert mix == pytest.approx(a * c1 + (1 - a) * c2, abs=1e-12)


def test_labels_to_onehot_and_argmax():
    assert labels_to_onehot([2, 1], 3).tolist() == [[0, 1, 0], [1, 0, 0]]
    with pytest.raises(InvalidLabelError):
        labels_to_onehot([4], 3)
    assert argmax_label([0.2, 0.5, 0.5]) == 2


def one_hot_rows(idx, k):
    return np.stack([one_hot(i, k) for i in idx])
