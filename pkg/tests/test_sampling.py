import numpy as np
import pytest
from hypothesis import given, strategies as st

from geoduel.sampling import LCG64, sample_box


def _reference(seed, count):
    state, out = seed, []
    for _ in range(count):
        state = (6364136223846793005 * state + 1442695040888963407) % 2**64
        out.append((state >> 11) / 2**53)
    return out


@given(st.integers(0, 2**64 - 1))
def test_recurrence(seed):
    rng = LCG64(seed)
    assert [rng.uniform() for _ in range(5)] == _reference(seed, 5)


def test_known_first_state():
    assert LCG64(0).next_u64() == 1442695040888963407
    assert LCG64(1).next_u64() == (6364136223846793005 + 1442695040888963407) % 2**64


def test_uniform_statistics():
    u = np.array([LCG64(42).uniform()] + _reference(42, 20000))
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 0.01
    assert abs(u.var() - 1 / 12) < 0.005


def test_sample_box_order_and_bounds():
    pts = sample_box(3, 7, [[-1, 1], [10, 20]])
    ref = _reference(7, 6)
    expected = [[-1 + 2 * ref[0], 10 + 10 * ref[1]], [-1 + 2 * ref[2], 10 + 10 * ref[3]], [-1 + 2 * ref[4], 10 + 10 * ref[5]]]
    np.testing.assert_array_equal(pts, expected)


def test_sample_box_deterministic():
    box = [[0, 1]] * 4
    assert np.array_equal(sample_box(50, 5, box), sample_box(50, 5, box))
    assert not np.array_equal(sample_box(50, 5, box), sample_box(50, 6, box))


@pytest.mark.parametrize("count, box", [(-1, [[0, 1]]), (2, [[1, 0]])])
def test_sample_box_errors(count, box):
    with pytest.raises(ValueError):
        sample_box(count, 0, box)
