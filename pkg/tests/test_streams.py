import numpy as np
import pytest

from sleepcmdp.streams import COST, VALUE, iteration_stream, uniform_block


@pytest.mark.parametrize("horizon", [1, 3, 4, 7, 18])
def test_iteration_addressing_matches_block(horizon):
    block = uniform_block(9, 2, COST, 4, 1, 12, horizon)
    for n in range(1, 13):
        np.testing.assert_array_equal(iteration_stream(9, 2, COST, 4, n, horizon).random(horizon), block[n - 1])


def test_block_prefix_property():
    long = uniform_block(1, 0, VALUE, 0, 1, 50, 5)
    short = uniform_block(1, 0, VALUE, 0, 1, 20, 5)
    np.testing.assert_array_equal(long[:20], short)
    mid = uniform_block(1, 0, VALUE, 0, 21, 10, 5)
    np.testing.assert_array_equal(long[20:30], mid)


def test_keys_give_different_streams():
    a = uniform_block(1, 0, COST, 0, 1, 1, 8)
    for key in [(2, 0, COST, 0), (1, 1, COST, 0), (1, 0, VALUE, 0), (1, 0, COST, 1)]:
        assert not np.array_equal(a, uniform_block(*key, 1, 1, 8))


def test_iteration_is_one_based():
    with pytest.raises(ValueError):
        iteration_stream(0, 0, COST, 0, 0, 4)
