import numpy as np
import pytest

from punctrl.seeding import check_seed, substream


class TestSubstreams:
    def test_same_seed_and_name_reproduce(self):
        a = substream(42, "env").random(8)
        b = substream(42, "env").random(8)
        assert np.array_equal(a, b)

    def test_streams_are_independent_of_creation_order(self):
        # drawing from one stream never perturbs another
        lone = substream(7, "env").random(5)
        first = substream(7, "action")
        first.random(100)
        again = substream(7, "env").random(5)
        assert np.array_equal(lone, again)

    def test_distinct_names_give_distinct_draws(self):
        a = substream(0, "env").random(4)
        b = substream(0, "action").random(4)
        assert not np.array_equal(a, b)

    def test_distinct_seeds_give_distinct_draws(self):
        a = substream(0, "env").random(4)
        b = substream(1, "env").random(4)
        assert not np.array_equal(a, b)

    def test_u64_bounds(self):
        check_seed(0)
        check_seed(2**64 - 1)
        with pytest.raises(ValueError):
            check_seed(-1)
        with pytest.raises(ValueError):
            check_seed(2**64)
        with pytest.raises(ValueError):
            check_seed(1.5)
