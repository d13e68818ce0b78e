import numpy as np
import pytest

from emoxfer.rng import Rng, fnv1a64


def test_same_seed_same_sequence():
    a = Rng(20240817).uniform(10000)
    b = Rng(20240817).uniform(10000)
    assert np.array_equal(a, b)


def test_different_seeds_differ():
    assert not np.array_equal(Rng(1).uniform(100), Rng(2).uniform(100))


def test_draws_independent_of_call_grouping():
    a = Rng(5)
    first = np.concatenate([a.uniform(7), a.uniform(13)])
    b = Rng(5)
    assert np.array_equal(first, b.uniform(20))


def test_uniform_bounds_and_moments():
    u = Rng(11).uniform(200000)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 0.005
    assert abs(u.var() - 1.0 / 12.0) < 0.001


def test_normal_moments():
    z = Rng(13).normal(200000)
    assert abs(z.mean()) < 0.01
    assert abs(z.std() - 1.0) < 0.01


def test_shapes():
    assert Rng(1).uniform((3, 4)).shape == (3, 4)
    assert Rng(1).normal((2, 5, 7)).shape == (2, 5, 7)
    assert isinstance(Rng(1).uniform(), float)
    assert isinstance(Rng(1).normal(), float)


def test_permutation_is_permutation():
    p = Rng(3).permutation(257)
    assert sorted(p.tolist()) == list(range(257))


def test_permutation_deterministic():
    assert np.array_equal(Rng(9).permutation(50), Rng(9).permutation(50))


def test_spawn_streams_differ_by_label():
    root = Rng(42)
    a = root.spawn("alpha").uniform(100)
    b = root.spawn("beta").uniform(100)
    assert not np.array_equal(a, b)
    # spawning does not consume parent draws
    assert np.array_equal(root.uniform(10), Rng(42).uniform(10))


def test_spawn_deterministic():
    assert Rng(42).spawn("x").seed == Rng(42).spawn("x").seed


def test_fnv1a64_known_value():
    # FNV-1a 64-bit of "a" per the published constants
    assert fnv1a64("a") == 0xAF63DC4C8601EC8C


def test_uniform_range():
    u = Rng(4).uniform_range(-2.0, 3.0, 10000)
    assert u.min() >= -2.0 and u.max() < 3.0


def test_negative_count_rejected():
    with pytest.raises(ValueError):
        Rng(1).permutation(-1)
