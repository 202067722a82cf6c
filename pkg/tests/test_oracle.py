from fractions import Fraction

import numpy as np
import pytest

from lpm import PivotalSampler, enumerate_lpm
from lpm.oracle import MAX_UNITS

from conftest import SMALL_POPULATIONS, square_corners


def test_pair_examples():
    res = enumerate_lpm([0.5, 0.5], [[0.0], [1.0]])
    assert res.sample_distribution == {(0,): Fraction(1, 2), (1,): Fraction(1, 2)}
    res = enumerate_lpm([0.2, 0.8], [[0.0], [1.0]])
    assert res.sample_distribution == {(0,): Fraction(1, 5), (1,): Fraction(4, 5)}


def test_equilateral_symmetric():
    probs, X = SMALL_POPULATIONS["equilateral"]
    res = enumerate_lpm([Fraction(1, 3)] * 3, X)
    assert res.first_order == [Fraction(1, 3)] * 3


def test_square_distribution_frozen():
    # derived by the oracle; diagonal pairs are half as likely as edges
    res = enumerate_lpm([0.5] * 4, square_corners())
    assert res.sample_distribution == {
        (0, 1): Fraction(1, 8), (0, 2): Fraction(1, 8), (0, 3): Fraction(1, 4),
        (1, 2): Fraction(1, 4), (1, 3): Fraction(1, 8), (2, 3): Fraction(1, 8),
    }


@pytest.mark.parametrize("name", sorted(SMALL_POPULATIONS))
@pytest.mark.parametrize("variant", ["lpm1", "lpm2"])
def test_oracle_invariants(name, variant):
    probs, X = SMALL_POPULATIONS[name]
    res = enumerate_lpm(probs, X, variant=variant)
    assert sum(res.sample_distribution.values()) == 1
    exact = [Fraction(repr(float(p))) for p in probs]
    assert res.first_order == exact
    total = sum(exact)
    if total.denominator == 1:
        assert {len(s) for s in res.sample_distribution} == {int(total)}
    second = res.second_order_array
    np.testing.assert_allclose(np.diag(second), res.first_order_array, atol=1e-15)
    np.testing.assert_allclose(second, second.T, atol=0)


def test_oracle_limits_and_json():
    with pytest.raises(ValueError):
        enumerate_lpm([0.5] * (MAX_UNITS + 1), np.arange(MAX_UNITS + 1.0))
    with pytest.raises(ValueError):
        enumerate_lpm([0.5, 0.5], [[0.0], [1.0]], variant="lpm9")
    text = enumerate_lpm([0.5, 0.5], [[0.0], [1.0]]).to_json()
    assert '"exact": "1/2"' in text


@pytest.mark.parametrize("name", ["square", "plane_six", "grid_ties", "non_integer_total"])
@pytest.mark.parametrize("variant", ["lpm1", "lpm2"])
def test_monte_carlo_agrees_with_oracle(name, variant):
    probs, X = SMALL_POPULATIONS[name]
    exact = enumerate_lpm(probs, X, variant=variant).sample_distribution
    sampler = PivotalSampler(probs, X, method=variant)
    runs = 20_000
    gen = np.random.default_rng(11)
    counts = {}
    for _ in range(runs):
        key = tuple(sampler.sample(gen).selected.tolist())
        counts[key] = counts.get(key, 0) + 1
    assert set(counts) <= set(exact)
    for key, p in exact.items():
        p = float(p)
        se = np.sqrt(p * (1 - p) / runs)
        assert abs(counts.get(key, 0) / runs - p) <= 4 * se + 1e-12, key
