import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpm import NeighborIndex, PivotalSampler, lpm1, lpm2, nearest_undecided, pivotal_update
from lpm._validation import DECIDED_TOL

from conftest import SMALL_POPULATIONS

undecided = st.floats(min_value=1e-6, max_value=1 - 1e-6)
unit = st.floats(min_value=0.0, max_value=1.0, exclude_max=True)


# --- pivotal update --------------------------------------------------------

def test_update_examples():
    # a total of exactly 1 takes the inclusion branch
    assert pivotal_update(0.5, 0.5, 0.1) == (1.0, 0.0)
    assert pivotal_update(0.5, 0.5, 0.9) == (0.0, 1.0)
    a, b = pivotal_update(0.3, 0.4, 0.0)
    assert a == 0.0 and b == pytest.approx(0.7)
    a, b = pivotal_update(0.8, 0.7, 0.0)
    assert a == 1.0 and b == pytest.approx(0.5)


@given(undecided, undecided, unit)
def test_update_conserves_mass_and_decides(pi, pj, u):
    a, b = pivotal_update(pi, pj, u)
    assert a + b == pytest.approx(pi + pj, abs=1e-12)
    assert a in (0.0, 1.0) or b in (0.0, 1.0)
    assert 0.0 <= a <= 1.0 and 0.0 <= b <= 1.0


@given(undecided, undecided)
def test_update_is_a_martingale(pi, pj):
    # expectation over u of the updated pair equals the input
    s = pi + pj
    if s < 1:
        first, cut = (0.0, s), pj / s
        second = (s, 0.0)
    else:
        first, cut = (1.0, s - 1), (1 - pj) / (2 - s)
        second = (s - 1, 1.0)
    mean_i = cut * first[0] + (1 - cut) * second[0]
    assert mean_i == pytest.approx(pi, abs=1e-12)
    lo = pivotal_update(pi, pj, 0.0)
    hi = pivotal_update(pi, pj, np.nextafter(1.0, 0.0))
    assert lo == pytest.approx(first, abs=1e-9) and hi == pytest.approx(second, abs=1e-9)


@pytest.mark.parametrize("args", [(0.0, 0.5, 0.1), (1.0, 0.5, 0.1), (0.5, 0.5, 1.0), (1.2, 0.5, 0.1), (0.5, 0.5, -0.1)])
def test_update_rejects_bad_input(args):
    with pytest.raises(ValueError):
        pivotal_update(*args)


# --- neighbour search -------------------------------------------------------

def test_nearest_unique_and_deactivation():
    idx = NeighborIndex([[0.0], [1.0], [3.0], [7.0]])
    assert nearest_undecided(idx, 0) == 1
    idx.deactivate(1)
    assert nearest_undecided(idx, 0) == 2
    assert idx.n_active == 3


def test_tie_break_is_uniform():
    idx = NeighborIndex([[0.0], [-1.0], [1.0]])
    gen = np.random.default_rng(0)
    picks = [nearest_undecided(idx, 0, gen) for _ in range(4000)]
    share = np.mean(np.array(picks) == 1)
    assert abs(share - 0.5) < 4 * np.sqrt(0.25 / 4000)


def test_nearest_needs_two_units():
    idx = NeighborIndex([[0.0], [1.0]])
    idx.deactivate(1)
    with pytest.raises(ValueError):
        nearest_undecided(idx, 0)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=2, max_value=40),
    st.integers(min_value=1, max_value=3),
    st.sampled_from(["euclidean", "cityblock", "chebyshev"]),
    st.integers(min_value=0, max_value=2**31),
)
def test_index_matches_brute_force(N, q, metric, seed):
    gen = np.random.default_rng(seed)
    # coarse grid coordinates produce plenty of exact ties
    X = gen.integers(0, 4, size=(N, q)).astype(float)
    active = gen.random(N) < 0.7
    active[:2] = True
    fast = NeighborIndex(X, metric, active=active)
    tree = NeighborIndex(X, metric, active=active, force_tree=True)
    ref = {"euclidean": lambda a, B: np.sqrt(((B - a) ** 2).sum(1)),
           "cityblock": lambda a, B: np.abs(B - a).sum(1),
           "chebyshev": lambda a, B: np.abs(B - a).max(1)}[metric]
    slow = NeighborIndex(X, ref, active=active)
    for u in gen.permutation(N)[: N // 3]:
        if fast.n_active > 2 and active[u]:
            for ix in (fast, tree, slow):
                ix.deactivate(u)
    for i in np.flatnonzero(fast.active):
        want = slow.ties(i)
        np.testing.assert_array_equal(fast.ties(i), want)
        np.testing.assert_array_equal(tree.ties(i), want)


# --- full samplers -----------------------------------------------------------

def test_fixed_size_over_many_seeds():
    gen = np.random.default_rng(1)
    X = gen.random((50, 2))
    probs = gen.random(50)
    probs *= 10 / probs.sum()
    sampler = PivotalSampler(probs, X)
    sizes = {sampler.sample(s).size for s in range(1000)}
    assert sizes == {10}


def test_first_order_unbiased_n6():
    probs, X = SMALL_POPULATIONS["plane_six"]
    sampler = PivotalSampler(probs, X)
    runs = 100_000
    counts = np.zeros(6)
    gen = np.random.default_rng(7)
    for _ in range(runs):
        counts[sampler.sample(gen).selected] += 1
    p = np.asarray(probs)
    se = np.sqrt(p * (1 - p) / runs)
    assert np.all(np.abs(counts / runs - p) < 4 * se)


@pytest.mark.parametrize("method", ["lpm1", "lpm2"])
def test_same_seed_same_sample(method):
    gen = np.random.default_rng(3)
    X = gen.random((200, 3))
    probs = np.full(200, 0.1)
    a = PivotalSampler(probs, X, method=method).sample(99)
    b = PivotalSampler(probs, X, method=method).sample(99)
    np.testing.assert_array_equal(a.selected, b.selected)
    assert a.steps == b.steps


@pytest.mark.parametrize("method", ["lpm1", "lpm2"])
@pytest.mark.parametrize("q", [1, 2, 3])
def test_compiled_and_interpreted_agree(method, q):
    gen = np.random.default_rng(q)
    X = np.round(gen.random((150, q)) * 8) / 8  # ties on purpose
    probs = gen.uniform(0.05, 0.6, 150)
    for seed in range(5):
        fast = PivotalSampler(probs, X, method=method).sample(seed)
        slow = PivotalSampler(probs, X, method=method, compiled=False).sample(seed)
        np.testing.assert_array_equal(fast.selected, slow.selected)
        assert fast.steps == slow.steps


def test_custom_metric_matches_builtin():
    gen = np.random.default_rng(4)
    X = gen.random((120, 2))
    probs = np.full(120, 0.25)

    def manhattan(a, B):
        return np.abs(B - a).sum(axis=1)

    for seed in range(5):
        builtin = lpm2(probs, X, "cityblock", seed)
        custom = lpm2(probs, X, manhattan, seed)
        np.testing.assert_array_equal(builtin.selected, custom.selected)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=2, max_value=60), st.integers(min_value=0, max_value=2**31),
       st.sampled_from(["lpm1", "lpm2"]))
def test_sample_invariants(N, seed, method):
    gen = np.random.default_rng(seed)
    X = gen.random((N, 2))
    probs = gen.random(N)
    res = PivotalSampler(probs, X, method=method).sample(seed)
    assert set(np.unique(res.final_probs)) <= {0.0, 1.0}
    total = probs.sum()
    assert np.floor(total + 1e-9) <= res.size <= np.ceil(total - 1e-9)
    assert res.steps <= 2 * N
    np.testing.assert_array_equal(res.selected, np.flatnonzero(res.final_probs == 1.0))


def test_decided_units_are_kept_or_dropped():
    probs = [1.0, 0.0, 0.5, 0.5, 1.0 - DECIDED_TOL / 2]
    X = np.arange(5.0)
    for seed in range(20):
        sel = set(lpm2(probs, X, rng=seed).selected.tolist())
        assert {0, 4} <= sel and 1 not in sel and len(sel) == 3


def test_all_metrics_and_one_dimensional_input():
    X = np.linspace(0, 1, 30)
    for metric in ("euclidean", "cityblock", "chebyshev", "chebychev"):
        assert lpm1(np.full(30, 0.2), X, metric, rng=0).size == 6


def test_well_spread_in_one_dimension():
    # equal probabilities on a line: LPM2 puts one unit in nearly every block
    X = np.arange(1000.0)
    res = lpm2(np.full(1000, 0.01), X, rng=5)
    gaps = np.diff(res.selected)
    assert gaps.max() < 400 and res.size == 10


@pytest.mark.parametrize("bad", [
    dict(probs=[0.5, 1.5], coords=[[0.0], [1.0]]),
    dict(probs=[0.5, np.nan], coords=[[0.0], [1.0]]),
    dict(probs=[0.5, 0.5, 0.5], coords=[[0.0], [1.0]]),
    dict(probs=[0.5, 0.5], coords=[[0.0], [np.inf]]),
])
def test_input_validation(bad):
    with pytest.raises(ValueError):
        lpm2(bad["probs"], bad["coords"])


def test_bad_method_metric_and_seed():
    with pytest.raises(ValueError):
        PivotalSampler([0.5, 0.5], [[0.0], [1.0]], method="lpm3")
    with pytest.raises(ValueError):
        lpm2([0.5, 0.5], [[0.0], [1.0]], metric="mahalanobis")
    with pytest.raises(ValueError):
        lpm2([0.5, 0.5], [[0.0], [1.0]], rng="seed")


def test_callable_metric_validated():
    with pytest.raises(ValueError):
        lpm2([0.5, 0.5, 0.5, 0.5], np.arange(4.0), metric=lambda a, B: -np.ones(len(B)))
