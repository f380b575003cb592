import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ghsbp.distributions import make_rng
from ghsbp.errors import DomainError
from ghsbp.gibbs import TransitionCounts
from ghsbp.markov_sim import (
    ChainRealization,
    GeometricChainSpec,
    Variant,
    count_transitions,
    mle_tpm,
    p_of_state,
    read_chain,
    read_counts,
    simulate_chain,
    true_tpm,
    write_chain,
    write_counts,
)

VARIANTS = [Variant.LOGP, Variant.LOGLOGP]


def test_p_examples():
    assert p_of_state("LogP", 0) == pytest.approx(0.1, abs=1e-15)
    assert p_of_state("LogLogP", 0) == pytest.approx(0.2171472409516259, abs=1e-12)
    assert p_of_state(Variant.LOGP, 9) == pytest.approx(1 / (math.log(10) + 10))


@pytest.mark.parametrize("v", VARIANTS)
def test_p_strictly_decreasing_in_unit_interval(v):
    p = p_of_state(v, np.arange(0, 100_000))
    assert np.all(np.diff(p) < 0)
    assert np.all((p > 0) & (p < 1))


def test_variant_parsing():
    assert Variant.parse("logloGP") is Variant.LOGLOGP
    with pytest.raises(DomainError):
        Variant.parse("geometric")
    with pytest.raises(DomainError):
        p_of_state("LogP", -1)


@pytest.mark.parametrize("kw", [dict(length=1), dict(length=2.5), dict(start_state=-1)])
def test_spec_validation(kw):
    with pytest.raises(DomainError):
        GeometricChainSpec(**(dict(variant="LogP", length=10) | kw))


def test_chain_realization_validation():
    with pytest.raises(DomainError):
        ChainRealization(np.array([], dtype=int))
    with pytest.raises(DomainError):
        ChainRealization(np.array([0, -1]))
    c = ChainRealization(np.array([3, 0, 7, 2]))
    assert c.max_state == 7 and len(c) == 4


def test_simulation_is_reproducible():
    spec = GeometricChainSpec("LogP", 5, seed=42)
    a, b = simulate_chain(spec), simulate_chain(spec)
    assert len(a) == 5 and a.states[0] == 0
    assert np.array_equal(a.states, b.states)
    assert not np.array_equal(simulate_chain(GeometricChainSpec("LogP", 200, seed=1)).states,
                              simulate_chain(GeometricChainSpec("LogP", 200, seed=2)).states)


def test_start_state_respected():
    c = simulate_chain(GeometricChainSpec("LogLogP", 10, start_state=17, seed=0))
    assert c.states[0] == 17


def test_one_step_from_state_zero():
    rng = make_rng(99)
    spec = GeometricChainSpec("LogP", 2)
    n = 1_000_000
    nxt = np.fromiter((simulate_chain(spec, rng).states[1] for _ in range(n)), dtype=np.int64, count=n)
    for j, pj in [(0, 0.1), (1, 0.09)]:
        f = np.mean(nxt == j)
        assert abs(f - pj) < 3 * math.sqrt(pj * (1 - pj) / n)
    sd = math.sqrt(0.9) / 0.1  # geometric: var = (1-p)/p^2
    assert abs(nxt.mean() - 9.0) < 3 * sd / math.sqrt(n)


def test_count_examples():
    c = count_transitions(ChainRealization(np.array([0, 1, 0])), 2).counts
    assert c.tolist() == [[0, 1], [1, 0]]
    c = count_transitions(ChainRealization(np.array([2, 2, 2, 2])), 3).counts
    assert c[2, 2] == 3 and c.sum() == 3


def test_count_out_of_range():
    with pytest.raises(DomainError):
        count_transitions(ChainRealization(np.array([0, 3])), 3)


@given(st.lists(st.integers(0, 20), min_size=1, max_size=200))
def test_count_mass_conservation(states):
    chain = ChainRealization(np.array(states))
    c = count_transitions(chain, chain.max_state + 2)
    assert c.counts.sum() == len(states) - 1
    for i, j in zip(states[:-1], states[1:]):
        assert c.counts[i, j] >= 1


@pytest.mark.parametrize("v", VARIANTS)
def test_simulated_mass_conservation(v):
    chain = simulate_chain(GeometricChainSpec(v, 5000, seed=3))
    c = count_transitions(chain, chain.max_state + 1)
    assert c.counts.sum() == 4999


def test_true_tpm_examples():
    T = true_tpm("LogP", 2)
    np.testing.assert_allclose(T[0], [0.1, 0.09], rtol=1e-14)


@pytest.mark.parametrize("v", VARIANTS)
@pytest.mark.parametrize("d", [2, 17, 300])
def test_true_tpm_rows(v, d):
    T = true_tpm(v, d)
    p = p_of_state(v, np.arange(d))
    np.testing.assert_allclose(T.sum(1), 1 - (1 - p) ** d, rtol=1e-12)
    tail = (1 - p) ** d
    # a tail below double resolution rounds the row sum to exactly 1
    assert np.all(T.sum(1)[tail > 1e-15] < 1)
    assert np.all(T.sum(1) <= 1 + 4 * np.finfo(float).eps)
    assert np.all(np.diff(T, axis=1) < 0)


def test_true_tpm_dimension():
    with pytest.raises(DomainError):
        true_tpm("LogP", 1)


def test_mle_examples():
    m = mle_tpm(TransitionCounts(np.array([[3, 1], [0, 0]])))
    assert m[0].tolist() == [0.75, 0.25]
    assert m[1].tolist() == [0.5, 0.5]
    z = mle_tpm(TransitionCounts(np.zeros((4, 4), int)))
    assert np.all(z == 0.25)


@given(st.lists(st.integers(0, 30), min_size=2, max_size=300))
def test_mle_rows_sum_to_one(states):
    chain = ChainRealization(np.array(states))
    m = mle_tpm(count_transitions(chain, chain.max_state + 1 + 1))
    assert np.all(np.abs(m.sum(1) - 1) <= 1e-15 * m.shape[0])


@pytest.mark.parametrize("v", VARIANTS)
def test_mle_row_zero_law_of_large_numbers(v):
    chain = simulate_chain(GeometricChainSpec(v, 1_000_000, seed=2024))
    d = chain.max_state + 1
    m = mle_tpm(count_transitions(chain, d))
    truth = true_tpm(v, d)[0]
    truth /= truth.sum()
    assert np.max(np.abs(m[0] - truth)) < 0.01


def test_chain_round_trip(tmp_path):
    chain = simulate_chain(GeometricChainSpec("LogLogP", 300, seed=5))
    path = tmp_path / "chain.txt"
    write_chain(path, chain)
    assert path.read_text().splitlines()[0] == "0"
    assert np.array_equal(read_chain(path).states, chain.states)


def test_chain_round_trip_single_state(tmp_path):
    path = tmp_path / "one.txt"
    write_chain(path, ChainRealization(np.array([4])))
    assert read_chain(path).states.tolist() == [4]


def test_counts_round_trip(tmp_path):
    chain = simulate_chain(GeometricChainSpec("LogP", 500, seed=6))
    c = count_transitions(chain, chain.max_state + 3)
    path = tmp_path / "counts.csv"
    write_counts(path, c, header_lines=["seed = 6", "variant = LogP"])
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed = 6"
    assert lines[2] == ",".join(str(j) for j in range(c.d))
    assert np.array_equal(read_counts(path).counts, c.counts)
