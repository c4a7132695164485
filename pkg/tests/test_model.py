import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import kernel_from_chain
from faimpolar import model as fm
from faimpolar.exceptions import ModelError, NonStochastic, NotErgodic


def test_bsc_wrapper_is_single_state_and_valid(bsc011):
    rep = fm.validate(bsc011)
    assert bsc011.num_states == 1
    assert rep.ok and rep.n0 == 1


def test_block_diagonal_chain_rejected():
    with pytest.raises(NotErgodic):
        fm.validate(fm.FaimModel(kernel_from_chain(np.eye(2))))


def test_periodic_swap_rejected():
    with pytest.raises(NotErgodic):
        fm.validate(fm.FaimModel(kernel_from_chain([[0, 1], [1, 0]])))


def test_non_stochastic_rejected():
    k = kernel_from_chain([[0.9, 0.1], [0.1, 0.9]])
    k[0, 0, 0, 0] += 1e-6
    with pytest.raises(NonStochastic):
        fm.validate(fm.FaimModel(k))


def test_negative_kernel_rejected():
    k = kernel_from_chain([[0.9, 0.1], [0.1, 0.9]])
    k[0, 0, 0, 0] = -0.1
    with pytest.raises(ModelError):
        fm.FaimModel(k)


@pytest.mark.parametrize("A, expected", [
    ([[0.9, 0.1], [0.1, 0.9]], [0.5, 0.5]),
    ([[0.5, 0.5], [0.25, 0.75]], [1 / 3, 2 / 3]),
    ([[1.0]], [1.0]),
])
def test_stationary_distribution(A, expected):
    m = fm.FaimModel(kernel_from_chain(A))
    assert np.allclose(fm.stationary_distribution(m), expected, atol=1e-13)


def test_psi_values():
    m = fm.FaimModel(kernel_from_chain([[0.9, 0.1], [0.1, 0.9]]))
    assert fm.psi(m, 0) == pytest.approx(2.0)
    assert fm.psi(m, 1) == pytest.approx(1.8, abs=1e-13)
    # independent high-precision value: max (A^2)[a,b] / pi(b) = 0.82 / 0.5
    assert fm.psi(m, 2) == pytest.approx(1.64, abs=1e-13)


def test_psi_single_state(bsc011):
    assert fm.psi(bsc011, 0) == 1.0
    assert all(fm.psi(bsc011, n) == pytest.approx(1.0) for n in (1, 5, 64))


def test_pair_marginal_values(bsc011):
    m = fm.FaimModel(kernel_from_chain([[0.9, 0.1], [0.1, 0.9]]))
    assert np.allclose(fm.pair_marginal(m, 1), [[0.45, 0.05], [0.05, 0.45]], atol=1e-15)
    assert np.allclose(fm.pair_marginal(bsc011, 7), [[1.0]])


def test_noiseless_outputs_copy_inputs(noiseless):
    _, x, y, _ = fm.sample_trajectories(noiseless, 64, 50, 3)
    assert np.array_equal(x, y)


def test_state_frequencies_match_stationary(ge):
    s0, _, _, s = fm.sample_trajectories(ge, 10, 10_000, 1)
    freq = np.bincount(s.ravel(), minlength=2) / s.size
    # states along a trajectory are correlated; bound via 10^4 independent s0 draws too
    f0 = np.bincount(s0, minlength=2) / s0.size
    sigma = np.sqrt(0.25 / s0.size)
    assert np.all(np.abs(f0 - ge.pi0) < 3 * sigma)
    assert np.all(np.abs(freq - ge.pi0) < 0.03)


def test_same_seed_same_trajectory(ge):
    a = fm.sample_trajectory(ge, 40, seed=11)
    b = fm.sample_trajectory(ge, 40, seed=11)
    assert a[0] == b[0] and all(np.array_equal(u, v) for u, v in zip(a[1:], b[1:]))


def test_sampling_consistency_first_step(ge):
    # empirical (s0, x1, y1, s1) against pi0(s0) T[s0, x1, y1, s1] within 4 standard errors
    num = 200_000
    s0, x, y, s = fm.sample_trajectories(ge, 1, num, 5)
    idx = ((s0 * 2 + x[:, 0]) * 2 + y[:, 0]) * 2 + s[:, 0]
    freq = np.bincount(idx, minlength=16) / num
    p = (ge.pi0[:, None, None, None] * ge.kernel).ravel()
    se = np.sqrt(p * (1 - p) / num)
    assert np.all(np.abs(freq - p) <= 4 * se + 1e-12)


def test_gilbert_elliott_valid(ge):
    assert fm.validate(ge).ok
    assert np.allclose(ge.kernel.sum(axis=(1, 2, 3)), 1.0, atol=1e-12)


def _has_run(bits, pattern):
    return pattern in "".join(map(str, bits))


def test_rll_constraint_holds_on_samples():
    m = fm.rll_source(1, 2, 0.0)
    _, x, _, _ = fm.sample_trajectories(m, 200, 50, 9)
    for row in x:
        assert not _has_run(row, "11")
        assert not _has_run(row, "000")


def test_model_file_roundtrip(tmp_path, ge):
    path = tmp_path / "ge.json"
    fm.save_model(ge, path)
    back = fm.load_model(path)
    assert np.array_equal(back.kernel, ge.kernel)
    assert back.sha256() == ge.sha256()


def test_model_file_unknown_field(tmp_path, ge):
    doc = ge.to_dict()
    doc["comment"] = "x"
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ModelError, match="unknown"):
        fm.load_model(path)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3))
def test_psi_nonincreasing_and_at_least_one(seed, S, Y):
    m = fm.random_model(np.random.default_rng(seed), S, Y)
    vals = [fm.psi(m, n) for n in range(1, 65)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
    assert vals[-1] >= 1 - 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 64))
def test_pair_marginal_consistency(seed, S, n):
    m = fm.random_model(np.random.default_rng(seed), S, 2)
    P = fm.pair_marginal(m, n)
    assert np.allclose(P.sum(axis=1), m.pi0, atol=1e-12)
    assert np.allclose(P.sum(axis=0), m.pi0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3), st.integers(2, 3))
def test_random_models_stochastic(seed, S, Y, L):
    m = fm.random_model(np.random.default_rng(seed), S, Y, input_arity=L)
    assert np.all(np.abs(m.kernel.sum(axis=(1, 2, 3)) - 1) <= 1e-12)
    assert fm.validate(m).ok
