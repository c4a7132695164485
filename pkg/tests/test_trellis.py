import gc
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import bec_model
from faimpolar import model as fm
from faimpolar import oracle
from faimpolar import trellis as tr
from faimpolar.codec import encode


def _lin(msg):
    w = np.exp(msg)
    return w / w.sum(axis=(-3, -2, -1), keepdims=True)


def test_leaf_message_bsc():
    p = 0.2
    m = fm.memoryless_from_channel(fm.bsc(p))
    w = _lin(tr.leaf_message(m, np.array(0)))
    assert w[0, 0] == pytest.approx([1 - p, p], abs=1e-15)


def test_leaf_message_erasure_uniform():
    w = _lin(tr.leaf_message(bec_model(0.3), np.array(2)))
    assert w[0, 0] == pytest.approx([0.5, 0.5], abs=1e-15)


def test_leaf_message_deterministic(noiseless):
    w = _lin(tr.leaf_message(noiseless, np.array(1)))
    assert w[0, 0] == pytest.approx([0, 1], abs=1e-15)


def test_single_state_combines_are_classical():
    p, q = np.array([0.7, 0.3]), np.array([0.4, 0.6])
    left, right = np.log(p)[None, None], np.log(q)[None, None]
    minus = _lin(tr.minus_combine(left, right))[0, 0]
    assert minus == pytest.approx([p[0] * q[0] + p[1] * q[1], p[1] * q[0] + p[0] * q[1]], abs=1e-15)
    plus = _lin(tr.plus_combine(left, right, np.array(1)))[0, 0]
    ref = np.array([p[1] * q[0], p[0] * q[1]])
    assert plus == pytest.approx(ref / ref.sum(), abs=1e-15)


def test_deterministic_children_give_one_hot_minus():
    with np.errstate(divide="ignore"):
        left = np.log(np.array([0.0, 1.0]))[None, None]
        right = np.log(np.array([1.0, 0.0]))[None, None]
        assert _lin(tr.minus_combine(left, right))[0, 0] == pytest.approx([0, 1])


def test_contradiction_is_flagged(noiseless):
    # y = (0, 1) forces x = (0, 1), so u1 = 1; deciding u1 = 0 leaves no consistent v
    res = tr.sc_pass(noiseless, np.array([0, 1]), frozen=np.array([True, False]))
    assert res.contradictions == 1
    assert np.allclose(res.posteriors[1], [0.5, 0.5])


@pytest.mark.parametrize("i", [1, 2])
def test_two_step_messages_match_oracle(ge, i):
    joint, _ = oracle.synthetic_channel(ge, 2, i)
    t = joint.table
    for yw in range(4):
        y = np.array([yw >> 1, yw & 1])
        for prefix in range(2 ** (i - 1)):
            q = prefix * 4 + yw
            genie = np.array([prefix, 0])
            w = tr.sc_pass(ge, y, genie=genie).posteriors[i - 1]
            assert w == pytest.approx(t[:, q] / t[:, q].sum(), abs=1e-9)


def test_genie_posteriors_match_oracle_n4(ge):
    N = 4
    chans = oracle.all_synthetic_channels(ge, N)
    perm = oracle.transform_words(N)
    xs = oracle.word_bits(np.repeat(np.arange(2**N), 2**N), N)
    ys = oracle.word_bits(np.tile(np.arange(2**N), 2**N), N)
    res = tr.sc_pass(ge, ys, genie=(xs @ oracle.polar_matrix(N)) % 2)
    u = oracle.word_bits(perm[np.repeat(np.arange(2**N), 2**N)], N)
    yw = np.tile(np.arange(2**N), 2**N)
    for i in range(N):
        prefix = oracle.bits_word(u[:, :i]) if i else np.zeros(len(u), int)
        t = chans[i][0].table[:, prefix * 2**N + yw]
        live = t.sum(axis=0) > 0
        ref = t[:, live] / t[:, live].sum(axis=0)
        assert np.max(np.abs(res.posteriors[live, i].T - ref)) <= 1e-9


def test_level_schedule_matches_sequential(ge):
    _, x, y, _ = fm.sample_trajectories(ge, 32, 6, 2)
    w, u = tr.genie_posteriors(ge, x, y)
    assert np.array_equal(u, encode(x))
    seq = tr.sc_pass(ge, y, genie=u)
    assert np.allclose(w, seq.resolved, atol=1e-12)


def test_resolved_marginalizes_to_posterior(ge):
    _, _, y, _ = fm.sample_trajectories(ge, 16, 3, 4)
    res = tr.sc_pass(ge, y)
    assert np.allclose(res.resolved.sum(axis=(-3, -2)), res.posteriors, atol=1e-14)


def test_noiseless_decoding_is_exact(noiseless):
    rng = np.random.default_rng(0)
    u = rng.integers(0, 2, (5, 64))
    res = tr.sc_pass(noiseless, encode(u))
    assert np.array_equal(res.decisions, u)


def test_genie_frozen_everything_reproduces_u(ge):
    rng = np.random.default_rng(1)
    u = rng.integers(0, 2, (4, 16))
    y = rng.integers(0, 2, (4, 16))
    res = tr.sc_pass(ge, y, frozen=np.ones(16, bool), frozen_values=u)
    assert np.array_equal(res.decisions, u)


def test_decisions_are_deterministic(ge):
    _, _, y, _ = fm.sample_trajectories(ge, 64, 4, 8)
    a, b = tr.sc_pass(ge, y), tr.sc_pass(ge, y)
    assert np.array_equal(a.decisions, b.decisions)
    assert np.array_equal(a.posteriors, b.posteriors)


def test_compiled_kernels_match_reference():
    rng = np.random.default_rng(3)
    left = np.log(rng.random((50, 3, 3, 2)))
    right = np.log(rng.random((50, 3, 3, 2)))
    right[0] = -np.inf
    t = rng.integers(0, 2, 50)
    assert np.allclose(tr.minus_combine(left, right), tr.normalize(tr._minus_lse(left, right)), atol=1e-12)
    assert np.allclose(tr.plus_combine(left, right, t), tr.normalize(tr._plus_lse(left, right, t)), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-30, 30), st.integers(0, 15))
def test_scaling_a_message_changes_nothing(seed, shift, node):
    rng = np.random.default_rng(seed)
    left = np.log(rng.random((16, 2, 2, 2)))
    right = np.log(rng.random((16, 2, 2, 2)))
    t = rng.integers(0, 2, 16)
    scaled = left.copy()
    scaled[node] += shift
    assert np.allclose(tr.minus_combine(left, right), tr.minus_combine(scaled, right), atol=1e-12)
    assert np.allclose(tr.plus_combine(left, right, t), tr.plus_combine(scaled, right, t), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
def test_scaling_the_root_keeps_posterior(seed, shift):
    rng = np.random.default_rng(seed)
    msg = np.log(rng.random((4, 2, 2, 2)))
    log_pi0 = np.log(np.array([0.3, 0.7]))
    a, _ = tr.root_posterior(msg, log_pi0)
    b, _ = tr.root_posterior(msg + shift, log_pi0)
    assert np.allclose(a, b, atol=1e-12)


def test_runtime_scales_like_n_log_n(ge):
    """Doubling the block twice should cost about 4 * 12 / 10 = 4.8 times more."""
    data = {}
    for N in (1024, 4096):
        _, _, y, _ = fm.sample_trajectories(ge, N, 8, 0)
        data[N] = y
        tr.sc_pass(ge, y, keep_posteriors=False)  # warm up
    best = {N: np.inf for N in data}
    gc.disable()
    try:
        for _ in range(15):
            for N, y in data.items():
                start = time.perf_counter()
                tr.sc_pass(ge, y, keep_posteriors=False)
                best[N] = min(best[N], time.perf_counter() - start)
    finally:
        gc.enable()
    ratio = best[4096] / best[1024]
    assert 3.8 <= ratio <= 5.8, (ratio, best)
