import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from faimpolar import params as pa
from faimpolar import verify
from faimpolar.exceptions import DomainError, InvalidParameter

Z_BSC = 2 * math.sqrt(0.11 * 0.89)
H_BSC = -(0.11 * math.log2(0.11) + 0.89 * math.log2(0.89))


def _channel_joint(W, px=(0.5, 0.5)):
    return pa.JointDist(np.asarray(px)[:, None] * np.asarray(W))


def _bsc(p):
    return _channel_joint([[1 - p, p], [p, 1 - p]])


def _bec(e):
    return _channel_joint([[1 - e, 0, e], [0, 1 - e, e]])


# loop-based reference formulas, written independently of the vectorized kernels
def ref_params(t):
    t = np.asarray(t, float)
    L, Q = t.shape
    pe = sum(t[:, q].sum() - t[:, q].max() for q in range(Q))
    z = sum(math.sqrt(t[u, q] * t[v, q]) for q in range(Q) for u in range(L) for v in range(L) if u != v) / (L - 1)
    k = sum(abs(t[u, q] - t[v, q]) for q in range(Q) for u in range(L) for v in range(L) if u != v) / (2 * (L - 1))
    h = 0.0
    for q in range(Q):
        col = t[:, q].sum()
        for u in range(L):
            if t[u, q] > 0:
                h -= t[u, q] * math.log(t[u, q] / col, L)
    return {"Pe": pe, "Z": z, "K": k, "H": h}


def test_bsc_examples():
    d = _bsc(0.11)
    assert pa.prob_error(d) == pytest.approx(0.11, abs=1e-15)
    assert pa.bhattacharyya(d) == pytest.approx(Z_BSC, abs=1e-15)
    assert pa.bhattacharyya(d) == pytest.approx(0.6257795138864806, abs=1e-15)
    assert pa.cond_entropy(d) == pytest.approx(H_BSC, abs=1e-15)
    assert pa.cond_entropy(d) == pytest.approx(0.49991595816452800, abs=1e-14)


@pytest.mark.parametrize("eps", [0.0, 0.2, 0.5, 0.9, 1.0])
def test_bec_examples(eps):
    d = _bec(eps)
    assert pa.bhattacharyya(d) == pytest.approx(eps, abs=1e-15)
    assert pa.total_variation(d) == pytest.approx(1 - eps, abs=1e-15)
    assert pa.cond_entropy(d) == pytest.approx(eps, abs=1e-15)


def test_extreme_channels():
    ident = pa.JointDist(np.eye(2) / 2)
    indep = pa.JointDist(np.full((2, 3), 1 / 6))
    assert pa.all_parameters(ident) == pytest.approx({"Pe": 0, "Z": 0, "K": 1, "H": 0})
    assert pa.all_parameters(indep) == pytest.approx({"Pe": 0.5, "Z": 1, "K": 0, "H": 1})


def test_joint_must_sum_to_one():
    with pytest.raises(InvalidParameter):
        pa.JointDist(np.full((2, 2), 0.3))


def test_theta_examples():
    assert (pa.theta_k(0.0), pa.theta_h(0.0), pa.theta_z(0.0)) == pytest.approx((1, 0, 0))
    assert (pa.theta_k(0.5), pa.theta_h(0.5), pa.theta_z(0.5)) == pytest.approx((0, 1, 1))
    assert pa.theta_z(0.11) == pytest.approx(Z_BSC, abs=1e-15)
    assert pa.theta_h(0.11) == pytest.approx(H_BSC, abs=1e-15)
    with pytest.raises(DomainError):
        pa.theta_h(0.6)


def test_bsi_single_pair_equals_plain():
    t = np.array([[0.3, 0.1, 0.05], [0.05, 0.2, 0.3]])
    fam = pa.BsiFamily(t[None, None], np.ones((1, 1)))
    for w in pa.PARAMETERS:
        assert pa.bsi_aggregate(fam, w) == pytest.approx(pa.parameter(pa.JointDist(t), w), abs=1e-15)


def test_bsi_identical_pairs_equal_common_value():
    t = np.array([[0.3, 0.1, 0.05], [0.05, 0.2, 0.3]])
    fam = pa.BsiFamily(np.broadcast_to(t, (2, 2) + t.shape).copy(), np.array([[0.4, 0.1], [0.1, 0.4]]))
    for w in pa.PARAMETERS:
        assert pa.bsi_aggregate(fam, w) == pytest.approx(pa.parameter(pa.JointDist(t), w), abs=1e-15)


def test_vectorized_matches_loop_reference():
    rng = np.random.default_rng(0)
    for L in (2, 3, 4, 5):
        tabs = verify.random_joints(rng, 200, arity=L, max_obs=6)
        got = pa.pairwise_parameters(tabs) if L == 2 else pa.batch_parameters(tabs)
        for j in range(len(tabs)):
            ref = ref_params(tabs[j])
            for k in ref:
                assert got[k][j] == pytest.approx(ref[k], abs=1e-12)


def test_lary_forms_agree_with_binary_forms():
    tabs = verify.random_joints(np.random.default_rng(1), 10_000)
    a, b = pa.batch_parameters(tabs), pa.pairwise_parameters(tabs)
    for k in a:
        assert np.max(np.abs(a[k] - b[k])) <= 1e-12


joint_tables = arrays(np.float64, st.tuples(st.integers(2, 4), st.integers(1, 6)),
                      elements=st.floats(0, 1, allow_nan=False)).filter(lambda t: t.sum() > 1e-3)


def _norm(t):
    return t / t.sum()


@settings(max_examples=200, deadline=None)
@given(joint_tables)
def test_bounds_hold_for_arbitrary_tables(t):
    t = _norm(t)
    L = t.shape[0]
    p = pa.all_parameters(pa.JointDist(t))
    tol = 1e-10
    assert p["Z"] ** 2 <= p["H"] + tol
    assert p["H"] <= math.log1p((L - 1) * p["Z"]) / math.log(L) + tol
    assert 1 - p["Z"] <= p["K"] + tol
    assert p["K"] <= math.sqrt(max(1 - p["Z"] ** 2, 0)) + tol
    assert p["Pe"] <= (L - 1) * p["Z"] / 2 + tol
    if L == 2:
        assert p["K"] == pytest.approx(1 - 2 * p["Pe"], abs=tol)
        assert 1 - p["H"] <= p["K"] + tol


@settings(max_examples=200, deadline=None)
@given(joint_tables, st.randoms(use_true_random=False))
def test_parameters_invariant_under_observation_permutation(t, rnd):
    t = _norm(t)
    perm = list(range(t.shape[1]))
    rnd.shuffle(perm)
    a = pa.all_parameters(pa.JointDist(t))
    b = pa.all_parameters(pa.JointDist(t[:, perm]))
    for k in a:
        assert a[k] == pytest.approx(b[k], abs=1e-13)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.tuples(st.just(2), st.integers(1, 5), st.integers(1, 4)),
              elements=st.floats(0, 1, allow_nan=False)).filter(lambda t: t.sum() > 1e-3))
def test_conditioning_on_more_never_hurts(t):
    t = t / t.sum()
    coarse = pa.all_parameters(pa.JointDist(t.sum(axis=2)))
    fine = pa.all_parameters(pa.JointDist(t.reshape(2, -1)))
    assert coarse["K"] <= fine["K"] + 1e-10
    assert coarse["Z"] >= fine["Z"] - 1e-10
    assert coarse["H"] >= fine["H"] - 1e-10


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 0.5))
def test_theta_relations(theta):
    k, h, z = pa.theta_k(theta), pa.theta_h(theta), pa.theta_z(theta)
    assert z * z <= h + 1e-12 and h <= z + 1e-12
    assert k + h >= 1 - 1e-12
