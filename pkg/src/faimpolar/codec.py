"""Polar encoding, channel simulation and SC decoding over a finite-state channel."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest

from ._validation import check_bits, check_positive_int, check_power_of_two, make_rng
from .construct import CodeDesign
from .exceptions import ImpossibleInput, LengthMismatch
from .model import FaimModel, stationary_distribution
from .trellis import sc_pass

DECODE_CHUNK = 128
UNIFORM_TOLERANCE = 0.05


def encode(u):
    """``x = u G_N``: bit-reversal followed by XOR butterflies; also its own inverse.

    Works on the last axis of an array of any shape.
    """
    u = check_bits(u, "u")
    N = u.shape[-1]
    n = check_power_of_two(N, "block length")
    lead = u.shape[:-1]
    rev = np.zeros(N, dtype=np.int64)
    for k in range(n):
        rev |= ((np.arange(N) >> k) & 1) << (n - 1 - k)
    x = u[..., rev].copy()
    h = 1
    while h < N:
        blocks = x.reshape(lead + (N // (2 * h), 2, h))
        blocks[..., 0, :] ^= blocks[..., 1, :]
        h *= 2
    return x


def input_marginal(model: FaimModel) -> np.ndarray:
    """Stationary law of a single input symbol."""
    pi0 = stationary_distribution(model)
    return np.einsum("s,sxyt->x", pi0, model.kernel)


def _transmit(model, x, draws):
    """Sample outputs with the inputs forced; ``draws`` holds ``N + 1`` uniforms per row."""
    B, N = x.shape
    T = model.kernel
    S, _, Y, _ = T.shape
    pi_cdf = np.cumsum(stationary_distribution(model))
    state = np.minimum(np.searchsorted(pi_cdf / pi_cdf[-1], draws[:, 0], side="right"), S - 1)
    states = np.empty((B, N + 1), np.int64)
    states[:, 0] = state
    y = np.empty((B, N), np.int64)
    for j in range(N):
        rows = T[state, x[:, j]].reshape(B, Y * S)
        mass = rows.sum(axis=1)
        if np.any(mass <= 0):
            bad = int(np.flatnonzero(mass <= 0)[0])
            raise ImpossibleInput(
                f"input {int(x[bad, j])} has zero probability in state {int(state[bad])} at position {j}")
        cdf = np.cumsum(rows, axis=1) / mass[:, None]
        idx = np.minimum((cdf <= draws[:, j + 1, None]).sum(axis=1), Y * S - 1)
        y[:, j], state = np.divmod(idx, S)
        states[:, j + 1] = state
    return y, states


def transmit(model: FaimModel, x, seed=None):
    """Send ``x`` through the channel; returns ``(y, states)`` with ``states = s_0..s_N``."""
    x = np.asarray(check_bits(x, "x"), np.int64)
    if x.ndim != 1:
        raise LengthMismatch("transmit takes a single block; use a loop or run_trials for batches")
    rng = make_rng(seed)
    y, states = _transmit(model, x[None], rng.random((1, x.size + 1)))
    return y[0], states[0]


@dataclass
class TrialResult:
    trials: int
    info_bits: int
    frame_errors: int
    bit_errors: int
    contradictions: int
    per_trial_bit_errors: np.ndarray

    @property
    def fer(self) -> float:
        return self.frame_errors / self.trials

    @property
    def ber(self) -> float:
        total = self.trials * self.info_bits
        return self.bit_errors / total if total else 0.0

    @staticmethod
    def _wilson(k, n, level):
        if n == 0:
            return (0.0, 1.0)
        ci = binomtest(k, n).proportion_ci(confidence_level=level, method="wilson")
        return (float(ci.low), float(ci.high))

    def fer_interval(self, level: float = 0.95):
        return self._wilson(self.frame_errors, self.trials, level)

    def ber_interval(self, level: float = 0.95):
        return self._wilson(self.bit_errors, self.trials * self.info_bits, level)

    def rows(self):
        for t, e in enumerate(self.per_trial_bit_errors.tolist()):
            yield {"trial": t, "frame_errors": int(e > 0), "bit_errors": int(e), "decoded_ok": int(e == 0)}


def _trial_inputs(seq, K, N):
    rng = np.random.default_rng(seq)
    return rng.integers(0, 2, K), rng.random(N + 1)


def _run_chunk(model, design, seqs):
    K, N = design.num_info, design.N
    info_pos = design.info_indices
    drawn = [_trial_inputs(s, K, N) for s in seqs]
    info = np.array([d[0] for d in drawn], np.int64).reshape(len(seqs), K)
    draws = np.array([d[1] for d in drawn])
    u = np.zeros((len(seqs), N), np.int64)
    u[:, info_pos] = info
    x = encode(u).astype(np.int64)
    y, _ = _transmit(model, x, draws)
    res = sc_pass(model, y, frozen=design.frozen_mask, keep_posteriors=False)
    errors = (res.decisions[:, info_pos] != info).sum(axis=1)
    return errors, res.contradictions


def run_trials(model: FaimModel, design: CodeDesign, num_trials: int, seed=0, threads: int = 1) -> TrialResult:
    """Monte Carlo frame/bit error rates with all-zero frozen bits.

    Every trial draws its information bits and channel randomness from its
    own spawned seed, so results do not depend on batching or ``threads``.
    """
    num_trials = check_positive_int(num_trials, "num_trials")
    marginal = input_marginal(model)
    if np.max(np.abs(marginal - 0.5)) > UNIFORM_TOLERANCE:
        warnings.warn(
            f"input marginal {marginal.tolist()} is far from uniform; uniform coded inputs "
            "follow a different law than the model assumes", stacklevel=2)
    seqs = np.random.SeedSequence(seed).spawn(num_trials)
    chunks = [seqs[k:k + DECODE_CHUNK] for k in range(0, num_trials, DECODE_CHUNK)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _run_chunk(model, design, c), chunks))
    else:
        parts = [_run_chunk(model, design, c) for c in chunks]
    errors = np.concatenate([p[0] for p in parts])
    return TrialResult(
        trials=num_trials,
        info_bits=design.num_info,
        frame_errors=int((errors > 0).sum()),
        bit_errors=int(errors.sum()),
        contradictions=int(sum(p[1] for p in parts)),
        per_trial_bit_errors=errors,
    )
