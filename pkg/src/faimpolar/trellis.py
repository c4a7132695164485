"""Successive-cancellation trellis for binary inputs over a finite-state process.

A message for a sub-block is a log-domain table ``M[..., a, b, u]``: the
likelihood of the sub-block's observations (and the partial inputs already
fixed inside it) jointly with the current synthetic input ``u`` and the
final state ``b``, given the initial state ``a``.  The state-pair dimension
makes the two halves of a block conditionally independent, so a parent
message is the middle-state sum of two child messages.

Leading axes are batch axes; every routine here is vectorized over them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_power_of_two
from .exceptions import InvalidParameter, LengthMismatch
from .model import FaimModel, stationary_distribution

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - the numpy reference path is used instead
    _HAVE_NUMBA = False

# _FLIP[t, v] = t xor v
_FLIP = np.array([[0, 1], [1, 0]])


def _lse(x, axis):
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis)


def normalize(msg):
    """Shift each message so its largest entry is 0 (all -inf messages are kept)."""
    m = np.max(msg, axis=(-3, -2, -1), keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return msg - m


def log_kernel(model: FaimModel) -> np.ndarray:
    if model.input_arity != 2:
        raise InvalidParameter("the trellis supports binary inputs only")
    with np.errstate(divide="ignore"):
        return np.log(model.kernel)


def leaf_message(model: FaimModel, y, x=None, log_t=None):
    """Leaf likelihood ``log T[a, u, y, b]`` laid out as ``[..., a, b, u]``.

    ``y`` may be an integer array of any shape.  When ``x`` is given the
    entries with ``u != x`` are set to ``-inf``.
    """
    lt = log_kernel(model) if log_t is None else log_t
    y = np.asarray(y)
    if np.any((y < 0) | (y >= lt.shape[2])):
        raise InvalidParameter("output symbol out of range")
    msg = lt.transpose(2, 0, 3, 1)[y]
    if x is not None:
        x = np.asarray(x)
        mask = np.arange(2) != x[..., None, None, None]
        msg = np.where(mask, -np.inf, msg)
    return normalize(msg)


def _minus_lse(left, right):
    lp = left[..., _FLIP]  # [..., a, c, t, v]
    x = lp[..., :, :, None, :, :] + right[..., None, :, :, None, :]  # [..., a, c, b, t, v]
    return _lse(_lse(x, -1), -3)


def _plus_lse(left, right, t):
    lsel = np.where((t == 0)[..., None, None, None], left, left[..., ::-1])
    x = lsel[..., :, :, None, :] + right[..., None, :, :, :]  # [..., a, c, b, v]
    return _lse(x, -3)


if _HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _lse_vals(vals, k):
        m = -np.inf
        for j in range(k):
            if vals[j] > m:
                m = vals[j]
        if m == -np.inf:
            return -np.inf
        acc = 0.0
        for j in range(k):
            acc += np.exp(vals[j] - m)
        return m + np.log(acc)

    @numba.njit(cache=True, nogil=True)
    def _combine_kernel(left, right, t, plus):
        M, S = left.shape[0], left.shape[1]
        out = np.empty((M, S, S, 2))
        vals = np.empty(2 * S)
        for i in range(M):
            top = -np.inf
            for a in range(S):
                for b in range(S):
                    for w in range(2):
                        k = 0
                        if plus:
                            # w is v; t is known
                            for c in range(S):
                                vals[k] = left[i, a, c, t[i] ^ w] + right[i, c, b, w]
                                k += 1
                        else:
                            # w is t; sum over v
                            for c in range(S):
                                for v in range(2):
                                    vals[k] = left[i, a, c, w ^ v] + right[i, c, b, v]
                                    k += 1
                        r = _lse_vals(vals, k)
                        out[i, a, b, w] = r
                        if r > top:
                            top = r
            if top > -np.inf:
                for a in range(S):
                    for b in range(S):
                        for w in range(2):
                            out[i, a, b, w] -= top
        return out


def _flat(left, right, t=None):
    left, right = np.broadcast_arrays(left, right)
    shape = left.shape
    S = shape[-2]
    lf = np.ascontiguousarray(left, dtype=np.float64).reshape(-1, S, S, 2)
    rf = np.ascontiguousarray(right, dtype=np.float64).reshape(-1, S, S, 2)
    if t is None:
        tf = np.zeros(lf.shape[0], np.int64)
    else:
        tf = np.ascontiguousarray(np.broadcast_to(np.asarray(t, np.int64), shape[:-3])).ravel()
    return lf, rf, tf, shape


def minus_combine(left, right):
    """``out[a, b, t] = LSE_{c, v} left[a, c, t^v] + right[c, b, v]``."""
    if not _HAVE_NUMBA:
        return normalize(_minus_lse(left, right))
    lf, rf, tf, shape = _flat(left, right)
    return _combine_kernel(lf, rf, tf, False).reshape(shape)


def plus_combine(left, right, t):
    """``out[a, b, v] = LSE_c left[a, c, t^v] + right[c, b, v]`` for a known ``t``."""
    if not _HAVE_NUMBA:
        return normalize(_plus_lse(left, right, np.asarray(t)))
    lf, rf, tf, shape = _flat(left, right, t)
    return _combine_kernel(lf, rf, tf, True).reshape(shape)


def root_posterior(msg, log_pi0):
    """Posterior ``P(u, S_0 = a, S_N = b | evidence)`` and a contradiction mask.

    Rows with no finite entry come back uniform and are flagged.
    """
    joint = msg + log_pi0[:, None, None]
    m = np.max(joint, axis=(-3, -2, -1), keepdims=True)
    dead = ~np.isfinite(m)
    w = np.exp(joint - np.where(dead, 0.0, m))
    w = np.where(dead, 1.0, w)
    w = w / w.sum(axis=(-3, -2, -1), keepdims=True)
    return w, dead[..., 0, 0, 0]


@dataclass
class ScResult:
    """Output of a successive-cancellation pass over a batch of blocks.

    ``posteriors[..., i, u]`` is ``P(U_i = u | y, u_1^{i-1})`` and
    ``resolved[..., i, a, b, u]`` the same jointly with the boundary states.
    """

    decisions: np.ndarray
    posteriors: np.ndarray | None
    resolved: np.ndarray | None
    contradictions: int


def sc_pass(model: FaimModel, y, frozen=None, frozen_values=None, genie=None, keep_posteriors=True):
    """Run SC over one block (``y`` of shape ``(N,)``) or a batch ``(B, N)``.

    Parameters
    ----------
    frozen : bool array (N,), optional
        Indices whose values are forced rather than decided.
    frozen_values : int array broadcastable to ``y``, optional
        Values at frozen indices (default zeros).
    genie : int array like ``y``, optional
        True synthetic inputs ``u``.  When given every index is set to the
        true value after its posterior is computed.
    """
    y = np.asarray(y, dtype=np.int64)
    single = y.ndim == 1
    Y = y[None] if single else y
    B, N = Y.shape
    n = check_power_of_two(N, "block length")
    frozen = np.zeros(N, bool) if frozen is None else np.asarray(frozen, bool)
    if frozen.shape != (N,):
        raise LengthMismatch(f"frozen mask has length {frozen.size}, block has {N}")
    fv = np.zeros((B, N), np.int64) if frozen_values is None else np.broadcast_to(
        np.asarray(frozen_values, np.int64), (B, N))
    if genie is not None:
        genie = np.asarray(genie, np.int64)
        genie = genie[None] if genie.ndim == 1 else genie
        if genie.shape != (B, N):
            raise LengthMismatch(f"genie values have shape {genie.shape}, expected {(B, N)}")

    log_t = log_kernel(model)
    S = model.num_states
    log_pi0 = np.log(stationary_distribution(model))
    P = [None] * (n + 1)
    C = [np.zeros((B, 2 ** (n - lam), 2), np.int64) for lam in range(n + 1)]
    P[0] = leaf_message(model, Y, log_t=log_t)
    for lam in range(1, n + 1):
        P[lam] = np.empty((B, 2 ** (n - lam), S, S, 2))

    def calc(lam, phi):
        if lam == 0:
            return
        if phi % 2 == 0:
            calc(lam - 1, phi // 2)
        left, right = P[lam - 1][:, 0::2], P[lam - 1][:, 1::2]
        if phi % 2 == 0:
            P[lam][:] = minus_combine(left, right)
        else:
            P[lam][:] = plus_combine(left, right, C[lam][:, :, 0])

    def update(lam, phi):
        psi = phi // 2
        c = C[lam]
        C[lam - 1][:, 0::2, psi % 2] = c[:, :, 0] ^ c[:, :, 1]
        C[lam - 1][:, 1::2, psi % 2] = c[:, :, 1]
        if psi % 2 == 1:
            update(lam - 1, psi)

    decisions = np.zeros((B, N), np.int64)
    post = np.zeros((B, N, 2)) if keep_posteriors else None
    resolved = np.zeros((B, N, S, S, 2)) if keep_posteriors else None
    contradictions = 0
    for phi in range(N):
        calc(n, phi)
        w, dead = root_posterior(P[n][:, 0], log_pi0)
        contradictions += int(dead.sum())
        pu = w.sum(axis=(-3, -2))
        if keep_posteriors:
            post[:, phi] = pu
            resolved[:, phi] = w
        if genie is not None:
            u = genie[:, phi]
        elif frozen[phi]:
            u = fv[:, phi]
        else:
            u = (pu[:, 1] > pu[:, 0]).astype(np.int64)
        decisions[:, phi] = u
        C[n][:, 0, phi % 2] = u
        if phi % 2 == 1:
            update(n, phi)

    if single:
        decisions = decisions[0]
        if keep_posteriors:
            post, resolved = post[0], resolved[0]
    return ScResult(decisions, post, resolved, contradictions)


def genie_posteriors(model: FaimModel, x, y):
    """Genie-aided posteriors for every index, computed level by level.

    ``x`` and ``y`` have shape ``(B, N)``.  Returns ``(resolved, u)`` where
    ``resolved[b, i, a, s, u]`` is ``P(U_i = u, S_0 = a, S_N = s | y, u_1^{i-1})``
    and ``u = x G_N``.  Equivalent to :func:`sc_pass` in genie mode, without
    the sequential schedule.
    """
    x = np.asarray(x, np.int64)
    y = np.asarray(y, np.int64)
    if x.shape != y.shape or x.ndim != 2:
        raise LengthMismatch("x and y must both have shape (B, N)")
    B, N = y.shape
    n = check_power_of_two(N, "block length")
    log_pi0 = np.log(stationary_distribution(model))
    S = model.num_states
    msg = leaf_message(model, y)[:, :, None]  # [B, blocks, indices, a, b, u]
    u = x[:, :, None]
    for _ in range(n):
        left, right = msg[:, 0::2], msg[:, 1::2]
        ul, ur = u[:, 0::2], u[:, 1::2]
        t = ul ^ ur
        blocks, width = left.shape[1], left.shape[2]
        new = np.empty((B, blocks, 2 * width, S, S, 2))
        new[:, :, 0::2] = minus_combine(left, right)
        new[:, :, 1::2] = plus_combine(left, right, t)
        nu = np.empty((B, blocks, 2 * width), np.int64)
        nu[:, :, 0::2] = t
        nu[:, :, 1::2] = ur
        msg, u = new, nu
    w, _ = root_posterior(msg[:, 0], log_pi0)
    return w, u[:, 0]
