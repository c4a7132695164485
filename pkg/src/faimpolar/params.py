"""Distribution parameters of a pair (U, Q) computed from a finite joint table.

Binary ``U`` uses the classical definitions; for ``L``-ary ``U`` the pairwise
forms are used (they coincide with the binary ones at ``L = 2``):

* ``Pe  = sum_q P(q) (1 - max_u P(u|q))``
* ``Z   = 1/(L-1) sum_q sum_{u != u'} sqrt(P(u,q) P(u',q))``
* ``K   = 1/(2(L-1)) sum_q sum_{u != u'} |P(u,q) - P(u',q)|``
* ``H   = -sum_{u,q} P(u,q) log_L P(u|q)``

Sums rely on numpy's pairwise summation, which keeps accuracy for the
10^5-symbol tables produced by exact density evolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InvalidParameter

PARAMETERS = ("Pe", "Z", "K", "H")
_CLAMP_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class JointDist:
    """Joint table ``P[u, q]`` of a symbol ``u`` and an observation ``q``.

    Parameters
    ----------
    table : array-like of shape (L, Q)
    atol : float
        Tolerated deviation of the total mass from one.
    """

    table: np.ndarray
    atol: float = 1e-12

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != 2 or t.shape[0] < 2:
            raise InvalidParameter(f"joint table must have shape (L >= 2, Q), got {t.shape}")
        if np.any(t < 0) or not np.all(np.isfinite(t)):
            raise InvalidParameter("joint table entries must be finite and non-negative")
        if abs(t.sum() - 1.0) > self.atol:
            raise InvalidParameter(f"joint table mass is {t.sum()!r}, expected 1")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @classmethod
    def from_subnormalized(cls, table, mass, atol=1e-10):
        """Condition a sub-table of total mass ``mass`` (e.g. on a boundary-state pair)."""
        if mass <= 0:
            raise InvalidParameter("cannot condition on a zero-mass event")
        return cls(np.asarray(table, dtype=float) / mass, atol=atol)

    @property
    def arity(self) -> int:
        return self.table.shape[0]

    @property
    def obs_size(self) -> int:
        return self.table.shape[1]


def _table(d) -> np.ndarray:
    return d.table if isinstance(d, JointDist) else np.asarray(d, dtype=float)


def _clamp(value):
    value = np.asarray(value, dtype=float)
    lo, hi = -_CLAMP_SLACK, 1 + _CLAMP_SLACK
    if np.any((value < lo) | (value > hi)):
        return value
    return np.clip(value, 0.0, 1.0)


# Kernels below accept tables of shape (..., L, Q) so that batches of tables
# can be evaluated in one call.


def _pe_binary(t):
    return np.minimum(t[..., 0, :], t[..., 1, :]).sum(axis=-1)


def _pe_lary(t):
    return (t.sum(axis=-2) - t.max(axis=-2)).sum(axis=-1)


def _z_binary(t):
    return 2.0 * np.sqrt(t[..., 0, :] * t[..., 1, :]).sum(axis=-1)


def _z_lary(t):
    L = t.shape[-2]
    root = np.sqrt(t)
    # sum over ordered pairs u != u' of sqrt(P(u,q) P(u',q))
    pairs = root.sum(axis=-2) ** 2 - t.sum(axis=-2)
    return np.maximum(pairs, 0.0).sum(axis=-1) / (L - 1)


def _k_binary(t):
    return np.abs(t[..., 0, :] - t[..., 1, :]).sum(axis=-1)


def _k_lary(t):
    L = t.shape[-2]
    diff = np.abs(t[..., :, None, :] - t[..., None, :, :])
    return diff.sum(axis=(-3, -2, -1)) / (2.0 * (L - 1))


def _pe(t):
    return _pe_binary(t) if t.shape[-2] == 2 else _pe_lary(t)


def _z(t):
    return _z_binary(t) if t.shape[-2] == 2 else _z_lary(t)


def _k(t):
    return _k_binary(t) if t.shape[-2] == 2 else _k_lary(t)


def _h(t):
    L = t.shape[-2]
    col = t.sum(axis=-2, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(t > 0, t / np.where(col > 0, col, 1.0), 1.0)
        terms = np.where(t > 0, -t * np.log(ratio), 0.0)
    return terms.sum(axis=(-2, -1)) / np.log(L)


_KERNELS = {"Pe": _pe, "Z": _z, "K": _k, "H": _h}


def prob_error(d) -> float:
    """Error probability of the MAP estimate of ``U`` from ``Q``."""
    return float(_clamp(_pe(_table(d))))


def bhattacharyya(d) -> float:
    """Bhattacharyya parameter ``Z(U|Q)``."""
    return float(_clamp(_z(_table(d))))


def total_variation(d) -> float:
    """Total variation distance ``K(U|Q)``."""
    return float(_clamp(_k(_table(d))))


def cond_entropy(d) -> float:
    """Conditional entropy ``H(U|Q)`` in units of ``log L`` (bits for binary ``U``)."""
    return float(_clamp(_h(_table(d))))


def all_parameters(d) -> dict:
    t = _table(d)
    return {name: float(_clamp(fn(t))) for name, fn in _KERNELS.items()}


def batch_parameters(tables) -> dict:
    """Evaluate every parameter on a stack of tables of shape (B, L, Q)."""
    t = np.asarray(tables, dtype=float)
    return {name: _clamp(fn(t)) for name, fn in _KERNELS.items()}


def pairwise_parameters(tables) -> dict:
    """The ``L``-ary forms evaluated even when ``L = 2`` (for cross-checking)."""
    t = np.asarray(tables, dtype=float)
    return {"Pe": _pe_lary(t), "Z": _z_lary(t), "K": _k_lary(t), "H": _h(t)}


def parameter(d, which: str) -> float:
    try:
        fn = _KERNELS[which]
    except KeyError:
        raise InvalidParameter(f"unknown parameter {which!r}; choose from {PARAMETERS}") from None
    return float(_clamp(fn(_table(d))))


# ---------------------------------------------------------------------------
# scalar functions of the smaller posterior theta = min_u P(u|q)


def _check_theta(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > 0.5)) or np.any(np.isnan(theta)):
        raise DomainError("theta must lie in [0, 1/2]")
    return theta


def theta_k(theta):
    return 1.0 - 2.0 * _check_theta(theta)


def theta_h(theta):
    theta = _check_theta(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(theta > 0, -theta * np.log2(np.where(theta > 0, theta, 1)), 0.0)
    b = -(1 - theta) * np.log2(1 - theta)
    return a + b


def theta_z(theta):
    theta = _check_theta(theta)
    return 2.0 * np.sqrt(theta * (1 - theta))


# ---------------------------------------------------------------------------
# boundary-state-informed families


@dataclass(frozen=True, eq=False)
class BsiFamily:
    """Joint tables conditioned on the boundary states of a block.

    Attributes
    ----------
    tables : ndarray of shape (S, S, L, Q)
        ``tables[a, b]`` is ``P(u, q | S_0 = a, S_N = b)``; rows with zero
        weight are undefined and stored as zeros.
    weights : ndarray of shape (S, S)
        ``weights[a, b] = P(S_0 = a, S_N = b)``.
    """

    tables: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tables, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if t.ndim != 4 or t.shape[:2] != w.shape or w.shape[0] != w.shape[1]:
            raise InvalidParameter(f"inconsistent family shapes {t.shape} / {w.shape}")
        if abs(w.sum() - 1.0) > 1e-10 or np.any(w < 0):
            raise InvalidParameter("pair weights must form a probability table")
        masses = t.sum(axis=(2, 3))
        live = w > 0
        if np.any(np.abs(masses[live] - 1.0) > 1e-10):
            raise InvalidParameter("each conditioned table with positive weight must have unit mass")
        object.__setattr__(self, "tables", t)
        object.__setattr__(self, "weights", w)

    @property
    def num_states(self) -> int:
        return self.weights.shape[0]

    def pair(self, a: int, b: int) -> JointDist:
        return JointDist(self.tables[a, b], atol=1e-10)

    def live_pairs(self):
        return [tuple(ab) for ab in np.argwhere(self.weights > 0)]

    def unconditioned(self) -> JointDist:
        return JointDist(np.einsum("ab,abuq->uq", self.weights, self.tables), atol=1e-10)


def bsi_aggregate(family: BsiFamily, which: str) -> float:
    """Pair-weighted average ``sum_{a,b} P(S_0=a, S_N=b) * param(P(.|a, b))``."""
    fn = _KERNELS.get(which)
    if fn is None:
        raise InvalidParameter(f"unknown parameter {which!r}; choose from {PARAMETERS}")
    live = family.weights > 0
    values = fn(family.tables[live])
    return float(_clamp(np.dot(family.weights[live], values)))
