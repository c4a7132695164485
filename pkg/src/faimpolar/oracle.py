"""Brute-force ground truth for short blocks.

Everything here is computed by dense enumeration of input/output words, with
no recursion shortcuts, so the faster routines in ``evolve`` and ``trellis``
can be checked against it.  Words are packed as integers with the first
symbol most significant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int, check_power_of_two
from .exceptions import BudgetExceeded, InvalidParameter
from .model import FaimModel, stationary_distribution
from .params import BsiFamily, JointDist

DEFAULT_BUDGET = 10**7


@dataclass(frozen=True, eq=False)
class BlockTable:
    """``table[xw, yw, a, b] = P(X_1^N = xw, Y_1^N = yw, S_0 = a, S_N = b)``."""

    N: int
    arity: int
    output_size: int
    table: np.ndarray

    @property
    def mass(self) -> float:
        return float(self.table.sum())

    def state_pairs(self) -> np.ndarray:
        return self.table.sum(axis=(0, 1))

    def xy(self) -> np.ndarray:
        return self.table.sum(axis=(2, 3))


def _block_size(model: FaimModel, N: int) -> int:
    S, L, Y = model.num_states, model.input_arity, model.output_alphabet_size
    return L**N * Y**N * S * S


def enumerate_block(model: FaimModel, N: int, budget: int = DEFAULT_BUDGET) -> BlockTable:
    """Chain the kernel over ``N`` steps, summing out the interior states."""
    check_positive_int(N, "N")
    size = _block_size(model, N)
    if size > budget:
        raise BudgetExceeded(f"block table for N={N} needs {size} entries (budget {budget})")
    T = model.kernel
    S, L, Y = model.num_states, model.input_arity, model.output_alphabet_size
    pi0 = stationary_distribution(model)
    # cur[xw, yw, a, s] with s the current (last) state
    cur = np.zeros((1, 1, S, S))
    cur[0, 0] = np.diag(pi0)
    for _ in range(N):
        nxt = np.einsum("pqas,sxyt->pxqyat", cur, T)
        cur = nxt.reshape(cur.shape[0] * L, cur.shape[1] * Y, S, S)
    return BlockTable(N, L, Y, cur)


def path_enumeration(model: FaimModel, N: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
    """Joint law of every symbol and every state on a block.

    Returns an array of shape ``(L*Y,)*N + (S,)*(N+1)`` whose entry at
    ``(a_1..a_N, s_0..s_N)`` is ``pi0(s_0) prod_j T[s_{j-1}, x_j, y_j, s_j]``
    with ``a_j = x_j * Y + y_j``.  Built path by path, with no summation.
    """
    check_positive_int(N, "N")
    S, L, Y = model.num_states, model.input_arity, model.output_alphabet_size
    A = L * Y
    size = A**N * S ** (N + 1)
    if size > budget:
        raise BudgetExceeded(f"path enumeration for N={N} needs {size} entries (budget {budget})")
    T = model.kernel.reshape(S, A, S)
    pi0 = stationary_distribution(model)
    out = np.zeros((A,) * N + (S,) * (N + 1))
    for path in itertools.product(range(S), repeat=N + 1):
        prob = np.array(pi0[path[0]])
        for j in range(N):
            prob = np.multiply.outer(prob, T[path[j], :, path[j + 1]])
        out[(Ellipsis,) + path] = prob
    return out


def polar_matrix(N: int) -> np.ndarray:
    """``G_N = B_N G_2^{(x)n}`` as an explicit 0/1 matrix (row-vector convention)."""
    n = check_power_of_two(N, "N")
    G = np.array([[1]], dtype=np.int64)
    for _ in range(n):
        G = np.kron(G, np.array([[1, 0], [1, 1]], dtype=np.int64))
    rev = [int(format(i, f"0{n}b")[::-1], 2) if n else 0 for i in range(N)]
    B = np.zeros((N, N), dtype=np.int64)
    B[np.arange(N), rev] = 1
    return (B @ G) % 2


def word_bits(words, N: int) -> np.ndarray:
    """Binary words (first bit most significant) as an ``(len, N)`` bit array."""
    words = np.asarray(words, dtype=np.int64)
    shifts = np.arange(N - 1, -1, -1)
    return (words[:, None] >> shifts) & 1


def bits_word(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    N = bits.shape[-1]
    return bits @ (1 << np.arange(N - 1, -1, -1))


def transform_words(N: int) -> np.ndarray:
    """``perm[xw]`` is the packed word ``u = x G_N`` for every binary ``x``."""
    G = polar_matrix(N)
    x = word_bits(np.arange(2**N), N)
    return bits_word((x @ G) % 2)


def _u_table(model: FaimModel, N: int, budget: int) -> np.ndarray:
    if model.input_arity != 2:
        raise InvalidParameter("synthetic channels are built for binary inputs only")
    check_power_of_two(N, "N")
    block = enumerate_block(model, N, budget)
    perm = transform_words(N)
    u = np.zeros_like(block.table)
    u[perm] = block.table
    return u


def synthetic_channel(model: FaimModel, N: int, i: int, budget: int = DEFAULT_BUDGET):
    """Exact law of ``(U_i, Q_i)`` with ``Q_i = (U_1^{i-1}, Y_1^N)``.

    ``i`` is 1-based.  Returns the unconditioned :class:`JointDist` and the
    :class:`BsiFamily` conditioned on the block's boundary states.  The
    observation index is ``prefix * Y^N + yw``.
    """
    if not 1 <= i <= N:
        raise InvalidParameter(f"index i must lie in [1, {N}], got {i}")
    u = _u_table(model, N, budget)
    return _synthetic_from_u(u, N, i)


def all_synthetic_channels(model: FaimModel, N: int, budget: int = DEFAULT_BUDGET):
    u = _u_table(model, N, budget)
    return [_synthetic_from_u(u, N, i) for i in range(1, N + 1)]


def _synthetic_from_u(u, N, i):
    _, YN, S, _ = u.shape
    # u[prefix of length i, suffix, yw, a, b] summed over the suffix
    t = u.reshape(2 ** (i - 1), 2, 2 ** (N - i), YN, S, S).sum(axis=2)
    # -> [a, b, u_i, prefix, yw]
    t = np.transpose(t, (3, 4, 1, 0, 2)).reshape(S, S, 2, -1)
    weights = t.sum(axis=(2, 3))
    joint = JointDist(t.sum(axis=(0, 1)), atol=1e-10)
    safe = np.where(weights > 0, weights, 1.0)
    family = BsiFamily(t / safe[:, :, None, None], weights / weights.sum())
    return joint, family


def _entropy_bits(p) -> float:
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def block_entropies(model: FaimModel, N: int, budget: int = DEFAULT_BUDGET):
    """``(H(X^N | Y^N), H(X^N | Y^N, S_0, S_N))`` in bits."""
    t = enumerate_block(model, N, budget).table
    scale = np.log2(model.input_arity)
    h_plain = _entropy_bits(t.sum(axis=(2, 3))) - _entropy_bits(t.sum(axis=(0, 2, 3)))
    h_states = _entropy_bits(t) - _entropy_bits(t.sum(axis=0))
    return h_plain / scale, h_states / scale


def largest_feasible_n(model: FaimModel, budget: int = DEFAULT_BUDGET, limit: int = 64) -> int:
    """Largest block length whose table fits in ``budget`` (0 if none)."""
    best = 0
    for N in range(1, limit + 1):
        if _block_size(model, N) > budget:
            break
        best = N
    return best
