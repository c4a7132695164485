"""Per-index polarization statistics, exact at small block lengths and by
Monte Carlo at large ones.

Exact evolution tracks, for every synthetic index, the array
``W[q, a, b, u] = P(U = u, Q = q, S_N = b | S_0 = a)`` over an enumerated
observation alphabet.  Two independent-given-state copies of a length-N
array combine through the middle state into the two length-2N children;
symbols with proportional profiles are merged after every step, which is
lossless for all parameters and for all later steps.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive_int
from .exceptions import BudgetExceeded, InvalidParameter
from .model import FaimModel, psi, sample_trajectories, stationary_distribution
from .params import BsiFamily, all_parameters, total_variation
from .trellis import genie_posteriors

DEFAULT_BUDGET = 200_000
MERGE_RESOLUTION = 1e-12
MC_CHUNK = 256

STAT_FIELDS = ("Z", "K", "H", "Pe", "Z_hat", "K_hat", "H_hat", "Pe_hat")


@dataclass
class IndexStats:
    """Parameters of synthetic index ``index`` (1-based) after ``n`` steps."""

    index: int
    n: int
    exact: bool
    Z: float
    K: float
    H: float
    Pe: float
    Z_hat: float
    K_hat: float
    H_hat: float
    Pe_hat: float
    stderr: dict = field(default_factory=dict)
    sample_count: int = 0

    def get(self, name: str) -> float:
        return getattr(self, name)

    def err(self, name: str) -> float:
        return float(self.stderr.get(name, 0.0))


# ---------------------------------------------------------------------------
# exact evolution


def base_array(model: FaimModel) -> np.ndarray:
    """Length-1 array ``W[y, a, b, x] = T[a, x, y, b]``."""
    return np.ascontiguousarray(model.kernel.transpose(2, 0, 3, 1))


def merge_symbols(W: np.ndarray, resolution: float = MERGE_RESOLUTION) -> np.ndarray:
    """Merge observation symbols whose normalized profiles coincide; drop null ones."""
    Q = W.shape[0]
    flat = W.reshape(Q, -1)
    mass = flat.sum(axis=1)
    live = mass > 0
    flat, mass = flat[live], mass[live]
    keys = np.round(flat / mass[:, None] / resolution).astype(np.int64)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    k = inverse.max() + 1
    merged = np.stack([np.bincount(inverse, weights=flat[:, j], minlength=k) for j in range(flat.shape[1])], axis=1)
    return merged.reshape((k,) + W.shape[1:])


def combine(W: np.ndarray, budget: int = DEFAULT_BUDGET, merge: bool = True):
    """Minus and plus children of a length-N array combined with itself.

    The minus child observes ``(q, r)`` and has input ``t = u ^ v``; the plus
    child observes ``(q, r, t)`` and has input ``v``.
    """
    Q = W.shape[0]
    if 2 * Q * Q > budget:
        raise BudgetExceeded(f"combining {Q} symbols gives {2 * Q * Q} (budget {budget})")
    Wf = W[..., np.array([[0, 1], [1, 0]])]  # [q, a, c, t, v] = W[q, a, c, t ^ v]
    raw = np.einsum("qactv,rcdv->qrtadv", Wf, W, optimize=True)
    S = W.shape[1]
    plus = raw.reshape(Q * Q * 2, S, S, 2)
    minus = np.moveaxis(raw.sum(axis=-1), 2, -1).reshape(Q * Q, S, S, 2)
    if merge:
        return merge_symbols(minus), merge_symbols(plus)
    return minus, plus


def exact_levels(model: FaimModel, n: int, budget: int = DEFAULT_BUDGET):
    """Arrays for every index at levels ``0..n``; ``levels[m][j]`` is index ``j + 1``.

    Raises :class:`BudgetExceeded` carrying the largest level that fits.
    """
    check_positive_int(n, "n", allow_zero=True)
    levels = [[merge_symbols(base_array(model))]]
    for m in range(n):
        nxt = []
        try:
            for W in levels[-1]:
                nxt.extend(combine(W, budget))
        except BudgetExceeded as exc:
            raise BudgetExceeded(
                f"exact evolution fits up to n={m}; level {m + 1} exceeds the budget ({exc})",
                largest_feasible=m,
            ) from None
        levels.append(nxt)
    return levels


def family_of(W: np.ndarray, pi0: np.ndarray) -> BsiFamily:
    P = pi0[None, :, None, None] * W  # [q, a, b, u]
    weights = P.sum(axis=(0, 3))
    safe = np.where(weights > 0, weights, 1.0)
    tables = np.transpose(P, (1, 2, 3, 0)) / safe[:, :, None, None]
    return BsiFamily(tables, weights / weights.sum())


def stats_of(W: np.ndarray, pi0: np.ndarray, index: int, n: int) -> IndexStats:
    P = pi0[None, :, None, None] * W
    plain = all_parameters(P.sum(axis=(1, 2)).T)
    # observing the boundary states too: observation (q, a, b)
    informed = all_parameters(P.reshape(-1, 2).T)
    return IndexStats(
        index=index, n=n, exact=True,
        Z=plain["Z"], K=plain["K"], H=plain["H"], Pe=plain["Pe"],
        Z_hat=informed["Z"], K_hat=informed["K"], H_hat=informed["H"], Pe_hat=informed["Pe"],
    )


def exact_evolve(model: FaimModel, n: int, budget: int = DEFAULT_BUDGET):
    """``[(IndexStats, BsiFamily)]`` for every index of a block of length ``2**n``."""
    pi0 = stationary_distribution(model)
    level = exact_levels(model, n, budget)[n]
    return [(stats_of(W, pi0, j + 1, n), family_of(W, pi0)) for j, W in enumerate(level)]


def exact_stats(model: FaimModel, n: int, budget: int = DEFAULT_BUDGET):
    """Stats at every level ``0..n`` (no families)."""
    pi0 = stationary_distribution(model)
    return [[stats_of(W, pi0, j + 1, m) for j, W in enumerate(lvl)]
            for m, lvl in enumerate(exact_levels(model, n, budget))]


# ---------------------------------------------------------------------------
# Monte Carlo evolution


def _binary_entropy(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
        q = 1.0 - p
        b = np.where(q > 0, -q * np.log2(np.where(q > 0, q, 1.0)), 0.0)
    return a + b


def _sample_values(p0, p1):
    # per-sample quantities whose means are Z, K, H, Pe
    return np.stack([
        2.0 * np.sqrt(p0 * p1),
        np.abs(p0 - p1),
        _binary_entropy(p0 / (p0 + p1)),
        np.minimum(p0, p1),
    ])


def _mc_chunk(model, N, count, seed_seq):
    rng = np.random.default_rng(seed_seq)
    s0, x, y, s = sample_trajectories(model, N, count, rng)
    w, _ = genie_posteriors(model, x, y)  # [B, N, a, b, u]
    p = w.sum(axis=(2, 3))
    plain = _sample_values(p[..., 0], p[..., 1])
    rows = np.arange(count)
    cond = w[rows, :, s0, s[:, -1]]  # [B, N, u]
    cond = cond / cond.sum(axis=-1, keepdims=True)
    informed = _sample_values(cond[..., 0], cond[..., 1])
    vals = np.concatenate([plain, informed])  # [8, B, N]
    return vals.sum(axis=1), (vals**2).sum(axis=1)


def mc_evolve(model: FaimModel, n: int, num_samples: int = 10_000, seed=0, threads: int = 1,
              chunk: int = MC_CHUNK):
    """Genie-aided Monte Carlo estimates for every index of a block of length ``2**n``.

    Samples are drawn in fixed-size chunks with one spawned seed per chunk
    and merged in chunk order, so results do not depend on ``threads``.
    """
    check_positive_int(n, "n", allow_zero=True)
    num_samples = check_positive_int(num_samples, "num_samples")
    N = 2**n
    sizes = [min(chunk, num_samples - k) for k in range(0, num_samples, chunk)]
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, seeds))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda job: _mc_chunk(model, N, *job), jobs))
    else:
        parts = [_mc_chunk(model, N, *job) for job in jobs]
    total = np.zeros((8, N))
    total_sq = np.zeros((8, N))
    for s1, s2 in parts:
        total += s1
        total_sq += s2
    mean = total / num_samples
    if num_samples > 1:
        var = np.maximum(total_sq - num_samples * mean**2, 0.0) / (num_samples - 1)
    else:
        var = np.zeros_like(mean)
    stderr = np.sqrt(var / num_samples)
    mean = np.clip(mean, 0.0, 1.0)
    out = []
    for i in range(N):
        vals = dict(zip(STAT_FIELDS, mean[:, i].tolist()))
        errs = dict(zip(STAT_FIELDS, stderr[:, i].tolist()))
        out.append(IndexStats(index=i + 1, n=n, exact=False, stderr=errs, sample_count=num_samples, **vals))
    return out


METHODS = ("auto", "exact", "mc")


def index_stats(model: FaimModel, n: int, method: str = "auto", budget: int = DEFAULT_BUDGET,
                num_samples: int = 10_000, seed=0, threads: int = 1):
    """Stats for every index of a length-``2**n`` block and the mode that produced them.

    ``auto`` runs exact evolution and falls back to Monte Carlo when the
    budget is exceeded; ``exact`` lets :class:`BudgetExceeded` propagate.
    """
    if method not in METHODS:
        raise InvalidParameter(f"unknown method {method!r}; choose from {METHODS}")
    if method != "mc":
        try:
            return [s for s, _ in exact_evolve(model, n, budget)], "exact"
        except BudgetExceeded:
            if method == "exact":
                raise
    return mc_evolve(model, n, num_samples, seed=seed, threads=threads), "mc"


# ---------------------------------------------------------------------------
# single-step bound checks


@dataclass
class BoundReport:
    """Largest observed violation per inequality (positive means violated)."""

    violations: dict
    tolerance: float = 1e-9

    @property
    def passed(self) -> bool:
        return all(v <= self.tolerance for v in self.violations.values())

    def merge(self, other: "BoundReport") -> "BoundReport":
        keys = set(self.violations) | set(other.violations)
        merged = {k: max(self.violations.get(k, -math.inf), other.violations.get(k, -math.inf)) for k in keys}
        return BoundReport(merged, min(self.tolerance, other.tolerance))


def check_single_step(model: FaimModel, n: int, budget: int = DEFAULT_BUDGET) -> BoundReport:
    """Check one polarization step from every parent at levels ``0..n``.

    Checked: the boundary-informed total variation bounds with ``psi(0)``,
    the informed-entropy submartingale step, and for single-state models
    the memoryless total variation identity and doubling bound.
    """
    levels = exact_stats(model, n + 1, budget)
    p0 = psi(model, 0)
    viol = {"Khat_minus<=psi0*Khat^2": -math.inf, "Khat_plus<=2*Khat": -math.inf,
            "Hhat_submartingale": -math.inf}
    memoryless = model.num_states == 1
    if memoryless:
        viol.update({"K_minus==K^2": -math.inf, "K_plus<=2*K": -math.inf, "H_martingale": -math.inf})
    for m in range(n + 1):
        for j, parent in enumerate(levels[m]):
            lo, hi = levels[m + 1][2 * j], levels[m + 1][2 * j + 1]
            viol["Khat_minus<=psi0*Khat^2"] = max(viol["Khat_minus<=psi0*Khat^2"], lo.K_hat - p0 * parent.K_hat**2)
            viol["Khat_plus<=2*Khat"] = max(viol["Khat_plus<=2*Khat"], hi.K_hat - 2 * parent.K_hat)
            viol["Hhat_submartingale"] = max(viol["Hhat_submartingale"], parent.H_hat - (lo.H_hat + hi.H_hat) / 2)
            if memoryless:
                viol["K_minus==K^2"] = max(viol["K_minus==K^2"], abs(lo.K - parent.K**2))
                viol["K_plus<=2*K"] = max(viol["K_plus<=2*K"], hi.K - 2 * parent.K)
                viol["H_martingale"] = max(viol["H_martingale"], abs((lo.H + hi.H) / 2 - parent.H))
    return BoundReport(viol)


def nonbinary_step(table) -> tuple:
    """Two-copy modulo-L combine of a memoryless ``L``-ary joint ``P[u, q]``.

    Returns ``(K, K_minus, K_plus)`` where the minus child is
    ``T = U + V (mod L)`` given ``(Q, R)`` and the plus child is ``V`` given
    ``(T, Q, R)``.
    """
    P = np.asarray(table, dtype=float)
    L, Q = P.shape
    t = np.arange(L)
    # full[t, v, q, r] = P(t - v, q) P(v, r)
    shifted = P[(t[:, None] - t[None, :]) % L]  # [t, v, q]
    full = shifted[:, :, :, None] * P[None, :, None, :]
    minus = full.sum(axis=1).reshape(L, Q * Q)
    plus = np.transpose(full, (1, 0, 2, 3)).reshape(L, L * Q * Q)
    return total_variation(P), total_variation(minus), total_variation(plus)


def check_nonbinary(rng, L: int = 3, trials: int = 1000, max_obs: int = 6) -> BoundReport:
    """Single-step total variation bounds on random memoryless ``L``-ary joints."""
    viol = {"K_minus<=2(L-1)/L*K^2": -math.inf, "K_plus<=(1+L/2)*K": -math.inf}
    for _ in range(trials):
        Q = int(rng.integers(1, max_obs + 1))
        P = rng.random((L, Q)) ** 3
        P /= P.sum()
        k, km, kp = nonbinary_step(P)
        viol["K_minus<=2(L-1)/L*K^2"] = max(viol["K_minus<=2(L-1)/L*K^2"], km - 2 * (L - 1) / L * k * k)
        viol["K_plus<=(1+L/2)*K"] = max(viol["K_plus<=(1+L/2)*K"], kp - (1 + L / 2) * k)
    return BoundReport(viol)

