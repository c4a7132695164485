"""Randomized and exhaustive checks of the inequalities and identities the
library relies on.  Each check reports its worst violation; a check passes
when that value does not exceed its tolerance.
"""

from __future__ import annotations

import math
from contextlib import suppress
from dataclasses import dataclass

import numpy as np

from . import evolve, oracle
from .exceptions import BudgetExceeded
from .model import FaimModel, psi, random_model
from .params import all_parameters, batch_parameters, bsi_aggregate, pairwise_parameters, theta_h, theta_k, theta_z
from .trellis import genie_posteriors


@dataclass
class CheckResult:
    name: str
    worst: float
    tolerance: float
    cases: int = 0
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.worst <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.note})" if self.note else ""
        return f"{status} {self.name}: worst violation {self.worst:.3e} (tol {self.tolerance:.0e}, {self.cases} cases){extra}"


def _worst(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.max()) if values.size else -math.inf


# ---------------------------------------------------------------------------
# random tables


def random_joints(rng, count: int, arity: int = 2, max_obs: int = 16) -> np.ndarray:
    """Stack of ``count`` random joints ``(count, arity, max_obs)``.

    Observation counts vary (unused columns are zero); entries are raised to
    random powers so that near-deterministic and near-uniform columns both
    occur, and a few one-hot and uniform columns are planted.
    """
    q = rng.integers(1, max_obs + 1, size=count)
    base = rng.random((count, arity, max_obs)) ** rng.uniform(0.2, 6.0, size=(count, 1, 1))
    base = np.where(np.arange(max_obs)[None, None, :] >= q[:, None, None], 0.0, base)
    onehot = rng.random((count, max_obs)) < 0.1
    hot = rng.integers(0, arity, size=(count, max_obs))
    mask = np.arange(arity)[None, :, None] == hot[:, None, :]
    base = np.where(onehot[:, None, :] & ~mask, 0.0, base)
    flat = rng.random((count, max_obs)) < 0.1
    base = np.where(flat[:, None, :], base.mean(axis=1, keepdims=True), base)
    total = base.sum(axis=(1, 2), keepdims=True)
    empty = total[:, 0, 0] == 0
    base[empty, :, 0] = 1.0
    return base / base.sum(axis=(1, 2), keepdims=True)


# ---------------------------------------------------------------------------
# parameter algebra


def check_binary_bounds(rng, count: int = 10_000, tol: float = 1e-10):
    t = random_joints(rng, count)
    p = batch_parameters(t)
    Pe, Z, K, H = p["Pe"], p["Z"], p["K"], p["H"]
    checks = {
        "total variation equals 1 - 2 Pe": np.abs(K - (1 - 2 * Pe)),
        "1 - H <= K": (1 - H) - K,
        "Z^2 <= H": Z**2 - H,
        "H <= Z": H - Z,
        "K <= sqrt(1 - Z^2)": K - np.sqrt(np.maximum(1 - Z**2, 0)),
        "sqrt(1 - Z^2) <= sqrt(1 - H^2)": np.sqrt(np.maximum(1 - Z**2, 0)) - np.sqrt(np.maximum(1 - H**2, 0)),
        "Pe <= Z / 2": Pe - Z / 2,
        "H <= log2(1 + Z)": H - np.log2(1 + Z),
    }
    return [CheckResult(f"binary parameters: {k}", _worst(v), tol, count) for k, v in checks.items()]


def check_conditioning(rng, count: int = 10_000, tol: float = 1e-10):
    """Parameters of ``U | Q`` against ``U | (Q, S)`` for random triples."""
    S = rng.integers(1, 5, size=count)
    trip = random_joints(rng, count, max_obs=24)  # columns index (q, s) with s fastest
    # reshape columns as 6 q-values x 4 s-values; drop s-values above the drawn size
    trip = trip.reshape(count, 2, 6, 4)
    trip = np.where(np.arange(4)[None, None, None, :] < S[:, None, None, None], trip, 0.0)
    trip /= trip.sum(axis=(1, 2, 3), keepdims=True)
    coarse = batch_parameters(trip.sum(axis=3))
    fine = batch_parameters(trip.reshape(count, 2, 24))
    return [
        CheckResult("conditioning: K(U|Q) <= K(U|Q,S)", _worst(coarse["K"] - fine["K"]), tol, count),
        CheckResult("conditioning: Z(U|Q) >= Z(U|Q,S)", _worst(fine["Z"] - coarse["Z"]), tol, count),
        CheckResult("conditioning: H(U|Q) >= H(U|Q,S)", _worst(fine["H"] - coarse["H"]), tol, count),
    ]


def check_theta_grid(points: int = 100_000, tol: float = 1e-12):
    th = np.linspace(0.0, 0.5, points)
    k, h, z = theta_k(th), theta_h(th), theta_z(th)
    return [
        CheckResult("theta functions: z^2 <= h", _worst(z**2 - h), tol, points),
        CheckResult("theta functions: h <= z", _worst(h - z), tol, points),
        CheckResult("theta functions: k + h >= 1", _worst(1 - k - h), tol, points),
    ]


def check_lary(rng, count: int = 10_000, arities=(2, 3, 4, 5), tol: float = 1e-10):
    out = []
    for L in arities:
        p = batch_parameters(random_joints(rng, count, arity=L, max_obs=8))
        Pe, Z, K, H = p["Pe"], p["Z"], p["K"], p["H"]
        checks = {
            "Z^2 <= H": Z**2 - H,
            "H <= log_L(1 + (L-1) Z)": H - np.log1p((L - 1) * Z) / np.log(L),
            "1 - Z <= K": (1 - Z) - K,
            "K <= sqrt(1 - Z^2)": K - np.sqrt(np.maximum(1 - Z**2, 0)),
            "K <= 1 - 2 Pe / (L-1)": K - (1 - 2 * Pe / (L - 1)),
            "Pe <= (L-1) Z / 2": Pe - (L - 1) * Z / 2,
        }
        out += [CheckResult(f"{L}-ary parameters: {k}", _worst(v), tol, count) for k, v in checks.items()]
    t = random_joints(rng, count)
    a, b = batch_parameters(t), pairwise_parameters(t)
    worst = max(_worst(np.abs(a[k] - b[k])) for k in a)
    out.append(CheckResult("pairwise forms agree with binary forms at L = 2", worst, 1e-12, count))
    return out


def parameter_suite(rng, joints: int = 10_000, theta_points: int = 100_000):
    return (check_binary_bounds(rng, joints) + check_conditioning(rng, joints)
            + check_theta_grid(theta_points) + check_lary(rng, joints))


# ---------------------------------------------------------------------------
# process-level checks


def check_mixing_and_factorization(model: FaimModel, N: int, tol: float = 1e-10):
    """Block independence given the middle state, and the psi-mixing bound."""
    paths = oracle.path_enumeration(model, N)
    sym = tuple(range(N))
    states = tuple(range(N, 2 * N + 1))
    worst_fact, worst_fact3, worst_mix = -math.inf, -math.inf, -math.inf
    cases = 0
    for M in range(1, N):
        # P(a_1..a_N, s_M)
        keep = tuple(ax for ax in states if ax != N + M)
        pm = paths.sum(axis=keep)
        left = pm.sum(axis=sym[M:])        # [a_1..a_M, s_M]
        right = pm.sum(axis=sym[:M])       # [a_{M+1}..a_N, s_M]
        ps = pm.sum(axis=sym)              # [s_M]
        lhs = pm * ps
        rhs = left.reshape(left.shape[:-1] + (1,) * (N - M) + left.shape[-1:]) * right
        worst_fact = max(worst_fact, _rel(lhs, rhs))
        # P(a_1..a_N, s_0, s_M, s_N)
        keep3 = tuple(ax for ax in states if ax not in (N, N + M, 2 * N))
        p3 = paths.sum(axis=keep3)         # [..., s0, sM, sN]
        l3 = p3.sum(axis=sym[M:]).sum(axis=-1)  # [a_1..a_M, s0, sM]
        r3 = p3.sum(axis=sym[:M]).sum(axis=-3)  # [a_{M+1}..a_N, sM, sN]
        pfirst = p3.sum(axis=sym).sum(axis=2)     # [s0, sM]
        plast = p3.sum(axis=sym).sum(axis=0)      # [sM, sN]
        # P(A, B | s0, sM, sN) = P(A | s0, sM) P(B | sM, sN), cross-multiplied
        # lhs: P(A,B,s0,sM,sN) * P(s0,sM) * P(sM,sN)
        # rhs: P(A,s0,sM) * P(B,sM,sN) * P(s0,sM,sN)
        pjoint = p3.sum(axis=sym)                 # [s0, sM, sN]
        shapeA = l3.shape[:-2]
        shapeB = r3.shape[:-2]
        lhs3 = p3 * pfirst[:, :, None] * plast[None, :, :]
        rhs3 = (l3.reshape(shapeA + (1,) * len(shapeB) + l3.shape[-2:] + (1,))
                * r3.reshape((1,) * len(shapeA) + shapeB + (1,) + r3.shape[-2:])
                * pjoint)
        worst_fact3 = max(worst_fact3, _rel(lhs3, rhs3))
        cases += 1
    probs = paths.sum(axis=states)
    for Lb in range(1, N):
        for M in range(Lb, N):
            first = probs.sum(axis=sym[Lb:])
            second = probs.sum(axis=sym[:M])
            joint = probs.sum(axis=sym[Lb:M]) if M > Lb else probs
            bound = psi(model, M - Lb) * np.multiply.outer(first, second)
            ok = bound > 0
            excess = np.where(ok, joint / np.where(ok, bound, 1.0) - 1.0, np.where(joint > 0, np.inf, -np.inf))
            worst_mix = max(worst_mix, _worst(excess))
    return [
        CheckResult(f"block factorization given the middle state (N={N})", worst_fact, tol, cases),
        CheckResult(f"block factorization given boundary and middle states (N={N})", worst_fact3, tol, cases),
        CheckResult(f"psi-mixing bound on separated blocks (N={N})", worst_mix, 1e-9, cases),
    ]


def _rel(lhs, rhs) -> float:
    scale = np.maximum(np.abs(lhs), np.abs(rhs))
    nz = scale > 0
    if not nz.any():
        return -math.inf
    return float(np.max(np.abs(lhs - rhs)[nz] / scale[nz]))


def check_psi_monotone(model: FaimModel, horizon: int = 64, tol: float = 1e-12):
    vals = np.array([psi(model, k) for k in range(1, horizon + 1)])
    worst = max(_worst(np.diff(vals)), _worst(1.0 - vals))
    return [CheckResult(f"psi nonincreasing and >= 1 up to N={horizon}", worst, tol, horizon)]


def _genie_vs_oracle(model, N, channels):
    """Largest gap between genie trellis posteriors and oracle conditionals over every word pair."""
    Lx, Y = 2, model.output_alphabet_size
    xs = oracle.word_bits(np.arange(Lx**N), N)
    ys = np.array(np.unravel_index(np.arange(Y**N), (Y,) * N)).T
    X = np.repeat(xs, Y**N, axis=0)
    Yw = np.tile(ys, (Lx**N, 1))
    block = oracle.enumerate_block(model, N).table.sum(axis=(2, 3)).ravel()
    live = block > 0
    X, Yw = X[live], Yw[live]
    w, u = genie_posteriors(model, X, Yw)
    yw = Yw @ (Y ** np.arange(N - 1, -1, -1))
    worst = 0.0
    for i, (_, fam) in enumerate(channels, start=1):
        prefix = u[:, :i - 1] @ (1 << np.arange(i - 2, -1, -1)) if i > 1 else np.zeros(len(u), np.int64)
        q = prefix * Y**N + yw
        full = fam.weights[:, :, None, None] * fam.tables  # [a, b, u, q]
        col = np.moveaxis(full[:, :, :, q], -1, 0)
        col = col / col.sum(axis=(1, 2, 3), keepdims=True)
        worst = max(worst, float(np.abs(col - w[:, i - 1]).max()))
    return worst, int(live.sum())


def check_model_evolution(model: FaimModel, N: int, tol: float = 1e-9, genie: bool = True):
    """Exact evolution and genie trellis against the oracle, plus the entropy identities."""
    n = int(math.log2(N))
    channels = oracle.all_synthetic_channels(model, N)
    stats = evolve.exact_stats(model, n)[n]
    worst_params = 0.0
    for st, (joint, fam) in zip(stats, channels):
        ref = all_parameters(joint)
        for k in ("Z", "K", "H", "Pe"):
            worst_params = max(worst_params, abs(ref[k] - st.get(k)), abs(bsi_aggregate(fam, k) - st.get(k + "_hat")))
    h_plain, h_states = oracle.block_entropies(model, N)
    mean_h = sum(s.H for s in stats)
    mean_hh = sum(s.H_hat for s in stats)
    gap = (mean_h - mean_hh) / N
    bound = 2 * math.log2(model.num_states) / N if model.num_states > 1 else 0.0
    order = max(max(s.K - s.K_hat, s.Z_hat - s.Z, s.H_hat - s.H) for s in stats)
    out = [
        CheckResult(f"exact evolution equals oracle (N={N})", worst_params, tol, N),
        CheckResult(f"chain rule: sum of H_i equals H(X^N|Y^N) (N={N})", abs(mean_h - h_plain), tol, 1),
        CheckResult(f"chain rule with boundary states (N={N})", abs(mean_hh - h_states), tol, 1),
        CheckResult(f"boundary-state gap in [0, 2 log2|S| / N] (N={N})", max(-gap, gap - bound), tol, 1),
        CheckResult(f"informed parameters dominate: K <= K_hat, Z >= Z_hat, H >= H_hat (N={N})", order, tol, N),
    ]
    if genie:
        worst, cases = _genie_vs_oracle(model, N, channels)
        out.append(CheckResult(f"genie trellis posteriors equal oracle (N={N})", worst, tol, cases))
    return out


def check_evolution_parameters(model: FaimModel, N: int, tol: float = 1e-9,
                               oracle_budget: int = 2 * 10**7, evolve_budget: int = 2 * 10**6):
    """Per-index parameters from exact evolution and from genie posteriors against the oracle.

    Unlike :func:`check_model_evolution` this streams over input words and
    synthetic channels, so it reaches block sizes whose full posterior table
    would not fit in memory.
    """
    n = int(math.log2(N))
    u = oracle._u_table(model, N, oracle_budget)
    ref = []
    for i in range(1, N + 1):
        joint, fam = oracle._synthetic_from_u(u, N, i)
        ref.append({**all_parameters(joint), **{k + "_hat": bsi_aggregate(fam, k) for k in ("Z", "K", "H", "Pe")}})
    del u
    stats = evolve.exact_stats(model, n, evolve_budget)[n]
    worst_exact = max(abs(s.get(k) - r[k]) for s, r in zip(stats, ref) for k in r)

    Y = model.output_alphabet_size
    pxy = oracle.enumerate_block(model, N, oracle_budget).xy()
    ys = np.array(np.unravel_index(np.arange(Y**N), (Y,) * N)).T
    acc = np.zeros((3, N))
    for xw in range(2**N):
        live = pxy[xw] > 0
        x = np.repeat(oracle.word_bits(np.array([xw]), N), int(live.sum()), axis=0)
        w, _ = genie_posteriors(model, x, ys[live])
        p = w.sum(axis=(2, 3))
        with np.errstate(divide="ignore", invalid="ignore"):
            h = -np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0).sum(axis=-1)
        vals = np.stack([2 * np.sqrt(p[..., 0] * p[..., 1]), np.abs(p[..., 0] - p[..., 1]), h])
        acc += np.einsum("kbn,b->kn", vals, pxy[xw, live])
    worst_genie = max(abs(acc[j, i] - ref[i][k]) for i in range(N) for j, k in enumerate(("Z", "K", "H")))
    h_plain, _ = oracle.block_entropies(model, N, oracle_budget)
    return [
        CheckResult(f"exact evolution equals oracle (N={N})", worst_exact, tol, N),
        CheckResult(f"genie trellis parameters equal oracle (N={N})", worst_genie, tol, N),
        CheckResult(f"chain rule: sum of H_i equals H(X^N|Y^N) (N={N})", abs(sum(s.H for s in stats) - h_plain), tol, 1),
    ]


def check_stationarity(model: FaimModel, N: int, tol: float = 1e-12):
    long = oracle.enumerate_block(model, 2 * N).xy()
    short = oracle.enumerate_block(model, N).xy()
    L, Y = model.input_arity, model.output_alphabet_size
    t = long.reshape(L**N, L**N, Y**N, Y**N)
    first = t.sum(axis=(1, 3))
    second = t.sum(axis=(0, 2))
    worst = max(float(np.abs(first - short).max()), float(np.abs(second - short).max()))
    return [CheckResult(f"second block has the same law as the first (N={N})", worst, tol, 1)]


def check_steps(model: FaimModel, n: int, tol: float = 1e-9):
    rep = evolve.check_single_step(model, n)
    return [CheckResult(f"single step: {k} (n<={n})", v, tol, 2**n) for k, v in rep.violations.items()]


def model_suite(model: FaimModel, max_exact_n: int = 3, factor_n: int = 4):
    out = check_psi_monotone(model)
    for N in (2, 4, 8):
        if N > 2**max_exact_n:
            break
        with suppress(BudgetExceeded):  # feasibility depends on the alphabet sizes
            out += check_model_evolution(model, N)
    with suppress(BudgetExceeded):
        out += check_mixing_and_factorization(model, factor_n)
        out += check_stationarity(model, 2)
    with suppress(BudgetExceeded):
        out += check_steps(model, max_exact_n - 1)
    return out


def random_model_suite(rng, count: int = 20):
    out = []
    for k in range(count):
        S = int(rng.integers(1, 4))
        Y = int(rng.integers(2, 4))
        model = random_model(rng, S, Y, sparsity=0.2 if k % 3 == 0 else 0.0)
        # the |Y| = 3, N = 8 oracle is beyond the default budget
        out += model_suite(model, max_exact_n=3 if Y == 2 else 2, factor_n=4 if S * Y <= 6 else 3)
    out += evolve_nonbinary(rng)
    return _collapse(out)


def evolve_nonbinary(rng, trials: int = 1000):
    rep = evolve.check_nonbinary(rng, L=3, trials=trials)
    return [CheckResult(f"3-ary memoryless step: {k}", v, 1e-9, trials) for k, v in rep.violations.items()]


def _collapse(results):
    """Merge results with the same name (worst of all, cases summed)."""
    merged = {}
    for r in results:
        if r.name in merged:
            m = merged[r.name]
            m.worst = max(m.worst, r.worst)
            m.cases += r.cases
        else:
            merged[r.name] = CheckResult(r.name, r.worst, r.tolerance, r.cases, r.note)
    return list(merged.values())


# ---------------------------------------------------------------------------
# report files


def check_stats_rows(rows, exact: bool, tol: float = 1e-9):
    """Check the bounds that hold for every row of a stats report.

    The parameter bounds hold row by row for exact values and for the
    Monte Carlo estimators (they hold per sample and survive averaging);
    the informed orderings are only checked for exact reports.
    """
    Z = np.array([float(r["Z"]) for r in rows])
    K = np.array([float(r["K"]) for r in rows])
    H = np.array([float(r["H"]) for r in rows])
    out = [
        CheckResult("binary parameters: Z^2 <= H", _worst(Z**2 - H), tol, len(rows)),
        CheckResult("binary parameters: H <= Z", _worst(H - Z), tol, len(rows)),
        CheckResult("binary parameters: 1 - H <= K", _worst(1 - H - K), tol, len(rows)),
        CheckResult("binary parameters: K <= sqrt(1 - Z^2)", _worst(K - np.sqrt(np.maximum(1 - Z**2, 0))), tol, len(rows)),
    ]
    if exact:
        Zh = np.array([float(r["Z_hat"]) for r in rows])
        Kh = np.array([float(r["K_hat"]) for r in rows])
        Hh = np.array([float(r["H_hat"]) for r in rows])
        worst = _worst(np.concatenate([K - Kh, Zh - Z, Hh - H]))
        out.append(CheckResult("informed parameters dominate: K <= K_hat, Z >= Z_hat, H >= H_hat", worst, tol, len(rows)))
    return out
