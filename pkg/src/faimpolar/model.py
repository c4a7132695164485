"""Finite-state aperiodic irreducible Markov (FAIM) processes.

A model is the time-invariant kernel ``T[s, x, y, s'] = P(X_j=x, Y_j=y, S_j=s' | S_{j-1}=s)``.
Everything else (stationary law, pair marginals, the mixing coefficient ``psi``)
is derived from the state transition matrix ``A[s, s'] = sum_{x,y} T[s, x, y, s']``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ._validation import check_distribution, check_positive_int, check_probability, make_rng
from .exceptions import InvalidParameter, ModelError, NonStochastic, NotConverged, NotErgodic

STOCHASTIC_ATOL = 1e-12
BUILDER_SHIFT_ATOL = 1e-9
MODEL_FIELDS = ("num_states", "input_arity", "output_alphabet_size", "kernel")


@dataclass(frozen=True, eq=False)
class FaimModel:
    """Kernel of a FAIM process.

    Parameters
    ----------
    kernel : array-like of shape (S, L, Y, S)
        ``kernel[s, x, y, s2]`` is the probability of emitting input ``x`` and
        output ``y`` while moving from state ``s`` to state ``s2``.
    name : str, optional
        Free-form label; not part of the model file.

    Notes
    -----
    Instances are immutable and safe to share between workers.  Construction
    only checks shapes and non-negativity; call :func:`validate` to check
    stochasticity and ergodicity.
    """

    kernel: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        k = np.array(self.kernel, dtype=float)
        if k.ndim != 4 or k.shape[0] != k.shape[3] or min(k.shape) < 1:
            raise ModelError(f"kernel must have shape (S, L, Y, S), got {k.shape}")
        if not np.all(np.isfinite(k)) or np.any(k < 0) or np.any(k > 1):
            raise ModelError("kernel entries must be probabilities in [0, 1]")
        k.setflags(write=False)
        object.__setattr__(self, "kernel", k)

    @property
    def num_states(self) -> int:
        return self.kernel.shape[0]

    @property
    def input_arity(self) -> int:
        return self.kernel.shape[1]

    @property
    def output_alphabet_size(self) -> int:
        return self.kernel.shape[2]

    @cached_property
    def transition(self) -> np.ndarray:
        """State transition matrix ``A[s, s']``."""
        a = self.kernel.sum(axis=(1, 2))
        a.setflags(write=False)
        return a

    @cached_property
    def pi0(self) -> np.ndarray:
        p = stationary_distribution(self)
        p.setflags(write=False)
        return p

    def to_dict(self) -> dict:
        return {
            "num_states": self.num_states,
            "input_arity": self.input_arity,
            "output_alphabet_size": self.output_alphabet_size,
            "kernel": self.kernel.tolist(),
        }

    def sha256(self) -> str:
        """Hash of the canonical JSON serialization of the model."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


@dataclass(frozen=True)
class ValidationReport:
    residuals: np.ndarray  # per-state |row sum - 1|
    n0: int | None  # smallest N with A^N entrywise positive
    ok: bool
    reason: str = ""


@dataclass(frozen=True, eq=False)
class StateDistributions:
    """Stationary and N-step state laws of a validated model.

    ``conditional(N)[a, b]`` is ``P(S_N = b | S_0 = a)`` and ``pair(N)[a, b]``
    is ``P(S_0 = a, S_N = b)``.
    """

    pi0: np.ndarray
    transition: np.ndarray
    _powers: dict = field(default_factory=dict, repr=False)

    def conditional(self, n: int) -> np.ndarray:
        if n not in self._powers:
            self._powers[n] = np.linalg.matrix_power(self.transition, n)
        return self._powers[n]

    def pair(self, n: int) -> np.ndarray:
        return self.pi0[:, None] * self.conditional(n)


def validate(model: FaimModel, raise_on_error: bool = True) -> ValidationReport:
    """Check stochasticity of every kernel row and ergodicity of the state chain.

    Ergodicity is tested by entrywise positivity of ``A^N`` for
    ``N = 1 .. S**2`` (Wielandt's bound makes this exhaustive).

    Raises
    ------
    NonStochastic
        Some row sum is off by more than 1e-12.
    NotErgodic
        No power up to ``S**2`` is strictly positive.
    """
    residuals = np.abs(model.kernel.sum(axis=(1, 2, 3)) - 1.0)
    if np.any(residuals > STOCHASTIC_ATOL):
        bad = int(np.argmax(residuals))
        report = ValidationReport(residuals, None, False, f"row {bad} off by {residuals[bad]:.3g}")
        if raise_on_error:
            raise NonStochastic(report.reason)
        return report
    a = model.transition
    s = model.num_states
    positive = a > 0
    reach = np.eye(s, dtype=bool)
    for n0 in range(1, s * s + 1):
        # boolean reachability avoids underflow for tiny transition probabilities
        reach = (reach.astype(np.int64) @ positive.astype(np.int64)) > 0
        if reach.all():
            return ValidationReport(residuals, n0, True)
    report = ValidationReport(residuals, None, False, "state chain is reducible or periodic")
    if raise_on_error:
        raise NotErgodic(report.reason)
    return report


def stationary_distribution(model: FaimModel, tol: float = 1e-14, max_iter: int = 10**6) -> np.ndarray:
    """Unique stationary law ``pi0`` of the state chain, by power iteration.

    The iterate is started from the uniform law; every 64 steps the matrix is
    squared as well so that slowly mixing chains converge in few passes.
    """
    a = np.asarray(model.transition, dtype=float)
    s = a.shape[0]
    p = np.full(s, 1.0 / s)
    step = a.copy()
    for it in range(max_iter):
        nxt = p @ step
        nxt /= nxt.sum()
        if np.max(np.abs(nxt @ a - nxt)) < tol and np.max(np.abs(nxt - p)) < tol:
            p = nxt
            break
        p = nxt
        if it % 64 == 63:
            step = step @ step
            step /= step.sum(axis=1, keepdims=True)
    else:
        raise NotConverged(f"power iteration did not reach residual {tol} in {max_iter} steps")
    if np.any(p <= 0):
        raise NotErgodic("stationary distribution has a zero entry")
    return p


def state_distributions(model: FaimModel) -> StateDistributions:
    return StateDistributions(np.asarray(model.pi0), np.asarray(model.transition))


def psi(model: FaimModel, n: int) -> float:
    """Mixing coefficient of the state chain.

    ``psi(0) = max_a 1/pi0(a)`` and, for ``n > 0``,
    ``psi(n) = max_{a,b} P(S_n=b | S_0=a) / pi0(b)``.
    """
    n = check_positive_int(n, "n", allow_zero=True)
    pi0 = model.pi0
    if n == 0:
        return float(np.max(1.0 / pi0))
    cond = np.linalg.matrix_power(model.transition, n)
    return float(np.max(cond / pi0[None, :]))


def pair_marginal(model: FaimModel, n: int) -> np.ndarray:
    """Table ``[a, b] -> P(S_0=a, S_n=b)`` for ``n >= 1``."""
    n = check_positive_int(n, "n")
    return state_distributions(model).pair(n)


def _flat_cdf(kernel_rows: np.ndarray) -> np.ndarray:
    flat = kernel_rows.reshape(kernel_rows.shape[0], -1)
    cdf = np.cumsum(flat, axis=1)
    cdf /= cdf[:, -1:]
    return cdf


def sample_trajectories(model: FaimModel, n: int, num: int, rng):
    """Draw ``num`` independent stationary trajectories of length ``n``.

    Returns
    -------
    s0 : ndarray of shape (num,)
    x, y, s : ndarrays of shape (num, n)
        Inputs, outputs and the states ``S_1 .. S_n``.
    """
    rng = make_rng(rng)
    S, L, Y, _ = model.kernel.shape
    cdf = _flat_cdf(model.kernel)
    pi_cdf = np.cumsum(model.pi0)
    pi_cdf /= pi_cdf[-1]
    draws = rng.random((num, n + 1))
    state = np.minimum(np.searchsorted(pi_cdf, draws[:, 0], side="right"), S - 1)
    s0 = state.copy()
    x = np.empty((num, n), dtype=np.int64)
    y = np.empty((num, n), dtype=np.int64)
    s = np.empty((num, n), dtype=np.int64)
    last = L * Y * S - 1
    for j in range(n):
        rows = cdf[state]
        idx = np.minimum((rows <= draws[:, j + 1, None]).sum(axis=1), last)
        x[:, j], rem = np.divmod(idx, Y * S)
        y[:, j], s[:, j] = np.divmod(rem, S)
        state = s[:, j]
    return s0, x, y, s


def sample_trajectory(model: FaimModel, n: int, seed=None):
    """Single trajectory ``(s0, x_1^n, y_1^n, s_1^n)``; identical for identical seeds."""
    s0, x, y, s = sample_trajectories(model, n, 1, seed)
    return int(s0[0]), x[0], y[0], s[0]


# ---------------------------------------------------------------------------
# builders


def _finish(kernel: np.ndarray, name: str) -> FaimModel:
    sums = kernel.sum(axis=(1, 2, 3), keepdims=True)
    normalized = kernel / sums
    if np.max(np.abs(normalized - kernel)) > BUILDER_SHIFT_ATOL:
        raise InvalidParameter("builder parameters do not define a stochastic kernel")
    model = FaimModel(normalized, name=name)
    validate(model)
    return model


def memoryless_from_channel(channel, input_dist=None) -> FaimModel:
    """Wrap a memoryless channel ``W[x, y]`` with input law ``input_dist`` as a 1-state model."""
    w = np.asarray(channel, dtype=float)
    if w.ndim != 2:
        raise InvalidParameter(f"channel must be a matrix W[x, y], got shape {w.shape}")
    if np.any(w < 0) or np.max(np.abs(w.sum(axis=1) - 1.0)) > BUILDER_SHIFT_ATOL:
        raise InvalidParameter("channel rows must be probability vectors")
    if input_dist is None:
        input_dist = np.full(w.shape[0], 1.0 / w.shape[0])
    px = check_distribution(input_dist, "input_dist", size=w.shape[0])
    kernel = (px[:, None] * w)[None, :, :, None]
    return _finish(kernel, "memoryless")


def bsc(p: float) -> np.ndarray:
    p = check_probability(p, "crossover")
    return np.array([[1 - p, p], [p, 1 - p]])


def bec(eps: float) -> np.ndarray:
    """Binary erasure channel with outputs ``(0, 1, erasure)``."""
    eps = check_probability(eps, "erasure probability")
    return np.array([[1 - eps, 0.0, eps], [0.0, 1 - eps, eps]])


def gilbert_elliott(p_gb, p_bg, eps_g, eps_b, input_dist=None) -> FaimModel:
    """Two-state Gilbert-Elliott burst channel.

    State 0 is good, state 1 bad.  The output at step ``j`` is the input passed
    through a BSC whose crossover is set by the state ``S_{j-1}`` in effect at
    the start of the step; the state then moves according to ``p_gb``/``p_bg``.
    """
    p_gb = check_probability(p_gb, "p_gb")
    p_bg = check_probability(p_bg, "p_bg")
    eps = (check_probability(eps_g, "eps_g"), check_probability(eps_b, "eps_b"))
    px = check_distribution(np.full(2, 0.5) if input_dist is None else input_dist, "input_dist", size=2)
    a = np.array([[1 - p_gb, p_gb], [p_bg, 1 - p_bg]])
    kernel = np.empty((2, 2, 2, 2))
    for s in range(2):
        w = bsc(eps[s])
        kernel[s] = px[:, None, None] * w[:, :, None] * a[s][None, None, :]
    return _finish(kernel, f"gilbert_elliott({p_gb},{p_bg},{eps_g},{eps_b})")


def rll_source(d: int, k: int, crossover: float = 0.0) -> FaimModel:
    """Maxentropic (d, k)-runlength-limited input observed through a BSC.

    The state counts zeros since the last one (``0 .. k``).  A one may be
    emitted only after at least ``d`` zeros and at most ``k`` zeros may be run
    together.  Transition probabilities are the maxentropic (Parry) measure of
    the constraint graph.
    """
    d = check_positive_int(d, "d", allow_zero=True)
    k = check_positive_int(k, "k", allow_zero=True)
    if k < d:
        raise InvalidParameter(f"need k >= d, got d={d}, k={k}")
    w = bsc(crossover)
    S = k + 1
    adj = np.zeros((S, S))
    emit = {}
    for z in range(S):
        if z >= d:
            adj[z, 0] = 1.0
            emit[(z, 0)] = 1
        if z < k:
            adj[z, z + 1] = 1.0
            emit[(z, z + 1)] = 0
    evals, evecs = np.linalg.eig(adj)
    top = int(np.argmax(evals.real))
    lam = evals[top].real
    v = np.abs(evecs[:, top].real)
    if lam <= 0 or np.any(v <= 0):
        raise InvalidParameter(f"({d},{k}) constraint has no positive-entropy maxentropic chain")
    kernel = np.zeros((S, 2, 2, S))
    for (z, z2), bit in emit.items():
        p = v[z2] / (lam * v[z])
        kernel[z, bit, :, z2] = p * w[bit]
    return _finish(kernel, f"rll({d},{k},{crossover})")


def random_model(rng, num_states, output_size, input_arity=2, sparsity=0.0) -> FaimModel:
    """Random ergodic model for property tests.

    Entries are i.i.d. uniform then normalized per state.  With ``sparsity``
    a fraction of entries is zeroed; draws are repeated until the chain is
    ergodic.
    """
    rng = make_rng(rng)
    for _ in range(1000):
        k = rng.random((num_states, input_arity, output_size, num_states))
        if sparsity:
            k *= rng.random(k.shape) >= sparsity
        sums = k.sum(axis=(1, 2, 3), keepdims=True)
        if np.any(sums == 0):
            continue
        model = FaimModel(k / sums, name="random")
        report = validate(model, raise_on_error=False)
        if report.ok:
            return model
    raise RuntimeError("could not draw an ergodic model")


# ---------------------------------------------------------------------------
# model files


def model_from_dict(doc: dict) -> FaimModel:
    """Build a model from the JSON document schema; unknown fields are rejected."""
    if not isinstance(doc, dict):
        raise ModelError("model document must be a JSON object")
    unknown = sorted(set(doc) - set(MODEL_FIELDS))
    if unknown:
        raise ModelError(f"unknown model fields: {', '.join(unknown)}")
    missing = [f for f in MODEL_FIELDS if f not in doc]
    if missing:
        raise ModelError(f"missing model fields: {', '.join(missing)}")
    try:
        kernel = np.array(doc["kernel"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"kernel is not a rectangular numeric array: {exc}") from None
    expected = (doc["num_states"], doc["input_arity"], doc["output_alphabet_size"], doc["num_states"])
    if kernel.shape != tuple(expected):
        raise ModelError(f"kernel shape {kernel.shape} does not match declared sizes {tuple(expected)}")
    return FaimModel(kernel)


def load_model(path) -> FaimModel:
    with open(path) as fh:
        doc = json.load(fh)
    return model_from_dict(doc)


def save_model(model: FaimModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=1)
        fh.write("\n")
