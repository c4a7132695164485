"""scikit-learn style wrappers around analysis and coding.

Both estimators are fitted on a :class:`FaimModel` rather than a data
matrix; once fitted, :class:`PolarCodec` maps arrays of bits and channel
outputs the usual way (one block per row).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_power_of_two
from .codec import encode
from .construct import frozen_set, polarization_fractions
from .evolve import DEFAULT_BUDGET, index_stats
from .exceptions import InvalidParameter, LengthMismatch
from .model import FaimModel, validate
from .trellis import sc_pass


def _check_model(model):
    if not isinstance(model, FaimModel):
        raise InvalidParameter(f"expected a FaimModel, got {type(model).__name__}")
    validate(model)
    return model


class PolarizationAnalyzer(BaseEstimator):
    """Per-index statistics for a block of length ``2**n``.

    After ``fit(model)``: ``stats_`` (list of IndexStats), ``mode_``
    (``"exact"`` or ``"mc"``) and ``fractions_`` (beta -> Fractions).
    """

    def __init__(self, n=3, method="auto", num_samples=10_000, seed=0, budget=DEFAULT_BUDGET,
                 betas=(0.3,), threads=1):
        self.n = n
        self.method = method
        self.num_samples = num_samples
        self.seed = seed
        self.budget = budget
        self.betas = betas
        self.threads = threads

    def fit(self, model, y=None):
        model = _check_model(model)
        self.stats_, self.mode_ = index_stats(model, self.n, self.method, self.budget,
                                              self.num_samples, self.seed, self.threads)
        self.fractions_ = {b: polarization_fractions(self.stats_, b) for b in self.betas}
        return self

    def table(self, columns=("Z", "K", "H", "Z_hat", "K_hat", "H_hat")):
        """Stats as an ``(N, len(columns))`` array."""
        check_is_fitted(self, "stats_")
        return np.array([[s.get(c) for c in columns] for s in self.stats_])


class PolarCodec(BaseEstimator, TransformerMixin):
    """Polar code designed for a model, with SC-trellis decoding.

    ``transform`` encodes rows of information bits into codewords and
    ``predict`` decodes rows of channel outputs back to information bits.
    """

    def __init__(self, N=256, rate=0.5, criterion="Z", method="auto", num_samples=10_000, seed=0,
                 budget=DEFAULT_BUDGET):
        self.N = N
        self.rate = rate
        self.criterion = criterion
        self.method = method
        self.num_samples = num_samples
        self.seed = seed
        self.budget = budget

    def fit(self, model, y=None):
        model = _check_model(model)
        n = check_power_of_two(self.N, "N")
        stats, self.mode_ = index_stats(model, n, self.method, self.budget, self.num_samples, self.seed)
        self.design_ = frozen_set(stats, self.rate, self.criterion)
        self.model_ = model
        return self

    def _bits(self, X, width, what):
        X = check_array(X, dtype=np.int64, ensure_min_samples=1, ensure_min_features=0)
        if X.shape[1] != width:
            raise LengthMismatch(f"{what} rows have length {X.shape[1]}, expected {width}")
        return X

    def transform(self, X):
        check_is_fitted(self, "design_")
        info = self._bits(X, self.design_.num_info, "information")
        if np.any((info != 0) & (info != 1)):
            raise InvalidParameter("information bits must be 0 or 1")
        u = np.zeros((info.shape[0], self.N), np.int64)
        u[:, self.design_.info_indices] = info
        return encode(u).astype(np.int64)

    def predict(self, Y):
        check_is_fitted(self, "design_")
        Y = self._bits(Y, self.N, "output")
        res = sc_pass(self.model_, Y, frozen=self.design_.frozen_mask, keep_posteriors=False)
        return res.decisions[:, self.design_.info_indices]

    def score(self, Y, info):
        """Fraction of blocks decoded without error."""
        info = np.asarray(info)
        return float(np.mean(np.all(self.predict(Y) == info, axis=1)))
