import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import bec_model
from faimpolar.estimators import PolarCodec, PolarizationAnalyzer
from faimpolar.exceptions import InvalidParameter, LengthMismatch


def test_analyzer_exact_bec():
    est = PolarizationAnalyzer(n=2, betas=(0.3, 0.5)).fit(bec_model(0.5))
    assert est.mode_ == "exact"
    assert est.table(("Z",))[:, 0] == pytest.approx([0.9375, 0.5625, 0.4375, 0.0625])
    assert set(est.fractions_) == {0.3, 0.5}


def test_analyzer_params_roundtrip():
    est = PolarizationAnalyzer(n=4, method="mc", num_samples=50)
    assert clone(est).get_params() == est.get_params()
    with pytest.raises(NotFittedError):
        est.table()


def test_analyzer_rejects_non_model():
    with pytest.raises(InvalidParameter):
        PolarizationAnalyzer().fit(np.zeros((3, 3)))


def test_codec_roundtrip_noiseless(noiseless):
    codec = PolarCodec(N=32, rate=0.5).fit(noiseless)
    info = np.random.default_rng(0).integers(0, 2, (6, codec.design_.num_info))
    x = codec.transform(info)
    assert x.shape == (6, 32)
    assert np.array_equal(codec.predict(x), info)
    assert codec.score(x, info) == 1.0


def test_codec_shape_checks(noiseless):
    codec = PolarCodec(N=8, rate=0.5).fit(noiseless)
    with pytest.raises(LengthMismatch):
        codec.transform(np.zeros((2, 3), int))
    with pytest.raises(LengthMismatch):
        codec.predict(np.zeros((2, 4), int))
    with pytest.raises(NotFittedError):
        PolarCodec().predict(np.zeros((1, 256), int))
