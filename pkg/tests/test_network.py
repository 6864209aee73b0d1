import math

import numpy as np
import pytest

from layerwise import errors, network
from layerwise.network import NetworkParams, Predictor


def test_symmetric_init_is_zero_and_mirrored(rng):
    p = network.init_symmetric(100, 10, seed=0)
    X = rng.standard_normal((100, 10))
    assert np.all(network.forward(p, X) == 0.0)
    np.testing.assert_array_equal(p.W, p.W[::-1])
    np.testing.assert_array_equal(p.a, -p.a[::-1])
    assert not p.b.any()
    assert set(np.unique(p.a)) == {-1.0, 1.0}


def test_init_row_norms_concentrate():
    m, d = 10_000, 10
    p = network.init_symmetric(m, d, seed=1)
    mean_sq = np.mean(np.sum(p.W**2, axis=1))
    assert abs(mean_sq - 1.0) <= 3 * math.sqrt(2 / d) / math.sqrt(m / 2)


def test_init_rejects_odd_width():
    with pytest.raises(errors.OddWidth):
        network.init_symmetric(7, 3, 0)


def test_init_is_deterministic():
    a = network.init_symmetric(8, 3, 5)
    b = network.init_symmetric(8, 3, 5)
    np.testing.assert_array_equal(a.W, b.W)
    assert not np.array_equal(a.W, network.init_symmetric(8, 3, 6).W)


def test_forward_examples(rng):
    w = rng.standard_normal(4)
    pair = NetworkParams(a=np.array([1.0, -1.0]), W=np.stack([w, w]), b=np.array([0.3, 0.3]))
    assert np.all(network.forward(pair, rng.standard_normal((20, 4))) == 0.0)
    single = NetworkParams(a=np.array([2.0]), W=np.array([[1.0, 0.0, 0.0]]), b=np.array([-1.0]))
    assert network.forward(single, np.array([3.0, 0.5, -2.0])) == 4.0
    dead = NetworkParams(a=rng.standard_normal(6), W=rng.standard_normal((6, 4)), b=np.full(6, -1e6))
    assert np.all(network.forward(dead, rng.standard_normal((10, 4))) == 0.0)
    with pytest.raises(errors.DimensionMismatch):
        network.forward(single, np.zeros(4))


def test_head_features(rng):
    p = NetworkParams(a=rng.standard_normal(4), W=rng.standard_normal((4, 3)), b=rng.standard_normal(4))
    X = rng.standard_normal((5, 3))
    Phi = network.head_features(p, X)
    for i in range(5):
        for j in range(4):
            assert Phi[i, j] == max(0.0, float(np.dot(p.W[j], X[i]) + p.b[j]))
    np.testing.assert_allclose(Phi @ p.a, network.forward(p, X), rtol=1e-12)
    ones = NetworkParams(a=np.ones(3), W=np.zeros((3, 2)), b=np.ones(3))
    assert np.all(network.head_features(ones, X[:, :2]) == 1.0)


def test_relu_grad_convention():
    np.testing.assert_array_equal(network.relu_grad(np.array([-1.0, 0.0, 2.0])), [0.0, 1.0, 1.0])


def test_predictor_roundtrip(tmp_path, rng):
    p = network.init_symmetric(6, 3, 0).with_(a=rng.standard_normal(6), b=rng.standard_normal(6))
    pred = Predictor(params=p, alpha=0.25, beta=rng.standard_normal(3), lam=1e-3)
    path = tmp_path / "pred.npz"
    network.save_predictor(pred, path)
    back = network.load_predictor(path)
    X = rng.standard_normal((7, 3))
    np.testing.assert_array_equal(back.predict(X), pred.predict(X))
    assert back.lam == 1e-3
    network.save_predictor(Predictor(params=p, alpha=0.0, beta=np.zeros(3)), path)
    assert network.load_predictor(path).lam is None
    assert pred.predict(X[0]) == pytest.approx(pred.predict(X)[0])
