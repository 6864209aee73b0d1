import math

import numpy as np
import pytest

from layerwise import data, targets
from layerwise.hermite import HermiteSeries


def test_noiseless_labels_are_exact():
    f = targets.experiment_target(5)
    ds = data.sample_dataset(f, 200, 0.0, seed=3)
    np.testing.assert_array_equal(ds.y, f(ds.X))


def test_noise_is_two_point_with_unit_variance():
    f = targets.experiment_target(5)
    n = 100_000
    ds = data.sample_dataset(f, n, 1.0, seed=4)
    eps = ds.y - f(ds.X)
    np.testing.assert_allclose(np.abs(eps), 1.0, atol=1e-12)
    assert abs(np.mean(eps**2) - 1.0) <= 3 / math.sqrt(n) * math.sqrt(2)
    assert abs(eps.mean()) < 4 / math.sqrt(n)


def test_sampling_is_deterministic_and_tagged():
    f = targets.experiment_target(4)
    a = data.sample_dataset(f, 30, 1.0, seed=9)
    b = data.sample_dataset(f, 30, 1.0, seed=9)
    c = data.sample_dataset(f, 30, 1.0, seed=9, tag="holdout")
    np.testing.assert_array_equal(a.X, b.X)
    np.testing.assert_array_equal(a.y, b.y)
    assert not np.array_equal(a.X, c.X)
    with pytest.raises(ValueError):
        a.X[0, 0] = 1.0


def test_sample_dataset_rejects_bad_input():
    f = targets.experiment_target(4)
    with pytest.raises(ValueError):
        data.sample_dataset(f, 0, 1.0, 0)
    with pytest.raises(ValueError):
        data.sample_dataset(f, 5, -1.0, 0)


def test_preprocess_linear_target():
    d, n = 10, 10**6
    u = np.ones(d) / math.sqrt(d)
    f = targets.single_index(u, HermiteSeries([0, 1]))
    st = data.preprocess(data.sample_dataset(f, n, 0.0, seed=1))
    assert np.linalg.norm(st.beta - u) <= 3 * math.sqrt(d / n) * 2
    assert abs(st.alpha) <= 3 * math.sqrt(1 / n) * 2


def test_preprocess_zero_labels():
    f = targets.experiment_target(3)
    ds = data.sample_dataset(f, 50, 0.0, seed=1)
    ds0 = data.Dataset(X=ds.X, y=np.zeros(50), sigma_noise=0.0, seed=1)
    st = data.preprocess(ds0)
    assert st.alpha == 0.0 and not st.beta.any() and not st.y_centered.any()


def test_preprocess_experiment_target_has_no_affine_part():
    f = targets.experiment_target(10)
    st = data.preprocess(data.sample_dataset(f, 10**6, 1.0, seed=2))
    assert abs(st.alpha) <= 0.01
    assert np.linalg.norm(st.beta) <= 0.02


def test_preprocess_identity(rng):
    f = targets.experiment_target(4)
    ds = data.sample_dataset(f, 40, 1.0, seed=5)
    st = data.preprocess(ds)
    np.testing.assert_allclose(st.y_centered + st.alpha + ds.X @ st.beta, ds.y, atol=1e-13)


def test_dump_load_roundtrip(tmp_path):
    f = targets.experiment_target(3)
    ds = data.sample_dataset(f, 17, 0.5, seed=8)
    path = tmp_path / "ds.csv"
    data.dump_dataset(ds, path)
    back = data.load_dataset(path)
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.y, ds.y)
    assert (back.sigma_noise, back.seed, back.n, back.d) == (0.5, 8, 17, 3)
    assert path.read_text().startswith("# n=17,d=3,sigma=0.5,seed=8\nx0,x1,x2,y\n")
