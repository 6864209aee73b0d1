import math

import numpy as np
import pytest

from layerwise import diagnostics, errors, targets
from layerwise.hermite import HermiteSeries


def test_population_g_quadratic_target_along_u():
    # at w = u the second-order term w c_4 C_2(w, w)/2 is -1/2 of the leading term, so the
    # gradient is sqrt(2) u / (2 sqrt(2 pi)); for generic w that term is O(1/d)
    d = 20
    u = targets.basis_direction(d, 3)
    f = targets.single_index(u, HermiteSeries([0, 0, 1 / math.sqrt(2)]))
    est, se = diagnostics.estimate_population_g(f, u, 2**16, seed=0)
    lead = diagnostics.leading_term(targets.expected_hessian(f).H, u)
    np.testing.assert_allclose(lead, math.sqrt(2) * u / math.sqrt(2 * math.pi), atol=1e-15)
    assert np.all(np.abs(est - lead / 2) <= 3 * se + 1e-12)
    w = diagnostics.random_unit(d, np.random.default_rng(0))
    est, se = diagnostics.estimate_population_g(f, w, 2**16, seed=1)
    lead = diagnostics.leading_term(targets.expected_hessian(f).H, w)
    assert np.all(np.abs(est - lead) <= 3 * se + 5 / d)


def test_population_g_odd_target_orthogonal_direction():
    d = 20
    f = targets.hermite_target(d, 3)
    w = targets.basis_direction(d, 1)
    est, se = diagnostics.estimate_population_g(f, w, 2**16, seed=1)
    assert abs(est @ f.U[0]) <= 3 * np.linalg.norm(se) + 1 / d


@pytest.mark.parametrize("method", ["qmc", "projected", "mc"])
def test_population_g_matches_series(method):
    d = 8
    f = targets.experiment_target(d)
    rng = np.random.default_rng(3)
    w = diagnostics.random_unit(d, rng)
    n = 2**16 if method != "mc" else 400_000
    est, se = diagnostics.estimate_population_g(f, w, n, seed=2, method=method)
    assert np.all(np.abs(est - diagnostics.gradient_series(f, w)) <= 4.5 * se + 1e-12)


def test_population_g_rejects_non_unit():
    f = targets.experiment_target(4)
    with pytest.raises(ValueError):
        diagnostics.estimate_population_g(f, np.ones(4), 1000, 0)


def test_series_matches_quadrature_in_the_plane():
    # in span(w, u) the gradient is a 2-d integral; tensor Gauss-Hermite on each half-plane
    from layerwise.hermite import gauss_hermite

    d = 6
    f = targets.experiment_target(d)
    w = np.array([0.6, 0.8, 0, 0, 0, 0])
    u = f.U[0]
    fc = diagnostics.centered_target(f)
    z, wt = gauss_hermite(80)
    # basis q1 = w, q2 = unit part of u orthogonal to w
    q2 = u - (u @ w) * w
    q2 /= np.linalg.norm(q2)
    Z1, Z2 = np.meshgrid(z, z, indexing="ij")
    W2 = np.outer(wt, wt) * (Z1 >= 0)
    X = Z1[..., None] * w + Z2[..., None] * q2
    vals = fc(X.reshape(-1, d)).reshape(Z1.shape)
    g = np.einsum("ij,ijk->k", W2 * vals, X)
    assert np.max(np.abs(g - diagnostics.gradient_series(f, w))) < 2e-3


def test_leading_term_examples(rng):
    d = 5
    e1 = targets.basis_direction(d, 0)
    np.testing.assert_allclose(diagnostics.leading_term(np.eye(d), e1), e1 / math.sqrt(2 * math.pi))
    u = targets.basis_direction(d, 2)
    assert not diagnostics.leading_term(np.outer(u, u), e1).any()
    f = targets.experiment_target(d)
    w = diagnostics.random_unit(d, rng)
    H = targets.expected_hessian(f).H
    np.testing.assert_allclose(diagnostics.leading_term(H, w), (w @ f.U[0]) / math.sqrt(2 * math.pi) * f.U[0],
                               atol=1e-15)


def test_residual_scaling_small():
    rows = diagnostics.residual_scaling_study(lambda d: targets.experiment_target(d), [20, 40, 80], 2**18, 6, seed=0)
    assert [r["d"] for r in rows] == [20, 40, 80]
    assert rows[-1]["residual"] <= rows[0]["residual"]
    assert rows[1]["reference_1_over_d"] == pytest.approx(rows[0]["residual"] / 2)
    for r in rows:
        assert r["residual"] == pytest.approx(r["series_residual"], rel=0.1, abs=3 * r["mc_stderr"])


def test_residual_scaling_odd_target_has_no_signal():
    # H = 0 and, by x -> -x symmetry, the whole population gradient of an odd target vanishes
    rows = diagnostics.residual_scaling_study(lambda d: targets.hermite_target(d, 3), [20, 40], 2**15, 4, seed=0,
                                              check_precision=False)
    for r in rows:
        assert r["series_residual"] == 0.0
        assert r["residual"] <= 3 * r["mc_stderr"] + 1e-12


def test_residual_scaling_precision_guard():
    with pytest.raises(errors.InsufficientPrecision):
        diagnostics.residual_scaling_study(lambda d: targets.experiment_target(d), [50, 100], 2000, 2, seed=0,
                                           method="mc")
    with pytest.raises(ValueError):
        diagnostics.residual_scaling_study(lambda d: targets.experiment_target(d), [50], 2000, 2, seed=0)


def test_subspace_alignment_examples(rng):
    d, m = 10, 2000
    f = targets.experiment_target(d)
    rep = diagnostics.subspace_alignment(rng.standard_normal((5, 1)) * f.U[0], f)
    assert rep.projection_ratio == pytest.approx(1.0) and rep.latent_rank == 1
    W = rng.standard_normal((m, d))
    rep = diagnostics.subspace_alignment(W, f)
    assert abs(rep.projection_ratio - 1 / d) <= 3 * math.sqrt(2 / m) / d * 1.5
    with pytest.raises(errors.ZeroMatrix):
        diagnostics.subspace_alignment(np.zeros((3, d)), f)


@pytest.mark.slow
def test_first_step_aligns_at_large_n():
    from layerwise import data, network, trainer

    f = targets.experiment_target(10)
    for seed in range(10):
        ds = data.sample_dataset(f, 10**5, 1.0, seed)
        p = network.init_symmetric(100, 10, seed)
        W1 = trainer.first_layer_step(p, ds, data.preprocess(ds), 1.0)
        rep = diagnostics.subspace_alignment(W1, f)
        assert rep.projection_ratio >= 0.8 and rep.latent_rank == 1


def test_monomial_weight_examples():
    assert diagnostics.monomial_weight_v(0, 1, 0.5, "uniform") == 3.0
    assert diagnostics.monomial_weight_v(1, -1, 0.37, "uniform") == -2.0
    with pytest.raises(errors.DomainError):
        diagnostics.monomial_weight_v(2, 1, 1.5, "uniform")
    assert diagnostics.monomial_weight_v(2, 1, 1.5, "gaussian") == 0.0


def test_vk_identity_point():
    est, se = diagnostics.vk_identity_mc(2, 0.5, 10**6, seed=0, mode="uniform")
    assert abs(est[0] - 0.25) <= 3 * se[0]


def test_rademacher_calculators():
    assert diagnostics.rademacher_two_layer(1, 1, 100, 10, 1000) == 2.0
    assert diagnostics.rademacher_two_layer(0, 1, 100, 10, 1000) == 0.0
    assert diagnostics.rademacher_two_layer(1, 1, 100, 10, 4000) == pytest.approx(1.0)
    assert diagnostics.rademacher_linear(1, 1, 0, 1) == 1.0
    assert diagnostics.rademacher_linear(2, 3, 1, 4) == 2.0
    assert diagnostics.rademacher_linear(6, 3, 1, 4) == pytest.approx(3 * diagnostics.rademacher_linear(2, 3, 1, 4))
