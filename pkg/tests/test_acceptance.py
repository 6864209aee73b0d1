"""Acceptance criteria, one PASS/FAIL line each, at the stated tolerances.

Run with ``pytest tests/test_acceptance.py -v`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py`` (lines on stdout).
"""

import json
import math
import statistics
from pathlib import Path

import numpy as np
import pytest

from layerwise import csq, diagnostics, harness, hermite, network, targets, trainer
from layerwise.config import ExperimentConfig
from layerwise.data import Dataset, preprocess
from layerwise.rng import derive_seed, stream

RESULTS: list[str] = []
CALIBRATION = Path(__file__).resolve().parents[1] / "calibration" / "residual_scaling.json"


def report(label: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
    RESULTS.append(line)
    print(line)


def cell_stats(records, method, n, N=None):
    vals = [r.l2_excess for r in records if r.method == method and r.n == n and r.N == N and r.ok]
    return statistics.fmean(vals), (statistics.stdev(vals) if len(vals) > 1 else 0.0), len(vals)


# 1 -----------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def sweep_records():
    cfg = ExperimentConfig(kind="sweep", d=10, p=4, m=100, sigma=1.0, seeds=list(range(10)),
                           n_exponents=[0.0, 3.0], n_test=100_000)
    return harness.run_sweep(cfg)


def test_criterion_1_sample_complexity_separation(sweep_records):
    alg, _, _ = cell_stats(sweep_records, "algorithm1", 1000)
    rf, _, _ = cell_stats(sweep_records, "rf", 1000)
    ntk, _, _ = cell_stats(sweep_records, "ntk", 1000)
    small = {m: cell_stats(sweep_records, m, 1)[0] for m in ("algorithm1", "rf", "ntk")}
    a = alg <= 0.1
    b = 0.35 <= rf <= 0.65 and 0.35 <= ntk <= 0.65
    c = all(v >= 0.8 for v in small.values())
    report("1", a and b and c,
           f"(a) algorithm1@n=1000 {alg:.4f} <= 0.1 [{'ok' if a else 'no'}]; "
           f"(b) rf {rf:.4f}, ntk {ntk:.4f} in [0.35, 0.65] [{'ok' if b else 'no'}]; "
           f"(c) n=1: " + ", ".join(f"{k} {v:.3f}" for k, v in small.items()) + f" >= 0.8 [{'ok' if c else 'no'}]")
    assert a, f"1(a): algorithm1 mean excess {alg:.4f} > 0.1"
    assert b, f"1(b): rf {rf:.4f} / ntk {ntk:.4f} outside [0.35, 0.65]"
    assert c


# 2 -----------------------------------------------------------------------------------

def test_criterion_2_transfer():
    cfg = ExperimentConfig(kind="transfer", d=10, p=4, m=100, sigma=1.0, seeds=list(range(10)), n_test=100_000)
    cfg.transfer.pretrain_exponents = [0.0, 2.0]
    recs = harness.run_transfer(cfg)
    Ns = harness.transfer_N_values(cfg)
    rich = [cell_stats(recs, "transfer", 100, N) for N in Ns]
    poor = [cell_stats(recs, "transfer", 1, N) for N in Ns]
    at100 = rich[Ns.index(100)][0]
    first = at100 < 0.5
    mono = all(m2 <= m1 + math.sqrt((s1 * s1 + s2 * s2) / 2) for (m1, s1, _), (m2, s2, _) in zip(rich, rich[1:]))
    trivial = all(m >= 0.8 for (m, _, _), N in zip(poor, Ns) if N <= 100)
    report("2", first and mono and trivial,
           f"pretrain n=100: excess@N=100 {at100:.4f} < 0.5 [{'ok' if first else 'no'}], nonincreasing within "
           f"pooled std [{'ok' if mono else 'no'}] (means {', '.join(f'{m:.3f}' for m, _, _ in rich)}); "
           f"pretrain n=1: min over N<=100 {min(m for (m, _, _), N in zip(poor, Ns) if N <= 100):.3f} >= 0.8 "
           f"[{'ok' if trivial else 'no'}]")
    assert first, f"2: pretrain n=d^2 gives {at100:.4f} at N=100"
    assert mono and trivial


# 3 -----------------------------------------------------------------------------------

def test_criterion_3_residual_scaling():
    frozen = json.loads(CALIBRATION.read_text())
    lo, hi = frozen["ratio_band"]
    rows = diagnostics.residual_scaling_study(lambda d: targets.experiment_target(d), [50, 100, 200], 10**6, 20,
                                              seed=0)
    ratios = [a["residual"] / b["residual"] for a, b in zip(rows, rows[1:])]
    ok = all(lo <= r <= hi for r in ratios)
    report("3", ok, "residuals " + ", ".join(f"d={r['d']}: {r['residual']:.3e} (mc se {r['mc_stderr']:.1e})"
                                             for r in rows)
           + f"; halving ratios {', '.join(f'{r:.2f}' for r in ratios)} in frozen band [{lo:.3f}, {hi:.1f}]")
    assert ok


# 4 -----------------------------------------------------------------------------------

def _fd_first_step():
    d, n, m, h, eta1 = 5, 50, 4, 1e-4, 1.3
    f = targets.experiment_target(d)
    rng = stream(0, "acceptance", "fd")
    X = rng.standard_normal((n, d))
    ds = Dataset(X=X, y=f(X) + rng.choice([-1.0, 1.0], n), sigma_noise=1.0, seed=0)
    st = preprocess(ds)
    p0 = network.init_symmetric(m, d, 3)
    W1 = trainer.first_layer_step(p0, ds, st, eta1)
    num = np.zeros_like(p0.W)
    for idx in np.ndindex(*p0.W.shape):
        up, dn = p0.W.copy(), p0.W.copy()
        up[idx] += h
        dn[idx] -= h
        num[idx] = (trainer.empirical_loss(p0.with_(W=up), X, st.y_centered)
                    - trainer.empirical_loss(p0.with_(W=dn), X, st.y_centered)) / (2 * h)
    return float(np.linalg.norm(W1 + eta1 * num) / np.linalg.norm(W1))


def test_criterion_4_exactness_oracles():
    gd = 0.0
    for i in range(20):
        rng = stream(0, "acceptance", "ridge", i)
        n, m = int(rng.integers(30, 120)), int(rng.integers(4, 25))
        Phi = np.maximum(rng.standard_normal((n, m)) + rng.standard_normal(m), 0.0)
        y = rng.standard_normal(n)
        lam = 10 ** rng.uniform(-3, 0)
        ref = trainer.ridge_closed_form(Phi, y, lam)
        a = trainer.gd_head(Phi, y, np.zeros(m), None, lam, 500_000, 1e-15)
        gd = max(gd, float(np.linalg.norm(a - ref) / np.linalg.norm(ref)))
    fd = _fd_first_step()
    z, w = hermite.gauss_hermite(40)
    orth = max(abs(float(np.sum(w * hermite.he_eval(j, z) * hermite.he_eval(k, z))) - (math.factorial(k) if j == k else 0))
               / math.sqrt(math.factorial(j) * math.factorial(k)) for j in range(9) for k in range(9))
    z2, w2 = hermite.gauss_hermite(30)
    Z1, Z2 = np.meshgrid(z2, z2, indexing="ij")
    W2 = np.outer(w2, w2)
    rng = stream(0, "acceptance", "corr")
    corr = 0.0
    for p in range(1, 9):
        for _ in range(5):
            u, v = diagnostics.random_unit(2, rng), diagnostics.random_unit(2, rng)
            q = float(np.sum(W2 * hermite.he_eval(p, u[0] * Z1 + u[1] * Z2) * hermite.he_eval(p, v[0] * Z1 + v[1] * Z2)))
            corr = max(corr, abs(q / math.factorial(p) - csq.pairwise_correlation(u, v, p)))
    parts = [gd <= 1e-6, fd <= 1e-4, orth <= 1e-8, corr <= 1e-6]
    report("4", all(parts), f"(a) gd vs ridge max rel {gd:.2e} <= 1e-6; (b) first step vs central FD rel {fd:.2e} "
                            f"<= 1e-4; (c) He orthogonality max {orth:.2e} <= 1e-8; (d) correlation vs quadrature "
                            f"max {corr:.2e} <= 1e-6")
    assert all(parts)


# 5 -----------------------------------------------------------------------------------

def test_criterion_5_vk_identity():
    xs = np.linspace(-1.0, 1.0, 11)
    worst, misses, total = 0.0, 0, 0
    for mode in ("uniform", "gaussian"):
        for k in range(5):
            est, se = diagnostics.vk_identity_mc(k, xs, 10**6, derive_seed(0, "vk", k), mode)
            z = np.abs(est - xs**k) / se
            worst = max(worst, float(z.max()))
            misses += int(np.sum(z > 3))
            total += len(xs)
    ok = misses == 0
    report("5", ok, f"{total - misses}/{total} points within 3 stderr (max |z| = {worst:.2f}), k<=4, both b modes, "
                    f"1e6 draws")
    assert ok


# 6 -----------------------------------------------------------------------------------

def test_criterion_6_csq_suite():
    cls = csq.build_quasi_orthogonal_set(200, 200, 0.35, seed=0)
    V = cls.directions
    G = np.abs(V @ V.T)
    np.fill_diagonal(G, 0.0)
    sound = cls.epsilon_cert == G.max() and cls.epsilon_cert <= 0.35
    lb = [csq.csq_query_lower_bound(100, 0.5, 0.01), csq.csq_query_lower_bound(100, 0.5, 0.25),
          csq.csq_query_lower_bound(2, 1.0, 0.0)]
    lb_ok = math.isclose(lb[0], 12.0, rel_tol=1e-12) and lb[1] == 0.0 and math.isclose(lb[2], 1.0, rel_tol=1e-12)
    tb = [csq.tolerance_bound(1e6, 100, 4), csq.tolerance_bound(10, 7, 0),
          csq.tolerance_bound(1e6, 200, 4) < csq.tolerance_bound(1e6, 100, 4)]
    tb_ok = math.isclose(tb[0], math.log(1e8) / 100, rel_tol=1e-12) and tb[1] == 1.0 and tb[2]
    tau, wins = 0.5, 0
    for trial in range(20):
        c = csq.with_degree(csq.build_quasi_orthogonal_set(200, 200, 0.35, seed=trial), 4)
        q = math.floor(c.M * (tau**2 - c.correlation_bound) / 2) - 1
        wins += len(csq.adversary_game(c, csq.random_queries(c, q, trial), tau).survivors) >= 2
    ok = sound and lb_ok and tb_ok and wins == 20
    report("6", ok, f"certificate {cls.epsilon_cert:.4f} <= 0.35 and exhaustive [{'ok' if sound else 'no'}]; "
                    f"query bounds {lb} [{'ok' if lb_ok else 'no'}]; tolerance bounds {tb[0]:.4f}, {tb[1]}, "
                    f"monotone={tb[2]} [{'ok' if tb_ok else 'no'}]; game >= 2 survivors in {wins}/20 trials")
    assert ok


# 7 -----------------------------------------------------------------------------------

def _without_time(path):
    return [line.rsplit(",", 1)[0] for line in Path(path).read_text().splitlines()]


def test_criterion_7_determinism(tmp_path):
    outputs = {}
    for kind in ("sweep", "transfer"):
        for label, workers in (("a", 1), ("b", 1), ("c", 4)):
            cfg = ExperimentConfig(kind=kind, seeds=[0, 1, 2], n_exponents=[0.0, 1.0, 2.0], n_test=10_000,
                                   workers=workers, out=str(tmp_path / f"{kind}-{label}.csv"))
            cfg.transfer.pretrain_exponents = [0.0, 2.0]
            cfg.transfer.N_exponents = [0.0, 1.0, 2.0]
            (harness.run_sweep if kind == "sweep" else harness.run_transfer)(cfg)
            outputs[kind, label] = _without_time(cfg.out)
    same = {k: outputs[k, "a"] == outputs[k, "b"] == outputs[k, "c"] for k in ("sweep", "transfer")}
    ok = all(same.values())
    report("7", ok, f"sweep rerun/workers(1,4) identical={same['sweep']}; transfer identical={same['transfer']} "
                    f"({len(outputs['sweep', 'a']) - 1} + {len(outputs['transfer', 'a']) - 1} rows, wall_time_s "
                    f"excluded)")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s"]))
