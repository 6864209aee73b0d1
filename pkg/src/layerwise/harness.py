"""Experiment orchestration: sweeps, transfer, diagnostics, CSQ reports and CSV/JSON output.

Cells run in a process pool but the output file is written once, sorted by
cell key, so its contents do not depend on scheduling or worker count.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import platform
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .baselines import evaluate, ntk_linearized_fit, random_features_fit
from .config import ExperimentConfig, build_target
from .csq import csq_report
from .data import preprocess, sample_dataset
from .diagnostics import residual_scaling_study, subspace_alignment, vk_identity_mc
from .errors import InsufficientPrecision
from .network import init_symmetric
from .rng import derive_seed
from .targets import hermite_target
from .trainer import first_layer_step, retrain_head_transfer, run_algorithm1

log = logging.getLogger("layerwise")

HEADER = ("method", "d", "p", "m", "n", "N", "seed", "lambda", "l2_excess", "l1_excess",
          "projection_ratio", "wall_time_s")
METHOD_ORDER = {"algorithm1": 0, "rf": 1, "ntk": 2, "transfer": 3}


@dataclass(frozen=True)
class ExperimentRecord:
    method: str
    d: int
    p: int
    m: int
    n: int
    seed: int
    N: int | None = None
    lam: float | None = None
    l2_excess: float = math.nan
    l1_excess: float = math.nan
    projection_ratio: float | None = None
    wall_time_s: float = 0.0
    error: str | None = None

    @property
    def key(self) -> tuple:
        return (METHOD_ORDER.get(self.method, 99), self.method, self.n, -1 if self.N is None else self.N, self.seed)

    @property
    def ok(self) -> bool:
        return self.error is None and math.isfinite(self.l2_excess)

    def to_row(self) -> list[str]:
        return [self.method, str(self.d), str(self.p), str(self.m), str(self.n), _fmt(self.N), str(self.seed),
                _fmt(self.lam), _fmt(self.l2_excess), _fmt(self.l1_excess), _fmt(self.projection_ratio),
                _fmt(self.wall_time_s)]

    @classmethod
    def from_row(cls, row: dict) -> "ExperimentRecord":
        def opt(v, typ):
            return None if v == "" else typ(v)

        l2 = float(row["l2_excess"])
        return cls(method=row["method"], d=int(row["d"]), p=int(row["p"]), m=int(row["m"]), n=int(row["n"]),
                   seed=int(row["seed"]), N=opt(row["N"], int), lam=opt(row["lambda"], float), l2_excess=l2,
                   l1_excess=float(row["l1_excess"]), projection_ratio=opt(row["projection_ratio"], float),
                   wall_time_s=float(row["wall_time_s"]), error=None if math.isfinite(l2) else "failed")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


# -- CSV io ------------------------------------------------------------------------

def write_records(path, records) -> None:
    """Write records sorted by cell key; failed cells carry ``nan`` metrics."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = sorted(records, key=lambda r: r.key)
    keys = [r.key for r in rows]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate cell keys in output")
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for r in rows:
            w.writerow(r.to_row())
    os.replace(tmp, path)


def read_records(path) -> list[ExperimentRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [ExperimentRecord.from_row(row) for row in reader]


# -- aggregation ---------------------------------------------------------------------

def summarize(records) -> list[dict]:
    """Mean and sample std (ddof=1; 0 for a single seed) of both risks per (method, n, N)."""
    groups: dict[tuple, list[ExperimentRecord]] = {}
    for r in records:
        if r.ok:
            groups.setdefault((METHOD_ORDER.get(r.method, 99), r.method, r.n, r.N if r.N is not None else -1), []).append(r)
    out = []
    for key in sorted(groups):
        rs = groups[key]
        l2 = [r.l2_excess for r in rs]
        l1 = [r.l1_excess for r in rs]
        out.append({
            "method": key[1], "n": key[2], "N": None if key[3] < 0 else key[3], "count": len(rs),
            "l2_mean": statistics.fmean(l2), "l2_std": statistics.stdev(l2) if len(l2) > 1 else 0.0,
            "l1_mean": statistics.fmean(l1), "l1_std": statistics.stdev(l1) if len(l1) > 1 else 0.0,
        })
    return out


def environment_stamp(cfg: ExperimentConfig) -> dict:
    return {"package_version": __version__, "master_seed": cfg.master_seed, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


def write_summary(path, cfg: ExperimentConfig, records) -> None:
    failed = [list(r.key[1:]) for r in sorted(records, key=lambda r: r.key) if not r.ok]
    doc = {"config": cfg.to_dict(), "cells": summarize(records), "failed_cells": failed,
           "environment": environment_stamp(cfg)}
    Path(path).write_text(json.dumps(doc, indent=2, default=_json_default) + "\n", encoding="utf-8")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def summary_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".summary.json")


# -- cells ---------------------------------------------------------------------------

def cell_seed(cfg: ExperimentConfig, n: int, seed: int) -> int:
    # shared by all methods at (n, seed): same data, init and test set, a paired design
    return derive_seed(cfg.master_seed, "cell", n, seed)


def _sweep_cell(cfg: ExperimentConfig, method: str, n: int, seed: int) -> ExperimentRecord:
    t0 = time.perf_counter()
    base = dict(method=method, d=cfg.d, p=cfg.p, m=cfg.m, n=n, seed=seed)
    try:
        f = cfg.source_target()
        cs = cell_seed(cfg, n, seed)
        ratio = None
        tc = cfg.train
        if method == "algorithm1":
            pred = run_algorithm1(f, n, cfg.m, cfg.sigma, tc, cs)
            ratio = subspace_alignment(pred.params.W, f).projection_ratio
        elif method == "rf":
            pred = random_features_fit(f, n, cfg.m, cfg.sigma, tc.lambda_grid, cs, holdout_n=tc.holdout_n)
        elif method == "ntk":
            pred = ntk_linearized_fit(f, n, cfg.m, cfg.sigma, tc.lambda_grid, cs, holdout_n=tc.holdout_n)
        else:
            raise ValueError(f"unknown method {method!r}")
        rep = evaluate(pred, f, cfg.n_test, cfg.sigma, cs)
        return ExperimentRecord(**base, lam=pred.lam, l2_excess=rep.l2_excess, l1_excess=rep.l1_excess,
                                projection_ratio=ratio, wall_time_s=time.perf_counter() - t0)
    except Exception as exc:  # a failed cell becomes an error row; the sweep goes on
        log.error("cell %s n=%d seed=%d failed: %s", method, n, seed, exc)
        return ExperimentRecord(**base, wall_time_s=time.perf_counter() - t0, error=repr(exc))


def transfer_N_values(cfg: ExperimentConfig) -> list[int]:
    Ns = cfg.n_values(cfg.transfer.N_exponents)
    if any(N < 1 for N in Ns):
        raise ValueError("target sample size N must be at least 1")
    return Ns


def _transfer_cell(cfg: ExperimentConfig, n: int, seed: int) -> list[ExperimentRecord]:
    t0 = time.perf_counter()
    Ns = transfer_N_values(cfg)
    tc = cfg.train
    base = dict(method="transfer", d=cfg.d, p=cfg.p, m=cfg.m, n=n, seed=seed)
    try:
        f = cfg.source_target()
        g = hermite_target(cfg.d, cfg.transfer.target_p, direction=f.U[0])
        cs = cell_seed(cfg, n, seed)
        pre = run_algorithm1(f, n, cfg.m, cfg.sigma, tc, cs)
        ratio = subspace_alignment(pre.params.W, f).projection_ratio
    except Exception as exc:
        log.error("pretrain n=%d seed=%d failed: %s", n, seed, exc)
        return [ExperimentRecord(**base, N=N, error=repr(exc)) for N in Ns]
    pre_time = time.perf_counter() - t0
    out = []
    for N in Ns:
        t1 = time.perf_counter()
        try:
            target = sample_dataset(g, N, cfg.sigma, cs, tag=f"target-{N}")
            hold = sample_dataset(g, tc.resolved_holdout(N), cfg.sigma, cs, tag=f"target-holdout-{N}")
            pred = retrain_head_transfer(pre, target, tc.lambda_grid, tc.eta, tc.T, tc.tol, holdout=hold,
                                         use_gd=tc.use_gd, affine=cfg.transfer.affine)
            rep = evaluate(pred, g, cfg.n_test, cfg.sigma, derive_seed(cs, "transfer-test", N))
            out.append(ExperimentRecord(**base, N=N, lam=pred.lam, l2_excess=rep.l2_excess, l1_excess=rep.l1_excess,
                                        projection_ratio=ratio, wall_time_s=pre_time + time.perf_counter() - t1))
        except Exception as exc:
            log.error("transfer n=%d N=%d seed=%d failed: %s", n, N, seed, exc)
            out.append(ExperimentRecord(**base, N=N, wall_time_s=time.perf_counter() - t1, error=repr(exc)))
    return out


def _starmap(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(fn, *j) for j in jobs]
        return [fut.result() for fut in futures]


def _completed(out, resume: bool) -> dict:
    if not (resume and out and Path(out).exists()):
        return {}
    return {r.key: r for r in read_records(out) if r.ok}


def run_sweep(cfg: ExperimentConfig, *, resume: bool = False) -> list[ExperimentRecord]:
    """Every method x n x seed cell; writes ``cfg.out`` and its summary JSON when set."""
    if cfg.kind != "sweep":
        raise ValueError("run_sweep needs kind = 'sweep'")
    done = _completed(cfg.out, resume)
    jobs = []
    for method in cfg.methods:
        for n in cfg.n_values():
            for seed in cfg.seeds:
                key = (METHOD_ORDER[method], method, n, -1, seed)
                if key not in done:
                    jobs.append((cfg, method, n, seed))
    log.info("sweep: %d cells to run, %d reused", len(jobs), len(done))
    records = list(done.values()) + _starmap(_sweep_cell, jobs, cfg.workers)
    records.sort(key=lambda r: r.key)
    _emit(cfg, records)
    return records


def run_transfer(cfg: ExperimentConfig, *, resume: bool = False) -> list[ExperimentRecord]:
    """Pretrain at each n, then refit the head on ``He_p/sqrt(p!)`` for each N."""
    if cfg.kind != "transfer":
        raise ValueError("run_transfer needs kind = 'transfer'")
    done = _completed(cfg.out, resume)
    Ns = transfer_N_values(cfg)
    jobs = []
    for n in cfg.n_values(cfg.transfer.pretrain_exponents):
        for seed in cfg.seeds:
            if not all((3, "transfer", n, N, seed) in done for N in Ns):
                jobs.append((cfg, n, seed))
    log.info("transfer: %d pretrain cells to run", len(jobs))
    fresh = [r for batch in _starmap(_transfer_cell, jobs, cfg.workers) for r in batch]
    fresh_keys = {r.key for r in fresh}
    records = [r for k, r in done.items() if k not in fresh_keys] + fresh
    records.sort(key=lambda r: r.key)
    _emit(cfg, records)
    return records


def _emit(cfg: ExperimentConfig, records) -> None:
    if cfg.out:
        write_records(cfg.out, records)
        write_summary(summary_path(cfg.out), cfg, records)


# -- diagnostics -------------------------------------------------------------------------

def _alignment_rows(cfg: ExperimentConfig) -> list[dict]:
    d = cfg.diagnose.alignment_d
    f = build_target(cfg.target, d, cfg.p)
    rows = []
    for n in sorted({int(round(d**e)) for e in cfg.diagnose.alignment_exponents}):
        eta1 = cfg.train.resolved_eta1(n, cfg.m, d)
        for seed in cfg.seeds:
            cs = derive_seed(cfg.master_seed, "alignment", n, seed)
            ds = sample_dataset(f, n, cfg.sigma, cs, tag="train")
            params = init_symmetric(cfg.m, d, cs)
            W1 = first_layer_step(params, ds, preprocess(ds), eta1)
            rep = subspace_alignment(W1, f)
            rows.append({"d": d, "n": n, "seed": seed, "projection_ratio": rep.projection_ratio,
                         "latent_rank": rep.latent_rank, "mean_neuron_cos": float(np.mean(rep.per_neuron_cos))})
    return rows


def _vk_rows(cfg: ExperimentConfig) -> list[dict]:
    xs = np.linspace(-1.0, 1.0, 11)
    rows = []
    for mode in ("uniform", "gaussian"):
        for k in range(5):
            est, se = vk_identity_mc(k, xs, cfg.diagnose.vk_draws, derive_seed(cfg.master_seed, "vk", k), mode)
            for x, e, s in zip(xs, est, se):
                exact = float(x) ** k
                rows.append({"mode": mode, "k": k, "x": float(x), "estimate": float(e), "stderr": float(s),
                             "exact": exact, "z_score": float((e - exact) / s) if s > 0 else 0.0})
    return rows


def run_diagnose(cfg: ExperimentConfig) -> dict[str, list[dict]]:
    """Three tables: residual scaling, first-step alignment and the v_k identity.

    A table whose Monte Carlo precision is insufficient is replaced by a single
    row carrying the error message; the others are still produced.
    """
    if cfg.kind != "diagnose":
        raise ValueError("run_diagnose needs kind = 'diagnose'")
    dg = cfg.diagnose

    def residual():
        rows = residual_scaling_study(lambda d: build_target(cfg.target, d, cfg.p), dg.dims, dg.n_mc, dg.trials,
                                      cfg.master_seed)
        for prev, row in zip([None] + rows[:-1], rows):
            row["ratio_to_previous"] = "" if prev is None else prev["residual"] / row["residual"]
        return rows

    tables = {}
    for name, fn in (("residual_scaling", residual), ("alignment", lambda: _alignment_rows(cfg)),
                     ("vk_identity", lambda: _vk_rows(cfg))):
        try:
            tables[name] = fn()
        except InsufficientPrecision as exc:
            log.error("%s: %s", name, exc)
            tables[name] = [{"error": str(exc)}]
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, rows in tables.items():
            write_table(out / f"{name}.csv", rows)
    return tables


def write_table(path, rows: list[dict]) -> None:
    cols: list[str] = []
    for row in rows:
        cols += [c for c in row if c not in cols]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_cell(row.get(c, "")) for c in cols])


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


CSQ_COLUMNS = ("M", "d", "p", "eps_cert", "tau", "query_lower_bound", "survivors_after_q_queries", "queries",
               "implied_n_heuristic")


def run_csq(cfg: ExperimentConfig) -> list[dict]:
    """One report row per tolerance; ``implied_n_heuristic = 1/tau^2`` is a heuristic, not a bound."""
    if cfg.kind != "csq":
        raise ValueError("run_csq needs kind = 'csq'")
    c = cfg.csq
    rows = [csq_report(c.d, c.M, c.epsilon, c.p, tau, cfg.master_seed, c.max_restarts) for tau in c.taus]
    rows = [{k: r[k] for k in CSQ_COLUMNS} for r in rows]
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        write_table(cfg.out, rows)
    return rows
