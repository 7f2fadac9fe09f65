"""Replication engine for size/power studies and convergence diagnostics.

Every replication draws its innovations from an independent stream keyed by
``(master seed, model index, sample-size index, replication index)``; a
simulated path is shared by all tested orders and methods of that
``(model, n)`` pair. Results are gathered in replication order, so a report
is bit-identical whatever the number of workers.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .errors import DegenerateSampleError, InvalidInputError, SerialCorrError
from .estimation import DEFAULT_RIDGE, fit_rho, fit_theta, recursive_theta, residuals, test_statistic
from .hypothesis_tests import box_pierce, breusch_godfrey, canonical_method, chi2_cdf, ljung_box
from .limits import compute_limits
from .process import ArArModel, NoiseLaw, simulate

logger = logging.getLogger(__name__)

#: Share of degenerate replications above which a cell is flagged unusable.
ERROR_BUDGET = 0.01
#: Relative ridge for the recursive estimates of the convergence diagnostics.
#: With a vanishing ridge the estimate at t = 2 is a ratio of two
#: observations with no finite second moment, which swamps the cumulative sum.
DIAGNOSTIC_RIDGE = 1.0
DEFAULT_RHO_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))

MODEL_1 = ArArModel([0.30, -0.20, 0.40], [], NoiseLaw.uniform(2.0))
MODEL_2 = ArArModel([1.70, -0.72], [], NoiseLaw.gaussian(2.0))


@dataclass(frozen=True)
class ModelEntry:
    name: str
    model: ArArModel
    fit_p: Optional[int] = None

    @property
    def p(self) -> int:
        return self.fit_p or self.model.p

    def to_dict(self) -> dict:
        d = {"name": self.name, **self.model.to_dict()}
        d.pop("schema")
        if self.fit_p is not None:
            d["fit_p"] = self.fit_p
        return d


@dataclass(frozen=True)
class ExperimentSpec:
    models: Tuple[ModelEntry, ...]
    ns: Tuple[int, ...] = (30, 300, 3000)
    qs: Tuple[int, ...] = (1, 2, 3, 4)
    methods: Tuple[str, ...] = ("residual_ar", "ljung_box", "box_pierce", "breusch_godfrey")
    replications: int = 1000
    seed: int = 0
    alpha: float = 0.05
    ridge: float = DEFAULT_RIDGE
    lb_model_df: int = 0
    keep_samples: bool = False

    def __post_init__(self):
        models = tuple(m if isinstance(m, ModelEntry) else ModelEntry(f"model{i + 1}", m) for i, m in enumerate(self.models))
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "methods", tuple(canonical_method(m) for m in self.methods))
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))
        object.__setattr__(self, "qs", tuple(int(q) for q in self.qs))
        if self.replications < 1:
            raise InvalidInputError(f"replications: must be >= 1, got {self.replications}")
        if not (models and self.ns and self.qs and self.methods):
            raise InvalidInputError("models, n, q and methods grids must be non-empty")
        if any(q < 1 for q in self.qs) or any(n < 2 for n in self.ns):
            raise InvalidInputError("q values must be >= 1 and n values >= 2")
        if not 0 < self.alpha < 1:
            raise InvalidInputError(f"alpha: must lie in (0, 1), got {self.alpha}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        if "models" not in d:
            raise InvalidInputError("models: required field missing from experiment spec")
        entries = []
        for i, md in enumerate(d["models"]):
            base = ArArModel.from_dict(md)
            name = md.get("name", f"model{i + 1}")
            fit_p = md.get("fit_p")
            grid = md.get("rho_grid", d.get("rho_grid"))
            if grid is None:
                entries.append(ModelEntry(name, base, fit_p))
            else:
                for r in grid:
                    entries.append(ModelEntry(f"{name}_rho{r:g}", ArArModel(base.theta, [r], base.noise), fit_p))
        return cls(
            models=tuple(entries),
            ns=tuple(d.get("n", (30, 300, 3000))),
            qs=tuple(d.get("q", (1, 2, 3, 4))),
            methods=tuple(d.get("methods", ("residual_ar", "lb", "bp", "bg"))),
            replications=int(d.get("replications", 1000)),
            seed=int(d.get("seed", 0)),
            alpha=float(d.get("alpha", 0.05)),
            ridge=float(d.get("ridge", DEFAULT_RIDGE)),
            lb_model_df=int(d.get("lb_model_df", 0)),
            keep_samples=bool(d.get("keep_samples", False)),
        )

    def to_dict(self) -> dict:
        return {
            "schema": "serialcorr.experiment/1",
            "models": [m.to_dict() for m in self.models],
            "n": list(self.ns),
            "q": list(self.qs),
            "methods": list(self.methods),
            "replications": self.replications,
            "seed": self.seed,
            "alpha": self.alpha,
            "ridge": self.ridge,
            "lb_model_df": self.lb_model_df,
        }


def reference_models(rho=()) -> Tuple[ModelEntry, ...]:
    """The two reference models with the given driving-noise coefficients."""
    return (
        ModelEntry("model1", ArArModel(MODEL_1.theta, rho, MODEL_1.noise)),
        ModelEntry("model2", ArArModel(MODEL_2.theta, rho, MODEL_2.noise)),
    )


@dataclass
class CellResult:
    model: str
    n: int
    q: int
    method: str
    replications: int
    rejections: int
    errors: int
    samples: Optional[np.ndarray] = None

    @property
    def valid(self) -> int:
        return self.replications - self.errors

    @property
    def frequency(self) -> float:
        return self.rejections / self.valid if self.valid else float("nan")

    @property
    def se(self) -> float:
        f = self.frequency
        return math.sqrt(f * (1.0 - f) / self.valid) if self.valid else float("nan")

    @property
    def usable(self) -> bool:
        return self.errors <= ERROR_BUDGET * self.replications

    def row(self) -> dict:
        return {
            "model": self.model,
            "n": self.n,
            "q": self.q,
            "method": self.method,
            "replications": self.replications,
            "rejections": self.rejections,
            "errors": self.errors,
            "frequency": self.frequency,
            "se": self.se,
            "usable": self.usable,
        }


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    cells: List[CellResult]
    runtime_s: float = 0.0
    workers: int = 1
    meta: dict = field(default_factory=dict)

    def cell(self, model: str, n: int, q: int, method: str) -> CellResult:
        method = canonical_method(method)
        for c in self.cells:
            if (c.model, c.n, c.q, c.method) == (model, n, q, method):
                return c
        raise KeyError((model, n, q, method))

    def frequencies(self) -> np.ndarray:
        return np.array([c.frequency for c in self.cells])

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = list(CellResult("", 0, 0, "", 1, 0, 0).row())
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for c in self.cells:
            w.writerow(c.row())
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "schema": "serialcorr.power/1",
            "spec": self.spec.to_dict(),
            "cells": [c.row() for c in self.cells],
            "runtime_s": self.runtime_s,
            "workers": self.workers,
            **self.meta,
        }

    def samples_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["model", "n", "q", "method", "replication", "statistic"])
        for c in self.cells:
            if c.samples is None:
                continue
            for r, s in enumerate(c.samples):
                w.writerow([c.model, c.n, c.q, c.method, r, repr(float(s))])
        return buf.getvalue()


def replication_seed(master: int, model_idx: int, n_idx: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=(int(model_idx), int(n_idx), int(rep)))


def evaluate_path(y, p: int, qs: Sequence[int], methods: Sequence[str], alpha: float,
                  ridge: float = DEFAULT_RIDGE, lb_model_df: int = 0) -> Dict[Tuple[int, str], Tuple[float, bool]]:
    """Run every (order, method) pair on one path.

    Returns ``{(q, method): (statistic, reject)}``; a degenerate sample yields
    ``(nan, False)`` for the affected pairs.
    """
    out = {}
    try:
        if np.ptp(y) == 0:
            raise DegenerateSampleError("series is constant")
        theta_hat = fit_theta(y, p, ridge)
        z = residuals(y, theta_hat, p)
    except SerialCorrError:
        return {(q, m): (float("nan"), False) for q in qs for m in methods}
    for q in qs:
        for m in methods:
            try:
                if m == "residual_ar":
                    rho_hat = fit_rho(z, q, ridge)
                    t, _, rej, _, _ = test_statistic(y, z, rho_hat, p, ridge, alpha)
                    out[(q, m)] = (t, rej)
                    continue
                if m == "ljung_box":
                    rep = ljung_box(z, q, alpha, lb_model_df)
                elif m == "box_pierce":
                    rep = box_pierce(z, q, alpha, lb_model_df)
                else:
                    rep = breusch_godfrey(y, z, p, q, alpha)
                out[(q, m)] = (rep.statistic, rep.reject)
            except SerialCorrError:
                out[(q, m)] = (float("nan"), False)
    return out


def _run_block(args):
    spec, model_idx, n_idx, reps = args
    entry = spec.models[model_idx]
    n = spec.ns[n_idx]
    keys = [(q, m) for q in spec.qs for m in spec.methods]
    stat = np.empty((len(reps), len(keys)))
    rej = np.zeros((len(reps), len(keys)), dtype=bool)
    for i, r in enumerate(reps):
        y = simulate(entry.model, n, replication_seed(spec.seed, model_idx, n_idx, r)).y
        res = evaluate_path(y, entry.p, spec.qs, spec.methods, spec.alpha, spec.ridge, spec.lb_model_df)
        for k, key in enumerate(keys):
            stat[i, k], rej[i, k] = res[key]
    return model_idx, n_idx, reps[0], stat, rej


def _blocks(spec: ExperimentSpec, chunk: int):
    for mi in range(len(spec.models)):
        for ni in range(len(spec.ns)):
            for start in range(0, spec.replications, chunk):
                yield mi, ni, list(range(start, min(start + chunk, spec.replications)))


def run_experiment(spec: ExperimentSpec, workers: int = 1, chunk: int = 250) -> ExperimentReport:
    """Estimate rejection frequencies for every (model, n, q, method) cell."""
    t0 = time.perf_counter()
    logger.info("experiment: seed=%d replications=%d workers=%d", spec.seed, spec.replications, workers)
    keys = [(q, m) for q in spec.qs for m in spec.methods]
    shape = (len(spec.models), len(spec.ns))
    stats_all = np.empty(shape + (spec.replications, len(keys)))
    rej_all = np.zeros(shape + (spec.replications, len(keys)), dtype=bool)
    blocks = list(_blocks(spec, chunk))
    if workers > 1:
        # ArArModel holds numpy arrays and pickles fine; the spec travels whole
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, [(spec, mi, ni, reps) for mi, ni, reps in blocks]))
    else:
        results = [_run_block((spec, mi, ni, reps)) for mi, ni, reps in blocks]
    for mi, ni, start, stat, rej in results:
        stats_all[mi, ni, start : start + stat.shape[0]] = stat
        rej_all[mi, ni, start : start + rej.shape[0]] = rej
    cells = []
    for mi, entry in enumerate(spec.models):
        for ni, n in enumerate(spec.ns):
            for k, (q, m) in enumerate(keys):
                s = stats_all[mi, ni, :, k]
                errors = int(np.isnan(s).sum())
                cell = CellResult(
                    model=entry.name, n=n, q=q, method=m,
                    replications=spec.replications,
                    rejections=int(rej_all[mi, ni, :, k].sum()),
                    errors=errors,
                    samples=s.copy() if spec.keep_samples else None,
                )
                if not cell.usable:
                    logger.warning("cell %s n=%d q=%d %s: %d degenerate replications", entry.name, n, q, m, errors)
                cells.append(cell)
    return ExperimentReport(spec=spec, cells=cells, runtime_s=time.perf_counter() - t0, workers=workers)


@dataclass(frozen=True)
class NullHistogram:
    samples: np.ndarray
    q: int
    ks_distance: float
    ks_pvalue: float
    errors: int


def null_histogram(model: ArArModel, n: int, q: int, replications: int, seed: int = 0,
                   workers: int = 1, fit_p: Optional[int] = None) -> NullHistogram:
    """Samples of the proposed statistic under the null and their
    Kolmogorov-Smirnov distance to chi-square(q)."""
    if model.q != 0 and np.any(model.rho != 0):
        raise InvalidInputError("null_histogram: model must have uncorrelated noise (rho = 0)")
    if replications < 1:
        raise InvalidInputError(f"replications: must be >= 1, got {replications}")
    spec = ExperimentSpec(
        models=(ModelEntry("null", model, fit_p),), ns=(n,), qs=(q,), methods=("residual_ar",),
        replications=replications, seed=seed, keep_samples=True,
    )
    cell = run_experiment(spec, workers=workers).cells[0]
    s = cell.samples[~np.isnan(cell.samples)]
    ks = stats.kstest(s, lambda x: chi2_cdf(x, q))
    return NullHistogram(samples=s, q=q, ks_distance=float(ks.statistic), ks_pvalue=float(ks.pvalue), errors=cell.errors)


@dataclass(frozen=True)
class DiagnosticRow:
    n: int
    mean_sq_error: float
    lil_normalized: float
    lil_normalized_max: float
    qsl_trace: float
    trace_sigma_theta: float
    lambda_max_sigma_theta: float


def convergence_diagnostics(model: ArArModel, checkpoints: Sequence[int], replications: int = 20,
                            seed: int = 0, ridge: float = DIAGNOSTIC_RIDGE) -> List[DiagnosticRow]:
    """Empirical rates of the least-squares estimator around its biased limit.

    For each checkpoint ``n`` the rows average over replications:
    ``||theta_n - theta*||^2``, its LIL normalisation
    ``n ||theta_n - theta*||^2 / (2 log log n)`` and the cumulative quadratic
    error ``sum_{t<=n} ||theta_t - theta*||^2 / log n``. The last should
    approach ``tr(Sigma_theta)``. The regularising matrix is
    ``ridge * mean(y^2) * I_p``; it does not affect any of the limits.
    """
    checkpoints = sorted(int(c) for c in checkpoints)
    if not checkpoints or checkpoints[0] < 3:
        raise InvalidInputError("checkpoints must be >= 3 (log log n must be positive)")
    lim = compute_limits(model)
    theta_star = lim.theta_star
    n_max = checkpoints[-1]
    idx = np.asarray(checkpoints) - 1
    sq = np.empty((replications, len(checkpoints)))
    qsl = np.empty((replications, len(checkpoints)))
    for r in range(replications):
        y = simulate(model, n_max, replication_seed(seed, 0, 0, r)).y
        err = np.sum((recursive_theta(y, model.p, ridge) - theta_star) ** 2, axis=1)
        sq[r] = err[idx]
        qsl[r] = np.cumsum(err)[idx]
    ns = np.asarray(checkpoints, dtype=float)
    lil = sq * ns / (2 * np.log(np.log(ns)))
    tr = float(np.trace(lim.Sigma_theta))
    lmax = float(np.linalg.eigvalsh(lim.Sigma_theta).max())
    return [
        DiagnosticRow(int(n), float(e), float(lm), float(lx), float(c / math.log(n)), tr, lmax)
        for n, e, lm, lx, c in zip(ns, sq.mean(0), lil.mean(0), lil.max(0), qsl.mean(0))
    ]


@dataclass(frozen=True)
class RhoCovarianceCheck:
    """Monte Carlo estimate of ``n Cov(rho_hat)`` under the null next to its
    asymptotic value, with entrywise standard errors."""

    empirical: np.ndarray
    se: np.ndarray
    theoretical: np.ndarray
    replications: int

    @property
    def z_scores(self) -> np.ndarray:
        return np.abs(self.empirical - self.theoretical) / self.se


def null_rho_covariance(model: ArArModel, n: int, q: int, replications: int, seed: int = 0,
                        ridge: float = DEFAULT_RIDGE) -> RhoCovarianceCheck:
    """Compare the spread of ``sqrt(n) rho_hat`` on null paths with ``Sigma_rho0``."""
    if model.q != 0 and np.any(model.rho != 0):
        raise InvalidInputError("null_rho_covariance: model must have uncorrelated noise (rho = 0)")
    x = np.empty((replications, q))
    for r in range(replications):
        y = simulate(model, n, replication_seed(seed, 0, 0, r)).y
        z = residuals(y, fit_theta(y, model.p, ridge), model.p)
        x[r] = math.sqrt(n) * fit_rho(z, q, ridge)
    x -= x.mean(axis=0)
    prods = x[:, :, None] * x[:, None, :]
    emp = prods.mean(axis=0) * replications / (replications - 1)
    se = prods.std(axis=0, ddof=1) / math.sqrt(replications)
    theo = compute_limits(model.null(), q).Sigma_rho0
    return RhoCovarianceCheck(empirical=emp, se=se, theoretical=theo, replications=replications)


def diagnostics_csv(rows: Sequence[DiagnosticRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(DiagnosticRow.__dataclass_fields__)
    w.writerow(names)
    for r in rows:
        w.writerow([getattr(r, k) for k in names])
    return buf.getvalue()


def report_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), indent=2)
