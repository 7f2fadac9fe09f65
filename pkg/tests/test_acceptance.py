"""Acceptance suite: one PASS/FAIL line per criterion (see the terminal summary).

Tolerances are fixed in advance; criteria that the implementation cannot
meet stay red.
"""
import math
import time

import numpy as np
import pytest
from scipy import stats

from helpers import random_causal, random_pair
from serialcorr.covariance import yule_walker
from serialcorr.estimation import fit
from serialcorr.hypothesis_tests import chi2_cdf
from serialcorr.limits import (
    build_structural,
    exchange,
    limiting_T,
    sigma_rho0,
)
from serialcorr.montecarlo import (
    MODEL_1,
    ExperimentSpec,
    ModelEntry,
    convergence_diagnostics,
    null_rho_covariance,
    reference_models,
    run_experiment,
)
from serialcorr.process import ArArModel, NoiseLaw, compose_beta, simulate

METHODS = ("residual_ar", "ljung_box", "box_pierce", "breusch_godfrey")
SEED = 20261015


def null_spec():
    return ExperimentSpec(models=reference_models(()), ns=(3000,), qs=(1, 2, 3, 4), methods=METHODS,
                          replications=1000, seed=SEED, keep_samples=True)


@pytest.fixture(scope="module")
def null_report():
    t0 = time.perf_counter()
    report = run_experiment(null_spec(), workers=1)
    return report, time.perf_counter() - t0


def test_c1_closed_form_q1(criterion):
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    err_t = err_s = 0.0
    for _ in range(200):
        theta = random_causal(rng, int(rng.integers(1, 5)))
        rho = random_causal(rng, 1)
        comp = compose_beta(theta, rho)
        _, theta_star = limiting_T(build_structural(comp), yule_walker(comp, 1.0))
        p, c = theta.size, theta[-1] * rho[0]
        closed = (np.eye(p) - c * exchange(p)) @ comp.alpha / ((1 - c) * (1 + c))
        err_t = max(err_t, np.max(np.abs(theta_star - closed)))
        err_s = max(err_s, abs(sigma_rho0(theta, 1)[0, 0] - theta[-1] ** 2))
    dt = time.perf_counter() - t0
    ok = criterion("C1 closed form q=1", err_t < 1e-10 and err_s < 1e-10 and dt < 1.0,
                   f"max|theta*-K^-1 D|={err_t:.1e}, max|Sigma_rho0-theta_p^2|={err_s:.1e}, {dt:.2f}s")
    assert ok


def test_c2_sylvester_residual(criterion):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst, n_small_p = 0.0, 0
    for _ in range(1000):
        theta, rho = random_pair(rng)
        comp = compose_beta(theta, rho)
        st = build_structural(comp)
        T, _ = limiting_T(st, yule_walker(comp, 1.0))
        res = T @ (np.eye(st.q) - st.c_alpha.T) - exchange(st.p) @ T @ st.c_gamma - st.d
        worst = max(worst, np.max(np.abs(res)))
        n_small_p += st.p < st.q
    dt = time.perf_counter() - t0
    ok = criterion("C2 Sylvester residual", worst < 1e-10 and n_small_p > 0 and dt < 5.0,
                   f"max residual {worst:.1e} over 1000 models ({n_small_p} with p<q), {dt:.2f}s")
    assert ok


def test_c3_consistency(criterion):
    t0 = time.perf_counter()
    res = fit(simulate(ArArModel([0.5], [0.3], NoiseLaw.gaussian(1.0)), 10**6, seed=SEED).y, 1, 1)
    dt = time.perf_counter() - t0
    dt_, dr = abs(res.theta_hat[0] - 0.695652), abs(res.rho_hat[0] - 0.104348)
    ok = criterion("C3 consistency n=1e6", dt_ < 0.01 and dr < 0.01 and dt < 10,
                   f"theta_hat={res.theta_hat[0]:.5f}, rho_hat={res.rho_hat[0]:.5f}, {dt:.2f}s")
    assert ok


@pytest.mark.parametrize("method", METHODS)
def test_c4_null_calibration(criterion, null_report, method):
    report, dt = null_report
    freqs = {(c.model, c.q): c.frequency for c in report.cells if c.method == method}
    worst = max(freqs.values(), key=lambda f: abs(f - 0.05))
    ok = all(abs(f - 0.05) <= 0.02 for f in freqs.values()) and dt < 300
    detail = ", ".join(f"{m[-1]}/q{q}={f:.3f}" for (m, q), f in sorted(freqs.items()))
    ok = criterion(f"C4 null rejection within 0.05+-0.02 [{method}]", ok,
                   f"worst {worst:.3f}; {detail}; {dt:.1f}s")
    assert ok


def test_c4_ks(criterion, null_report):
    report, _ = null_report
    pvals = {}
    for c in report.cells:
        if c.method == "residual_ar":
            s = c.samples[~np.isnan(c.samples)]
            pvals[(c.model, c.q)] = stats.kstest(s, lambda x, q=c.q: chi2_cdf(x, q)).pvalue
    detail = ", ".join(f"{m[-1]}/q{q}={p:.3f}" for (m, q), p in sorted(pvals.items()))
    ok = criterion("C4 KS p-value > 0.01 [residual_ar]", min(pvals.values()) > 0.01, detail)
    assert ok


@pytest.fixture(scope="module")
def power_report():
    spec = ExperimentSpec(models=reference_models((0.5,)), ns=(30, 300), qs=(1,), methods=METHODS,
                          replications=2000, seed=SEED + 5)
    return run_experiment(spec)


def _diff_se(a, b):
    return math.sqrt(a.se**2 + b.se**2)


def test_c5_small_sample_ordering(criterion, power_report):
    ok, parts = True, []
    for model in ("model1", "model2"):
        pr = power_report.cell(model, 30, 1, "residual_ar")
        for other in ("ljung_box", "breusch_godfrey"):
            o = power_report.cell(model, 30, 1, other)
            good = pr.frequency >= o.frequency - 2 * _diff_se(pr, o)
            ok &= good
            parts.append(f"{model[-1]}: residual_ar {pr.frequency:.3f} vs {other} {o.frequency:.3f}")
    ok = criterion("C5 n=30 residual_ar >= LB, BG (2 SE)", ok, "; ".join(parts))
    assert ok


def test_c5_not_dominated(criterion, power_report):
    ok, parts = True, []
    for model in ("model1", "model2"):
        pr = power_report.cell(model, 300, 1, "residual_ar")
        for other in METHODS[1:]:
            o = power_report.cell(model, 300, 1, other)
            ok &= pr.frequency >= o.frequency - 2 * _diff_se(pr, o)
        parts.append(f"{model[-1]}: residual_ar {pr.frequency:.3f}")
    ok = criterion("C5 n=300 residual_ar not dominated", ok, "; ".join(parts))
    assert ok


@pytest.mark.parametrize("method", METHODS)
def test_c5_power_above_half(criterion, power_report, method):
    f = {m: power_report.cell(m, 300, 1, method).frequency for m in ("model1", "model2")}
    ok = criterion(f"C5 n=300 power > 0.5 [{method}]", all(v > 0.5 for v in f.values()),
                   f"model1 {f['model1']:.3f}, model2 {f['model2']:.3f}")
    assert ok


def test_c6_rho_normality(criterion):
    model = ArArModel(MODEL_1.theta, [], MODEL_1.noise)
    t0 = time.perf_counter()
    parts, ok = [], True
    for q in (1, 2):
        chk = null_rho_covariance(model, 3000, q, 10**4, seed=SEED + q)
        ok &= bool(np.all(chk.z_scores < 3))
        parts.append(f"q={q}: max z {chk.z_scores.max():.2f}")
    dt = time.perf_counter() - t0
    ok = criterion("C6 n Cov(rho_hat) vs Sigma_rho0 (3 SE)", ok and dt < 600, "; ".join(parts) + f"; {dt:.1f}s")
    assert ok


def test_c7_misjudged_order(criterion):
    entry = ModelEntry("model1_p2", ArArModel(MODEL_1.theta, [0.5], MODEL_1.noise), fit_p=2)
    spec = ExperimentSpec(models=(entry,), ns=(300,), qs=(1,), methods=("residual_ar",), replications=1000,
                          seed=SEED + 7)
    f = run_experiment(spec).cells[0].frequency
    ok = criterion("C7 misjudged order p*=2", f > 0.5, f"rejection {f:.3f}")
    assert ok


def test_c8_convergence(criterion):
    model = ArArModel([0.5], [0.3], NoiseLaw.gaussian(1.0))
    qsl = convergence_diagnostics(model, [10**5], replications=20, seed=SEED)[0]
    ratio = qsl.qsl_trace / qsl.trace_sigma_theta
    rows = convergence_diagnostics(model, [10**3, 10**4, 10**5], replications=200, seed=SEED + 1)
    mse = [r.mean_sq_error for r in rows]
    drops = [mse[0] / mse[1], mse[1] / mse[2]]
    ok1 = criterion("C8 QSL trace within factor 2 of tr(Sigma_theta)", 0.5 <= ratio <= 2,
                    f"ratio {ratio:.3f}")
    ok2 = criterion("C8 error drops >= 5x per decade", min(drops) >= 5,
                    f"decade factors {drops[0]:.1f}, {drops[1]:.1f}")
    assert ok1 and ok2


def test_c9_determinism(criterion, null_report):
    report, _ = null_report
    other = run_experiment(null_spec(), workers=2, chunk=97)
    same = np.array_equal(report.frequencies(), other.frequencies())
    ok = criterion("C9 bit-identical across worker counts", same, "workers 1 vs 2")
    assert ok
