"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in an
"acceptance criteria" section at the end of the session.
"""

import math

import numpy as np
import pytest

from oracles import exact_feasible, restricted_eigen_upper, vertex_enumeration
from tiers.adds import eta_adaptive, fit
from tiers.baselines import NaiveDemoConfig, lr_oracle_power, naive_size_curve, simulate_lr_power
from tiers.dantzig import DantzigProblem, SolveStatus, feasibility_tolerance, solve_at_sigma
from tiers.harness import ExperimentSpec, run_experiment
from tiers.procedure import (PiEstimate, TiersConfig, qhat, run_tiers, simulate_max_quantile,
                             simulate_xi)
from tiers.simgen import gen_regression

SEED = 2026
NULL_BAND = (0.016, 0.096)

pytestmark = pytest.mark.slow


def _run(**kw):
    return run_experiment(ExperimentSpec.from_preset(kw.pop("preset", "desk"), seed=SEED, **kw))


def _in(x, band):
    return band[0] <= x <= band[1]


def test_c01_gaussian_null_level(record_criterion):
    rate = _run(regime="SL", c=2.0, h_grid=(0.0,)).rate(0.0)
    assert record_criterion(1, "Gaussian null level", _in(rate, NULL_BAND),
                            f"rate {rate:.3f}, band {list(NULL_BAND)}")


def test_c02_heavy_tail_null_level(record_criterion):
    rate = _run(regime="SH", c=2.0, h_grid=(0.0,)).rate(0.0)
    assert record_criterion(2, "Cauchy-noise null level", _in(rate, (0.005, 0.10)),
                            f"rate {rate:.3f}, band [0.005, 0.1]")


def test_c03_power_monotone_and_saturates(record_criterion):
    grid = (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0)
    rows = _run(regime="SL", c=2.0, h_grid=grid).rows
    drops = [max(0.0, a["rate"] - b["rate"]) - 2 * max(a["se"], b["se"])
             for a, b in zip(rows, rows[1:])]
    ok = all(d <= 0 for d in drops) and rows[-1]["rate"] >= 0.90
    curve = ", ".join(f"{r['h']:g}:{r['rate']:.3f}" for r in rows)
    assert record_criterion(3, "power monotone and saturating", ok, curve)


@pytest.mark.paper
def test_c04_full_scale_spot_check(record_criterion):
    rep = _run(preset="paper", regime="SL", c=2.0, h_grid=(0.0, 0.92))
    r0, r1 = rep.rate(0.0), rep.rate(0.92)
    se0 = math.sqrt(0.04 * 0.96 / 100)
    ok = abs(r0 - 0.04) <= 3 * se0 and r1 == 1.0
    assert record_criterion(4, "full-scale spot check", ok,
                            f"h=0 rate {r0:.2f} (target 0.04 +/- {3 * se0:.3f}), "
                            f"h=0.92 rate {r1:.2f} (target 1.00)")


def test_c05_adds_bounds(record_criterion):
    n, p, s = 100, 200, 3
    names = ("scale", "prediction", "l1", "sigma_hat", "correlation")
    hits = dict.fromkeys(names, 0)
    for k in range(50):
        rng = np.random.default_rng([SEED, k])
        g = rng.standard_normal((n, p))
        b_star = np.zeros(p)
        b_star[:s] = 1.0
        eps = rng.standard_normal(n)
        sigma_star = np.linalg.norm(eps) / math.sqrt(n)
        eta = eta_adaptive(g)
        f = fit(DantzigProblem(g, g @ b_star + eps, eta))
        err = f.b - b_star
        kappa = restricted_eigen_upper(g, s, rng, extra=(err,))
        checks = (
            sigma_star <= f.sigma_tilde <= 3 * sigma_star,
            np.linalg.norm(g @ err) <= 8 * sigma_star * eta * math.sqrt(n * s / kappa),
            np.abs(err).sum() <= 16 * eta * sigma_star * s / kappa,
            sigma_star / math.sqrt(2) <= f.sigma_hat <= 2 * sigma_star,
            np.abs(g.T @ f.residuals / n).max() / f.sigma_hat <= 3 * math.sqrt(2) * eta,
        )
        for name, ok in zip(names, checks):
            hits[name] += bool(ok)
    ok = all(v >= 48 for v in hits.values())
    assert record_criterion(5, "ADDS error bounds", ok,
                            ", ".join(f"{k} {v}/50" for k, v in hits.items()))


def test_c06_lp_oracle(record_criterion):
    worst, bad = 0.0, 0
    for k in range(100):
        rng = np.random.default_rng([SEED, 6, k])
        n, p = int(rng.integers(2, 7)), int(rng.integers(1, 4))
        mu = float(rng.uniform(0.8, 3.0)) if (k % 4 == 0 and p <= 2) else None
        g = rng.standard_normal((n, p))
        h = 2 * rng.standard_normal(n)
        eta, sigma = 0.3, float(rng.uniform(0.2, 1.5))
        sol = solve_at_sigma(DantzigProblem(g, h, eta, mu=mu), sigma)
        obj, _ = vertex_enumeration(g, h, eta, sigma, mu)
        if obj is None:
            bad += sol.status is not SolveStatus.INFEASIBLE
            continue
        gap = abs(sol.objective - obj)
        worst = max(worst, gap)
        tol = feasibility_tolerance(max(eta, mu or 0) * sigma)
        bad += gap >= 1e-8 or not exact_feasible(g, h, eta, sigma, sol.b, tol, mu)
    assert record_criterion(6, "LP oracle equivalence", bad == 0,
                            f"{bad} mismatches in 100, worst objective gap {worst:.1e}")


def test_c07_simulator_law(record_criterion):
    rng = np.random.default_rng([SEED, 7])
    n, p, r = 30, 4, 50000
    v = rng.standard_normal((n, p)) @ rng.standard_normal((p, p))
    q = qhat(PiEstimate(np.zeros((p, p)), np.ones(p), v, 1.0, np.zeros(p, dtype=bool)))
    xi = np.hstack(list(simulate_xi(v, r, SEED)))
    emp = xi @ xi.T / r
    se = np.sqrt((np.outer(np.diag(q), np.diag(q)) + q ** 2) / r)
    worst = float((np.abs(emp - q) / se).max())
    single = np.zeros((50, 6))
    single[0, 0] = math.sqrt(50)
    crit, _ = simulate_max_quantile(single, 0.05, 20000, SEED)
    ok = worst <= 5 and 1.90 <= crit <= 2.02
    assert record_criterion(7, "simulator law", ok,
                            f"worst covariance deviation {worst:.2f} SE, "
                            f"single-coordinate quantile {crit:.4f}")


def test_c08_scale_invariance(record_criterion):
    resp_err = ratio_err = adds_err = tn_scale_err = 0.0
    decision_mismatch = 0
    for k in range(20):
        rng = np.random.default_rng([SEED, 8, k])
        c = float(np.exp(rng.uniform(math.log(0.1), math.log(10))))
        data, _ = gen_regression("SL", 2.0, 0.3, 60, 80, seed=SEED, stream_id=(8, k))
        cfg = TiersConfig(seed=k)
        base = run_tiers(data, 0.05, cfg)
        resp = run_tiers(data.scaled(y_scale=c), 0.05, cfg)
        resp_err = max(resp_err, abs(resp.t_n / base.t_n - 1))
        decision_mismatch += resp.reject != base.reject
        des = run_tiers(data.scaled(x_scale=c), 0.05, cfg)
        # T_n and its critical value both scale by c; their ratio does not
        ratio_err = max(ratio_err, abs((des.t_n / des.critical_value)
                                       / (base.t_n / base.critical_value) - 1))
        tn_scale_err = max(tn_scale_err, abs(des.t_n / (c * base.t_n) - 1))
        decision_mismatch += (des.reject != base.reject) + (des.p_value != base.p_value)
        g = rng.standard_normal((40, 60))
        hvec = g[:, :3].sum(axis=1) + rng.standard_normal(40)
        f0 = fit(DantzigProblem(g, hvec, eta_adaptive(g)))
        f1 = fit(DantzigProblem(g, c * hvec, eta_adaptive(g)))
        adds_err = max(adds_err, abs(f1.sigma_tilde / (c * f0.sigma_tilde) - 1),
                       np.abs(f1.b - c * f0.b).max() / max(1e-300, np.abs(c * f0.b).max()))
    ok = resp_err <= 1e-6 and ratio_err <= 1e-6 and adds_err <= 1e-7 and decision_mismatch == 0
    assert record_criterion(
        8, "scale invariance", ok,
        f"response T_n rel err {resp_err:.1e}; design T_n/critical rel err {ratio_err:.1e} "
        f"(T_n itself scales by c, rel err {tn_scale_err:.1e}); ADDS rel err {adds_err:.1e}; "
        f"{decision_mismatch} decision or p-value mismatches")


def test_c09_naive_test_failure(record_criterion):
    m0, m1 = naive_size_curve(NaiveDemoConfig(n=100, p=300, c_grid=(0.0, 0.002), seed=SEED))
    ok = abs(m0.m_hat - 0.05) <= 3 * m0.se and m1.m_hat > 0.5
    assert record_criterion(9, "naive test size failure", ok,
                            f"M(0)={m0.m_hat:.4f} (se {m0.se:.4f}), M(0.002)={m1.m_hat:.4f} "
                            "(target > 0.5)")


def test_c10_oracle_lr_power(record_criterion):
    out = []
    for g1 in (0.01796, 0.04246, 0.07366):
        gamma = np.array([g1, 0.0, 0.0])
        formula = lr_oracle_power(gamma, np.eye(3), 1.0, 2000, 0.05)
        mc, _ = simulate_lr_power(gamma, np.eye(3), 1.0, 2000, 0.05, 5000, seed=SEED,
                                  beta_a=np.array([0.5, -0.2, 0.1]))
        out.append((formula, mc))
    ok = all(abs(f - m) <= 0.02 for f, m in out)
    assert record_criterion(10, "oracle LR power", ok,
                            ", ".join(f"formula {f:.3f} vs MC {m:.3f}" for f, m in out))


def test_c11_ggm_regimes(record_criterion):
    grids = {"SS": (0.0, 0.5, 1.0, 1.5, 2.0, 3.0), "SD": (0.0, 2.0, 4.0, 8.0, 16.0, 32.0)}
    parts, ok = [], True
    for regime, grid in grids.items():
        rep = _run(study="ggm", regime=regime, h_grid=grid)
        null, top = rep.rate(0.0), rep.rate(grid[-1])
        ok &= _in(null, NULL_BAND) and top >= 0.85
        parts.append(f"{regime} h=0 {null:.3f}, h={grid[-1]:g} {top:.3f}")
    assert record_criterion(11, "GGM regimes", ok, "; ".join(parts) + " (top target >= 0.85)")


def test_c12_determinism_across_workers(record_criterion):
    ok = True
    for kw in (dict(regime="SL", h_grid=(0.0, 1.0)),
               dict(regime="SH", h_grid=(0.0, 0.5), variant="tiers+")):
        spec = ExperimentSpec.from_preset("desk", seed=SEED, reps=12, **kw)
        ok &= run_experiment(spec, workers=1).to_json() == run_experiment(spec, workers=3).to_json()
    assert record_criterion(12, "determinism across worker counts", ok,
                            "report.json bytes equal at 1 and 3 workers" if ok
                            else "report.json bytes differ")
