"""Reference procedures: the size of a naive de-biased max test under a dense
null, and the power of the oracle likelihood-ratio test.

Naive test
----------
Under ``beta_A = beta_B = 1_p c / sqrt(n)`` with standard Gaussian designs,
the oracle de-biased difference ``sqrt(n)(beta~_A - beta~_B)`` coincides with
high probability with

    zeta = (S_A - S_B) 1_p c + n^-1/2 (X_A^T g_A - X_B^T g_B),

because the initial scaled-Lasso fits are exactly zero on that event.  The
scaled Lasso is therefore never run; ``zeta`` is simulated directly given the
sample covariances ``S_A, S_B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .simgen import rng_stream

__all__ = [
    "NaiveDemoConfig",
    "NaiveCurvePoint",
    "naive_size_curve",
    "lr_noncentrality",
    "lr_oracle_power",
    "simulate_lr_power",
]

_INNER_BLOCK = 1000


@dataclass(frozen=True)
class NaiveDemoConfig:
    n: int = 100
    p: int = 300
    c_grid: tuple = (0.0, 0.002)
    alpha: float = 0.05
    outer_reps: int = 100
    inner_draws: int = 4000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "c_grid", tuple(float(c) for c in self.c_grid))
        if self.n < 2 or self.p < 1:
            raise ValueError(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not self.c_grid:
            raise ValueError("c_grid is empty")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.outer_reps < 50:
            raise ValueError(f"outer_reps must be at least 50, got {self.outer_reps}")
        if self.inner_draws < 2000:
            raise ValueError(f"inner_draws must be at least 2000, got {self.inner_draws}")


@dataclass(frozen=True)
class NaiveCurvePoint:
    c: float
    m_hat: float
    se: float


def _noise_block(rng, x_a, x_b, size):
    n = x_a.shape[0]
    g_a = rng.standard_normal((n, size))
    g_b = rng.standard_normal((n, size))
    return (x_a.T @ g_a - x_b.T @ g_b) / math.sqrt(n)


def _exceedance(x_a, x_b, c_arr, alpha, draws, rng):
    """Exceedance fractions along ``c_arr`` for fixed designs.

    One inner sample of ``zeta`` noise is shared by every ``c``; the critical
    value is its ``1 - alpha`` order statistic at ``c = 0``.
    """
    n = x_a.shape[0]
    s_a = x_a.T @ x_a / n
    s_b = x_b.T @ x_b / n
    shift = (s_a - s_b).sum(axis=1)
    scale = np.sqrt(np.diag(s_a) + np.diag(s_b))
    blocks = [_noise_block(rng, x_a, x_b, min(_INNER_BLOCK, draws - start))
              for start in range(0, draws, _INNER_BLOCK)]
    null_max = np.sort(np.concatenate(
        [(np.abs(z) / scale[:, None]).max(axis=0) for z in blocks]))
    crit = null_max[math.ceil((1.0 - alpha) * draws - 1e-9) - 1]
    exceed = np.zeros(c_arr.size)
    for z in blocks:
        for i, c in enumerate(c_arr):
            m = (np.abs(z + c * shift[:, None]) / scale[:, None]).max(axis=0)
            exceed[i] += np.count_nonzero(m > crit)
    return exceed / draws


def _outer_rep(cfg, rep, c_arr):
    rng = rng_stream(cfg.seed, (rep, 0))
    x_a = rng.standard_normal((cfg.n, cfg.p))
    x_b = rng.standard_normal((cfg.n, cfg.p))
    return _exceedance(x_a, x_b, c_arr, cfg.alpha, cfg.inner_draws,
                       rng_stream(cfg.seed, (rep, 1)))


def naive_size_curve(cfg: NaiveDemoConfig):
    """Estimated rejection probability of the naive test along ``c_grid``.

    Each outer replication draws fresh designs, calibrates the critical value
    on an inner sample at ``c = 0`` and evaluates the exceedance fraction on
    the same sample shifted by each ``c``.  ``se`` is the standard error of
    the mean over outer replications, floored by the pooled binomial error
    (the between-rep spread vanishes at ``c = 0``).
    """
    c_arr = np.asarray(cfg.c_grid, dtype=float)
    rows = np.array([_outer_rep(cfg, rep, c_arr) for rep in range(cfg.outer_reps)])
    mean = rows.mean(axis=0)
    # between-rep spread, floored by the pooled binomial error
    se_between = rows.std(axis=0, ddof=1) / math.sqrt(cfg.outer_reps)
    se_pooled = np.sqrt(mean * (1 - mean) / (cfg.outer_reps * cfg.inner_draws))
    se = np.maximum(se_between, se_pooled)
    return [NaiveCurvePoint(float(c), float(m), float(s))
            for c, m, s in zip(c_arr, mean, se)]


def lr_noncentrality(gamma, sigma_b, sigma_u_b, n):
    """``d_n = sqrt(n) q / sqrt(q^2 / 2 + q sigma^2)`` with ``q = gamma^T
    Sigma_B gamma``."""
    gamma = np.asarray(gamma, dtype=float)
    sigma_b = np.asarray(sigma_b, dtype=float)
    if sigma_b.shape != (gamma.size, gamma.size):
        raise ValueError(f"sigma_b has shape {sigma_b.shape}, expected "
                         f"({gamma.size}, {gamma.size})")
    if not sigma_u_b > 0:
        raise ValueError(f"sigma_u_b must be positive, got {sigma_u_b}")
    np.linalg.cholesky(sigma_b)
    q = float(gamma @ sigma_b @ gamma)
    if q == 0:
        return 0.0
    return math.sqrt(n) * q / math.sqrt(q * q / 2 + q * sigma_u_b ** 2)


def lr_oracle_power(gamma, sigma_b, sigma_u_b, n, alpha=0.05):
    """Asymptotic power ``Phi(d_n - Phi^-1(1 - alpha))`` of the oracle
    likelihood-ratio test; equals ``alpha`` at ``gamma = 0``."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    d = lr_noncentrality(gamma, sigma_b, sigma_u_b, n)
    return float(stats.norm.cdf(d - stats.norm.ppf(1 - alpha)))


def _lr_statistics(gamma, beta_a, chol_b, sigma_u_b, n, reps, rng, alternative):
    p = gamma.size
    out = np.empty(reps)
    s2 = sigma_u_b ** -2
    for r in range(reps):
        x = rng.standard_normal((n, p)) @ chol_b.T
        u = sigma_u_b * rng.standard_normal(n)
        xg = x @ gamma
        xb = x @ beta_a
        y = xb + u + (xg if alternative else 0.0)
        out[r] = s2 * np.sum(y * xg - xg * xb - 0.5 * xg * xg)
    return out


def simulate_lr_power(gamma, sigma_b, sigma_u_b, n, alpha, reps, seed, beta_a=None):
    """Monte-Carlo power of the likelihood-ratio statistic ``sum_i s_i``.

    The critical value is the empirical ``1 - alpha`` quantile of the
    statistic under ``beta_B = beta_A``; power is the exceedance rate under
    ``beta_B = beta_A + gamma``.  Returns ``(power, standard_error)``.
    """
    gamma = np.asarray(gamma, dtype=float)
    beta_a = np.zeros_like(gamma) if beta_a is None else np.asarray(beta_a, float)
    chol_b = np.linalg.cholesky(np.asarray(sigma_b, dtype=float))
    null = _lr_statistics(gamma, beta_a, chol_b, sigma_u_b, n, reps,
                          rng_stream(seed, 0), alternative=False)
    alt = _lr_statistics(gamma, beta_a, chol_b, sigma_u_b, n, reps,
                         rng_stream(seed, 1), alternative=True)
    crit = np.quantile(null, 1 - alpha)
    power = float(np.mean(alt > crit))
    return power, math.sqrt(power * (1 - power) / reps)
