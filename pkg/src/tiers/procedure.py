"""The two-sample test for equality of regression coefficients.

Both samples are convolved into ``W = X_A + X_B``, ``Z = X_A - X_B`` and
``Y = Y_A + Y_B``; under the null ``Y`` depends on ``W`` only.  The statistic
is the self-normalized maximal correlation

    T_n = n^-1/2 sigma_u^-1 || (Z - W Pi)^T (Y - W theta) ||_inf

with ``Pi`` and ``theta`` fitted by the auto-adaptive Dantzig selector.  Its
null law is approximated by ``||N(0, Q)||_inf`` with ``Q = V^T V / n``,
sampled exactly as ``n^-1/2 V^T g`` for standard normal ``g``.

The ``plus`` variant adds the residual bound ``||Y - W theta||_inf <= mu
sigma`` to the fit of ``theta``, which keeps the test valid for
non-Gaussian designs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .adds import AddsFit, DegenerateFitError, eta_adaptive, fit
from .dantzig import DantzigProblem, feasibility_tolerance
from .model import ConvolvedData, TwoSampleData, convolve
from .simgen import rng_stream

__all__ = [
    "Variant",
    "TiersConfig",
    "PiEstimate",
    "TestResult",
    "DegenerateStatisticError",
    "estimate_pi",
    "estimate_theta",
    "estimate_theta_plus",
    "default_mu",
    "qhat",
    "test_statistic",
    "simulate_xi",
    "simulate_max_quantile",
    "run_tiers",
    "run_tiers_plus",
]

# second component of the stream key used for the critical-value draws
_SIM_STREAM = 0x51D
_BLOCK = 500


class Variant(str, Enum):
    TIERS = "tiers"
    TIERS_PLUS = "tiers+"


class DegenerateStatisticError(ValueError):
    """The residual scale is zero, so the statistic is undefined."""

    def __init__(self, message, stage="statistic"):
        super().__init__(message)
        self.stage = stage


@dataclass(frozen=True)
class TiersConfig:
    """Tuning of one test run.

    Parameters
    ----------
    draws : int
        Monte-Carlo draws for the critical value (at least 1000).
    seed : int
        Seed of the critical-value simulation.
    eta : float, optional
        Overrides the adaptive correlation tuning.
    mu_scale : float
        Constant in ``mu = mu_scale * n^(1/9) * log(p)^(1/3)``.
    mu : float, optional
        Overrides ``mu`` entirely.
    weighted_qhat : bool
        Weight each row of ``V`` by ``u_i / sigma_u`` in the simulated law.
    """

    draws: int = 2000
    seed: int = 0
    eta: float | None = None
    mu_scale: float = 1.0
    mu: float | None = None
    weighted_qhat: bool = False

    def __post_init__(self):
        if int(self.draws) < 1000:
            raise ValueError(f"draws must be at least 1000, got {self.draws}")
        if self.eta is not None and not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.mu_scale > 0:
            raise ValueError(f"mu_scale must be positive, got {self.mu_scale}")
        if self.mu is not None and not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")


@dataclass(frozen=True, eq=False)
class PiEstimate:
    """Column-wise fits of ``Z_j`` on ``W``.

    Columns with ``Z_j = 0`` are marked in ``degenerate`` and carry
    ``pi[:, j] = 0`` and ``sigma_tilde_cols[j] = 0``.
    """

    pi: np.ndarray
    sigma_tilde_cols: np.ndarray
    vhat: np.ndarray
    eta: float
    degenerate: np.ndarray = field(repr=False)

    @property
    def n_degenerate(self):
        return int(self.degenerate.sum())


@dataclass(frozen=True)
class TestResult:
    t_n: float
    critical_value: float
    alpha: float
    p_value: float
    reject: bool
    sigma_hat_u: float
    variant: Variant
    sim_draws: int
    seed: int
    diagnostics: dict = field(default_factory=dict, compare=False)

    __test__ = False  # keep pytest from collecting this class

    def to_dict(self):
        return {
            "t_n": self.t_n,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "p_value": self.p_value,
            "reject": self.reject,
            "sigma_hat_u": self.sigma_hat_u,
            "variant": self.variant.value,
            "sim_draws": self.sim_draws,
            "seed": self.seed,
            "diagnostics": self.diagnostics,
        }


def estimate_pi(conv: ConvolvedData, eta, gram=None) -> PiEstimate:
    """Fit every column of ``Z`` on ``W`` with its own adaptive scale."""
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    w, z = conv.w, conv.z
    n, p = w.shape
    if gram is None:
        gram = w.T @ w / n
    pi = np.zeros((p, p))
    sig = np.zeros(p)
    degenerate = np.zeros(p, dtype=bool)
    for j in range(p):
        zj = z[:, j]
        if not np.any(zj):
            degenerate[j] = True
            continue
        try:
            f = fit(DantzigProblem(w, zj, eta, gram=gram))
        except DegenerateFitError:
            degenerate[j] = True
            continue
        pi[:, j] = f.b
        sig[j] = f.sigma_tilde
    if degenerate.all():
        raise DegenerateFitError(
            "every column of Z = X_A - X_B gives a degenerate fit (are the two "
            "designs identical?)", stage="pi")
    vhat = z - w @ pi
    for a in (pi, sig, vhat, degenerate):
        a.setflags(write=False)
    return PiEstimate(pi=pi, sigma_tilde_cols=sig, vhat=vhat, eta=float(eta),
                      degenerate=degenerate)


def _fit_theta(conv, eta, mu, stage):
    try:
        f = fit(DantzigProblem(conv.w, conv.y, eta, mu=mu))
    except DegenerateFitError as exc:
        raise DegenerateFitError(f"{stage}: {exc}", exc.trace, stage=stage) from exc
    if not f.sigma_hat > 0:
        raise DegenerateFitError(
            f"{stage}: fitted residual scale is zero (is Y = Y_A + Y_B zero or "
            "interpolated exactly?)", f.search_trace, stage=stage)
    return f


def estimate_theta(conv: ConvolvedData, eta) -> AddsFit:
    """Fit ``Y`` on ``W``; raises ``DegenerateFitError`` if the residual
    scale is zero."""
    return _fit_theta(conv, eta, None, "theta")


def default_mu(n, p, mu_scale=1.0):
    """``mu_scale * n^(1/9) * log(p)^(1/3)``."""
    return mu_scale * n ** (1.0 / 9.0) * math.log(max(p, 2)) ** (1.0 / 3.0)


def estimate_theta_plus(conv: ConvolvedData, eta, mu) -> AddsFit:
    """Fit ``Y`` on ``W`` under the extra bound ``||Y - W theta||_inf <= mu
    sigma``."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return _fit_theta(conv, eta, mu, "theta+")


def qhat(pi_est: PiEstimate):
    """``V^T V / n``; only sensible for small ``p``."""
    v = pi_est.vhat
    return v.T @ v / v.shape[0]


def test_statistic(conv: ConvolvedData, pi_est: PiEstimate, theta_fit: AddsFit):
    """``n^-1/2 sigma_u^-1 ||V^T u||_inf`` with ``u`` the fit residuals."""
    s = theta_fit.sigma_hat
    if not s > 0:
        raise DegenerateStatisticError("residual scale sigma_u is zero")
    n = conv.n
    corr = pi_est.vhat.T @ theta_fit.residuals
    return float(np.abs(corr).max(initial=0.0) / (math.sqrt(n) * s))


test_statistic.__test__ = False


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def simulate_xi(vhat, draws, seed):
    """Yield ``(p, block)`` arrays of draws of ``xi = n^-1/2 V^T g``.

    Block ``k`` holds up to 500 draws from stream ``(seed, (0x51D, k))``, so
    a longer run extends a shorter one with the same seed.
    """
    v = np.asarray(vhat, dtype=float)
    n = v.shape[0]
    for blk, start in enumerate(range(0, int(draws), _BLOCK)):
        size = min(_BLOCK, int(draws) - start)
        g = rng_stream(seed, (_SIM_STREAM, blk)).standard_normal((n, size))
        yield v.T @ g / math.sqrt(n)


def simulate_max_quantile(vhat, alpha, draws, seed, weights=None):
    """Critical value of ``||n^-1/2 V^T g||_inf`` for standard normal ``g``.

    Draws are generated in blocks, each from its own stream keyed by the
    block index, so the result does not depend on how blocks are scheduled.
    With ``weights`` the rows of ``V`` are multiplied by them first.

    Returns
    -------
    critical_value : float
        Order statistic ``ceil((1 - alpha) R)`` of the ``R`` simulated maxima.
    p_value : callable
        Maps ``t`` to the fraction of simulated maxima that are ``>= t``.
    """
    _check_alpha(alpha)
    draws = int(draws)
    if draws < 1000:
        raise ValueError(f"draws must be at least 1000, got {draws}")
    v = np.asarray(vhat, dtype=float)
    if weights is not None:
        v = v * np.asarray(weights, dtype=float)[:, None]
    maxima = np.concatenate([np.abs(xi).max(axis=0, initial=0.0)
                             for xi in simulate_xi(v, draws, seed)])
    maxima.sort()
    k = math.ceil((1.0 - alpha) * draws - 1e-9)
    critical = float(maxima[min(max(k, 1), draws) - 1])

    def p_value(t):
        idx = np.searchsorted(maxima, t, side="left")
        return float((draws - idx) / draws)

    p_value.maxima = maxima
    return critical, p_value


def _run(data, alpha, config, variant, pi_est):
    _check_alpha(alpha)
    config = config or TiersConfig()
    conv = convolve(data)
    n, p = conv.n, conv.p
    eta = config.eta if config.eta is not None else eta_adaptive(conv.w)
    if variant is Variant.TIERS:
        mu = None
        theta = estimate_theta(conv, eta)
    else:
        mu = config.mu if config.mu is not None else default_mu(n, p, config.mu_scale)
        theta = estimate_theta_plus(conv, eta, mu)
    if pi_est is None:
        pi_est = estimate_pi(conv, eta)
    t_n = test_statistic(conv, pi_est, theta)
    weights = theta.residuals / theta.sigma_hat if config.weighted_qhat else None
    crit, pfn = simulate_max_quantile(pi_est.vhat, alpha, config.draws,
                                      config.seed, weights)
    diagnostics = {
        "eta": float(eta),
        "mu": mu,
        "sigma_tilde_u": theta.sigma_tilde,
        "theta_support": int(np.count_nonzero(theta.b)),
        "pi_nonzero": int(np.count_nonzero(pi_est.pi)),
        "degenerate_columns": [int(j) for j in np.flatnonzero(pi_est.degenerate)],
        "weighted_qhat": bool(config.weighted_qhat),
        "n": n,
        "p": p,
    }
    return TestResult(
        t_n=t_n,
        critical_value=crit,
        alpha=float(alpha),
        p_value=pfn(t_n),
        reject=bool(t_n > crit),
        sigma_hat_u=theta.sigma_hat,
        variant=variant,
        sim_draws=int(config.draws),
        seed=int(config.seed),
        diagnostics=diagnostics,
    )


def run_tiers(data: TwoSampleData, alpha=0.05, config: TiersConfig | None = None,
              pi_est: PiEstimate | None = None) -> TestResult:
    """Test ``beta_A = beta_B`` assuming Gaussian designs.

    ``pi_est`` may be passed to reuse a fit of ``Z`` on ``W`` from an earlier
    call on data with the same designs; it must have been fitted with the
    same ``eta``.
    """
    return _run(data, alpha, config, Variant.TIERS, pi_est)


def run_tiers_plus(data: TwoSampleData, alpha=0.05, config: TiersConfig | None = None,
                   pi_est: PiEstimate | None = None) -> TestResult:
    """As :func:`run_tiers`, with the residual sup-norm bound on ``theta``."""
    return _run(data, alpha, config, Variant.TIERS_PLUS, pi_est)


def feasibility_ok(pi_est: PiEstimate, conv: ConvolvedData):
    """Check each column's correlation constraint at its fitted scale."""
    n = conv.n
    corr = np.abs(conv.w.T @ pi_est.vhat / n).max(axis=0)
    bound = pi_est.eta * pi_est.sigma_tilde_cols
    tol = np.array([feasibility_tolerance(b) for b in bound])
    return bool(np.all(corr <= bound + tol))
