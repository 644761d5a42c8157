"""Seeded synthetic data for the regression and graphical-model studies.

Every generator is a pure function of its arguments.  Random numbers come
from counter-based Philox streams keyed by ``(seed, stream_id)``, and normal
deviates use numpy's Ziggurat sampler, so identical arguments give identical
arrays on every platform and in every worker process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg

from .model import PopulationSpec, TwoSampleData

__all__ = [
    "REGRESSION_REGIMES",
    "GGM_REGIMES",
    "SyntheticTruth",
    "rng_stream",
    "toeplitz_cov",
    "ggm_blocks",
    "ggm_block_sizes",
    "valid_ggm_sizes",
    "standard_cauchy",
    "gen_regression",
    "gen_ggm",
]

REGRESSION_REGIMES = ("SL", "SH", "DL", "DH")
GGM_REGIMES = ("SS", "DS", "SD", "DD")
_GGM_ALIASES = {
    "SβSΩ": "SS", "DβSΩ": "DS", "SβDΩ": "SD", "DβDΩ": "DD",
    "SBSO": "SS", "DBSO": "DS", "SBDO": "SD", "DBDO": "DD",
}
TOEPLITZ_RHO = 0.4
GGM_NOISE_SD = 0.5
GGM_ALPHAS = (1.0, 2.0, 4.0)


def _key(stream_id):
    if isinstance(stream_id, (tuple, list)):
        return tuple(int(s) for s in stream_id)
    return (int(stream_id),)


def rng_stream(seed, stream_id=0):
    """Independent, reproducible generator for ``(seed, stream_id)``.

    ``stream_id`` is an int or a tuple of non-negative ints; tuples address
    nested streams such as ``(rep, purpose)``.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=_key(stream_id))
    return np.random.Generator(np.random.Philox(ss))


def standard_cauchy(rng, size):
    """Standard Cauchy draws by inversion, ``tan(pi (U - 1/2))``."""
    u = rng.random(size)
    return np.tan(math.pi * (u - 0.5))


@dataclass(frozen=True, eq=False)
class SyntheticTruth:
    spec: PopulationSpec
    beta_a: np.ndarray
    beta_b: np.ndarray
    realized_noise_a: np.ndarray
    realized_noise_b: np.ndarray
    theta_star: np.ndarray
    gamma_star: np.ndarray
    sigma_star_proxy: float

    @classmethod
    def build(cls, spec, noise_a, noise_b):
        u = noise_a + noise_b
        return cls(
            spec=spec,
            beta_a=spec.beta_a,
            beta_b=spec.beta_b,
            realized_noise_a=noise_a,
            realized_noise_b=noise_b,
            theta_star=(spec.beta_a + spec.beta_b) / 2,
            gamma_star=(spec.beta_a - spec.beta_b) / 2,
            sigma_star_proxy=float(np.linalg.norm(u) / math.sqrt(u.size)),
        )


def toeplitz_cov(p, rho=TOEPLITZ_RHO):
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


@lru_cache(maxsize=8)
def _toeplitz_chol(p):
    out = np.linalg.cholesky(toeplitz_cov(p))
    out.setflags(write=False)
    return out


def _noise(rng, regime, n):
    if regime[1] == "H":
        return standard_cauchy(rng, n)
    return rng.standard_normal(n)


def _dense_beta(rng, p):
    zeta = rng.random(p)
    return zeta / np.linalg.norm(zeta)


def _sparse_beta(p, scale=1.0):
    beta = np.zeros(p)
    beta[:min(3, p)] = scale
    return beta


def gen_regression(regime, c, h, n, p, seed, stream_id=0):
    """Two Gaussian-design linear models with Toeplitz covariance.

    ``Sigma_A`` has entries ``0.4^|i-j|`` and ``Sigma_B = c Sigma_A``.  The
    first letter of ``regime`` picks a sparse ``(1, 1, 1, 0, ...)`` or a
    dense unit-norm uniform coefficient vector; the second picks standard
    normal (``L``) or standard Cauchy (``H``) noise.  ``beta_B`` is
    ``beta_A`` with ``h`` added to its first entry.

    All draws depend on ``(seed, stream_id)`` only, never on ``h``, so a grid
    of ``h`` values shares its designs and noise.
    """
    regime = str(regime).upper()
    if regime not in REGRESSION_REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGRESSION_REGIMES}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    n, p = int(n), int(p)
    if n < 2 or p < 1:
        raise ValueError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
    if not math.isfinite(h):
        raise ValueError("h must be finite")
    rng = rng_stream(seed, stream_id)
    chol = _toeplitz_chol(p)
    x_a = rng.standard_normal((n, p)) @ chol.T
    x_b = math.sqrt(c) * (rng.standard_normal((n, p)) @ chol.T)
    u_a = _noise(rng, regime, n)
    u_b = _noise(rng, regime, n)
    beta_a = _dense_beta(rng, p) if regime[0] == "D" else _sparse_beta(p)
    beta_b = beta_a.copy()
    beta_b[0] += h
    sigma_a = toeplitz_cov(p)
    tag = ("cauchy", 1.0) if regime[1] == "H" else ("normal", 1.0)
    spec = PopulationSpec(sigma_a, c * sigma_a, beta_a, beta_b, tag, tag)
    data = TwoSampleData(x_a, x_a @ beta_a + u_a, x_b, x_b @ beta_b + u_b)
    return data, SyntheticTruth.build(spec, u_a, u_b)


def ggm_block_sizes(p):
    """Block sizes ``(p1, p2, p2)`` of the ``(p-1)``-dimensional matrix D.

    ``p1 = ceil(p/2) - 1`` and the remainder is split evenly, which gives
    ``(249, 125, 125)`` at ``p = 500``.
    """
    p = int(p)
    p1 = math.ceil(p / 2) - 1
    rest = p - 1 - p1
    if p < 4 or p1 < 1 or rest % 2:
        near = [q for q in valid_ggm_sizes(max(4, p - 6), p + 6)]
        raise ValueError(
            f"p={p} cannot be split into GGM blocks (ceil(p/2)-1, r, r); "
            f"valid sizes nearby: {near}")
    return p1, rest // 2, rest // 2


def valid_ggm_sizes(lo, hi):
    out = []
    for q in range(max(4, int(lo)), int(hi) + 1):
        p1 = math.ceil(q / 2) - 1
        if (q - 1 - p1) % 2 == 0:
            out.append(q)
    return out


def _band_block(size, alpha):
    blk = np.zeros((size, size))
    for off, val in ((0, 1.0), (1, 0.5), (2, 0.4)):
        idx = np.arange(size - off)
        blk[idx, idx + off] = val * alpha
        blk[idx + off, idx] = val * alpha
    return blk


def ggm_blocks(p):
    """The block-diagonal matrix D of dimension ``p - 1``."""
    return linalg.block_diag(*(_band_block(s, a)
                               for s, a in zip(ggm_block_sizes(p), GGM_ALPHAS)))


@lru_cache(maxsize=8)
def _ggm_factors(p):
    d = ggm_blocks(p)
    chol = np.linalg.cholesky(d)
    chol.setflags(write=False)
    d.setflags(write=False)
    return d, chol


def _ggm_regime(regime):
    key = _GGM_ALIASES.get(str(regime), str(regime).upper())
    if key not in GGM_REGIMES:
        raise ValueError(f"unknown GGM regime {regime!r}; expected one of "
                         f"{GGM_REGIMES} or {tuple(_GGM_ALIASES)[:4]}")
    return key


def gen_ggm(regime, h, n, p, seed, stream_id=0):
    """Regression form of two Gaussian graphical models.

    The first node is regressed on the remaining ``p - 1``; predictors are
    ``N(0, Omega^-1)`` with ``Omega = D`` (sparse, second letter ``S``) or
    ``Omega = D^-1`` (dense, ``D``), and the noise is ``N(0, 0.5^2)``.  The
    sparse coefficient vector is ``(1, 1, 1, 0, ...)/sqrt(3)``, the dense one a
    unit-norm uniform draw, and ``beta_B`` adds ``h`` to the first entry.
    """
    key = _ggm_regime(regime)
    if not math.isfinite(h):
        raise ValueError("h must be finite")
    n = int(n)
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    d, chol = _ggm_factors(int(p))
    q = d.shape[0]
    rng = rng_stream(seed, stream_id)
    g_a = rng.standard_normal((n, q))
    g_b = rng.standard_normal((n, q))
    if key[1] == "S":
        # covariance D^-1: x = L^-T g with D = L L^T
        x_a = linalg.solve_triangular(chol, g_a.T, lower=True, trans="T").T
        x_b = linalg.solve_triangular(chol, g_b.T, lower=True, trans="T").T
        cov = linalg.cho_solve((chol, True), np.eye(q))
        cov = 0.5 * (cov + cov.T)
    else:
        x_a = g_a @ chol.T
        x_b = g_b @ chol.T
        cov = np.array(d)
    e_a = GGM_NOISE_SD * rng.standard_normal(n)
    e_b = GGM_NOISE_SD * rng.standard_normal(n)
    beta_a = _dense_beta(rng, q) if key[0] == "D" else _sparse_beta(q, 1 / math.sqrt(3))
    beta_b = beta_a.copy()
    beta_b[0] += h
    tag = ("normal", GGM_NOISE_SD)
    spec = PopulationSpec(cov, cov, beta_a, beta_b, tag, tag)
    data = TwoSampleData(x_a, x_a @ beta_a + e_a, x_b, x_b @ beta_b + e_b)
    return data, SyntheticTruth.build(spec, e_a, e_b)
