"""Two-sample data containers, the convolution transform and population
quantities of the convolved regression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

__all__ = [
    "TwoSampleData",
    "ConvolvedData",
    "PopulationSpec",
    "DimensionError",
    "convolve",
    "population_pi",
    "population_sigma_v",
]


class DimensionError(ValueError):
    """Array shapes are inconsistent; ``axis`` names the offending axis."""

    def __init__(self, message, axis=None):
        super().__init__(message)
        self.axis = axis


def _finite(name, a):
    if not np.all(np.isfinite(a)):
        bad = np.argwhere(~np.isfinite(a))[0]
        raise ValueError(f"{name} has a non-finite entry at index {tuple(int(i) for i in bad)}")


@dataclass(frozen=True, eq=False)
class TwoSampleData:
    """Designs and responses of samples A and B (equal sample sizes)."""

    x_a: np.ndarray
    y_a: np.ndarray
    x_b: np.ndarray
    y_b: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("x_a", "y_a", "x_b", "y_b"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            arrays[name] = a
            object.__setattr__(self, name, a)
        x_a, y_a, x_b, y_b = (arrays[k] for k in ("x_a", "y_a", "x_b", "y_b"))
        if x_a.ndim != 2 or x_b.ndim != 2:
            raise DimensionError("designs must be 2-d matrices", axis="design")
        if x_a.shape[0] != x_b.shape[0]:
            raise DimensionError(
                f"sample sizes differ: x_a has {x_a.shape[0]} rows, x_b has "
                f"{x_b.shape[0]}; unequal sample sizes are not supported",
                axis="rows")
        if x_a.shape[1] != x_b.shape[1]:
            raise DimensionError(
                f"feature counts differ: x_a has {x_a.shape[1]} columns, x_b "
                f"has {x_b.shape[1]}", axis="columns")
        n, p = x_a.shape
        for name, y in (("y_a", y_a), ("y_b", y_b)):
            if y.shape != (n,):
                raise DimensionError(
                    f"{name} has shape {y.shape}, expected ({n},)", axis="rows")
        if n < 2 or p < 1:
            raise DimensionError(f"need n >= 2 and p >= 1, got n={n}, p={p}")
        for name, a in arrays.items():
            _finite(name, a)

    @property
    def n(self):
        return self.x_a.shape[0]

    @property
    def p(self):
        return self.x_a.shape[1]

    def scaled(self, x_scale=1.0, y_scale=1.0):
        """Copy with both designs multiplied by ``x_scale`` and both
        responses by ``y_scale``."""
        return TwoSampleData(self.x_a * x_scale, self.y_a * y_scale,
                             self.x_b * x_scale, self.y_b * y_scale)


@dataclass(frozen=True, eq=False)
class ConvolvedData:
    w: np.ndarray
    z: np.ndarray
    y: np.ndarray

    @property
    def n(self):
        return self.w.shape[0]

    @property
    def p(self):
        return self.w.shape[1]


@dataclass(frozen=True, eq=False)
class PopulationSpec:
    """Population of the two linear models.

    Noise tags are ``"normal"`` or ``"cauchy"``; the scale multiplies a
    standard draw.
    """

    sigma_a: np.ndarray
    sigma_b: np.ndarray
    beta_a: np.ndarray
    beta_b: np.ndarray
    noise_a: tuple = ("normal", 1.0)
    noise_b: tuple = ("normal", 1.0)

    def __post_init__(self):
        for name in ("sigma_a", "sigma_b"):
            s = np.asarray(getattr(self, name), dtype=float)
            if s.ndim != 2 or s.shape[0] != s.shape[1]:
                raise DimensionError(f"{name} must be square, got {s.shape}")
            if not np.allclose(s, s.T, rtol=0, atol=1e-12 * max(1, np.abs(s).max())):
                raise ValueError(f"{name} is not symmetric")
            _cholesky(s, name)
            object.__setattr__(self, name, s)
        p = self.sigma_a.shape[0]
        if self.sigma_b.shape != (p, p):
            raise DimensionError("sigma_a and sigma_b differ in size")
        for name in ("beta_a", "beta_b"):
            b = np.asarray(getattr(self, name), dtype=float)
            if b.shape != (p,):
                raise DimensionError(f"{name} has shape {b.shape}, expected ({p},)")
            object.__setattr__(self, name, b)


def _cholesky(s, name="matrix"):
    try:
        return linalg.cho_factor(s, lower=True)
    except linalg.LinAlgError as exc:
        raise linalg.LinAlgError(f"{name} is not positive definite") from exc


def convolve(data: TwoSampleData) -> ConvolvedData:
    """``W = X_A + X_B``, ``Z = X_A - X_B``, ``Y = Y_A + Y_B``."""
    return ConvolvedData(w=data.x_a + data.x_b, z=data.x_a - data.x_b,
                         y=data.y_a + data.y_b)


def population_pi(sigma_a, sigma_b):
    """Regression of ``z`` on ``w``: ``(S_A + S_B)^-1 (S_A - S_B)``."""
    sigma_a = np.asarray(sigma_a, dtype=float)
    sigma_b = np.asarray(sigma_b, dtype=float)
    if sigma_a.shape != sigma_b.shape:
        raise DimensionError("covariances differ in size")
    _cholesky(sigma_a, "sigma_a")
    _cholesky(sigma_b, "sigma_b")
    factor = _cholesky(sigma_a + sigma_b, "sigma_a + sigma_b")
    return linalg.cho_solve(factor, sigma_a - sigma_b)


def population_sigma_v(sigma_a, sigma_b):
    """Covariance of ``v = z - Pi^T w``: ``4 (S_A^-1 + S_B^-1)^-1``.

    Computed as ``4 S_A (S_A + S_B)^-1 S_B``, which avoids inverting either
    covariance; the result is symmetrized.
    """
    sigma_a = np.asarray(sigma_a, dtype=float)
    sigma_b = np.asarray(sigma_b, dtype=float)
    if sigma_a.shape != sigma_b.shape:
        raise DimensionError("covariances differ in size")
    _cholesky(sigma_a, "sigma_a")
    _cholesky(sigma_b, "sigma_b")
    factor = _cholesky(sigma_a + sigma_b, "sigma_a + sigma_b")
    out = 4.0 * sigma_a @ linalg.cho_solve(factor, sigma_b)
    return 0.5 * (out + out.T)
