"""Auto-adaptive Dantzig selector.

The scale is chosen as the largest ``sigma`` whose path solution still leaves
enough residual energy::

    sigma_tilde = max { sigma >= 0 : ||H - G b(sigma)||_2^2 >= n sigma^2 / 2 }

and the estimate is the path point ``b(sigma_tilde)``.  On each linear piece
of the path the residual is affine in ``sigma``, so the constraint is a
quadratic there and the maximizer is found exactly by walking the path from
the top and stopping in the first piece that contains a feasible scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dantzig import DantzigPath, DantzigProblem

__all__ = ["AddsFit", "DegenerateFitError", "fit", "eta_adaptive"]


class DegenerateFitError(ValueError):
    """No admissible scale exists, or the fitted scale is zero where a
    positive one is required."""

    def __init__(self, message, trace=None, stage=None):
        super().__init__(message)
        self.trace = trace or []
        self.stage = stage


@dataclass(frozen=True, eq=False)
class AddsFit:
    b: np.ndarray
    sigma_tilde: float
    sigma_hat: float
    residuals: np.ndarray
    n_path_solves: int
    search_trace: list = field(default_factory=list, repr=False)


def eta_adaptive(g):
    """Correlation tuning ``sqrt(2 log(p) / n) * max_j ||G_j||_2 / sqrt(n)``."""
    g = np.asarray(g, dtype=float)
    n, p = g.shape
    col = np.sqrt((g * g).sum(axis=0)).max(initial=0.0) / math.sqrt(n)
    if not col > 0:
        raise ValueError("design has only zero columns; eta would be zero")
    # log(1) = 0 would zero the tuning for a single column
    return math.sqrt(2.0 * math.log(max(p, 2)) / n) * col


def _largest_feasible(a2, a1, a0, lo, hi):
    """Largest x in [lo, hi] with a2 x^2 + a1 x + a0 >= 0, or None."""

    def f(x):
        return (a2 * x + a1) * x + a0

    if math.isfinite(hi) and f(hi) >= 0:
        return hi
    roots = []
    if a2 == 0:
        if a1 != 0:
            roots.append(-a0 / a1)
    else:
        disc = a1 * a1 - 4 * a2 * a0
        if disc >= 0:
            sq = math.sqrt(disc)
            q = -0.5 * (a1 + math.copysign(sq, a1))
            if q != 0:
                roots.append(q / a2)
                roots.append(a0 / q)
            else:
                roots.append(0.0)
    inside = [r for r in roots if lo <= r <= hi]
    if inside:
        return max(inside)
    if f(lo) >= 0:
        # the crossing sits within rounding of an endpoint
        return lo
    return None


def fit(problem: DantzigProblem) -> AddsFit:
    """Fit the auto-adaptive Dantzig selector for ``problem``.

    ``search_trace`` lists the visited path breakpoints as
    ``(sigma, feasible)`` pairs in decreasing ``sigma``.

    Raises
    ------
    DegenerateFitError
        If the program turns infeasible before any admissible scale is
        reached (only possible with the residual side constraint).
    """
    g, h = problem.g, problem.h
    n, p = g.shape
    half_n = 0.5 * n
    path = DantzigPath(problem)
    trace = []
    for seg in path:
        if seg.terminal_infeasible:
            raise DegenerateFitError(
                f"program infeasible below sigma={seg.sigma_lo:.6g} before an "
                "admissible scale was found", trace)
        gs = g[:, seg.support]
        r0 = h - gs @ seg.b0
        r1 = -(gs @ seg.b1)
        a2 = float(r1 @ r1) - half_n
        a1 = 2.0 * float(r0 @ r1)
        a0 = float(r0 @ r0)
        sigma = _largest_feasible(a2, a1, a0, seg.sigma_lo, seg.sigma_hi)
        if sigma is None:
            trace.append((seg.sigma_lo, False))
            continue
        trace.append((sigma, True))
        b = seg.coef(sigma, p)
        resid = h - g @ b
        return AddsFit(
            b=b,
            sigma_tilde=float(sigma),
            sigma_hat=float(np.linalg.norm(resid) / math.sqrt(n)),
            residuals=resid,
            n_path_solves=path.pivots,
            search_trace=trace,
        )
    raise DegenerateFitError("solution path ended without an admissible scale",
                             trace)
