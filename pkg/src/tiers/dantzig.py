"""Dantzig-type l1 programs solved along their scale path.

For a design ``G`` (n x p), response ``H`` and tuning ``eta`` the program is::

    minimize    ||b||_1
    subject to  ||n^-1 G^T (H - G b)||_inf <= eta * sigma
                ||H - G b||_inf            <= mu * sigma     (optional)

Every constraint row has the form ``|d_j - (M b)_j| <= sigma * t_j`` so the
feasible sets are nested in ``sigma`` and the optimal solution is piecewise
linear in ``sigma``.  :class:`DantzigPath` traces that path downward from the
scale at which ``b = 0`` first becomes optimal, using a bounded dual simplex on
the row slacks.  Only the ``k x k`` block of ``M`` spanned by the active rows
and the basic coefficients is ever factorized, with ``k <= rank(G)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

import numpy as np

__all__ = [
    "DantzigProblem",
    "DantzigSolution",
    "DantzigPath",
    "PathSegment",
    "SolveStatus",
    "SolverError",
    "certify_optimality",
    "solve_at_sigma",
    "feasibility_tolerance",
]

# Zero-length pivots tolerated before switching to Bland's rule.
STALL_THRESHOLD = 50
OPTIMALITY_TOL = 1e-8
_PIVOT_TOL = 1e-11
_SLOPE_TOL = 1e-13
_ZERO_FLOOR = 1e-12


class SolverError(RuntimeError):
    """Raised when the path tracer fails numerically."""

    def __init__(self, message, *, pivots=None, sigma=None):
        detail = []
        if pivots is not None:
            detail.append(f"pivots={pivots}")
        if sigma is not None:
            detail.append(f"sigma={sigma:.6g}")
        if detail:
            message = f"{message} ({', '.join(detail)})"
        super().__init__(message)
        self.pivots = pivots
        self.sigma = sigma


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


def feasibility_tolerance(scale):
    """Absolute feasibility tolerance for a constraint bound ``scale``."""
    return 1e-7 * max(1.0, float(scale))


@dataclass(frozen=True, eq=False)
class DantzigProblem:
    """One instance of the Dantzig family.

    Parameters
    ----------
    g : ndarray, shape (n, p)
        Design matrix.
    h : ndarray, shape (n,)
        Response.
    eta : float
        Correlation tuning; the sup-norm bound is ``eta * sigma``.
    mu : float or None
        When given, adds the residual bound ``||h - g b||_inf <= mu * sigma``.
    gram : ndarray, optional
        Precomputed ``g.T @ g / n``.  Many problems sharing a design can pass
        the same array to avoid recomputing it.
    """

    g: np.ndarray
    h: np.ndarray
    eta: float
    mu: float | None = None
    gram: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if g.ndim != 2:
            raise ValueError(f"g must be 2-d, got shape {g.shape}")
        if h.shape != (g.shape[0],):
            raise ValueError(
                f"h has shape {h.shape}, expected ({g.shape[0]},) to match g rows"
            )
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise ValueError(f"eta must be positive and finite, got {self.eta}")
        if self.mu is not None and not (np.isfinite(self.mu) and self.mu > 0):
            raise ValueError(f"mu must be positive and finite, got {self.mu}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)
        if self.gram is None:
            object.__setattr__(self, "gram", g.T @ g / g.shape[0])

    @property
    def n(self):
        return self.g.shape[0]

    @property
    def p(self):
        return self.g.shape[1]

    def rows(self):
        """Return ``(M, d, t)`` with constraint rows ``|d - M b| <= sigma t``."""
        n = self.n
        m = self.gram
        d = self.g.T @ self.h / n
        t = np.full(self.p, float(self.eta))
        if self.mu is not None:
            m = np.vstack([m, self.g])
            d = np.concatenate([d, self.h])
            t = np.concatenate([t, np.full(n, float(self.mu))])
        return m, d, t

    def correlation_gap(self, b, sigma):
        """``eta*sigma - ||n^-1 G^T (H - G b)||_inf``; negative means violated."""
        corr = self.g.T @ (self.h - self.g @ b) / self.n
        return self.eta * sigma - np.max(np.abs(corr), initial=0.0)


@dataclass(frozen=True, eq=False)
class DantzigSolution:
    b: np.ndarray
    objective: float
    status: SolveStatus
    constraint_slack: float
    sigma: float
    duals: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class PathSegment:
    """Piece of the solution path: ``b(sigma) = b0 + sigma * b1`` on
    ``[sigma_lo, sigma_hi]``, with ``b0, b1`` restricted to ``support``."""

    sigma_hi: float
    sigma_lo: float
    support: np.ndarray
    b0: np.ndarray
    b1: np.ndarray
    duals: np.ndarray = field(repr=False)
    # True when the path stops at sigma_lo > 0 because the program becomes
    # infeasible below it.
    terminal_infeasible: bool = False

    def coef(self, sigma, p):
        b = np.zeros(p)
        b[self.support] = self.b0 + sigma * self.b1
        return b


class DantzigPath:
    """Trace the optimal solution of a Dantzig program as ``sigma`` decreases.

    Iterating yields :class:`PathSegment` objects from the largest scale down
    to ``sigma = 0`` (or down to the point where the program turns
    infeasible).  The first segment is the unbounded ray where ``b = 0``.
    The tracer is deterministic: ties are broken by lowest index, and after
    ``STALL_THRESHOLD`` consecutive zero-length pivots both leaving and
    entering choices switch to Bland's rule.
    """

    def __init__(self, problem: DantzigProblem, max_pivots=None):
        self.problem = problem
        self.M, self.d, self.t = problem.rows()
        self.m, self.p = self.M.shape
        self.max_pivots = max_pivots or 20 * (self.m + self.p) + 100
        self.pivots = 0
        self.infeasible_below = None

    # -- basis algebra -----------------------------------------------------

    def _factor(self, rows, cols, signs):
        if len(cols) == 0:
            return np.zeros((0, 0))
        block = self.M[np.ix_(rows, cols)] * signs
        try:
            return np.linalg.inv(block)
        except np.linalg.LinAlgError as exc:
            raise SolverError(
                "singular basis block", pivots=self.pivots
            ) from exc

    def __iter__(self) -> Iterator[PathSegment]:
        M, d, t = self.M, self.d, self.t
        m, p = self.m, self.p
        scale = np.abs(d) / t
        sigma = float(scale.max(initial=0.0))
        empty_i = np.zeros(0, dtype=int)
        yield PathSegment(np.inf, sigma, empty_i, np.zeros(0), np.zeros(0),
                          np.zeros(m))
        if sigma <= 0.0:
            return
        # breakpoints this close to zero are rounding artefacts of dependent
        # rows (rank-deficient Gram matrix), so the path is run out to zero
        floor = _ZERO_FLOOR * sigma

        cols = []        # basic coefficients
        signs = []       # +1 for b_k >= 0, -1 for b_k <= 0
        rows = []        # rows whose slack is nonbasic at a bound
        sides = []       # +1: d_j - (Mb)_j = sigma t_j ; -1: = -sigma t_j
        inv = np.zeros((0, 0))
        stall = 0

        while True:
            if self.pivots > self.max_pivots:
                raise SolverError("pivot limit exceeded", pivots=self.pivots,
                                  sigma=sigma)
            c_idx = np.asarray(cols, dtype=int)
            sg = np.asarray(signs, dtype=float)
            r_idx = np.asarray(rows, dtype=int)
            sd = np.asarray(sides, dtype=float)
            k = len(cols)

            # basic magnitudes beta = beta0 + sigma * beta1 (>= 0)
            beta0 = inv @ d[r_idx]
            beta1 = -inv @ (t[r_idx] * sd)
            free = np.ones(m, dtype=bool)
            free[r_idx] = False
            f_idx = np.flatnonzero(free)
            mfs = M[np.ix_(f_idx, c_idx)] * sg if k else np.zeros((len(f_idx), 0))
            s0 = d[f_idx] - mfs @ beta0
            s1 = -mfs @ beta1
            duals = np.zeros(m)
            duals[r_idx] = inv.T @ np.ones(k)

            # next breakpoint below sigma
            cand_sigma = []
            cand_kind = []   # 0: coefficient, +1/-1: slack hits upper/lower
            cand_pos = []
            hit = beta1 > _SLOPE_TOL
            for q in np.flatnonzero(hit):
                cand_sigma.append(-beta0[q] / beta1[q])
                cand_kind.append(0)
                cand_pos.append(q)
            up = t[f_idx] - s1
            lo = t[f_idx] + s1
            for i in np.flatnonzero(up > _SLOPE_TOL * t[f_idx]):
                cand_sigma.append(s0[i] / up[i])
                cand_kind.append(1)
                cand_pos.append(i)
            for i in np.flatnonzero(lo > _SLOPE_TOL * t[f_idx]):
                cand_sigma.append(-s0[i] / lo[i])
                cand_kind.append(-1)
                cand_pos.append(i)

            cand_sigma = np.minimum(np.asarray(cand_sigma, dtype=float), sigma)
            if cand_sigma.size == 0 or cand_sigma.max() <= floor:
                b0 = sg * beta0
                b1 = sg * beta1
                yield PathSegment(sigma, 0.0, c_idx.copy(), b0, b1, duals)
                return

            if stall >= STALL_THRESHOLD:
                # Bland: among blocking candidates at the top, lowest variable id
                top = cand_sigma.max()
                near = np.flatnonzero(cand_sigma >= top - 1e-12 * max(1.0, top))
                var_ids = [
                    c_idx[cand_pos[j]] if cand_kind[j] == 0
                    else p + f_idx[cand_pos[j]]
                    for j in near
                ]
                choice = near[int(np.argmin(var_ids))]
            else:
                choice = int(np.argmax(cand_sigma))
            sigma_next = float(max(cand_sigma[choice], 0.0))
            kind = cand_kind[choice]
            pos = cand_pos[choice]

            yield PathSegment(sigma, sigma_next, c_idx.copy(), sg * beta0,
                              sg * beta1, duals)
            if sigma_next <= 0.0:
                return
            stall = stall + 1 if sigma_next >= sigma else 0
            sigma = sigma_next

            # pivot row over nonbasic columns
            nb_cols = np.ones(p, dtype=bool)
            nb_cols[c_idx] = False
            nb_c = np.flatnonzero(nb_cols)
            if kind == 0:
                w = inv[pos]
                alpha_struct = w @ M[np.ix_(r_idx, nb_c)] if k else np.zeros(nb_c.size)
                alpha_slack = w.copy()
                goes_below = True
            else:
                j = f_idx[pos]
                w = (M[j, c_idx] * sg) @ inv if k else np.zeros(0)
                alpha_struct = M[j, nb_c] - (w @ M[np.ix_(r_idx, nb_c)] if k else 0.0)
                alpha_slack = -w
                goes_below = kind == -1

            g = duals[r_idx] @ M[np.ix_(r_idx, nb_c)] if k else np.zeros(nb_c.size)
            # candidate entering columns: b_l >= 0 (col M_l), b_l <= 0 (col -M_l),
            # and nonbasic slacks sitting at their bounds
            ent_ratio = []
            ent_ref = []
            for sgn, dcost in ((1.0, 1.0 - g), (-1.0, 1.0 + g)):
                a = sgn * alpha_struct
                # structural columns sit at their lower bound 0
                ok = (a < -_PIVOT_TOL) if goes_below else (a > _PIVOT_TOL)
                for idx in np.flatnonzero(ok):
                    ent_ratio.append(max(dcost[idx], 0.0) / abs(a[idx]))
                    ent_ref.append(("b", int(nb_c[idx]), sgn))
            if kind == 0:
                # the leaving coefficient may re-enter with the opposite sign:
                # pivot entry -1, reduced cost 2
                ent_ratio.append(2.0)
                ent_ref.append(("b", int(c_idx[pos]), -sg[pos]))
            for e in range(k):
                a = alpha_slack[e]
                at_upper = sd[e] > 0
                if goes_below:
                    ok = (a > _PIVOT_TOL) if at_upper else (a < -_PIVOT_TOL)
                else:
                    ok = (a < -_PIVOT_TOL) if at_upper else (a > _PIVOT_TOL)
                if ok:
                    dcost = -duals[r_idx[e]]
                    ent_ratio.append(abs(dcost) / abs(a))
                    ent_ref.append(("s", e, 0.0))

            if not ent_ratio:
                self.infeasible_below = sigma
                yield PathSegment(sigma, sigma, c_idx.copy(), sg * beta0,
                                  sg * beta1, duals, terminal_infeasible=True)
                return

            ent_ratio = np.asarray(ent_ratio)
            if stall >= STALL_THRESHOLD:
                best = ent_ratio.min()
                near = np.flatnonzero(ent_ratio <= best + 1e-12 * max(1.0, best))
                ids = [ent_ref[i][1] if ent_ref[i][0] == "b"
                       else p + r_idx[ent_ref[i][1]] for i in near]
                pick = ent_ref[near[int(np.argmin(ids))]]
            else:
                pick = ent_ref[int(np.argmin(ent_ratio))]

            # basis update
            if kind == 0:
                if pick[0] == "b":
                    cols[pos] = pick[1]
                    signs[pos] = pick[2]
                else:
                    e = pick[1]
                    del cols[pos], signs[pos], rows[e], sides[e]
            else:
                j = int(f_idx[pos])
                if pick[0] == "b":
                    cols.append(pick[1])
                    signs.append(pick[2])
                    rows.append(j)
                    sides.append(float(kind))
                else:
                    e = pick[1]
                    rows[e] = j
                    sides[e] = float(kind)
            inv = self._factor(rows, cols, np.asarray(signs, dtype=float))
            self.pivots += 1


def _solution(problem, b, sigma, duals, status):
    gap = problem.correlation_gap(b, sigma)
    return DantzigSolution(b=b, objective=float(np.abs(b).sum()), status=status,
                           constraint_slack=float(gap), sigma=float(sigma),
                           duals=duals)


def solve_at_sigma(problem: DantzigProblem, sigma: float) -> DantzigSolution:
    """Solve the program at a single scale ``sigma >= 0``.

    Returns an ``INFEASIBLE`` solution (with ``b`` all NaN) when no point
    satisfies the constraints; this can only happen with the residual side
    constraint or with ``sigma = 0`` on rank-deficient rows.
    """
    if not sigma >= 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    for seg in DantzigPath(problem):
        if seg.terminal_infeasible and sigma < seg.sigma_lo:
            return DantzigSolution(b=np.full(problem.p, np.nan),
                                   objective=np.nan,
                                   status=SolveStatus.INFEASIBLE,
                                   constraint_slack=np.nan, sigma=float(sigma))
        if sigma >= seg.sigma_lo:
            b = seg.coef(sigma, problem.p)
            return _solution(problem, b, sigma, seg.duals, SolveStatus.OPTIMAL)
    raise SolverError("path ended above requested sigma", sigma=sigma)


def certify_optimality(problem: DantzigProblem, sigma, sol: DantzigSolution,
                       tol=1e-7) -> bool:
    """Check a solution against its LP dual.

    The certificate is primal feasibility within :func:`feasibility_tolerance`,
    dual feasibility ``||M^T y||_inf <= 1``, complementary slackness between
    ``y`` and the active rows and between ``M^T y`` and the signs of ``b``,
    and a zero duality gap.
    """
    if sol.status is not SolveStatus.OPTIMAL or sol.duals is None:
        return False
    M, d, t = problem.rows()
    b = np.asarray(sol.b, dtype=float)
    y = np.asarray(sol.duals, dtype=float)
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(y))):
        return False
    slack = d - M @ b
    bound = sigma * t
    if np.any(np.abs(slack) > bound + feasibility_tolerance(bound.max(initial=0))):
        return False
    mty = M.T @ y
    if np.any(np.abs(mty) > 1.0 + tol):
        return False
    scale = max(1.0, np.abs(b).max(initial=0.0))
    for j in np.flatnonzero(np.abs(y) > tol):
        if abs(slack[j] - np.sign(y[j]) * bound[j]) > tol * max(1.0, bound[j]) * scale:
            return False
    for k in np.flatnonzero(np.abs(b) > tol * scale):
        if abs(mty[k] - np.sign(b[k])) > tol:
            return False
    primal = np.abs(b).sum()
    dual = d @ y - sigma * (t @ np.abs(y))
    return abs(primal - dual) <= tol * max(1.0, primal)
