"""Monte-Carlo rejection-rate experiments over a grid of deviations ``h``.

Replication ``r`` draws its data from stream ``(seed, r)`` and its critical
value from a seed derived from the same pair.  The draws do not depend on
``h``, so all grid points of one replication share designs, noise and the
column fits of ``Z`` on ``W``; only ``beta_B`` moves.  Reports are therefore
identical whatever the number of worker processes.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .adds import eta_adaptive
from .model import convolve
from .procedure import TiersConfig, Variant, estimate_pi, run_tiers, run_tiers_plus
from .simgen import GGM_REGIMES, REGRESSION_REGIMES, gen_ggm, gen_regression

__all__ = [
    "PRESETS",
    "ExperimentSpec",
    "ExperimentReport",
    "ExperimentAborted",
    "run_experiment",
    "worker_count",
    "load_spec",
]

PRESETS = {
    "desk": {"n": 100, "p": 150, "reps": 200},
    "paper": {"n": 200, "p": 500, "reps": 100},
}
MAX_FAILURE_FRACTION = 0.2


class ExperimentAborted(RuntimeError):
    """More than a fifth of the replications at some ``h`` failed."""


@dataclass(frozen=True)
class ExperimentSpec:
    """One rejection-rate study.

    ``study`` is ``"regression"`` (regimes SL, SH, DL, DH with covariance
    ratio ``c``) or ``"ggm"`` (regimes SS, DS, SD, DD; ``c`` is ignored).
    """

    study: str = "regression"
    regime: str = "SL"
    c: float = 2.0
    n: int = 100
    p: int = 150
    h_grid: tuple = (0.0,)
    reps: int = 200
    alpha: float = 0.05
    variant: str = "tiers"
    seed: int = 0
    draws: int = 2000
    mu_scale: float = 1.0
    weighted_qhat: bool = False

    def __post_init__(self):
        object.__setattr__(self, "h_grid", tuple(float(h) for h in self.h_grid))
        object.__setattr__(self, "regime", str(self.regime).upper())
        if self.study not in ("regression", "ggm"):
            raise ValueError(f"study must be 'regression' or 'ggm', got {self.study!r}")
        allowed = REGRESSION_REGIMES if self.study == "regression" else GGM_REGIMES
        if self.regime not in allowed:
            raise ValueError(f"regime {self.regime!r} not in {allowed}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not self.h_grid:
            raise ValueError("h_grid is empty")
        Variant(self.variant)
        TiersConfig(draws=self.draws, mu_scale=self.mu_scale)

    @classmethod
    def from_preset(cls, preset, **overrides):
        if preset not in PRESETS:
            raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        kw = dict(PRESETS[preset])
        if overrides.get("study") == "ggm":
            # p = 150 has no valid block split; 148 is the nearest size that does
            kw["p"] = {150: 148}.get(kw["p"], kw["p"])
        kw.update(overrides)
        return cls(**kw)

    def config_hash(self):
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class ExperimentReport:
    spec: ExperimentSpec
    rows: list
    seeds: dict
    version: str
    config_hash: str
    metadata: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "spec": asdict(self.spec),
            "rows": self.rows,
            "seeds": self.seeds,
            "version": self.version,
            "config_hash": self.config_hash,
        }

    def to_json(self):
        """Canonical JSON without timing metadata; byte-stable across runs."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def metadata_json(self):
        return json.dumps(self.metadata, sort_keys=True, indent=2) + "\n"

    def to_csv(self):
        lines = ["h,reps,rejections,failures,rate,se"]
        for r in self.rows:
            lines.append(f"{r['h']!r},{r['reps']},{r['rejections']},{r['failures']},"
                         f"{r['rate']!r},{r['se']!r}")
        return "\n".join(lines) + "\n"

    def rate(self, h):
        for r in self.rows:
            if r["h"] == h:
                return r["rate"]
        raise KeyError(h)


def worker_count(requested=None):
    """Pool size: ``requested``, else ``TIERS_THREADS``, else one."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("TIERS_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _sim_seed(seed, rep):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(rep), 1))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _generate(spec, h, rep):
    if spec.study == "regression":
        return gen_regression(spec.regime, spec.c, h, spec.n, spec.p, spec.seed, rep)
    return gen_ggm(spec.regime, h, spec.n, spec.p, spec.seed, rep)


def _one_rep(args):
    """All grid points of one replication: list of (reject, t_n, error)."""
    spec, rep = args
    start = time.perf_counter()
    cfg = TiersConfig(draws=spec.draws, seed=_sim_seed(spec.seed, rep),
                      mu_scale=spec.mu_scale, weighted_qhat=spec.weighted_qhat)
    runner = run_tiers if Variant(spec.variant) is Variant.TIERS else run_tiers_plus
    out = []
    pi_est = None
    for h in spec.h_grid:
        try:
            data, _ = _generate(spec, h, rep)
            if pi_est is None:
                conv = convolve(data)
                pi_est = estimate_pi(conv, eta_adaptive(conv.w))
            res = runner(data, spec.alpha, cfg, pi_est=pi_est)
            out.append((bool(res.reject), res.t_n, None))
        except Exception as exc:  # failed reps are recorded, not dropped
            out.append((False, math.nan, f"{type(exc).__name__}: {exc}"))
    return out, time.perf_counter() - start


def run_experiment(spec: ExperimentSpec, workers=None) -> ExperimentReport:
    """Run every replication at every ``h`` and tabulate rejection rates.

    Raises
    ------
    ExperimentAborted
        If more than 20% of the replications fail at any ``h``.
    """
    nworkers = worker_count(workers)
    jobs = [(spec, rep) for rep in range(spec.reps)]
    t0 = time.perf_counter()
    if nworkers == 1:
        results = [_one_rep(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            results = list(pool.map(_one_rep, jobs, chunksize=max(1, len(jobs) // (4 * nworkers))))
    elapsed = time.perf_counter() - t0

    rows = []
    for k, h in enumerate(spec.h_grid):
        cells = [res[k] for res, _ in results]
        rejections = sum(c[0] for c in cells)
        errors = [c[2] for c in cells if c[2] is not None]
        if len(errors) > MAX_FAILURE_FRACTION * spec.reps:
            raise ExperimentAborted(
                f"{len(errors)} of {spec.reps} replications failed at h={h}; "
                f"first error: {errors[0]}")
        rate = rejections / spec.reps
        t_vals = [c[1] for c in cells if c[2] is None]
        rows.append({
            "h": h,
            "reps": spec.reps,
            "rejections": rejections,
            "failures": len(errors),
            "rate": rate,
            "se": math.sqrt(rate * (1 - rate) / spec.reps),
            "mean_t_n": float(np.mean(t_vals)) if t_vals else None,
        })
    seeds = {
        "experiment": spec.seed,
        "data_streams": f"(seed, rep) for rep in 0..{spec.reps - 1}",
        "simulation": [_sim_seed(spec.seed, r) for r in range(spec.reps)],
    }
    return ExperimentReport(
        spec=spec,
        rows=rows,
        seeds=seeds,
        version=__version__,
        config_hash=spec.config_hash(),
        metadata={
            "workers": nworkers,
            "wall_clock_total_s": elapsed,
            "wall_clock_per_rep_s": [t for _, t in results],
            "finished_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        },
    )


def load_spec(path):
    """Read an ``ExperimentSpec`` from a flat TOML file.

    An optional ``preset`` key (``desk`` or ``paper``) supplies defaults for
    ``n``, ``p`` and ``reps``.
    """
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    preset = raw.pop("preset", None)
    known = set(ExperimentSpec.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValueError(f"{path}: unknown keys {unknown}")
    if preset is not None:
        return ExperimentSpec.from_preset(preset, **raw)
    return ExperimentSpec(**raw)
