"""Command-line interface: ``tiers <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .baselines import NaiveDemoConfig, lr_noncentrality, lr_oracle_power, naive_size_curve
from .harness import PRESETS, ExperimentSpec, load_spec, run_experiment
from .io import CsvFormatError, dump_csv, ingest_csv
from .model import DimensionError, TwoSampleData
from .procedure import TiersConfig, run_tiers, run_tiers_plus
from .simgen import gen_ggm, gen_regression


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _cmd_test(args):
    paths = {"x_a": args.xa, "y_a": args.ya, "x_b": args.xb, "y_b": args.yb}
    arrays = {}
    for key, path in paths.items():
        arrays[key] = ingest_csv(path, "matrix" if key.startswith("x") else "vector")
    try:
        data = TwoSampleData(**arrays)
    except DimensionError as exc:
        shapes = ", ".join(f"{paths[k]} {arrays[k].shape}" for k in paths)
        raise DimensionError(f"{exc} [{shapes}]", exc.axis) from exc
    cfg = TiersConfig(draws=args.draws, seed=args.seed, eta=args.eta,
                      mu_scale=args.mu_scale, weighted_qhat=args.weighted_qhat)
    runner = run_tiers_plus if args.variant == "tiers+" else run_tiers
    res = runner(data, args.alpha, cfg)
    print(json.dumps(res.to_dict(), indent=2))
    return 0


def _cmd_experiment(args):
    if args.config:
        spec = load_spec(args.config)
    else:
        overrides = {k: v for k, v in {
            "study": args.study, "regime": args.regime, "c": args.c,
            "h_grid": _floats(args.h_grid) if args.h_grid else None,
            "reps": args.reps, "n": args.n, "p": args.p, "seed": args.seed,
            "alpha": args.alpha, "variant": args.variant, "draws": args.draws,
        }.items() if v is not None}
        spec = ExperimentSpec.from_preset(args.preset, **overrides)
    report = run_experiment(spec, workers=args.threads)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "report.csv").write_text(report.to_csv())
    (out / "metadata.json").write_text(report.metadata_json())
    sys.stdout.write(report.to_json())
    return 0


def _cmd_naive(args):
    cfg = NaiveDemoConfig(n=args.n, p=args.p, c_grid=_floats(args.c_grid),
                          alpha=args.alpha, outer_reps=args.outer_reps,
                          inner_draws=args.inner_draws, seed=args.seed)
    lines = ["c,m_hat,se"]
    lines += [f"{pt.c!r},{pt.m_hat!r},{pt.se!r}" for pt in naive_size_curve(cfg)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def _cmd_oracle(args):
    gamma = np.array(_floats(args.gamma))
    sigma_b = ingest_csv(args.sigma_b) if args.sigma_b else np.eye(gamma.size)
    out = {
        "d_n": lr_noncentrality(gamma, sigma_b, args.sigma_u_b, args.n),
        "power": lr_oracle_power(gamma, sigma_b, args.sigma_u_b, args.n, args.alpha),
    }
    print(json.dumps(out, indent=2))
    return 0


_FILES = ("xa.csv", "ya.csv", "xb.csv", "yb.csv")


def _generate(params):
    if params["study"] == "regression":
        return gen_regression(params["regime"], params["c"], params["h"],
                              params["n"], params["p"], params["seed"], params["stream"])
    return gen_ggm(params["regime"], params["h"], params["n"], params["p"],
                   params["seed"], params["stream"])


def _cmd_fixtures(args):
    if args.action == "dump":
        params = {"study": args.study, "regime": args.regime.upper(), "c": args.c,
                  "h": args.h, "n": args.n, "p": args.p, "seed": args.seed,
                  "stream": args.stream}
        data, truth = _generate(params)
        out = Path(args.dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, arr in zip(_FILES, (data.x_a, data.y_a, data.x_b, data.y_b)):
            dump_csv(out / name, arr)
        meta = {"params": params, "theta_star": truth.theta_star.tolist(),
                "gamma_star": truth.gamma_star.tolist(),
                "sigma_star_proxy": truth.sigma_star_proxy}
        (out / "truth.json").write_text(json.dumps(meta, indent=2) + "\n")
        print(json.dumps({"written": str(out), "files": list(_FILES) + ["truth.json"]}))
        return 0
    src = Path(args.dir)
    params = json.loads((src / "truth.json").read_text())["params"]
    data, _ = _generate(params)
    match = all(
        np.array_equal(ingest_csv(src / name, "matrix" if name[0] == "x" else "vector"), arr)
        for name, arr in zip(_FILES, (data.x_a, data.y_a, data.x_b, data.y_b)))
    print(json.dumps({"dir": str(src), "match": bool(match)}))
    return 0 if match else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="tiers", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="test equality of coefficients on CSV data")
    for flag in ("--xa", "--ya", "--xb", "--yb"):
        t.add_argument(flag, required=True)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--variant", choices=("tiers", "tiers+"), default="tiers")
    t.add_argument("--draws", type=int, default=2000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--eta", type=float, default=None)
    t.add_argument("--mu-scale", type=float, default=1.0)
    t.add_argument("--weighted-qhat", action="store_true")
    t.set_defaults(func=_cmd_test)

    e = sub.add_parser("experiment", help="rejection rates over an h grid")
    e.add_argument("--config", help="flat TOML file with ExperimentSpec fields")
    e.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    e.add_argument("--study", choices=("regression", "ggm"))
    e.add_argument("--regime")
    e.add_argument("--c", type=float)
    e.add_argument("--h-grid", help="comma-separated h values")
    e.add_argument("--reps", type=int)
    e.add_argument("--n", type=int)
    e.add_argument("--p", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--alpha", type=float)
    e.add_argument("--variant", choices=("tiers", "tiers+"))
    e.add_argument("--draws", type=int)
    e.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: TIERS_THREADS or 1)")
    e.add_argument("--out-dir", default=".")
    e.set_defaults(func=_cmd_experiment)

    nv = sub.add_parser("naive-demo", help="size curve of the naive max test")
    nv.add_argument("--n", type=int, default=100)
    nv.add_argument("--p", type=int, default=300)
    nv.add_argument("--c-grid", default="0,0.001,0.002,0.01,0.1,0.3,1,2")
    nv.add_argument("--alpha", type=float, default=0.05)
    nv.add_argument("--outer-reps", type=int, default=100)
    nv.add_argument("--inner-draws", type=int, default=4000)
    nv.add_argument("--seed", type=int, default=0)
    nv.add_argument("--out", help="also write the CSV here (e.g. figure1.csv)")
    nv.set_defaults(func=_cmd_naive)

    o = sub.add_parser("oracle-power", help="power of the oracle likelihood-ratio test")
    o.add_argument("--gamma", required=True, help="comma-separated coefficients")
    o.add_argument("--sigma-b", help="CSV covariance of x_B (default identity)")
    o.add_argument("--sigma-u-b", type=float, default=1.0)
    o.add_argument("--n", type=int, required=True)
    o.add_argument("--alpha", type=float, default=0.05)
    o.set_defaults(func=_cmd_oracle)

    f = sub.add_parser("fixtures", help="dump or replay a synthetic dataset")
    f.add_argument("action", choices=("dump", "replay"))
    f.add_argument("dir")
    f.add_argument("--study", choices=("regression", "ggm"), default="regression")
    f.add_argument("--regime", default="SL")
    f.add_argument("--c", type=float, default=2.0)
    f.add_argument("--h", type=float, default=0.0)
    f.add_argument("--n", type=int, default=100)
    f.add_argument("--p", type=int, default=150)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--stream", type=int, default=0)
    f.set_defaults(func=_cmd_fixtures)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CsvFormatError, DimensionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
