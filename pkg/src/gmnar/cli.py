"""Command-line interface: simulate / fit / select / infer / benchmark.

Exit codes: 0 success, 2 invalid configuration or malformed JSON,
3 non-stationary parameters, 4 dimension mismatch between dataset files.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .benchmark import (BenchmarkConfig, aggregate, format_table_row,
                        run_benchmark)
from .dataio import (DimensionMismatchError, read_bundle, truth_dict,
                     truth_objects, write_bundle)
from .estimate import FitOptions, fit
from .inference import infer
from .metrics import misclustering_majority, pseudo_distance
from .select import select_group_numbers
from .simulate import NonStationaryError, SimConfig, simulate_gmnar

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_NONSTATIONARY = 3
EXIT_DIM_MISMATCH = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _load_sim_config(path) -> SimConfig:
    try:
        with open(path) as f:
            text = f.read()
        return SimConfig.from_json(text)
    except (OSError, json.JSONDecodeError, TypeError, KeyError,
            ValueError) as exc:
        raise CliError(f"invalid config: {exc}", EXIT_BAD_CONFIG) from exc


def _fit_options(args) -> FitOptions:
    return FitOptions(
        max_iter=getattr(args, "max_iter", 100),
        n_init=getattr(args, "n_init", 5),
        seed=getattr(args, "seed", 0) or 0,
    )


def cmd_simulate(args) -> int:
    cfg = _load_sim_config(args.config)
    try:
        data, nets, assign, params = simulate_gmnar(cfg)
    except NonStationaryError as exc:
        raise CliError(str(exc), EXIT_NONSTATIONARY) from exc
    truth = truth_dict(assign, params, cfg.noise_sd)
    write_bundle(args.out, data, nets, truth=truth,
                 config=json.loads(cfg.to_json()), seed=cfg.seed)
    print(f"wrote dataset bundle to {args.out} "
          f"(N1={data.N1}, N2={data.N2}, T={data.T})")
    return EXIT_OK


def _read(args):
    try:
        return read_bundle(args.data)
    except (DimensionMismatchError,) as exc:
        raise CliError(f"dimension mismatch: {exc}", EXIT_DIM_MISMATCH) from exc
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise CliError(f"cannot read bundle: {exc}", EXIT_BAD_CONFIG) from exc


def _fit_report(res, data, truth) -> dict:
    report = {
        "G": res.assign.G, "H": res.assign.H,
        "params": {
            "lam": res.params.lam.tolist(),
            "gamma": res.params.gamma.tolist(),
            "alpha": res.params.alpha.tolist(),
            "zeta": res.params.zeta.tolist(),
            "delta": res.params.delta.tolist(),
        },
        "row_labels": res.assign.g.tolist(),
        "col_labels": res.assign.h.tolist(),
        "q_value": res.q_value,
        "q_trace": res.q_trace,
        "sigma2_hat": res.sigma2_hat,
        "iterations": res.iterations,
        "converged": res.converged,
        "degenerate": res.degenerate,
        "effective_G": res.effective_G,
        "effective_H": res.effective_H,
    }
    if truth is not None:
        t_assign, t_params = truth_objects(truth)
        report["vs_truth"] = {
            "pseudo_distance": pseudo_distance(
                (res.params, res.assign), (t_params, t_assign)),
            "xi1": misclustering_majority(res.assign.g, t_assign.g,
                                          res.assign.G, t_assign.G),
            "xi2": misclustering_majority(res.assign.h, t_assign.h,
                                          res.assign.H, t_assign.H),
        }
    return report


def cmd_fit(args) -> int:
    _, data, nets, truth = _read(args)
    if args.g < 1 or args.h < 1:
        raise CliError("G and H must be >= 1", EXIT_BAD_CONFIG)
    res = fit(data, nets, args.g, args.h, _fit_options(args))
    report = _fit_report(res, data, truth)
    _write_json(args.out, report)
    print(f"fit (G={args.g}, H={args.h}): Q={res.q_value:.6g}, "
          f"converged={res.converged}")
    return EXIT_OK


def cmd_select(args) -> int:
    _, data, nets, _ = _read(args)
    sel = select_group_numbers(data, nets, Gmax=args.gmax, Hmax=args.hmax,
                               diagonal=args.diagonal,
                               opts=_fit_options(args))
    _write_json(args.out, sel.to_report())
    print(f"selected (G, H) = {sel.chosen}")
    return EXIT_OK


def cmd_infer(args) -> int:
    _, data, nets, truth = _read(args)
    res = fit(data, nets, args.g, args.h, _fit_options(args))
    inf_res = infer(res, data, nets, level=args.level)
    report = {"fit": _fit_report(res, data, truth),
              "inference": inf_res.to_report()}
    _write_json(args.out, report)
    print(f"inference written to {args.out}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    threads = args.threads
    env = os.environ.get("GMNAR_THREADS")
    if env:
        threads = int(env)
    t_list = [int(t) for t in args.t.split(",")]
    os.makedirs(args.out, exist_ok=True)
    aggregates = []
    for T in t_list:
        cfg = BenchmarkConfig(
            scenario=args.scenario, N1=args.n1, N2=args.n2, T=T,
            reps=args.reps, seed=args.seed, network_kind=args.network,
            fit_G=args.g, fit_H=args.h, n_init=args.n_init,
            do_select=args.select, select_gmin=args.gmin,
            select_gmax=args.gmax, select_hmin=args.hmin,
            select_hmax=args.hmax, select_diagonal=args.diagonal)
        outcomes = run_benchmark(cfg, threads=threads)
        aggregates.append(aggregate(cfg, outcomes))
    _write_json(os.path.join(args.out, "benchmark.json"),
                {"settings": aggregates})
    _write_benchmark_csv(os.path.join(args.out, "benchmark.csv"), aggregates)
    with open(os.path.join(args.out, "benchmark.txt"), "w") as f:
        for agg in aggregates:
            f.write(format_table_row(agg) + "\n")
    for agg in aggregates:
        print(format_table_row(agg))
    return EXIT_OK


def _write_benchmark_csv(path, aggregates):
    """One row per metric x setting, stable key order and formatting."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["scenario", "network", "N1", "N2", "T", "metric",
                    "value"])
        for agg in aggregates:
            head = [agg["scenario"], agg["network"], agg["N1"], agg["N2"],
                    agg["T"]]
            for key in sorted(agg):
                val = agg[key]
                if key in ("scenario", "network", "N1", "N2", "T",
                           "failures"):
                    continue
                if key == "selection":
                    for dim in ("rho_G", "rho_H"):
                        for cand, rate in sorted(val[dim].items()):
                            w.writerow(head + [f"{dim}[{cand}]",
                                               "%.10g" % rate])
                    continue
                if isinstance(val, float):
                    val = "%.10g" % val
                w.writerow(head + [key, val])


def _write_json(path, obj) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gmnar",
        description="Group matrix network autoregression toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="simulate a dataset bundle")
    ps.add_argument("--config", required=True)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_simulate)

    pf = sub.add_parser("fit", help="fit with fixed group numbers")
    pf.add_argument("--data", required=True)
    pf.add_argument("--g", type=int, required=True)
    pf.add_argument("--h", type=int, required=True)
    pf.add_argument("--out", required=True)
    pf.add_argument("--n-init", dest="n_init", type=int, default=5)
    pf.add_argument("--seed", type=int, default=0)
    pf.set_defaults(func=cmd_fit)

    pl = sub.add_parser("select", help="select group numbers by QIC")
    pl.add_argument("--data", required=True)
    pl.add_argument("--gmax", type=int, default=5)
    pl.add_argument("--hmax", type=int, default=5)
    pl.add_argument("--diagonal", action="store_true",
                    help="restrict the search to G = H candidates")
    pl.add_argument("--out", required=True)
    pl.add_argument("--n-init", dest="n_init", type=int, default=5)
    pl.add_argument("--seed", type=int, default=0)
    pl.set_defaults(func=cmd_select)

    pi = sub.add_parser("infer", help="fit and compute standard errors")
    pi.add_argument("--data", required=True)
    pi.add_argument("--g", type=int, required=True)
    pi.add_argument("--h", type=int, required=True)
    pi.add_argument("--level", type=float, default=0.95)
    pi.add_argument("--out", required=True)
    pi.add_argument("--n-init", dest="n_init", type=int, default=5)
    pi.add_argument("--seed", type=int, default=0)
    pi.set_defaults(func=cmd_infer)

    pb = sub.add_parser("benchmark", help="seeded Monte Carlo replications")
    pb.add_argument("--scenario", type=int, default=1)
    pb.add_argument("--n1", type=int, default=100)
    pb.add_argument("--n2", type=int, default=80)
    pb.add_argument("--t", default="20", help="comma-separated T values")
    pb.add_argument("--reps", type=int, default=10)
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--network", choices=["sbm", "powerlaw"], default="sbm")
    pb.add_argument("--g", type=int, default=None,
                    help="fitted row groups (default: truth)")
    pb.add_argument("--h", type=int, default=None)
    pb.add_argument("--n-init", dest="n_init", type=int, default=3)
    pb.add_argument("--select", action="store_true")
    pb.add_argument("--gmin", type=int, default=1)
    pb.add_argument("--gmax", type=int, default=5)
    pb.add_argument("--hmin", type=int, default=1)
    pb.add_argument("--hmax", type=int, default=5)
    pb.add_argument("--diagonal", action="store_true",
                    help="restrict selection to G = H candidates")
    pb.add_argument("--threads", type=int, default=1)
    pb.add_argument("--out", required=True)
    pb.set_defaults(func=cmd_benchmark)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
