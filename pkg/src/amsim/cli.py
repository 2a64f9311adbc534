"""Command-line front end.

Subcommands ``estimate``, ``direct-mc``, ``sweep-epsilon``, ``trajectories``
and ``bifurcation`` read an INI configuration (plus ``--set`` overrides and
``--seed``), run the requested experiment, and write delimited outputs, a
JSON manifest, and rendered figures into ``--output``.

Every CSV starts with a ``# manifest: <id>`` comment naming the manifest it
belongs to; the manifest id is a digest of the resolved configuration and
seed, so a rerun with the same inputs reproduces the same id and the same
CSV bytes.  Wall-clock duration lives only in the manifest, never in the
CSVs, keeping the delimited outputs bit-identical across reruns and worker
counts.

Exit codes: 0 success, 2 configuration error, 3 extinction or
non-convergence, 4 step-budget timeout.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, bifurcation, plotting, trajio
from .config import build_ams, load_config
from .errors import (
    AbsorbedTimeoutError,
    ConfigError,
    ExtinctionError,
    InvalidArgumentError,
    NotConvergedError,
)
from .model import KIND_CHAIN, kappa_from_gamma
from .rare_event import ams_estimate, crossing_positions, direct_mc_estimate
from .rng import child_seed, generic_rng
from .stats import dip_test, freedman_diaconis_bins, linear_fit

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_TIMEOUT = 4


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _manifest_id(config: dict, seed: int) -> str:
    blob = json.dumps({"config": config, "seed": seed}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


class Reporter:
    """Collects output files and writes the run manifest."""

    def __init__(self, experiment: str, config: dict, seed: int, out_dir: str):
        self.experiment = experiment
        self.config = config
        self.seed = seed
        self.out_dir = out_dir
        self.manifest_id = _manifest_id(config, seed)
        self.outputs = []
        self.started = time.perf_counter()
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        self.outputs.append(name)
        return os.path.join(self.out_dir, name)

    def write_csv(self, name: str, header, rows) -> str:
        path = self.path(name)
        with open(path, "w") as fh:
            fh.write(f"# manifest: {self.manifest_id}\n")
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
        return path

    def finish(self) -> str:
        manifest = {
            "id": self.manifest_id,
            "experiment": self.experiment,
            "config": self.config,
            "seed": self.seed,
            "version": __version__,
            "duration_seconds": time.perf_counter() - self.started,
            "outputs": sorted(self.outputs),
        }
        path = os.path.join(self.out_dir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(manifest, fh, indent=2, default=str)
            fh.write("\n")
        return path


def _pool_map(fn, items):
    """Map preserving item order, parallel when AMS_WORKERS allows."""
    workers = os.environ.get("AMS_WORKERS", "")
    workers = int(workers) if workers else (os.cpu_count() or 1)
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _run_realizations(config: dict, seed: int, n_mc: int):
    """n_mc independent splitting runs with decorrelated child seeds.

    Each realization runs single-worker inside the pool; the estimator is
    worker-independent, so this matches a sequential run bit for bit.
    """

    def one(r):
        cfg = build_ams(config, child_seed(seed, r))
        try:
            return ams_estimate(cfg, workers=1), None
        except (ExtinctionError, NotConvergedError) as exc:
            return None, exc

    return _pool_map(one, list(range(n_mc)))


_SUMMARY_HEADER = [
    "experiment", "kind", "n", "gamma", "epsilon", "dt", "n_rep", "k_rep",
    "n_mc", "seed", "estimate", "std", "mean_iterations", "tie_events",
    "n_extinct", "n_not_converged",
]


def _summary_row(config, seed, estimates, iterations, ties, n_extinct, n_not_converged,
                 epsilon=None):
    m, a, e = config["model"], config["ams"], config["experiment"]
    estimates = np.asarray(estimates, dtype=float)
    mean = float(estimates.mean()) if estimates.size else float("nan")
    std = float(estimates.std(ddof=1)) if estimates.size > 1 else 0.0
    return [
        e["name"], m["kind"], m["n"], m["gamma"],
        m["epsilon"] if epsilon is None else epsilon, m["dt"], a["n_rep"],
        a["k_rep"], e["n_mc"], seed, mean, std,
        float(np.mean(iterations)) if iterations else float("nan"),
        int(sum(ties)), n_extinct, n_not_converged,
    ]


def _collect(results):
    estimates, iterations, ties = [], [], []
    n_extinct = n_not_converged = 0
    for out, err in results:
        if err is None:
            estimates.append(out.estimate)
            iterations.append(out.q_iterations)
            ties.append(out.tie_events)
        elif isinstance(err, ExtinctionError):
            n_extinct += 1
        else:
            n_not_converged += 1
    return estimates, iterations, ties, n_extinct, n_not_converged


def cmd_estimate(config: dict, reporter: Reporter) -> int:
    seed = config["experiment"]["seed"]
    n_mc = config["experiment"]["n_mc"]
    results = _run_realizations(config, seed, n_mc)
    estimates, iterations, ties, n_extinct, n_not_converged = _collect(results)
    reporter.write_csv("summary.csv", _SUMMARY_HEADER, [
        _summary_row(config, seed, estimates, iterations, ties, n_extinct, n_not_converged)])
    if len(estimates) > 1:
        plotting.plot_estimate_histogram(estimates, reporter.path("estimates.png"))
    if n_extinct or n_not_converged:
        print(f"{n_extinct} extinct, {n_not_converged} not-converged "
              f"realizations out of {n_mc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_direct_mc(config: dict, reporter: Reporter) -> int:
    seed = config["experiment"]["seed"]
    n_samples = config["direct_mc"]["n_samples"]
    cfg = build_ams(config, seed)
    p_hat, std_err = direct_mc_estimate(cfg, n_samples)
    m, a, e = config["model"], config["ams"], config["experiment"]
    reporter.write_csv(
        "summary.csv",
        ["experiment", "kind", "n", "gamma", "epsilon", "dt", "n_samples",
         "seed", "estimate", "std_err"],
        [[e["name"], m["kind"], m["n"], m["gamma"], m["epsilon"], m["dt"],
          n_samples, seed, p_hat, std_err]])
    return EXIT_OK


def cmd_sweep_epsilon(config: dict, reporter: Reporter) -> int:
    seed = config["experiment"]["seed"]
    n_mc = config["experiment"]["n_mc"]
    epsilons = config["sweep"]["epsilons"]
    if len(epsilons) < 3:
        raise InvalidArgumentError("sweep needs at least 3 epsilon values")
    rows, points = [], []
    failure = None
    for i, eps in enumerate(epsilons):
        run_config = json.loads(json.dumps(config))
        run_config["model"]["epsilon"] = eps
        try:
            results = _run_realizations(run_config, child_seed(seed, 1000 + i), n_mc)
        except AbsorbedTimeoutError as exc:
            failure = exc
            break
        estimates, iterations, ties, n_extinct, n_not_converged = _collect(results)
        rows.append(_summary_row(
            run_config, seed, estimates, iterations, ties, n_extinct,
            n_not_converged, epsilon=eps))
        if estimates and np.mean(estimates) > 0:
            points.append((1.0 / eps, float(np.log(np.mean(estimates)))))
        if n_extinct or n_not_converged:
            failure = NotConvergedError(
                0, f"epsilon={eps}: {n_extinct} extinct, {n_not_converged} not converged")
            break
    reporter.write_csv("summary.csv", _SUMMARY_HEADER, rows)
    if len(points) >= 2:
        inv_eps = [p[0] for p in points]
        log_p = [p[1] for p in points]
        fit = linear_fit(inv_eps, log_p)
        reporter.write_csv(
            "fit.csv", ["slope", "intercept", "r_squared", "n_points"],
            [[fit.slope, fit.intercept, fit.r_squared, len(points)]])
        plotting.plot_decay_fit(inv_eps, log_p, fit, reporter.path("decay_fit.png"))
    if failure is not None:
        print(f"sweep aborted, partial results saved: {failure}", file=sys.stderr)
        if isinstance(failure, AbsorbedTimeoutError):
            return EXIT_TIMEOUT
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_trajectories(config: dict, reporter: Reporter) -> int:
    seed = config["experiment"]["seed"]
    cfg = build_ams(config, seed)
    out = ams_estimate(cfg)
    p = cfg.stepper.params
    runs = out.reactive_trajectories[: config["trajectories"]["max_exported"]]
    for i, run in enumerate(runs):
        trajio.write_trajectory_bin(reporter.path(f"traj_{i:03d}.bin"), run.states)
        trajio.write_trajectory_csv(
            reporter.path(f"traj_{i:03d}.csv"), run.states, p.dt,
            header_comment=f"manifest: {reporter.manifest_id}")
    if p.kind == KIND_CHAIN and p.n == 2:
        level = config["trajectories"]["crossing_level"]
        values = []
        for run in out.reactive_trajectories:
            for state in crossing_positions(run, level):
                values.append(0.5 * (state[0] - state[1]))
        values = np.asarray(values)
        bins = freedman_diaconis_bins(values)
        counts, edges = np.histogram(values, bins=bins)
        centers = 0.5 * (edges[:-1] + edges[1:])
        reporter.write_csv(
            "hist.csv", ["bin_center", "count"],
            [[c, int(k)] for c, k in zip(centers, counts)])
        # the dip scan is quadratic in the sample size; a subsample keeps the
        # test cheap without blurring well-separated modes
        if values.size > 2000:
            idx = generic_rng(seed, tag=1).choice(values.size, 2000, replace=False)
            dip_sample = values[idx]
        else:
            dip_sample = values
        dip = dip_test(dip_sample, n_boot=200, seed=seed)
        reporter.write_csv(
            "hist_stats.csv",
            ["n_crossings", "mean", "std", "dip_statistic", "dip_p_value"],
            [[values.size, float(values.mean()), float(values.std(ddof=1)),
              dip.statistic, dip.p_value]])
        plotting.plot_crossing_histogram(values, reporter.path("crossings.png"))
        plotting.plot_two_particle_trajectories(
            [run.states for run in runs],
            bifurcation.critical_points_2d(kappa_from_gamma(p.gamma)),
            reporter.path("trajectories.png"))
    elif p.kind != KIND_CHAIN and runs:
        plotting.plot_space_time(runs[0].states, p.dt, reporter.path("space_time.png"))
    m, e = config["model"], config["experiment"]
    reporter.write_csv(
        "summary.csv",
        ["experiment", "kind", "n", "gamma", "epsilon", "dt", "n_rep", "seed",
         "estimate", "iterations", "tie_events", "n_exported"],
        [[e["name"], m["kind"], m["n"], m["gamma"], m["epsilon"], m["dt"],
          cfg.n_rep, seed, out.estimate, out.q_iterations, out.tie_events,
          len(runs)]])
    return EXIT_OK


def cmd_bifurcation(config: dict, reporter: Reporter) -> int:
    kappas = config["bifurcation"]["kappas"]
    rows, point_sets = [], []
    for kappa in kappas:
        regime = bifurcation.classify_regime_2d(kappa)
        points = bifurcation.critical_points_2d(kappa)
        point_sets.append(points)
        for cp in points:
            rows.append([
                kappa, regime, cp.location[0], cp.location[1],
                cp.classification, cp.hessian_eigenvalues[0],
                cp.hessian_eigenvalues[1], cp.residual])
    reporter.write_csv(
        "summary.csv",
        ["kappa", "regime", "x", "y", "classification", "eig_low", "eig_high",
         "residual"], rows)
    plotting.plot_bifurcation_diagram(
        [k for k, pts in zip(kappas, point_sets) for _ in pts],
        [[cp] for pts in point_sets for cp in pts],
        reporter.path("bifurcation.png"))
    return EXIT_OK


_COMMANDS = {
    "estimate": cmd_estimate,
    "direct-mc": cmd_direct_mc,
    "sweep-epsilon": cmd_sweep_epsilon,
    "trajectories": cmd_trajectories,
    "bifurcation": cmd_bifurcation,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amsim",
        description="Rare-event simulation for metastable gradient systems")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", default=None, help="INI configuration file")
        cmd.add_argument("--set", dest="overrides", action="append", default=[],
                         metavar="SECTION.KEY=VALUE", help="override one config key")
        cmd.add_argument("--seed", type=int, default=None, help="master seed")
        cmd.add_argument("--output", default=".", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.overrides, args.seed)
        reporter = Reporter(
            config["experiment"]["name"], config,
            config["experiment"]["seed"], args.output)
        code = _COMMANDS[args.command](config, reporter)
        reporter.finish()
        return code
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ExtinctionError, NotConvergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except AbsorbedTimeoutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT


if __name__ == "__main__":
    sys.exit(main())
