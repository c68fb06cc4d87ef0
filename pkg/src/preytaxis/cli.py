"""Command line front end.

    preytaxis <command> --config scenario.yaml --out results/ [--seed N] [--threads N]

Commands are the pipeline stages (homogenize, equilibrate, stability,
simulate-slow, simulate-direct, validate), ``run`` for the stages listed in
the config or given with ``--stage``, and ``selftest``. Prerequisite stages
run automatically. Every invocation writes long-form CSV files and a
``manifest.json`` with the config hash, versions, tolerances and timings.
"""
from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
import traceback
from importlib import metadata
from pathlib import Path

import numpy as np

from . import cells
from .config import STAGES, ConfigError, Scenario, load_scenario
from .direct import DirectRun, compare_leading, simulate
from .effective import EffectiveCoefficients, homogenize, write_coefficients_csv
from .kinetics import find_equilibrium
from .selftest import run_selftest, write_selftest_csv
from .signal import TravelingWave, build_weight
from .slow import SlowGrid, SlowRun, SlowState, run
from .stability import scan
from .validation import ConvergenceCase, convergence_study, error_ratios, observed_orders

COMMANDS = STAGES + ("run", "selftest")


def _version() -> str:
    try:
        return metadata.version("preytaxis")
    except metadata.PackageNotFoundError:
        return "unknown"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return v


def _write_rows(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(columns)
        for r in rows:
            out.writerow([_fmt(r.get(c)) for c in columns])


class Pipeline:
    def __init__(self, sc: Scenario, out: Path, seed: int, threads: int):
        self.sc = sc
        self.out = out
        self.seed = seed
        self.threads = threads
        self.weight = None
        self.coeffs: EffectiveCoefficients | None = None
        self.timings: dict[str, float] = {}
        self.artifacts: list[str] = []

    def _path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out / name

    @property
    def frequency(self) -> float:
        sig = self.sc.signal
        return abs(sig.speed) if isinstance(sig, TravelingWave) and sig.speed else 1.0

    def homogenize(self):
        sc = self.sc
        self.weight = build_weight(sc.signal, sc.kappa, sc.mu, sc.torus)
        self.coeffs = homogenize(self.weight, sc.mu, sc.model, provenance={"scenario": sc.name})
        write_coefficients_csv(self._path("coefficients.csv"), self.coeffs, sc.name)

    def _equilibrium(self):
        guess = self.sc.raw.get("equilibrate", {}).get("guess")
        return find_equilibrium(self.sc.model, self.coeffs.kinetics,
                                tuple(float(g) for g in guess) if guess else None)

    def equilibrate(self):
        eq = self._equilibrium()
        self.coeffs = self.coeffs.with_equilibrium(eq.p_e, eq.s_e)
        write_coefficients_csv(self._path("coefficients.csv"), self.coeffs, self.sc.name)
        _write_rows(self._path("equilibrium.csv"),
                    ["scenario", "p_e", "s_e", "residual", "nondegenerate", "iterations"],
                    [{"scenario": self.sc.name, "p_e": eq.p_e, "s_e": eq.s_e,
                      "residual": eq.residual, "nondegenerate": eq.nondegenerate,
                      "iterations": eq.iterations}])

    def stability(self):
        sc, co = self.sc, self.coeffs
        cfg = sc.stability
        try:
            directions = [np.atleast_1d(np.asarray(d, dtype=float)) for d in cfg["directions"]]
            alphas = [float(a) for a in cfg["alphas"]]
            c_values = [float(c) for c in cfg["c_values"]]
        except KeyError as exc:
            raise ConfigError(f"missing key stability.{exc.args[0]}") from None
        if any(d.size != sc.dim for d in directions):
            raise ConfigError("stability.directions: dimension differs from the signal's")
        rep = scan(co.dbar, co.cbar / self.frequency, co.abar, co.equilibrium[0], sc.mu, sc.chi,
                   directions, alphas, c_values, sc.prey_diffusivity)
        rep.write_csv(self._path("stability.csv"))
        rows = []
        for t in rep.thresholds:
            failed = [k for k, ok in t["preconditions"].items() if not ok]
            rows.append({"direction": t["direction"], "kbar": " ".join(repr(float(x)) for x in t["kbar"]),
                         "alpha": t["alpha"], "c_star": t["c_star"], "failed_preconditions": " ".join(failed)})
        _write_rows(self._path("thresholds.csv"),
                    ["direction", "kbar", "alpha", "c_star", "failed_preconditions"], rows)
        lw = []
        for item in rep.longwave:
            for a, c in zip(item["alphas"], item["c_star"]):
                lw.append({"direction": item["direction"], "alpha": a, "c_star": c,
                           "diverges": item["diverges"]})
        _write_rows(self._path("longwave.csv"), ["direction", "alpha", "c_star", "diverges"], lw)

    def _initial(self, x, length):
        init = self.sc.simulate.get("initial")
        if not isinstance(init, dict):
            raise ConfigError("missing key simulate.initial")
        eq = None

        def field(name):
            nonlocal eq
            spec = init.get(name)
            if not isinstance(spec, dict):
                raise ConfigError(f"missing key simulate.initial.{name}")
            mean = spec.get("mean")
            if mean is None:
                eq = eq or self._equilibrium()
                mean = eq.p_e if name == "p" else eq.s_e
            arg = 2 * np.pi * x / length
            return (float(mean) + float(spec.get("cos", 0.0)) * np.cos(arg)
                    + float(spec.get("sin", 0.0)) * np.sin(arg))
        return field("p"), field("s")

    def _sim_params(self):
        cfg = self.sc.simulate
        try:
            return float(cfg["t_end"]), float(cfg["dt"])
        except KeyError as exc:
            raise ConfigError(f"missing key simulate.{exc.args[0]}") from None

    def _slow_run(self, snapshot_every=None):
        sc = self.sc
        grid = SlowGrid((sc.slow_length,) * sc.dim, (sc.slow_points,) * sc.dim)
        p0, s0 = self._initial(grid.x[0], sc.slow_length)
        t_end, dt = self._sim_params()
        r = SlowRun(grid, SlowState(p0, s0), self.coeffs, sc.mu, sc.chi, t_end, dt,
                    snapshot_every, sc.prey_diffusivity)
        return grid, run(r)

    def simulate_slow(self):
        every = self.sc.simulate.get("snapshot_every")
        grid, traj = self._slow_run(float(every) if every else None)
        rows = []
        coords = [c.reshape(-1) for c in grid.x]
        for t, st in zip(traj.times, traj.states):
            for i, (p, s) in enumerate(zip(st.p.reshape(-1), st.s.reshape(-1))):
                row = {"t": t, "node": i, "p": p, "s": s}
                row.update({f"x{j}": c[i] for j, c in enumerate(coords)})
                rows.append(row)
        _write_rows(self._path("slow_trajectory.csv"),
                    ["t", "node"] + [f"x{j}" for j in range(grid.dim)] + ["p", "s"], rows)

    def simulate_direct(self):
        sc = self.sc
        if sc.dim != 1:
            raise ConfigError("simulate-direct: only one-dimensional scenarios are supported")
        grid, traj = self._slow_run()
        t_end, _ = self._sim_params()
        err_rows, field_rows = [], []
        for delta in sc.deltas:
            probe = DirectRun(delta, sc.signal, sc.torus, sc.model, sc.chi, sc.kappa, sc.mu,
                              sc.slow_length, lambda x: x, lambda x: x, t_end)
            x = probe.x
            p0, s0 = self._initial(x, sc.slow_length)
            e = np.exp(sc.kappa * np.broadcast_to(sc.signal.evaluate(sc.torus, (x / delta,), 0.0), x.shape) / sc.mu)
            r = DirectRun(delta, sc.signal, sc.torus, sc.model, sc.chi, sc.kappa, sc.mu,
                          sc.slow_length, p0 * e / e.mean(), s0, t_end)
            dtraj = simulate(r)
            m = compare_leading(r, dtraj, traj.final.p, traj.final.s)
            err_rows.append(m)
            for xi, p, s in zip(x, dtraj.p[-1], dtraj.s[-1]):
                field_rows.append({"delta": delta, "t": dtraj.times[-1], "x": xi, "p": p, "s": s})
        _write_rows(self._path("direct_final.csv"), ["delta", "t", "x", "p", "s"], field_rows)
        _write_rows(self._path("direct_errors.csv"),
                    ["delta", "t", "points", "steps", "p_max", "p_l2", "s_max", "s_l2"], err_rows)

    def validate(self):
        sc = self.sc
        if sc.dim != 1:
            raise ConfigError("validate: only one-dimensional scenarios are supported")
        cfg = sc.validate
        t_end = float(cfg.get("t_end", self._sim_params()[0]))
        modes = cfg.get("corrected", False)
        modes = [False, True] if modes == "both" else [bool(modes)]

        def init(name):
            def f(x):
                return self._initial(x, sc.slow_length)[0 if name == "p" else 1]
            return f

        case = ConvergenceCase(sc.name, sc.signal, sc.torus, sc.model, sc.chi, sc.kappa, sc.mu,
                               t_end, init("p"), init("s"), sc.slow_length, sc.slow_points,
                               float(cfg.get("slow_dt", 1e-3)))
        rows = []
        for corrected in modes:
            res = convergence_study(case, sorted(sc.deltas, reverse=True), corrected, self.threads)
            ratios = [None] + error_ratios(res)
            orders = [None] + observed_orders(res)
            for r, q, o in zip(res, ratios, orders):
                r.update({"ratio": q, "order": o})
            rows.extend(res)
        _write_rows(self._path("convergence.csv"),
                    ["case", "corrected", "delta", "points", "steps", "p_max", "p_l2", "s_max",
                     "s_l2", "ratio", "order"], rows)

    def run_stage(self, stage: str):
        t0 = time.perf_counter()
        getattr(self, stage.replace("-", "_"))()
        self.timings[stage] = time.perf_counter() - t0


def _manifest(path: Path, info: dict) -> None:
    info = dict(info)
    info.update({"version": _version(), "python": platform.python_version(),
                 "numpy": np.__version__,
                 "tolerances": {"elliptic": 1e-11, "solvability": cells.SOLVABILITY_TOLERANCE,
                                "positivity_floor": 1e-14}})
    path.write_text(json.dumps(info, indent=2, sort_keys=True, default=str) + "\n")


def _selftest(args) -> int:
    checks = run_selftest(args.seed)
    failed = [c for c in checks if not c.passed]
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:36s} error={c.error:.3e} tol={c.tolerance:.1e}")
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_selftest_csv(out / "selftest.csv", checks)
        _manifest(out / "manifest.json", {"command": "selftest", "seed": args.seed,
                                          "failed": [c.name for c in failed]})
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="preytaxis", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="scenario YAML file")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--stage", action="append", choices=STAGES,
                    help="stage to run with the 'run' command (repeatable)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    if args.command == "selftest":
        return _selftest(args)
    if not args.config or not args.out:
        print("error: --config and --out are required", file=sys.stderr)
        return 2
    try:
        sc = load_scenario(args.config)
        if args.command == "run":
            requested = args.stage or list(sc.stages)
        else:
            requested = [args.command]
        plan = sc.stage_plan(requested)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create {out}: {exc}", file=sys.stderr)
        return 2
    np.random.seed(args.seed)
    pipe = Pipeline(sc, out, args.seed, args.threads)
    status, error = 0, None
    for stage in plan:
        try:
            pipe.run_stage(stage)
        except ConfigError as exc:
            status, error = 2, f"config error in {stage}: {exc}"
        except Exception as exc:  # surfaced with provenance, not swallowed
            origin = traceback.extract_tb(exc.__traceback__)[-1]
            status = 1
            error = (f"{stage} failed in {Path(origin.filename).stem}.{origin.name}: "
                     f"{type(exc).__name__}: {exc}")
        if status:
            print(error, file=sys.stderr)
            break
    _manifest(out / "manifest.json", {
        "command": args.command, "scenario": sc.name, "config_hash": sc.config_hash(),
        "seed": args.seed, "threads": args.threads, "stages": plan, "timings": pipe.timings,
        "artifacts": sorted(set(pipe.artifacts)), "status": status, "error": error,
    })
    if status == 0:
        print(f"{sc.name}: ran {', '.join(plan)}; outputs in {out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
