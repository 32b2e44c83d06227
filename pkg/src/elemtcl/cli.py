"""Command-line front end.

    elemtcl run CONFIG [--dump-config]
    elemtcl fig1 [--out DIR] [--restart-step STEP]
    elemtcl fig2 [--out DIR] [--restart-step STEP]
    elemtcl kernels CONFIG [--out FILE]

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 I/O error.
Failures print ``error=<category>:<detail>`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

from . import bath, models
from .config import RunConfig, dump_config, figure_config, parse_config
from .errors import ConfigError, TCLError
from .linalg import DensityMatrix, ElementIndex, canonical_indices, reconstruct
from .propagator import (
    CompareReport, SolverConfig, Trajectory, compare, solve_iterative, solve_markov, solve_traditional,
)

log = logging.getLogger("elemtcl")

EXIT_OK, EXIT_PARSE, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


class IOFailure(Exception):
    pass


def initial_state(cfg: RunConfig) -> DensityMatrix:
    n = cfg.dim
    if cfg.initial_state == "excited":
        return DensityMatrix.basis(0, n)
    if cfg.initial_state == "ground":
        return DensityMatrix.basis(n - 1, n)
    if cfg.initial_state == "mixed":
        return DensityMatrix.maximally_mixed(n)
    elements = dict(zip(canonical_indices(n), cfg.initial_elements))
    return reconstruct(elements, n)


def kernel_step(cfg: RunConfig) -> float:
    """Largest spacing <= dt_kernel that puts every RK4 stage on a node."""
    half = cfg.dt / 2.0
    return half / math.ceil(half / cfg.dt_kernel - 1e-9)


def build_model(cfg: RunConfig):
    spec = bath.BathSpec(cfg.lam, cfg.omega_c, cfg.beta, cfg.omega0)
    if cfg.model == "single_qubit":
        return models.SingleQubitModel(spec)
    return models.TwoQubitModel(spec, cfg.v, cfg.alpha1, cfg.alpha2)


def solver_config(cfg: RunConfig, method="traditional") -> SolverConfig:
    return SolverConfig(cfg.dt, cfg.restart_step, cfg.t_final, cfg.renormalize_trace, method)


def run_solvers(cfg: RunConfig) -> dict[str, Trajectory]:
    model = build_model(cfg)
    rho0 = initial_state(cfg)
    wanted = ("traditional", "element_iterative", "markov", "markov_iterative") if cfg.solver == "compare_all" else (cfg.solver,)
    out = {}
    gen = None
    if any(w in ("traditional", "element_iterative") for w in wanted):
        families = ("f", "g") if cfg.model == "single_qubit" else ("c",)
        log.info("tabulating bath kernels up to t=%g", cfg.t_final)
        table = bath.build_kernel_table(model.bath, cfg.t_final, kernel_step(cfg), kernels=families)
        if cfg.model == "single_qubit":
            gen = models.single_qubit_generator(model, table)
        else:
            gen = models.two_qubit_generator(model, table)
    mgen = models.markov_generator(model) if any(w.startswith("markov") for w in wanted) else None
    for name in wanted:
        log.info("running %s", name)
        if name == "traditional":
            out[name] = solve_traditional(gen, rho0, solver_config(cfg))
        elif name == "element_iterative":
            out[name] = solve_iterative(gen, rho0, solver_config(cfg, "element_iterative"))
        elif name == "markov":
            out[name] = solve_markov(mgen, rho0, solver_config(cfg, "markov"))
        else:
            out[name] = solve_iterative(mgen, rho0, solver_config(cfg, "element_iterative"))
    return out


def trajectory_header(dim: int) -> list[str]:
    cols = ["t"]
    for idx in canonical_indices(dim):
        cols += [f"rho_{idx.label}_re", f"rho_{idx.label}_im"]
    return cols + ["raw_trace_re", "raw_trace_im"]


def _g(x: float) -> str:
    return f"{x:.17g}"


def write_trajectory(traj: Trajectory, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(trajectory_header(traj.dim))
    indices = canonical_indices(traj.dim)
    for k, t in enumerate(traj.times):
        row = [_g(t)]
        for idx in indices:
            z = traj.element_series[idx][k]
            row += [_g(z.real), _g(z.imag)]
        row += [_g(traj.traces[k].real), _g(traj.traces[k].imag)]
        w.writerow(row)


def write_comparison(report: CompareReport, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["quantity", "max_abs_deviation", "final_abs_deviation"])
    for idx, dev in report.max_deviation.items():
        w.writerow([f"rho_{ElementIndex(*idx).label}", _g(dev), _g(report.final_deviation[idx])])
    w.writerow(["raw_trace_drift_traditional", _g(report.max_trace_drift_a), ""])
    w.writerow(["raw_trace_drift_element_iterative", _g(report.max_trace_drift_b), ""])


def _check_dir(path: Path):
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise IOFailure(f"output directory does not exist: {parent}")


def _write(path: Path, writer, obj):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer(obj, fh)
    except OSError as exc:
        raise IOFailure(f"{path}: {exc.strerror or exc}") from exc


def execute(cfg: RunConfig, stdout=None) -> dict[str, Path]:
    """Run a validated configuration and write its CSV files."""
    stdout = stdout or sys.stdout
    target = Path(cfg.output_path)
    _check_dir(target)
    trajectories = run_solvers(cfg)
    written = {}
    if cfg.solver != "compare_all":
        _write(target, write_trajectory, trajectories[cfg.solver])
        written[cfg.solver] = target
        return written
    stem, suffix = target.with_suffix(""), target.suffix or ".csv"
    for name, traj in trajectories.items():
        p = Path(f"{stem}_{name}{suffix}")
        _write(p, write_trajectory, traj)
        written[name] = p
    report = compare(trajectories["traditional"], trajectories["element_iterative"])
    p = Path(f"{stem}_compare{suffix}")
    _write(p, write_comparison, report)
    written["compare"] = p
    print(f"max_abs_deviation={_g(report.max_abs_deviation)}", file=stdout)
    return written


def _fail(category: str, detail: str, code: int) -> int:
    print(f"error={category}:{' '.join(str(detail).split())}", file=sys.stderr)
    return code


def _guarded(fn) -> int:
    try:
        fn()
    except ConfigError as exc:
        return _fail("parse", exc, EXIT_PARSE)
    except IOFailure as exc:
        return _fail("io", exc, EXIT_IO)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)
    except TCLError as exc:
        return _fail("solver", exc, EXIT_SOLVER)
    return EXIT_OK


def _read_config(path: str) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_config(text)


def cmd_run(args) -> int:
    def go():
        cfg = _read_config(args.config)
        if args.dump_config:
            sys.stdout.write(dump_config(cfg))
            return
        execute(cfg)

    return _guarded(go)


def cmd_figure(args, which: int) -> int:
    def go():
        out = Path(args.out)
        if not out.is_dir():
            raise IOFailure(f"output directory does not exist: {out}")
        overrides = {"output_path": str(out / f"fig{which}.csv")}
        if args.restart_step is not None:
            overrides["restart_step"] = args.restart_step
        execute(figure_config(which, **overrides))

    return _guarded(go)


def cmd_kernels(args) -> int:
    def go():
        cfg = _read_config(args.config)
        target = Path(args.out) if args.out else Path(cfg.output_path)
        _check_dir(target)
        spec = build_model(cfg).bath
        table = bath.build_kernel_table(spec, cfg.t_final, cfg.dt_kernel)
        _write(target, bath.write_kernel_csv, table)

    return _guarded(go)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elemtcl", description="Element-projector TCL2 propagation of open qubit systems.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a configuration file")
    r.add_argument("config")
    r.add_argument("--dump-config", action="store_true", help="print the parsed configuration and exit")
    r.set_defaults(func=cmd_run)

    for which in (1, 2):
        f = sub.add_parser(f"fig{which}", help=f"reproduce figure {which} data (all solvers)")
        f.add_argument("--out", default=".", help="existing output directory")
        f.add_argument("--restart-step", type=float, default=None)
        f.set_defaults(func=lambda a, w=which: cmd_figure(a, w))

    k = sub.add_parser("kernels", help="dump the bath kernel table as CSV")
    k.add_argument("config")
    k.add_argument("--out", default=None)
    k.set_defaults(func=cmd_kernels)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s", stream=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
