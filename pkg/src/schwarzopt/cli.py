"""Experiment runner: solve one of the benchmark problems with a chosen
method and write the convergence history as a CSV file.

Exit codes: 0 converged, 2 configuration error, 3 infeasible problem,
4 solver non-convergence.
"""

import argparse
import sys
from dataclasses import dataclass, field

from . import problems as prb
from .coarse import build_hierarchy
from .decomposition import PartitionError, build_decomposition, load_partition_file
from .solvers import (SolverConfig, newton_sqp_solve, raspnb_solve,
                      run_preconditioner_only, semismooth_newton_solve)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NOT_CONVERGED = 4

METHODS = ("ssn", "newton-sqp", "nras", "tl-nras", "raspn", "tl-raspn")
PROBLEMS = {"ignition": prb.IGNITION, "minsurf": prb.MINIMAL_SURFACE}
DEFAULT_SWEEP = (2, 4, 8, 16, 32)


@dataclass
class ExperimentConfig:
    problem: str
    method: str
    mesh: int = 120
    coarse_mesh: int = 30
    subdomains: int = 16
    overlap: int = 3
    tol: float = 1e-8
    inner_tol: float = 1e-11
    output: str = None
    partition_file: str = None
    max_outer: int = 100
    seed: int = 0

    def default_output(self, subdomains=None):
        sd = self.subdomains if subdomains is None else subdomains
        if self.method in ("ssn", "newton-sqp"):
            return f"{self.problem}_{self.method}.csv"
        return f"{self.problem}_{self.method}_sd{sd}_ov{self.overlap}.csv"


def write_history(path, record):
    with open(path, "w") as fh:
        fh.write("IT,PRN\n")
        for info in record.history:
            fh.write(f"{info.index},{info.prn:.17e}\n")


def _needs_decomposition(method):
    return method in ("nras", "tl-nras", "raspn", "tl-raspn")


def _needs_coarse(method):
    return method in ("tl-nras", "tl-raspn")


def run_experiment(cfg, subdomains=None, quiet=False):
    """Run a single configured experiment; returns (exit code, record)."""
    sd = cfg.subdomains if subdomains is None else subdomains
    try:
        problem = prb.make_problem(PROBLEMS[cfg.problem], cfg.mesh)
    except KeyError:
        print(f"error: unknown problem {cfg.problem!r}", file=sys.stderr)
        return EXIT_CONFIG, None
    report = prb.validate_feasibility(problem)
    if not report.feasible:
        print(f"error: {report}", file=sys.stderr)
        return EXIT_INFEASIBLE, None

    solver_cfg = SolverConfig(outer_tol=cfg.tol, inner_tol=cfg.inner_tol,
                              max_outer=cfg.max_outer, n_subdomains=sd,
                              overlap=cfg.overlap)
    try:
        decomposition = hierarchy = None
        if _needs_decomposition(cfg.method):
            owned = None
            if cfg.partition_file:
                owned = load_partition_file(cfg.partition_file, problem.dim)
            decomposition = build_decomposition(problem.space, sd, cfg.overlap, owned)
        if _needs_coarse(cfg.method):
            hierarchy = build_hierarchy(problem, cfg.coarse_mesh)
    except (PartitionError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, None

    v0 = problem.initial_guess()
    if cfg.method == "ssn":
        _, record = semismooth_newton_solve(problem, v0, solver_cfg)
    elif cfg.method == "newton-sqp":
        _, record = newton_sqp_solve(problem, v0, solver_cfg)
    elif cfg.method in ("nras", "tl-nras"):
        _, record = run_preconditioner_only(problem, decomposition, hierarchy, v0, solver_cfg)
    elif cfg.method in ("raspn", "tl-raspn"):
        _, record = raspnb_solve(problem, decomposition, hierarchy, v0, solver_cfg)
    else:
        print(f"error: unknown method {cfg.method!r}", file=sys.stderr)
        return EXIT_CONFIG, None

    out = cfg.output or cfg.default_output(sd)
    write_history(out, record)
    if not quiet:
        print(f"{cfg.problem} {cfg.method} sbd={sd} ov={cfg.overlap} "
              f"seed={cfg.seed}: {record.n_iterations} iterations, "
              f"status={record.status}, history -> {out}", file=sys.stderr)
    if not record.converged:
        print(f"error: solver did not converge (status={record.status})", file=sys.stderr)
        return EXIT_NOT_CONVERGED, record
    return EXIT_OK, record


def run_sweep(cfg, counts, quiet=False):
    """Run the experiment for each subdomain count; one CSV per run plus a
    printed summary.  Individual failures do not stop the sweep."""
    rows = []
    worst = EXIT_OK
    for sd in counts:
        sweep_cfg = ExperimentConfig(**{**cfg.__dict__, "output": None})
        if cfg.output:
            stem, dot, ext = cfg.output.rpartition(".")
            sweep_cfg.output = f"{stem}_sd{sd}.{ext}" if dot else f"{cfg.output}_sd{sd}"
        code, record = run_experiment(sweep_cfg, subdomains=sd, quiet=quiet)
        worst = max(worst, code)
        rows.append((sd, None if record is None else record.n_iterations,
                     record is not None and record.converged))
    print("subdomains  iterations  converged")
    for sd, its, ok in rows:
        print(f"{sd:>10}  {'-' if its is None else its:>10}  {'yes' if ok else 'no'}")
    return worst, rows


def build_parser():
    p = argparse.ArgumentParser(
        prog="schwarzopt",
        description="Bound-constrained benchmark experiments with Schwarz "
                    "preconditioned Newton solvers.")
    p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--mesh", type=int, default=120, help="fine cells per side")
    p.add_argument("--coarse-mesh", type=int, default=30, help="coarse cells per side")
    p.add_argument("--subdomains", type=int, default=16)
    p.add_argument("--overlap", type=int, default=3)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--inner-tol", type=float, default=1e-11)
    p.add_argument("--output", help="CSV output path (default: derived from the run)")
    p.add_argument("--partition-file", help="explicit node-to-subdomain assignment")
    p.add_argument("--sweep", nargs="?", const=",".join(map(str, DEFAULT_SWEEP)),
                   help="comma-separated subdomain counts; runs one experiment per count")
    p.add_argument("--max-outer", type=int, default=100)
    p.add_argument("--seed", type=int, default=0,
                   help="recorded for provenance; the pipeline is deterministic")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig(
        problem=args.problem, method=args.method, mesh=args.mesh,
        coarse_mesh=args.coarse_mesh, subdomains=args.subdomains,
        overlap=args.overlap, tol=args.tol, inner_tol=args.inner_tol,
        output=args.output, partition_file=args.partition_file,
        max_outer=args.max_outer, seed=args.seed)
    if args.mesh < 1 or args.subdomains < 1 or args.overlap < 0:
        print("error: mesh/subdomain/overlap parameters out of range", file=sys.stderr)
        return EXIT_CONFIG
    if args.tol <= 0 or args.inner_tol <= 0 or args.inner_tol > args.tol:
        print("error: require 0 < inner tol <= tol", file=sys.stderr)
        return EXIT_CONFIG
    if _needs_coarse(cfg.method) and args.mesh % args.coarse_mesh != 0:
        print("error: coarse mesh must divide the fine mesh", file=sys.stderr)
        return EXIT_CONFIG
    if args.sweep is not None:
        try:
            counts = [int(c) for c in args.sweep.split(",") if c]
        except ValueError:
            print(f"error: bad sweep list {args.sweep!r}", file=sys.stderr)
            return EXIT_CONFIG
        code, _ = run_sweep(cfg, counts)
        return code
    code, _ = run_experiment(cfg)
    return code


if __name__ == "__main__":
    sys.exit(main())
