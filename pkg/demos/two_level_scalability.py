"""Subdomain-count sweep with and without the coarse level.

The standalone one-level Schwarz iteration needs more sweeps as the domain
is cut into more pieces; adding the coarse correction keeps the count
essentially flat.  Default mesh is 40x40 so the sweep finishes quickly.
"""

import argparse

from schwarzopt import (build_decomposition, build_hierarchy, make_problem,
                        run_preconditioner_only)
from schwarzopt.solvers import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problem", default="minimal_surface",
                    choices=["ignition", "minimal_surface"])
    ap.add_argument("--mesh", type=int, default=40)
    ap.add_argument("--coarse-mesh", type=int, default=10)
    ap.add_argument("--overlap", type=int, default=3)
    ap.add_argument("--counts", default="2,4,8,16")
    args = ap.parse_args()

    problem = make_problem(args.problem, args.mesh)
    hierarchy = build_hierarchy(problem, args.coarse_mesh)
    counts = [int(c) for c in args.counts.split(",")]

    print(f"{args.problem} on a {args.mesh}x{args.mesh} mesh, overlap {args.overlap}")
    print(f"{'subdomains':>10} {'one-level':>10} {'two-level':>10}")
    for n in counts:
        decomposition = build_decomposition(problem.space, n, args.overlap)
        cfg = SolverConfig(n_subdomains=n, overlap=args.overlap, max_outer=500)
        _, one = run_preconditioner_only(problem, decomposition, cfg=cfg)
        _, two = run_preconditioner_only(problem, decomposition, hierarchy, cfg=cfg)
        print(f"{n:>10} {one.n_iterations:>10} {two.n_iterations:>10}")


if __name__ == "__main__":
    main()
