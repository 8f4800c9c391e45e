"""Compare the solution methods on one benchmark problem.

Runs semismooth Newton, plain Newton-SQP and the preconditioned drivers
(one- and two-level) on a reduced mesh and prints the iteration counts and
final projected-gradient norms side by side.  At the full 120x120 benchmark
resolution the same script reproduces the headline counts; the default here
is 40x40 to keep the run short.
"""

import argparse

from schwarzopt import (build_decomposition, build_hierarchy, make_problem,
                        newton_sqp_solve, raspnb_solve, semismooth_newton_solve)
from schwarzopt.solvers import SolverConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problem", default="minimal_surface",
                    choices=["ignition", "minimal_surface"])
    ap.add_argument("--mesh", type=int, default=40)
    ap.add_argument("--coarse-mesh", type=int, default=10)
    ap.add_argument("--subdomains", type=int, default=16)
    ap.add_argument("--overlap", type=int, default=3)
    args = ap.parse_args()

    problem = make_problem(args.problem, args.mesh)
    decomposition = build_decomposition(problem.space, args.subdomains, args.overlap)
    hierarchy = build_hierarchy(problem, args.coarse_mesh)
    cfg = SolverConfig(n_subdomains=args.subdomains, overlap=args.overlap)

    runs = [
        ("semismooth Newton", semismooth_newton_solve(problem, cfg=cfg)),
        ("Newton-SQP", newton_sqp_solve(problem, cfg=cfg)),
        ("one-level preconditioned", raspnb_solve(problem, decomposition, cfg=cfg)),
        ("two-level preconditioned",
         raspnb_solve(problem, decomposition, hierarchy, cfg=cfg)),
    ]

    print(f"{args.problem} on a {args.mesh}x{args.mesh} mesh, "
          f"{args.subdomains} subdomains, overlap {args.overlap}")
    print(f"{'method':<26} {'iterations':>10} {'final PRN':>12}  status")
    for name, (v, record) in runs:
        print(f"{name:<26} {record.n_iterations:>10} "
              f"{record.prn_history[-1]:>12.2e}  {record.status}")


if __name__ == "__main__":
    main()
