"""Derivative-free trust-region runs on the benchmark problems.

The solver sees only objective values at feasible points; gradients exist
solely for the after-the-fact criticality report.
"""

import numpy as np

from convexdfo import SolverConfig, solve
from convexdfo.problems import get_problem, true_criticality

for name in ("quad2d", "affine2d", "rosenbrock2d"):
    problem = get_problem(name)
    config = SolverConfig(npoints=6, max_evals=1000, seed=0)
    x, record = solve(problem.f, problem.region, problem.x0, config)

    kinds = {}
    for row in record.rows:
        kinds[row.step_kind] = kinds.get(row.step_kind, 0) + 1
    print(f"{name:13s} status={record.status:10s} "
          f"evals={record.rows[-1].evals:4d} f={problem.f(x): .6f} "
          f"true criticality={true_criticality(problem, x):.2e}")
    print(f"{'':13s} steps: {kinds}")

# The per-iteration trace is a stable CSV (the same schema the CLI writes).
problem = get_problem("quad2d")
x, record = solve(problem.f, problem.region, problem.x0,
                  SolverConfig(npoints=6, max_evals=60, seed=1))
print("\nfirst trace lines:")
print("\n".join(record.csv_text().splitlines()[:6]))
