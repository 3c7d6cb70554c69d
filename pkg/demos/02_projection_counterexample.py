"""Why the projection metric matters.

A two-variable linear program over the slab |x1 + x2| <= 1, started at
[0.5, 0.5]: sign-style updates with plain Euclidean projection bounce straight
back to the start point forever, even though the start point is not stationary
(the variational inequality fails along a feasible direction).  Projecting in
the metric weighted by the adaptive second moment escapes immediately.
"""

import numpy as np

from zoopt import make_counterexample_lp, run_optimizer, vi_violation
from zoopt.optimizers import default_config

problem = make_counterexample_lp()
print("minimize -2*x1 - x2  subject to |x1 + x2| <= 1, start at", problem.x0)

witness = vi_violation(problem.metadata.gradient(problem.x0), problem.x0,
                       np.array([0.6, 0.4]))
print(f"VI witness at feasible test point [0.6, 0.4]: {witness:.3f}  "
      "(negative => start point is NOT stationary)")

shared = dict(beta1=0.0, beta2=0.0, use_vhat_max=False, alpha=0.1,
              alpha_schedule="inverse-sqrt", kind="analytic", seed=0)

res_e = run_optimizer(problem,
                      default_config("zo-adamm",
                                     euclidean_projection_override=True,
                                     **shared),
                      0, max_iters=1000, keep_iterates=True,
                      record_measure="off")
print("\nEuclidean projection, 1000 iterations:")
print("  final iterate:", res_e.final_x, " (pinned to the start point)")

res_m = run_optimizer(problem, default_config("zo-adamm", **shared),
                      0, max_iters=1000, keep_iterates=True,
                      record_measure="off")
print("weighted projection, 1000 iterations:")
for t in (1, 10, 100, 1000):
    xt = res_m.trace.iterates[t]
    print(f"  t={t:4d}  x = [{xt[0]:+.4f}, {xt[1]:+.4f}]  "
          f"objective = {problem.objective.peek(xt):+.4f}  "
          f"x1+x2 = {xt[0] + xt[1]:.12f}")
print("the weighted variant slides along the boundary, strictly improving.")
