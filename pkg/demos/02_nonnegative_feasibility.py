"""Random nonnegative feasibility: find z >= 0 with Q (z - p) = 0.

Q is 50 x 100 Gaussian and p = 1e-7 * ones, so the feasible set is a tiny
polytope around p. The run stops once a monitored point satisfies
||Q (z - p)|| <= 1e-10 and z >= 0 exactly.

Run: python demos/02_nonnegative_feasibility.py [seed]
"""

import sys
import time

import numpy as np

from gapls.bench import ExperimentSpec, generate_instance, run_one

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
spec = ExperimentSpec(seed=seed, max_iter=10**5)
inst = generate_instance(spec)
print(f"seed {seed}: Q drawn {inst.draws} time(s), |x0| = {np.linalg.norm(inst.x0):.2f}")

# The same instance under three steppers and three relaxations
print(f"{'alpha_i':>8} {'mode':>13} {'iters':>7} {'conv':>5} {'LS trig/acc':>12} {'cand':>6} {'sec':>6}")
for a in (1.0, 1.95, 2.0):
    for mode in ("nominal", "basic_ls", "projected_ls"):
        t0 = time.perf_counter()
        rec, res = run_one(spec, a, inst, mode)
        print(
            f"{a:8.2f} {mode:>13} {rec.iterations:7d} {str(rec.converged):>5}"
            f" {rec.ls_triggered:5d}/{rec.ls_accepted:<6d} {rec.candidates_total:6d} {time.perf_counter() - t0:6.2f}"
        )

# Residual history of the projected line search at alpha_i = 2: long flat
# stretches of nominal steps, then sharp drops where a search is accepted
rec, res = run_one(spec, 2.0, inst, "projected_ls")
hist = np.array(res.residual_norms)
print("accepted at iterations", res.accepted_at[:10], "..." if len(res.accepted_at) > 10 else "")
print("residual norms after each acceptance:", np.array2string(hist[[k + 1 for k in res.accepted_at]], precision=2))
print("solution: min entry", res.solution.min(), " affine residual", inst.C.residual(res.solution))
