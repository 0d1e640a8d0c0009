"""A linear program solved as a feasibility problem.

min -x1 - x2  s.t.  x1 + 2 x2 <= 4,  3 x1 + x2 <= 6,  x >= 0

is written as A x + s = b with s >= 0. Its primal-dual optimality conditions
form one affine set in (x, s, y) plus the cone R^2 x R^4_+ x R^4_+, and GAP
looks for a point in their intersection.

Run: python demos/03_linear_program.py
"""

import numpy as np
from scipy.optimize import linprog

from gapls import LineSearchConfig, NonnegativeOrthant
from gapls.cone import ConeProgram, embed, solve_cone_program

A = np.array([[1.0, 2.0], [3.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
b = np.array([4.0, 6.0, 0.0, 0.0])
c = np.array([-1.0, -1.0])
prog = ConeProgram(A, b, c, NonnegativeOrthant(4))

e = embed(prog)
print("embedded affine block:", e.matrix.shape, " cone:", [type(k).__name__ for k in e.coneset.components])

ref = linprog(c, A_ub=A[:2], b_ub=b[:2], bounds=(0, None), method="highs")
print("reference optimum", ref.x, "value", ref.fun)

for stepper in ("nominal", "basic_ls", "projected_ls"):
    for a in (1.0, 1.95):
        sol, res = solve_cone_program(prog, alphas=(a, a), stepper=stepper)
        print(
            f"{stepper:>13} alpha_i={a:<5} iterations={res.iterations:<6}"
            f" x={np.round(sol.x, 8)} gap={sol.gap:+.1e} residuals={sol.primal_residual:.1e}/{sol.dual_residual:.1e}"
        )

# Golden-section search instead of forward tracking; the distance along a
# projected ray is convex, so a bracketing search is safe here
sol, res = solve_cone_program(prog, stepper="projected_ls", ls_config=LineSearchConfig(strategy="golden_section"))
print(f"golden section: {res.iterations} iterations, {res.stats.candidates_total} candidate evaluations")
print("dual multipliers y =", np.round(sol.y, 8))
