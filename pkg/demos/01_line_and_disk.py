"""A line and a disk in the plane: projections, reflections and averaging.

Run: python demos/01_line_and_disk.py
"""

import numpy as np

from gapls import AffineSubspace, ConvexSet, GapOperator, solve


# A disk is not one of the library primitives, but any set with a projection works
class Disk(ConvexSet):
    def __init__(self, center, radius):
        self.center = np.asarray(center, dtype=float)
        self.radius = radius
        self.dim = 2

    def _project(self, x):
        d = x - self.center
        n = np.linalg.norm(d)
        return x.copy() if n <= self.radius else self.center + d * self.radius / n


line = AffineSubspace([[0.0, 1.0]], [0.0])  # x2 = 0
disk = Disk([1.0, 0.999], 1.0)  # dips below the line on a short chord around x1 = 1
x0 = np.array([-3.0, 2.0])

# Plain alternating projections: alpha_1 = alpha_2 = alpha = 1
ap = GapOperator([line, disk], (1.0, 1.0), 1.0)
x = x0
for k in range(4):
    x, r = ap.T(x)
    print(f"AP   k={k + 1}  x={np.round(x, 4)}  |r|={np.linalg.norm(r):.2e}")

# Douglas-Rachford: two reflections averaged with 1/2. The iterate itself
# need not lie in either set; its projection onto the line does.
dr = GapOperator([line, disk], (2.0, 2.0), 0.5)
print("DR config:", dr.config.assumption_case, "averagedness", dr.config.averagedness)
res = solve(dr, x0, tol=1e-12)
print(f"DR   converged={res.converged} in {res.iterations} iterations via {res.monitor}")
print("     last iterate", np.round(res.x, 6), " projection onto the line", np.round(line.project(res.x), 6))

# Over-relaxed GAP with the default outer relaxation 0.85 / beta
for a in (1.0, 1.5, 1.9):
    op = GapOperator([line, disk], (a, a))
    res = solve(op, x0, tol=1e-12)
    print(f"GAP  alpha_i={a:<4} alpha={op.alpha:.3f}  iterations={res.iterations}")

# With line search, the step along the residual is stretched when the
# residuals keep pointing the same way
for stepper in ("nominal", "basic_ls", "projected_ls"):
    res = solve(GapOperator([line, disk], (1.0, 1.0)), x0, tol=1e-12, stepper=stepper)
    print(f"{stepper:<13} iterations={res.iterations:<4} searches accepted={res.stats.accepted}")
