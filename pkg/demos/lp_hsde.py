"""Solving a small LP through its homogeneous self-dual embedding.

MAP between the cone C_f and the graph of the skew matrix Q finds a point
of their intersection. Normalizing it and reading off (tau, kappa) yields
either a primal-dual solution or an infeasibility certificate.
"""

import numpy as np

from splitcert.feasibility import map_run
from splitcert.problems import generate_problem, hsde_extract, lp_kkt_residuals


def solve(feasible):
    gp = generate_problem("lp-hsde", 0, {"m": 6, "n": 10, "feasible": feasible})
    inst = gp.objects["hsde"]
    tr = map_run(inst.Cf, inst.Cg, inst.start(), 5000, assert_inequalities=False, thin=True)
    z = tr.last["z"]
    v = hsde_extract(inst, z)
    print(f"feasible={feasible}: status={v.status}, tau={v.tau:.3g}, kappa={v.kappa:.3g}")
    if v.x is not None:
        res = lp_kkt_residuals(inst, v.x, v.y, v.s)
        print(f"  objective {inst.c @ v.x:.6f} (planted optimum {gp.truth['optimal_value']:.6f})")
        print(f"  KKT residuals: " + ", ".join(f"{k}={val:.1e}" for k, val in res.items()))
    else:
        print(f"  b^T y = {v.bty:.3g} < 0: primal infeasible = {v.primal_infeasible}")


def main():
    solve(True)
    solve(False)


if __name__ == "__main__":
    main()
