"""Relaxed ADMM on a strongly convex quadratic problem.

Which of the four regularity cases applies depends on the ranks of A and B.
The script builds an instance where B has full row rank, computes the
certified per-step factor of the dual PRS variable for several relaxation
parameters and compares it with the observed factor. The certified factor
is a worst-case bound over all instances with the same constants, so on a
single instance it is usually far from tight.
"""

import numpy as np

from splitcert.admm import AdmmProblem, admm_rate_constant, dual_constants, run_admm, solve_kkt
from splitcert.catalog import quadratic
from splitcert.schedules import RelaxationSchedule, SolverConfig


def spd(rng, n, lo, hi):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return Q @ np.diag(rng.uniform(lo, hi, n)) @ Q.T


def main():
    rng = np.random.default_rng(11)
    d, n1, n2 = 4, 2, 6
    f = quadratic(spd(rng, n1, 0.5, 3.0), rng.standard_normal(n1))
    g = quadratic(spd(rng, n2, 0.5, 3.0), rng.standard_normal(n2))
    p = AdmmProblem(f, g, rng.standard_normal((d, n1)), rng.standard_normal((d, n2)),
                    rng.standard_normal(d))
    dc = dual_constants(p)
    print(f"alpha_A = {p.alpha_A:.3g} (A is rank deficient), alpha_B = {p.alpha_B:.3g}")
    print(f"dual constants: mu_dg = {dc.mu_dg:.3g}, beta_dg = {dc.beta_dg:.3g}")
    gamma = 1.0
    refs = solve_kkt(p, gamma)
    for lam in (0.3, 0.5, 0.9, 1.0):
        conf = SolverConfig(gamma=gamma, schedule=RelaxationSchedule.constant(lam), max_iters=40)
        tr = run_admm(p, conf, np.ones(d), refs=refs)
        dist = tr["dist_to_zstar"]
        observed = float(np.max(dist[1:] / dist[:-1]))
        C = admm_rate_constant(1, p, gamma, lam)
        print(f"lambda={lam:.1f}  certified factor={C:.4f}  worst observed factor={observed:.4f}")


if __name__ == "__main__":
    main()
