"""Douglas-Rachford on a halfspace plus an ill-conditioned quadratic.

With lambda = 1/2 and gamma below kappa * beta the fixed-point residual
decays like 1/k^2 and the objective gap like 1/k. The script fits both
exponents and checks the envelopes pointwise. It then asks for the
whole-sequence objective rate with a stepsize beyond the gate and shows
that the certificate reports "not-applicable" instead of guessing.
"""

import tempfile

import numpy as np

from splitcert.catalog import halfspace, indicator, quadratic
from splitcert.experiment import run_experiment
from splitcert.rates import RateEnvelope, certify, fpr_bounds, paper_constants
from splitcert.schedules import RelaxationSchedule, SolverConfig
from splitcert.splitting import run_prs


def build(n=200, seed=0):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    P = (Q * (np.arange(1, n + 1) / n) ** 2) @ Q.T
    a = rng.standard_normal(n)
    g = quadratic(0.5 * (P + P.T))
    f = indicator(halfspace(-a, -1.0))
    xs = np.linalg.solve(P, a)
    xs /= a @ xs
    return f, g, xs, rng.standard_normal(n)


def main():
    f, g, xs, z0 = build()
    kappa = paper_constants().kappa
    gamma = 0.9 * kappa * g.beta
    zs = xs + gamma * g.grad(xs)
    conf = SolverConfig(gamma=gamma, schedule=RelaxationSchedule.constant(0.5),
                        max_iters=5000, fpr_stop=-1.0, known_fixed_point=zs)
    tr = run_prs(f, g, conf, z0)

    xg0 = float(np.sum((tr.vectors["x_g"][0] - xs) ** 2))
    c1 = fpr_bounds("smooth-drs", {"beta": g.beta, "gamma": gamma, "xg0_xstar_sq": xg0}, 1)
    fpr = certify(tr.step_sq, RateEnvelope("little-o-1-over-k2", c1, shift=0.0, k_start=1))
    gap = certify(tr["obj_gap_nonergodic"],
                  RateEnvelope("big-O-1-over-k", xg0 / (2.0 * gamma), "obj-gap"))
    print(f"gamma = {gamma:.4f} (kappa * beta = {kappa * g.beta:.4f})")
    print(f"fpr envelope: {fpr.verdict}, fitted exponent {fpr.fitted_exponent:.3f}")
    print(f"objective gap envelope: {gap.verdict}, fitted exponent {gap.fitted_exponent:.3f}")

    spec = {"name": "gate", "solver": "drs",
            "problem": {"generate": {"kind": "random-strongly-convex-quadratic-pair", "seed": 0}},
            "config": {"iters": 50, "gamma": 10.0}, "certify": [{"envelope": "smooth-drs-objective"}]}
    with tempfile.TemporaryDirectory() as out:
        res = run_experiment(spec, out)
    c = res.certificates["smooth-drs-objective"]
    print(f"gamma beyond the gate: {c['verdict']} ({c['reason']})")


if __name__ == "__main__":
    main()
