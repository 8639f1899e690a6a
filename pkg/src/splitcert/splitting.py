"""Relaxed Peaceman-Rachford splitting and the forward-backward baseline.

One relaxed PRS step with stepsize ``gamma`` and relaxation ``lam`` reads::

    x_g = prox_{gamma g}(z)
    x_f = prox_{gamma f}(2 x_g - z)
    z+  = z + 2 lam (x_f - x_g)

``lam = 1/2`` is Douglas-Rachford splitting (DRS) and ``lam = 1`` is
Peaceman-Rachford splitting.
"""

from __future__ import annotations

import math
import warnings
from typing import Optional

import numpy as np

from .prox import ProxFunction, as_vec, prox_eval, s_term
from .rates import paper_constants
from .schedules import RelaxationSchedule, SolverConfig
from .trace import InequalityMonitor, IterationTrace, TraceBuilder, check_finite

__all__ = [
    "StepsizeWarning",
    "prs_step",
    "run_prs",
    "estimate_fixed_point",
    "fixed_point_references",
    "fbs_step",
    "run_fbs",
]


class StepsizeWarning(UserWarning):
    """Stepsize outside the range covered by the convergence guarantee."""


def _sq(v) -> float:
    return float(np.dot(v, v))


def prs_step(f: ProxFunction, g: ProxFunction, gamma: float, lam: float, z):
    """One relaxed PRS step.

    Parameters
    ----------
    f, g : ProxFunction
    gamma : float
        Positive stepsize.
    lam : float
        Relaxation parameter in ``(0, 1]``.
    z : array_like

    Returns
    -------
    z_next, x_g, x_f : ndarray

    Examples
    --------
    >>> from splitcert.catalog import scaled_norm_squared
    >>> h = scaled_norm_squared(1.0)
    >>> prs_step(h, h, 1.0, 1.0, [4.0])[0]
    array([0.])
    """
    if not 0.0 < lam <= 1.0:
        raise ValueError("lambda must lie in (0, 1]")
    z = as_vec(z)
    x_g = prox_eval(g, gamma, z)
    x_f = prox_eval(f, gamma, 2.0 * x_g - z)
    return z + 2.0 * lam * (x_f - x_g), x_g, x_f


def estimate_fixed_point(f: ProxFunction, g: ProxFunction, gamma: float, z0,
                         iters: int) -> np.ndarray:
    """Approximate a fixed point of the PRS operator by ``iters`` DRS steps."""
    z = as_vec(z0).copy()
    for k in range(int(iters)):
        z_new = prs_step(f, g, gamma, 0.5, z)[0]
        check_finite(k, z_new)
        if np.array_equal(z_new, z):
            break
        z = z_new
    return z


def fixed_point_references(f: ProxFunction, g: ProxFunction, gamma: float, zstar) -> dict:
    """Solution-side quantities attached to a fixed point ``z*``.

    Returns a dict with ``zstar``, ``xstar = prox_{gamma g}(z*)``, the
    subgradients ``grad_g = (z* - x*)/gamma`` and ``grad_f = -grad_g`` and the
    optimal value ``opt = f(x*) + g(x*)``.
    """
    zs = as_vec(zstar)
    xs = prox_eval(g, gamma, zs)
    gg = (zs - xs) / gamma
    return {"zstar": zs, "xstar": xs, "grad_g": gg, "grad_f": -gg, "opt": f(xs) + g(xs)}


def _designated_point(f: ProxFunction, g: ProxFunction) -> Optional[str]:
    if g.smooth:
        return "x_f"
    if f.smooth:
        return "x_g"
    return None


def _lipschitz_rhs(gamma, beta, lam, d0, d1, step_sq):
    if gamma <= beta:
        return d0 - d1 + (1.0 + (gamma / beta - 1.0) / (2.0 * lam)) * step_sq
    return (1.0 + (gamma - beta) / (2.0 * beta)) * (d0 - d1 + step_sq)


def run_prs(f: ProxFunction, g: ProxFunction, config: SolverConfig, z0,
            label: str = "prs") -> IterationTrace:
    """Run relaxed PRS and record the trace.

    Parameters
    ----------
    f, g : ProxFunction
    config : SolverConfig
    z0 : array_like
        Starting point.
    label : str
        Stored as ``trace.meta["label"]``.

    Returns
    -------
    IterationTrace
        Columns ``k, lam, fpr, step_sq, obj_split, obj_smooth`` always;
        ``obj_gap_nonergodic, obj_gap_ergodic, S_f, S_g, S_f_erg, S_g_erg,
        dist_to_zstar`` when a fixed point is known. In assertion mode the
        inequality reports are attached and ``trace.flagged`` tells whether
        any of them failed.

    Raises
    ------
    NumericalDivergenceError
        If an iterate becomes non-finite.

    Notes
    -----
    Step ``k`` evaluates the proxes at ``z^k``, records the step-``k``
    quantities and forms ``z^{k+1}``. The run stops after step ``k`` once
    ``fpr_k <= fpr_stop`` or after ``max_iters`` steps.
    """
    gamma = float(config.gamma)
    sched: RelaxationSchedule = config.schedule
    z = as_vec(z0).copy()
    K = int(config.max_iters)
    tb = TraceBuilder("prs", gamma, thin=config.thin)
    tb.meta.update(label=label, schedule=sched.label, f=f.name, g=g.name)

    zstar = config.known_fixed_point
    if zstar is None and config.assert_inequalities:
        zstar = estimate_fixed_point(f, g, gamma, z, 10 * K)
        tb.meta["zstar_source"] = "pre-run"
    elif zstar is not None:
        tb.meta["zstar_source"] = "supplied"
    ref = fixed_point_references(f, g, gamma, zstar) if zstar is not None else None

    designated = _designated_point(f, g)
    tb.meta["designated_point"] = designated
    monitor = None
    consts = paper_constants()
    drs_composite = False
    if config.assert_inequalities:
        scale = _sq(z - ref["zstar"]) if ref is not None else 1.0
        monitor = InequalityMonitor(scale, config.tol)
        drs_composite = (ref is not None and sched.constant_value == 0.5 and g.smooth
                         and gamma < consts.kappa * g.beta)

    xbar_f = np.zeros_like(z)
    xbar_g = np.zeros_like(z)
    gbar_f = np.zeros_like(z)
    gbar_g = np.zeros_like(z)
    Lam = 0.0
    prev = None
    summ = 0.0
    b_sum = 0.0
    b_prev = None
    d_first = None
    xg0_sq = None

    for k in range(K):
        lam = sched(k)
        x_g = prox_eval(g, gamma, z)
        r = 2.0 * x_g - z
        x_f = prox_eval(f, gamma, r)
        z_next = z + 2.0 * lam * (x_f - x_g)
        check_finite(k, z_next)
        grad_g = (z - x_g) / gamma
        grad_f = (r - x_f) / gamma
        fpr = 4.0 * _sq(x_f - x_g)
        step_sq = _sq(z_next - z)

        Lam += lam
        w = lam / Lam
        xbar_f += w * (x_f - xbar_f)
        xbar_g += w * (x_g - xbar_g)
        gbar_f += w * (grad_f - gbar_f)
        gbar_g += w * (grad_g - gbar_g)

        f_xf, g_xg = f(x_f), g(x_g)
        obj_split = f_xf + g_xg
        if designated == "x_f":
            obj_smooth = f_xf + g(x_f)
        elif designated == "x_g":
            obj_smooth = f(x_g) + g_xg
        else:
            obj_smooth = math.nan
        row = {"k": k, "lam": lam, "fpr": fpr, "step_sq": step_sq,
               "obj_split": obj_split, "obj_smooth": obj_smooth}

        if ref is not None:
            xs, zs, opt = ref["xstar"], ref["zstar"], ref["opt"]
            S_f = s_term(f, x_f, xs, grad_f, ref["grad_f"])
            S_g = s_term(g, x_g, xs, grad_g, ref["grad_g"])
            gap = (obj_smooth if designated else obj_split) - opt
            row.update(
                obj_gap_nonergodic=gap,
                obj_gap_ergodic=f(xbar_f) + g(xbar_g) - opt,
                S_f=S_f, S_g=S_g,
                S_f_erg=s_term(f, xbar_f, xs, gbar_f, ref["grad_f"]),
                S_g_erg=s_term(g, xbar_g, xs, gbar_g, ref["grad_g"]),
                dist_to_zstar=math.sqrt(_sq(z - zs)),
            )

        if monitor is not None:
            m = monitor
            m.equal("step-identity", k, z_next - z,
                    -2.0 * lam * gamma * (grad_g + grad_f), tol=1e-10)
            if prev is not None:
                m.leq("fpr-monotone", k, fpr, prev["fpr"])
            if ref is not None:
                d0 = _sq(z - zs)
                d1 = _sq(z_next - zs)
                if d_first is None:
                    d_first = d0
                    xg0_sq = _sq(x_g - xs)
                m.leq("fejer", k, d1, d0 - (1.0 - lam) / lam * step_sq)
                summ += lam * (1.0 - lam) * fpr
                m.leq("fpr-summable", k, summ, d_first)
                m.leq("upper-fundamental", k,
                      4.0 * gamma * lam * (obj_split - opt + S_f + S_g),
                      _sq(z - xs) - _sq(z_next - xs) + (1.0 - 1.0 / lam) * step_sq)
                m.leq("lower-fundamental", k,
                      float(np.dot(x_g - x_f, zs - xs)) / gamma + S_f + S_g, obj_split - opt)
                m.leq("auxiliary-bound", k, 8.0 * gamma * lam * (S_f + S_g),
                      d0 - d1 + (1.0 - 1.0 / lam) * step_sq)
                if f.smooth:
                    m.leq("lipschitz-fundamental-f", k,
                          4.0 * gamma * lam * (f(x_g) + g_xg - opt),
                          _lipschitz_rhs(gamma, f.beta, lam, d0, d1, step_sq))
                if g.smooth:
                    m.leq("lipschitz-fundamental-g", k,
                          4.0 * gamma * lam * (f_xf + g(x_f) - opt),
                          _lipschitz_rhs(gamma, g.beta, lam, d0, d1, step_sq))
                if drs_composite and prev is not None:
                    th = consts.theta_star
                    b = (2.0 * gamma * (prev["f_xf"] + g(prev["x_f"]) - opt)
                         + th * gamma ** 2 * _sq(grad_g - prev["grad_g"])
                         + (1.0 - th) * gamma ** 2 / g.beta ** 2 * _sq(x_g - prev["x_g"]))
                    if b_prev is not None:
                        m.leq("drs-composite-monotone", k - 1, b, b_prev)
                    b_sum += b
                    m.leq("drs-composite-summable", k - 1, b_sum, xg0_sq)
                    b_prev = b
            prev = {"fpr": fpr, "x_f": x_f, "x_g": x_g, "grad_g": grad_g, "f_xf": f_xf}

        tb.append(row, {"z": z, "x_g": x_g, "x_f": x_f, "grad_g": grad_g, "grad_f": grad_f,
                        "xbar_f": xbar_f, "xbar_g": xbar_g})
        z = z_next
        if fpr <= config.fpr_stop:
            break

    if sched.tau_inf <= 0:
        tb.meta["nonergodic_rates"] = "recorded, not certified (tau_inf = 0)"
    last = {"z": z, "x_f": x_f, "x_g": x_g, "xbar_f": xbar_f, "xbar_g": xbar_g}
    if ref is not None:
        last.update(zstar=ref["zstar"], xstar=ref["xstar"])
        tb.meta["opt"] = ref["opt"]
    return tb.finish(last, monitor)


def fbs_step(f: ProxFunction, g: ProxFunction, gamma: float, z) -> np.ndarray:
    """Forward-backward step ``prox_{gamma f}(z - gamma grad g(z))``.

    A :class:`StepsizeWarning` is issued when ``gamma >= 2 g.beta``, the range
    where convergence is no longer guaranteed.

    Examples
    --------
    >>> from splitcert.catalog import scaled_norm_squared, zero_function
    >>> fbs_step(zero_function(), scaled_norm_squared(), 1.0, [4.0])
    array([0.])
    """
    if not g.smooth:
        raise ValueError("forward-backward splitting needs a smooth g")
    if gamma >= 2.0 * g.beta:
        warnings.warn(f"gamma={gamma} >= 2*beta={2 * g.beta}", StepsizeWarning, stacklevel=2)
    z = as_vec(z)
    return prox_eval(f, gamma, z - gamma * g.grad(z))


def run_fbs(f: ProxFunction, g: ProxFunction, config: SolverConfig, z0,
            xstar=None) -> IterationTrace:
    """Forward-backward iterations; ``fpr_k = ||z^{k+1} - z^k||^2``.

    With ``xstar`` the objective gap ``f(z^{k+1}) + g(z^{k+1}) - opt`` is
    recorded in ``obj_gap_nonergodic`` and ``||z^k - x*||`` in
    ``dist_to_zstar``. Runs with ``gamma >= 2 beta`` carry a flag in
    ``trace.meta["flags"]``.
    """
    gamma = float(config.gamma)
    tb = TraceBuilder("fbs", gamma, thin=config.thin)
    if gamma >= 2.0 * g.beta:
        tb.flag(f"stepsize gamma={gamma} >= 2*beta={2 * g.beta}")
    z = as_vec(z0).copy()
    opt = None
    if xstar is not None:
        xstar = as_vec(xstar)
        opt = f(xstar) + g(xstar)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", StepsizeWarning)
        for k in range(int(config.max_iters)):
            z_next = fbs_step(f, g, gamma, z)
            check_finite(k, z_next)
            d = _sq(z_next - z)
            row = {"k": k, "lam": 1.0, "fpr": d, "step_sq": d}
            if opt is not None:
                row["obj_gap_nonergodic"] = f(z_next) + g(z_next) - opt
                row["dist_to_zstar"] = math.sqrt(_sq(z - xstar))
            tb.append(row, {"z": z})
            z = z_next
            if d <= config.fpr_stop:
                break
    return tb.finish({"z": z})
