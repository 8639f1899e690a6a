"""JSON experiment specs: build a problem, run a solver, certify rates, write reports.

A spec is a JSON object::

    {
      "name": "map-two-subspaces",
      "problem": {"generate": {"kind": "two-subspaces", "seed": 0,
                               "dims": {"friedrichs_cos": 0.5}}},
      "solver": "map",
      "config": {"iters": 200, "seed": 0},
      "certify": [{"envelope": "map-linear"}],
      "output": {"dir": "out"}
    }

``problem`` is either ``{"generate": ...}`` or an explicit description with
``"type"`` one of ``splitting`` (``f``, ``g`` catalog descriptors),
``feasibility`` (``Cf``/``Cg`` or ``sets``, optional ``intersection``,
``mu_rho``, ``friedrichs_cos``) or ``admm`` (``f``, ``g``, ``A``, ``B``,
``b``). Starting points go in ``z0`` (``w0`` for ADMM); otherwise a
standard normal vector drawn from ``config.seed`` is used.

The output directory can be overridden with the ``SPLITCERT_OUTPUT_DIR``
environment variable.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .admm import (
    AdmmProblem,
    admm_rate_constant,
    admm_references,
    primal_dual_gap_terms,
    run_admm,
    admm_sublinear_bounds,
)
from .catalog import catalog_make
from .feasibility import (
    FeasibilityProblem,
    feas_contraction_constant,
    map_infeasible_diagnostics,
    map_strengthened_constant,
    run_feasibility,
    run_multi_set,
    subspace_mu_bound,
)
from .problems import generate_problem, hsde_extract, lp_kkt_residuals, NotInIntersectionError
from .rates import (
    ConditionNotMetError,
    NotApplicableError,
    RateCertificate,
    RateEnvelope,
    certify,
    fpr_bounds,
    paper_constants,
    prs_linear_constant,
    theorem3_bound,
)
from .schedules import RelaxationSchedule, SolverConfig, StepsizePair
from .splitting import estimate_fixed_point, run_fbs, run_prs

__all__ = ["OUTPUT_ENV", "SOLVERS", "ENVELOPES", "SpecError", "ExperimentSpec",
           "ExperimentResult", "load_spec", "run_experiment", "run_batch", "exit_code"]

OUTPUT_ENV = "SPLITCERT_OUTPUT_DIR"
SOLVERS = ("prs", "drs", "map", "multi-set", "admm", "fbs")
ENVELOPES = (
    "generic-fpr", "smooth-drs-fpr", "smooth-drs-objective", "smooth-drs-objective-best", "ergodic-s-terms",
    "linear-prs", "map-linear", "feasibility-linear", "gap-diagnostics", "admm-residual",
    "admm-objective", "admm-linear", "admm-ergodic", "inequalities", "custom",
)
_SEQUENCE_COLUMNS = {"fpr": "fpr", "obj-gap": "obj_gap_nonergodic", "residual": "residual_norm_sq",
                     "distance": "dist_to_zstar"}


class SpecError(ValueError):
    """Malformed experiment specification."""


@dataclass
class ExperimentSpec:
    """Parsed experiment specification (see the module docstring)."""

    name: str
    problem: dict
    solver: str
    config: dict = field(default_factory=dict)
    certify: list = field(default_factory=list)
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        if not isinstance(d, dict):
            raise SpecError("spec must be a JSON object")
        for key in ("problem", "solver"):
            if key not in d:
                raise SpecError(f"spec is missing {key!r}")
        solver = d["solver"]
        if solver not in SOLVERS:
            raise SpecError(f"unknown solver {solver!r}; choose from {SOLVERS}")
        certs = list(d.get("certify", []))
        for c in certs:
            if c.get("envelope") not in ENVELOPES:
                raise SpecError(f"unknown envelope {c.get('envelope')!r}; choose from {ENVELOPES}")
        return cls(str(d.get("name", "experiment")), dict(d["problem"]), solver,
                   dict(d.get("config", {})), certs, dict(d.get("output", {})))


def load_spec(path) -> list[ExperimentSpec]:
    """Read a spec file; ``{"experiments": [...]}`` holds a batch."""
    with open(path) as fh:
        d = json.load(fh)
    if isinstance(d, dict) and "experiments" in d:
        return [ExperimentSpec.from_dict(e) for e in d["experiments"]]
    return [ExperimentSpec.from_dict(d)]


@dataclass
class ExperimentResult:
    name: str
    certificates: dict
    report: dict
    paths: dict

    @property
    def passed(self) -> bool:
        return all(c["verdict"] == "certified" for c in self.certificates.values())

    @property
    def not_applicable(self) -> bool:
        return any(c["verdict"] == "not-applicable" for c in self.certificates.values())


def exit_code(results) -> int:
    """0 if every certificate passes, 2 if any was not applicable, else 1."""
    results = list(results)
    if all(r.passed for r in results):
        return 0
    if any(r.not_applicable for r in results):
        return 2
    return 1


# ---------------------------------------------------------------- building


def _schedule(cfg: dict, solver: str) -> RelaxationSchedule:
    if solver == "drs":
        return RelaxationSchedule.constant(0.5)
    if solver == "map":
        return RelaxationSchedule.constant(1.0)
    lam = cfg.get("lambda", 1.0 if solver == "prs" else 0.5)
    if isinstance(lam, (list, tuple)):
        return RelaxationSchedule.from_sequence(lam)
    return RelaxationSchedule.constant(lam)


def _build(spec: ExperimentSpec) -> dict:
    p = dict(spec.problem)
    ctx: dict[str, Any] = {}
    if "generate" in p:
        g = p["generate"]
        gp = generate_problem(g["kind"], int(g.get("seed", 0)), g.get("dims"))
        ctx.update(gp.objects)
        ctx["generated"] = gp
        kind = gp.kind
        if kind in ("random-strongly-convex-quadratic-pair", "lasso-like"):
            ctx["type"] = "admm" if spec.solver == "admm" else "splitting"
        elif kind == "m-random-halfspaces":
            ctx["type"] = "multi-set"
        else:
            ctx["type"] = "feasibility"
        if kind == "two-subspaces":
            ctx["friedrichs_cos"] = gp.truth["friedrichs_cos"]
        if kind == "lp-hsde":
            ctx["Cf"], ctx["Cg"] = gp.objects["hsde"].Cf, gp.objects["hsde"].Cg
    else:
        t = p.get("type")
        if t not in ("splitting", "feasibility", "admm"):
            raise SpecError("problem needs 'generate' or a 'type' of splitting, feasibility or admm")
        mk = lambda desc: catalog_make(desc["kind"], desc)
        ctx["type"] = t
        if t in ("splitting", "admm"):
            ctx["f"], ctx["g"] = mk(p["f"]), mk(p["g"])
        if t == "admm":
            ctx["admm"] = AdmmProblem(ctx["f"], ctx["g"], p["A"], p["B"], p["b"])
        if t == "feasibility":
            if "sets" in p:
                ctx["problem"] = FeasibilityProblem([mk(s) for s in p["sets"]], p.get("mu_rho"))
                ctx["type"] = "multi-set"
            else:
                ctx["Cf"], ctx["Cg"] = mk(p["Cf"]), mk(p["Cg"])
            if "intersection" in p:
                ctx["intersection"] = mk(p["intersection"])
        for key in ("mu_rho", "friedrichs_cos", "z0", "w0", "x0", "zstar"):
            if key in p:
                ctx[key] = p[key]
    return ctx


def _start(ctx: dict, dim: int, seed: int, key: str = "z0") -> np.ndarray:
    if key in ctx:
        return np.asarray(ctx[key], dtype=float)
    return np.random.default_rng(seed).standard_normal(dim)


# ---------------------------------------------------------------- running


def _run(spec: ExperimentSpec, ctx: dict) -> dict:
    cfg = spec.config
    iters = int(cfg.get("iters", 1000))
    seed = int(cfg.get("seed", 0))
    sched = _schedule(cfg, spec.solver)
    gamma = float(cfg.get("gamma", 1.0))
    asrt = bool(cfg.get("assert_inequalities", False))
    fpr_stop = float(cfg.get("fpr_stop", 0.0))
    t = ctx["type"]
    run: dict[str, Any] = {"schedule": sched, "gamma": gamma}

    if spec.solver == "admm":
        if t != "admm":
            raise SpecError("solver 'admm' needs an admm problem")
        prob = ctx["admm"]
        w0 = _start(ctx, prob.dims[0], seed, "w0")
        refs = admm_references(prob, gamma, w0, 10 * iters)
        conf = SolverConfig(gamma=gamma, schedule=sched, max_iters=iters, assert_inequalities=asrt)
        run.update(trace=run_admm(prob, conf, w0, refs=refs), refs=refs, z0=w0)
        return run

    if spec.solver == "multi-set":
        if t != "multi-set":
            raise SpecError("solver 'multi-set' needs a problem with 'sets'")
        prob = ctx["problem"]
        n = len(ctx["x0"]) if "x0" in ctx else int(cfg.get("n", 0))
        x0 = np.asarray(ctx["x0"], dtype=float) if "x0" in ctx else _start(ctx, n, seed)
        sp = StepsizePair(cfg.get("gamma_f", 0.5), cfg.get("gamma_g", 0.5))
        if "lambda" not in cfg:
            sched = RelaxationSchedule.constant(1.0)
        run.update(trace=run_multi_set(prob, np.tile(x0, prob.m), iters, sp, sched), problem=prob)
        run["schedule"] = sched
        return run

    if t in ("feasibility",):
        Cf, Cg = ctx["Cf"], ctx["Cg"]
        z0 = _start(ctx, _set_dim(ctx), seed)
        if spec.solver == "map":
            sp = StepsizePair(0.5, 0.5)
        else:
            sp = StepsizePair(cfg.get("gamma_f", gamma), cfg.get("gamma_g", gamma))
        mu = ctx.get("mu_rho")
        if mu is None and ctx.get("friedrichs_cos") is not None:
            mu = subspace_mu_bound(ctx["friedrichs_cos"])
        inter = ctx.get("intersection")
        tr = run_feasibility(Cf, Cg, z0, iters, sp, sched, mu_rho=mu if inter is not None else None,
                             intersection=inter, assert_inequalities=asrt and inter is not None,
                             fpr_stop=fpr_stop if fpr_stop > 0 else -1.0)
        run.update(trace=tr, Cf=Cf, Cg=Cg, stepsizes=sp, mu_rho=mu, z0=z0)
        if any(c["envelope"] == "generic-fpr" for c in spec.certify):
            pre = run_feasibility(Cf, Cg, z0, 10 * iters, sp, sched, assert_inequalities=False,
                                  thin=True)
            run["zstar"] = pre.last["z"]
        return run

    if t != "splitting":
        raise SpecError(f"solver {spec.solver!r} does not apply to a {t} problem")
    f, g = ctx["f"], ctx["g"]
    n = _fn_dim(ctx)
    z0 = _start(ctx, n, seed)
    if spec.solver == "fbs":
        conf = SolverConfig(gamma=gamma, max_iters=iters)
        run.update(trace=run_fbs(f, g, conf, z0), z0=z0)
        return run
    zstar = np.asarray(ctx["zstar"], dtype=float) if "zstar" in ctx else \
        estimate_fixed_point(f, g, gamma, z0, 10 * iters)
    conf = SolverConfig(gamma=gamma, schedule=sched, max_iters=iters, fpr_stop=fpr_stop,
                        assert_inequalities=asrt, known_fixed_point=zstar)
    run.update(trace=run_prs(f, g, conf, z0), zstar=zstar, z0=z0, f=f, g=g)
    return run


def _fn_dim(ctx: dict) -> int:
    for key in ("z0", "zstar"):
        if key in ctx:
            return len(ctx[key])
    for fn in (ctx["f"], ctx["g"]):
        q = (fn.params or {}).get("q")
        if q is not None:
            return len(q)
    gp = ctx.get("generated")
    if gp is not None and "n" in gp.dims:
        return int(gp.dims["n"])
    raise SpecError("cannot infer the dimension; give 'z0'")


def _set_dim(ctx: dict) -> int:
    if "z0" in ctx:
        return len(ctx["z0"])
    gp = ctx.get("generated")
    if gp is not None:
        if "z0" in gp.objects:
            return len(gp.objects["z0"])
        if "n" in gp.dims:
            return int(gp.dims["n"])
    raise SpecError("cannot infer the dimension; give 'z0'")


# ------------------------------------------------------------ certificates


def _cert_custom(trace, c: dict) -> RateCertificate:
    env = RateEnvelope.from_dict({k: v for k, v in c.items()
                                  if k in ("kind", "c", "sequence", "ergodicity", "factors",
                                           "shift", "k_start", "horizon")})
    col = _SEQUENCE_COLUMNS.get(env.sequence, env.sequence)
    if env.sequence == "S-sum":
        seq = trace["S_f"] + trace["S_g"]
    else:
        seq = trace[col]
    return certify(seq, env, tol=float(c.get("tol", 1e-7)), atol=float(c.get("atol", 0.0)))


def _certificate(spec: ExperimentSpec, ctx: dict, run: dict, c: dict) -> tuple[RateCertificate, dict]:
    name = c["envelope"]
    tr = run["trace"]
    tol = float(c.get("tol", 1e-7))
    sched: RelaxationSchedule = run["schedule"]
    gamma = run["gamma"]
    n = len(tr)
    lams = tr.lam
    extra: dict[str, Any] = {}
    kappa = paper_constants().kappa

    def na(reason):
        return RateCertificate.not_applicable(None, reason), extra

    if name == "custom":
        return _cert_custom(tr, c), extra
    if name == "inequalities":
        reps = {k: r.violations for k, r in tr.inequalities.items()}
        extra["violations"] = reps
        if not tr.inequalities:
            return na("no inequalities were checked (enable assert_inequalities)")
        worst = max(r.max_violation for r in tr.inequalities.values())
        ok = all(v == 0 for v in reps.values())
        return RateCertificate(None, worst, None, math.nan, math.nan,
                               "certified" if ok else "violated", tol, n), extra

    if name == "generic-fpr":
        if "zstar" not in run:
            return na("no fixed point available")
        D2 = float(np.sum((run["z0"] - run["zstar"]) ** 2))
        try:
            c0 = fpr_bounds("generic", {"tau": sched.tau_inf, "z0_zstar_sq": D2}, 0)
        except NotApplicableError as exc:
            return na(str(exc))
        return certify(tr.fpr, RateEnvelope("big-O-1-over-k", c0, "fpr"), tol=tol), extra

    if name in ("smooth-drs-fpr", "smooth-drs-objective", "smooth-drs-objective-best", "ergodic-s-terms", "linear-prs"):
        if "f" not in run:
            return na(f"{name} applies to splitting runs")
        f, g, zs = run["f"], run["g"], run["zstar"]
        xs = g.prox(gamma, zs)
        xg0 = tr.vectors["x_g"][0] if not tr.thin else g.prox(gamma, run["z0"])
        xg0_sq = float(np.sum((xg0 - xs) ** 2))
        D2 = float(np.sum((run["z0"] - zs) ** 2))
        lam_c = sched.constant_value
        if name == "ergodic-s-terms":
            Lam = np.cumsum(lams)
            env = RateEnvelope("big-O-1-over-k", D2 / (8.0 * gamma), "S-sum", "ergodic",
                               horizon=tuple(Lam))
            return certify(tr["S_f_erg"] + tr["S_g_erg"], env, tol=tol), extra
        if name == "linear-prs":
            which = c.get("which", "g-regular")
            fn_mu, fn_beta = {"g-regular": (g.mu, g.beta), "f-regular": (f.mu, f.beta),
                              "mixed": (c.get("mu"), c.get("beta"))}[which]
            if fn_mu is None or fn_beta is None:
                return na("mixed case needs 'mu' and 'beta'")
            try:
                fac = tuple(prs_linear_constant(which, fn_mu, fn_beta, gamma, l) for l in lams)
            except ConditionNotMetError as exc:
                return na(str(exc))
            env = RateEnvelope("linear", math.sqrt(D2), "distance", factors=fac)
            return certify(tr["dist_to_zstar"], env, tol=tol, atol=float(c.get("atol", 1e-12))), extra
        beta = g.beta
        if not beta > 0:
            return na("g is not smooth")
        if lam_c != 0.5:
            return na("rate holds for lambda = 1/2 only")
        if name == "smooth-drs-objective-best":
            # both branches have the form const/(k+1)
            c0 = theorem3_bound(beta, gamma, 0, xg0_sq, D2)[0]
            seq = np.minimum.accumulate(tr["obj_gap_nonergodic"])
            env = RateEnvelope("big-O-1-over-k", c0, "obj-gap", "best-iterate")
            return certify(seq, env, tol=tol), extra
        if not gamma < kappa * beta:
            return na(f"gate gamma < kappa*beta fails (gamma={gamma}, kappa*beta={kappa * beta})")
        if name == "smooth-drs-objective":
            env = RateEnvelope("big-O-1-over-k", xg0_sq / (2.0 * gamma), "obj-gap")
            return certify(tr["obj_gap_nonergodic"], env, tol=tol), extra
        c1 = fpr_bounds("smooth-drs", {"beta": beta, "gamma": gamma, "xg0_xstar_sq": xg0_sq}, 1)
        env = RateEnvelope("little-o-1-over-k2", c1, "fpr", shift=0.0, k_start=1)
        return certify(tr.step_sq, env, tol=tol), extra

    if name in ("map-linear", "feasibility-linear", "gap-diagnostics"):
        if "Cf" not in run:
            return na(f"{name} applies to two-set feasibility runs")
        if name == "gap-diagnostics":
            diag = map_infeasible_diagnostics(run["Cf"], run["Cg"], tr)
            extra["gap_vector"] = diag.gap_estimate.tolist()
            extra["gap_norm"] = float(np.linalg.norm(diag.gap_estimate))
            extra["best_error_monotone"] = diag.best_error_monotone
            extra["sum_bounded"] = diag.sum_bounded
            extra["notes"] = diag.notes
            ok = diag.best_error_monotone and diag.sum_bounded
            return RateCertificate(None, 0.0 if ok else math.inf, None, math.nan, math.nan,
                                   "certified" if ok else "violated", tol, n), extra
        mu = run.get("mu_rho")
        if mu is None:
            return na("no regularity constant (mu_rho or friedrichs_cos) declared")
        if "d_int" not in tr.columns:
            return na("no intersection projector: not certified")
        if name == "map-linear":
            if sched.constant_value != 1.0 or run["stepsizes"](0) != (0.5, 0.5):
                return na("map-linear applies to MAP runs")
            fac = (map_strengthened_constant(mu),)
        else:
            fac = tuple(feas_contraction_constant(*run["stepsizes"](k), lams[k], mu) for k in range(n))
        d = tr["d_int"]
        env = RateEnvelope("linear", float(d[0]), "distance", factors=fac)
        cert = certify(d, env, tol=tol, atol=float(c.get("atol", 1e-14)))
        extra["mu_rho"] = mu
        return cert, extra

    if name.startswith("admm"):
        if "refs" not in run:
            return na(f"{name} applies to admm runs")
        prob: AdmmProblem = ctx["admm"]
        refs = run["refs"]
        D = float(np.linalg.norm(run["z0"] - refs.z))
        if name == "admm-linear":
            case = int(c.get("case", 1))
            try:
                fac = tuple(admm_rate_constant(case, prob, gamma, l) for l in lams)
            except ConditionNotMetError as exc:
                return na(str(exc))
            env = RateEnvelope("linear", D, "distance", factors=fac)
            return certify(tr["dist_to_zstar"], env, tol=tol, atol=float(c.get("atol", 1e-12))), extra
        if name == "admm-ergodic":
            terms = primal_dual_gap_terms(tr, prob, refs)
            Lam = np.cumsum(lams)
            env = RateEnvelope("big-O-1-over-k", D * D / (4.0 * gamma), "S-sum", "ergodic",
                               horizon=tuple(Lam))
            return certify(terms["ergodic"], env, tol=tol), extra
        if sched.constant_value != 0.5:
            return na("rate holds for lambda = 1/2 only")
        wdg0 = float(np.sum((tr.vectors["w_dg"][0] - refs.w) ** 2))
        try:
            b1 = admm_sublinear_bounds(prob, gamma, 1, wdg0, D, float(np.linalg.norm(refs.w)))
        except NotApplicableError as exc:
            return na(str(exc))
        if name == "admm-residual":
            env = RateEnvelope("little-o-1-over-k2", float(b1["residual"]), "residual",
                               shift=0.0, k_start=1)
            return certify(tr["residual_norm_sq"], env, tol=tol), extra
        gap = tr["obj_gap_nonergodic"]
        up = certify(gap, RateEnvelope("little-o-1-over-k", float(b1["upper"]), "obj-gap",
                                       shift=0.0, k_start=1), tol=tol)
        lo = certify(-gap, RateEnvelope("little-o-1-over-k", float(-b1["lower"]), "obj-gap",
                                        shift=0.0, k_start=1), tol=tol)
        extra["lower"] = lo.to_dict()
        worse = lo if lo.max_relative_violation > up.max_relative_violation else up
        return worse, extra

    raise SpecError(f"unknown envelope {name!r}")


# ---------------------------------------------------------------- reports


def _output_dir(spec: ExperimentSpec, override=None) -> Path:
    env = os.environ.get(OUTPUT_ENV)
    d = override or env or spec.output.get("dir", ".")
    return Path(d)


def _summary(spec: ExperimentSpec, report: dict) -> str:
    lines = [f"experiment: {spec.name}", f"solver: {spec.solver}",
             f"iterations: {report['iterations']}"]
    for k, v in report.get("final", {}).items():
        lines.append(f"final {k}: {v:.6g}")
    for name, c in report["certificates"].items():
        line = f"certificate {name}: {c['verdict']}"
        if c.get("max_relative_violation") is not None:
            line += f" (max relative violation {c['max_relative_violation']:.3g})"
        if c.get("fitted_exponent") is not None:
            line += f", fitted exponent {c['fitted_exponent']:.4g}"
        if c.get("fitted_linear_factor") is not None:
            line += f", fitted factor {c['fitted_linear_factor']:.6g}"
        if c.get("reason"):
            line += f", {c['reason']}"
        lines.append(line)
    for k, v in report.get("extras", {}).items():
        lines.append(f"{k}: {json.dumps(v)}")
    return "\n".join(lines) + "\n"


def run_experiment(spec: ExperimentSpec | dict, output_dir=None) -> ExperimentResult:
    """Run one experiment and write ``<name>_trace.csv``, ``<name>_report.json``
    and ``<name>_summary.txt``.

    Returns
    -------
    ExperimentResult
    """
    if isinstance(spec, dict):
        spec = ExperimentSpec.from_dict(spec)
    ctx = _build(spec)
    run = _run(spec, ctx)
    tr = run["trace"]
    certs, extras = {}, {}
    for i, c in enumerate(spec.certify):
        label = c.get("label") or c["envelope"] + (f"-{c['case']}" if "case" in c else "")
        if label in certs:
            label = f"{label}-{i}"
        cert, extra = _certificate(spec, ctx, run, c)
        certs[label] = cert.to_dict()
        if extra:
            extras[label] = extra
    if "generated" in ctx and ctx["generated"].kind == "lp-hsde":
        extras["hsde"] = _hsde_report(ctx, tr)
    final = {}
    for col in ("fpr", "residual_norm_sq", "d_int", "max_dist", "obj_gap_nonergodic"):
        if col in tr.columns and len(tr):
            final[col] = float(tr[col][-1])
    report = {
        "name": spec.name,
        "solver": spec.solver,
        "iterations": len(tr),
        "certificates": certs,
        "inequalities": {k: v.__dict__ for k, v in tr.inequalities.items()},
        "flags": tr.meta.get("flags", []),
        "final": final,
        "extras": extras,
    }
    out = _output_dir(spec, output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = spec.output.get("prefix", spec.name)
    paths = {"trace": out / f"{stem}_trace.csv", "report": out / f"{stem}_report.json",
             "summary": out / f"{stem}_summary.txt"}
    tr.to_csv(paths["trace"])
    with open(paths["report"], "w") as fh:
        json.dump(_clean(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths["summary"].write_text(_summary(spec, report))
    return ExperimentResult(spec.name, certs, report, {k: str(v) for k, v in paths.items()})


def _hsde_report(ctx: dict, tr) -> dict:
    inst = ctx["hsde"]
    z = tr.last["z"]
    out: dict[str, Any] = {"residual": inst.residual(z / max(np.linalg.norm(z), 1e-300))}
    try:
        v = hsde_extract(inst, z)
    except NotInIntersectionError as exc:
        out["status"] = "not-in-intersection"
        out["reason"] = str(exc)
        return out
    out.update(status=v.status, tau=v.tau, kappa=v.kappa)
    if v.x is not None:
        out["kkt"] = lp_kkt_residuals(inst, v.x, v.y, v.s)
        out["objective"] = float(inst.c @ v.x)
    else:
        out.update(primal_infeasible=v.primal_infeasible, dual_infeasible=v.dual_infeasible)
    return out


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def run_batch(specs, output_dir=None, workers: Optional[int] = None) -> list[ExperimentResult]:
    """Run several experiments concurrently; results keep the input order."""
    specs = list(specs)
    if len(specs) == 1:
        return [run_experiment(specs[0], output_dir)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda s: run_experiment(s, output_dir), specs))
