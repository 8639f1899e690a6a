"""Command line interface.

::

    splitcert run SPEC.json [--output-dir DIR] [--workers N]
    splitcert generate KIND [--seed S] [--dims JSON] [--output FILE]
    splitcert certify TRACE.csv --envelope JSON_OR_FILE [--column NAME]

Exit codes: 0 when every requested certificate passes, 1 when one is
violated, 2 for configuration errors (including not-applicable
certificates), 3 for solver or I/O failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .experiment import SpecError, exit_code, load_spec, run_batch
from .problems import PROBLEM_KINDS, generate_problem
from .rates import RateEnvelope, certify
from .trace import read_trace_csv

EXIT_OK, EXIT_VIOLATED, EXIT_CONFIG, EXIT_FAILURE = 0, 1, 2, 3


def _json_arg(text: str):
    p = Path(text)
    if p.suffix == ".json" and p.exists():
        return json.loads(p.read_text())
    return json.loads(text)


def _cmd_run(args) -> int:
    try:
        specs = load_spec(args.spec)
    except (OSError, json.JSONDecodeError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        results = run_batch(specs, args.output_dir, args.workers)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # solver errors surface as a failed run
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    for r in results:
        for name, c in r.certificates.items():
            print(f"{r.name}: {name}: {c['verdict']}")
        print(f"{r.name}: report written to {r.paths['report']}")
    return exit_code(results)


def _cmd_generate(args) -> int:
    try:
        dims = json.loads(args.dims) if args.dims else None
        gp = generate_problem(args.kind, args.seed, dims)
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    doc = {"kind": gp.kind, "seed": gp.seed, "dims": gp.dims, "descriptor": gp.descriptor,
           "truth": gp.truth}
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_ALIASES = {"fpr": "fpr", "obj-gap": "obj_gap_nonergodic", "residual": "residual_norm_sq",
            "distance": "dist_to_zstar"}


def _cmd_certify(args) -> int:
    try:
        cols = read_trace_csv(args.trace)
        env_doc = dict(_json_arg(args.envelope))
        tol = float(env_doc.pop("tol", 1e-7))
        atol = float(env_doc.pop("atol", 0.0))
        env = RateEnvelope.from_dict(env_doc)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    col = args.column or _ALIASES.get(env.sequence, env.sequence)
    if env.sequence == "S-sum" and not args.column:
        seq = cols["S_f"] + cols["S_g"]
    elif col in cols:
        seq = cols[col]
    else:
        print(f"error: trace has no column {col!r}", file=sys.stderr)
        return EXIT_CONFIG
    if np.all(np.isnan(seq)):
        print(f"error: column {col!r} is empty", file=sys.stderr)
        return EXIT_CONFIG
    cert = certify(seq, env, tol=tol, atol=atol)
    sys.stdout.write(json.dumps(cert.to_dict(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK if cert.passed else EXIT_VIOLATED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="splitcert", description=(
        "Run splitting, ADMM and feasibility experiments and certify convergence rates."))
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment spec (JSON)")
    r.add_argument("spec")
    r.add_argument("--output-dir", default=None,
                   help="output directory (overrides output.dir and SPLITCERT_OUTPUT_DIR)")
    r.add_argument("--workers", type=int, default=None, help="threads for batch specs")
    r.set_defaults(func=_cmd_run)

    g = sub.add_parser("generate", help="print a generated problem instance as JSON")
    g.add_argument("kind", choices=PROBLEM_KINDS)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--dims", default=None, help='JSON object, e.g. \'{"n": 10}\'')
    g.add_argument("--output", default=None)
    g.set_defaults(func=_cmd_generate)

    c = sub.add_parser("certify", help="check a trace CSV column against an envelope")
    c.add_argument("trace")
    c.add_argument("--envelope", required=True, help="envelope JSON text or .json file")
    c.add_argument("--column", default=None, help="trace column (default: from the envelope)")
    c.set_defaults(func=_cmd_certify)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
