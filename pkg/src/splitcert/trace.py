"""Iteration traces, inequality bookkeeping and trace export."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Optional

import numpy as np

__all__ = [
    "BASE_COLUMNS",
    "InequalityReport",
    "InequalityMonitor",
    "IterationTrace",
    "TraceBuilder",
    "MetricUnavailableError",
    "NumericalDivergenceError",
    "ergodic_average",
    "best_transform",
    "best_iterate",
    "format_float",
    "read_trace_csv",
]

#: Column order shared by every CSV export.
BASE_COLUMNS = ("k", "fpr", "step_sq", "obj_gap_nonergodic", "obj_gap_ergodic",
                "S_f", "S_g", "dist_to_zstar")


class MetricUnavailableError(KeyError):
    """The requested metric was not recorded (usually: no reference solution)."""


class NumericalDivergenceError(FloatingPointError):
    """An iterate became non-finite."""


def format_float(v: float) -> str:
    """Deterministic 17-significant-digit rendering (``nan``/``inf`` spelled out)."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


@dataclass
class InequalityReport:
    """Outcome of one inequality ``lhs <= rhs`` checked along a run.

    ``max_violation`` is the largest ``(lhs - rhs) / scale`` seen, where
    ``scale`` is the run's tolerance scale; the check fails at step ``k``
    when this exceeds ``tol``.
    """

    name: str
    tol: float
    checked: int = 0
    violations: int = 0
    max_violation: float = -math.inf
    first_k: Optional[int] = None
    first_lhs: float = math.nan
    first_rhs: float = math.nan

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "name": self.name, "tol": self.tol, "checked": self.checked,
            "violations": self.violations,
            "max_violation": _json_float(self.max_violation),
            "first_k": self.first_k,
            "first_lhs": _json_float(self.first_lhs),
            "first_rhs": _json_float(self.first_rhs),
        }


class InequalityMonitor:
    """Collects :class:`InequalityReport` objects during a run.

    Parameters
    ----------
    scale : float
        Magnitude the tolerance is relative to; ``max(1, scale)`` is used.
    tol : float
        Relative tolerance.
    """

    def __init__(self, scale: float, tol: float = 1e-9):
        self.scale = max(1.0, float(scale))
        self.tol = float(tol)
        self.reports: dict[str, InequalityReport] = {}

    def leq(self, name: str, k: int, lhs: float, rhs: float, tol: Optional[float] = None):
        """Record the check ``lhs <= rhs`` at step ``k``."""
        rep = self.reports.get(name)
        if rep is None:
            rep = self.reports[name] = InequalityReport(name, self.tol if tol is None else tol)
        v = (float(lhs) - float(rhs)) / self.scale
        rep.checked += 1
        if not v <= rep.max_violation:
            rep.max_violation = v
        if not v <= rep.tol:
            rep.violations += 1
            if rep.first_k is None:
                rep.first_k, rep.first_lhs, rep.first_rhs = int(k), float(lhs), float(rhs)

    def equal(self, name: str, k: int, a, b, tol: Optional[float] = None):
        """Record ``||a - b|| <= tol * scale`` for vectors or scalars."""
        d = float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
        self.leq(name, k, d, 0.0, tol)


def _json_float(v):
    v = float(v)
    return None if not math.isfinite(v) else v


def _ro(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class IterationTrace:
    """Immutable record of a run.

    Attributes
    ----------
    kind : str
        ``"prs"``, ``"fbs"``, ``"feasibility"``, ``"multi-set"`` or ``"admm"``.
    gamma : float
        Stepsize (``nan`` for runs with varying stepsizes).
    columns : mapping of str to ndarray
        Scalar per-step records, all of length ``len(trace)``. Always
        contains ``k``, ``lam``, ``fpr`` and ``step_sq``.
    vectors : mapping of str to ndarray
        Per-step vector records of shape ``(len(trace), n)``; empty in thin
        mode.
    last : mapping of str to ndarray
        Final state; ``last["z"]`` is the iterate after the final step.
    inequalities : mapping of str to InequalityReport
    meta : mapping
        Free-form run metadata (flags, references, schedule label).
    """

    kind: str
    gamma: float
    columns: Mapping[str, np.ndarray]
    vectors: Mapping[str, np.ndarray]
    last: Mapping[str, np.ndarray]
    inequalities: Mapping[str, InequalityReport] = field(default_factory=dict)
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.columns["k"].shape[0])

    def __getitem__(self, name: str) -> np.ndarray:
        if name in self.columns:
            return self.columns[name]
        if name in self.vectors:
            return self.vectors[name]
        raise KeyError(name)

    @property
    def thin(self) -> bool:
        return not self.vectors

    @property
    def lam(self) -> np.ndarray:
        return self.columns["lam"]

    @property
    def Lambda(self) -> np.ndarray:
        return np.cumsum(self.columns["lam"])

    @property
    def fpr(self) -> np.ndarray:
        return self.columns["fpr"]

    @property
    def step_sq(self) -> np.ndarray:
        return self.columns["step_sq"]

    @property
    def z_final(self) -> np.ndarray:
        return self.last["z"]

    @property
    def flagged(self) -> bool:
        """True when an asserted inequality failed or a run-level flag was raised."""
        return any(not r.ok for r in self.inequalities.values()) or bool(self.meta.get("flags"))

    @property
    def first_violation(self) -> Optional[InequalityReport]:
        bad = [r for r in self.inequalities.values() if not r.ok]
        return min(bad, key=lambda r: r.first_k) if bad else None

    def csv_columns(self) -> tuple[str, ...]:
        extra = tuple(self.meta.get("extra_columns", ()))
        return BASE_COLUMNS + extra

    def to_csv(self, path=None) -> str:
        """Write the scalar columns as CSV; returns the text.

        Missing columns are written as ``nan``.
        """
        cols = self.csv_columns()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        n = len(self)
        data = [self.columns.get(c, np.full(n, np.nan)) for c in cols]
        for i in range(n):
            row = [str(int(data[0][i]))]
            row += [format_float(d[i]) for d in data[1:]]
            w.writerow(row)
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_dict(self) -> dict:
        """JSON-compatible document (non-finite numbers become ``null``)."""
        return {
            "kind": self.kind,
            "gamma": _json_float(self.gamma),
            "columns": {k: [_json_float(v) for v in np.asarray(a, dtype=float)]
                        for k, a in self.columns.items()},
            "last": {k: [float(v) for v in a] for k, a in self.last.items()},
            "inequalities": {k: r.to_dict() for k, r in self.inequalities.items()},
            "meta": _jsonable(dict(self.meta)),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=1, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return _json_float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


class TraceBuilder:
    """Accumulates per-step records and freezes them into a trace."""

    def __init__(self, kind: str, gamma: float, thin: bool = False):
        self.kind = kind
        self.gamma = float(gamma)
        self.thin = thin
        self._cols: dict[str, list] = {}
        self._vecs: dict[str, list] = {}
        self.meta: dict[str, Any] = {"flags": []}

    def append(self, scalars: Mapping[str, float], vectors: Mapping[str, np.ndarray] = ()):
        for k, v in scalars.items():
            self._cols.setdefault(k, []).append(float(v))
        if not self.thin:
            for k, v in dict(vectors).items():
                self._vecs.setdefault(k, []).append(np.array(v, dtype=float))

    def flag(self, message: str):
        self.meta["flags"].append(message)

    def finish(self, last: Mapping[str, np.ndarray], monitor: Optional[InequalityMonitor] = None,
               **meta) -> IterationTrace:
        cols = {k: _ro(np.array(v, dtype=float)) for k, v in self._cols.items()}
        if "k" in cols:
            cols["k"] = _ro(cols["k"].astype(int))
        vecs = {k: _ro(np.array(v)) for k, v in self._vecs.items()}
        lastd = {k: _ro(np.array(v, dtype=float)) for k, v in last.items()}
        m = dict(self.meta)
        m.update(meta)
        reps = dict(monitor.reports) if monitor is not None else {}
        return IterationTrace(self.kind, self.gamma, cols, vecs, lastd, reps, m)


def check_finite(k: int, *arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalDivergenceError(f"non-finite iterate at k={k}")


def ergodic_average(trace: IterationTrace, k: int, direct: bool = False):
    """Weighted averages ``xbar^k = (1/Lambda_k) sum_{i<=k} lambda_i x^i``.

    Parameters
    ----------
    trace : IterationTrace
        A PRS trace.
    k : int
        Step index.
    direct : bool
        Recompute from the stored iterates instead of returning the
        incrementally maintained averages.

    Returns
    -------
    (xbar_f, xbar_g) : tuple of ndarray
    """
    n = len(trace)
    if not 0 <= k < n:
        raise IndexError(f"k={k} outside trace of length {n}")
    if trace.thin:
        if k != n - 1 or direct:
            raise ValueError("thin traces keep only the final averages")
        return trace.last["xbar_f"], trace.last["xbar_g"]
    if not direct:
        return trace.vectors["xbar_f"][k], trace.vectors["xbar_g"][k]
    lam = trace.lam[: k + 1]
    L = lam.sum()
    xf = (lam[:, None] * trace.vectors["x_f"][: k + 1]).sum(axis=0) / L
    xg = (lam[:, None] * trace.vectors["x_g"][: k + 1]).sum(axis=0) / L
    return xf, xg


def best_transform(values: Iterable[float]):
    """Running argmin and running minimum of a sequence.

    >>> best_transform([3, 1, 2])
    (array([0, 1, 1]), array([3., 1., 1.]))
    """
    v = np.asarray(list(values), dtype=float)
    idx = np.zeros(v.shape[0], dtype=int)
    best = 0
    for i in range(v.shape[0]):
        if v[i] < v[best]:
            best = i
        idx[i] = best
    return idx, v[idx]


_METRICS = {
    "objective-gap": ("obj_gap_nonergodic",),
    "S-sum": ("S_f", "S_g"),
    "fpr": ("fpr",),
}


def best_iterate(trace: IterationTrace, metric: str = "fpr"):
    """Best-iterate indices for a recorded metric.

    Parameters
    ----------
    trace : IterationTrace
    metric : {"objective-gap", "S-sum", "fpr"}

    Returns
    -------
    k_best : ndarray of int
        ``k_best[k] = argmin_{i <= k} metric_i``.
    values : ndarray
        ``metric[k_best[k]]``, nonincreasing.

    Raises
    ------
    MetricUnavailableError
        If the metric needs a reference solution that was not supplied.
    """
    if metric not in _METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    cols = _METRICS[metric]
    if any(c not in trace.columns or np.all(np.isnan(trace.columns[c])) for c in cols):
        raise MetricUnavailableError(f"{metric} not recorded (reference solution missing?)")
    v = sum(np.asarray(trace.columns[c]) for c in cols)
    return best_transform(v)


def read_trace_csv(path) -> dict[str, np.ndarray]:
    """Read a trace CSV back into float columns."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        out[name] = np.array([float(r[j]) for r in body])
    return out
