"""Relaxation schedules, stepsize sequences and solver configuration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

__all__ = ["RelaxationSchedule", "StepsizePair", "SolverConfig"]


@dataclass(frozen=True)
class RelaxationSchedule:
    """Sequence of relaxation parameters ``lambda_k in (0, 1]``.

    Parameters
    ----------
    generator : callable
        ``k -> lambda_k``.
    lam_inf : float
        Declared infimum of ``lambda_k``.
    tau_inf : float
        Declared infimum of ``lambda_k (1 - lambda_k)``.
    label : str
        Short description used in reports.

    Notes
    -----
    Use the constructors :meth:`constant`, :meth:`from_sequence` and
    :meth:`from_callable`; they validate every value they hand out.
    """

    generator: Callable[[int], float]
    lam_inf: float
    tau_inf: float
    label: str = "custom"

    def __call__(self, k: int) -> float:
        lam = float(self.generator(int(k)))
        if not 0.0 < lam <= 1.0:
            raise ValueError(f"lambda_{k} = {lam} outside (0, 1]")
        return lam

    def values(self, K: int) -> np.ndarray:
        """``(lambda_0, ..., lambda_{K-1})``."""
        return np.array([self(k) for k in range(K)])

    def partial_sums(self, K: int) -> np.ndarray:
        """``(Lambda_0, ..., Lambda_{K-1})`` with ``Lambda_k = sum_{i<=k} lambda_i``."""
        return np.cumsum(self.values(K))

    @property
    def constant_value(self) -> Optional[float]:
        """The common value for constant schedules, else ``None``."""
        if self.label.startswith("constant"):
            return self(0)
        return None

    @classmethod
    def constant(cls, lam: float) -> "RelaxationSchedule":
        lam = float(lam)
        if not 0.0 < lam <= 1.0:
            raise ValueError("lambda must lie in (0, 1]")
        return cls(lambda k: lam, lam, lam * (1.0 - lam), f"constant({lam!r})")

    @classmethod
    def from_sequence(cls, values: Sequence[float], label: str = "sequence") -> "RelaxationSchedule":
        """Finite list of values; the last one repeats forever."""
        vals = tuple(float(v) for v in values)
        if not vals or not all(0.0 < v <= 1.0 for v in vals):
            raise ValueError("values must be nonempty and lie in (0, 1]")
        tail = vals[-1]
        tau = min(v * (1.0 - v) for v in vals)
        return cls(lambda k: vals[k] if k < len(vals) else tail, min(vals), tau, label)

    @classmethod
    def from_callable(cls, fn: Callable[[int], float], lam_inf: float, tau_inf: float,
                      label: str = "callable") -> "RelaxationSchedule":
        return cls(fn, float(lam_inf), float(tau_inf), label)


Gamma = Union[float, Sequence[float], Callable[[int], float]]


def _as_seq(g: Gamma) -> Callable[[int], float]:
    if callable(g):
        return g
    if np.ndim(g) == 0:
        v = float(g)
        return lambda k: v
    vals = tuple(float(v) for v in g)
    return lambda k: vals[k] if k < len(vals) else vals[-1]


@dataclass(frozen=True)
class StepsizePair:
    """Per-iteration stepsizes ``(gamma_f_k, gamma_g_k)`` for feasibility runs.

    Each entry may be a number (constant), a finite sequence (last value
    repeats) or a callable ``k -> gamma``.
    """

    gamma_f: Gamma = 0.5
    gamma_g: Gamma = 0.5

    def __call__(self, k: int) -> tuple[float, float]:
        gf = float(_as_seq(self.gamma_f)(k))
        gg = float(_as_seq(self.gamma_g)(k))
        if not (gf > 0 and gg > 0):
            raise ValueError(f"stepsizes at k={k} must be positive")
        return gf, gg


@dataclass(frozen=True)
class SolverConfig:
    """Inputs of a splitting run.

    Parameters
    ----------
    gamma : float
        Stepsize for PRS, FBS and ADMM runs.
    schedule : RelaxationSchedule
        Defaults to DRS (``lambda = 1/2``).
    max_iters : int
    fpr_stop : float
        Stop once ``fpr_k <= fpr_stop``; 0 stops only on an exact fixed point
        and a negative value never stops early.
    assert_inequalities : bool
        Check the per-iteration inequalities (needs a fixed point).
    known_fixed_point : array_like, optional
        ``z*``; estimated by a long DRS pre-run when omitted in assertion mode.
    thin : bool
        Keep only scalar columns and the last iterate.
    stepsizes : StepsizePair, optional
        Per-iteration stepsizes for feasibility runs.
    tol : float
        Relative tolerance of inequality checks, scaled by ``max(1, ||z0 - z*||^2)``.
    """

    gamma: float = 1.0
    schedule: RelaxationSchedule = RelaxationSchedule.constant(0.5)
    max_iters: int = 1000
    fpr_stop: float = 0.0
    assert_inequalities: bool = False
    known_fixed_point: Optional[np.ndarray] = None
    thin: bool = False
    stepsizes: Optional[StepsizePair] = None
    tol: float = 1e-9

    def __post_init__(self):
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
