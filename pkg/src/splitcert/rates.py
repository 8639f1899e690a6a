"""Theoretical constants, rate envelopes and empirical certification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .trace import best_transform

__all__ = [
    "PaperConstants",
    "paper_constants",
    "bisect_root",
    "ConditionNotMetError",
    "DegenerateSequenceError",
    "NotApplicableError",
    "prs_linear_constant",
    "theorem3_bound",
    "fpr_bounds",
    "check_summable_rates",
    "SummabilityReport",
    "fit_empirical_rate",
    "RateEnvelope",
    "RateCertificate",
    "certify",
    "ENVELOPE_EXPONENTS",
]


class ConditionNotMetError(ValueError):
    """A regularity hypothesis required by a constant does not hold."""


class NotApplicableError(ValueError):
    """An envelope's gate (stepsize or relaxation range) fails."""


class DegenerateSequenceError(ValueError):
    """Too few or non-positive points for a rate fit.

    ``finite_convergence`` is True when the tail contains exact zeros.
    """

    def __init__(self, msg: str, finite_convergence: bool = False):
        super().__init__(msg)
        self.finite_convergence = finite_convergence


# ---------------------------------------------------------------- constants


def bisect_root(p, lo: float, hi: float, tol: float = 1e-14, max_iter: int = 400) -> float:
    """Root of the polynomial ``p`` (coefficients, highest degree first) in ``[lo, hi]``.

    Bisection runs until the residual is at most ``tol`` or the bracket
    cannot shrink further in floating point.
    """
    f = lambda x: float(np.polyval(p, x))
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise ValueError("root not bracketed")
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= tol or mid in (lo, hi):
            break
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return mid


@dataclass(frozen=True)
class PaperConstants:
    """Stepsize constants of smooth DRS.

    Attributes
    ----------
    kappa : float
        Positive root of ``x^3 + x^2 - 2x - 1``; bounds the stepsize range
        ``gamma < kappa beta`` of the whole-sequence and FPR rates.
    rho : float
        Positive root of ``x^3 - 2x^2 - 1``; switches the best-iterate bound.
    theta_star : float
        ``1 - 1/kappa^2``.
    """

    kappa: float
    rho: float
    theta_star: float


@lru_cache(maxsize=1)
def paper_constants() -> PaperConstants:
    kappa = bisect_root([1.0, 1.0, -2.0, -1.0], 1.0, 2.0)
    rho = bisect_root([1.0, -2.0, 0.0, -1.0], 2.0, 3.0)
    return PaperConstants(kappa, rho, 1.0 - 1.0 / kappa ** 2)


# -------------------------------------------------------- linear constants


def _clamp_sqrt(v: float) -> float:
    return math.sqrt(min(1.0, max(0.0, v)))


def prs_linear_constant(which: str, mu: float, beta: float, gamma: float, lam: float) -> float:
    """Per-step contraction factor of relaxed PRS under strong regularity.

    Parameters
    ----------
    which : {"g-regular", "f-regular", "mixed"}
        ``g-regular``: g is ``mu``-strongly convex with ``1/beta``-Lipschitz
        gradient. ``f-regular``: the same for f. ``mixed``: one function is
        ``mu``-strongly convex and the other has a ``1/beta``-Lipschitz
        gradient.
    mu, beta, gamma : float
    lam : float
        Relaxation parameter in ``[0, 1]``.

    Returns
    -------
    float
        ``C`` with ``||z^{k+1} - z*|| <= C ||z^k - z*||``, clamped to ``[0, 1]``.

    Examples
    --------
    >>> prs_linear_constant("g-regular", 1.0, 1.0, 1.0, 1.0)
    0.0
    >>> round(prs_linear_constant("mixed", 1.0, 1.0, 1.0, 0.5), 4)
    0.8165
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if not (mu > 0 and beta > 0):
        raise ConditionNotMetError(f"{which} constant needs mu*beta > 0 (mu={mu}, beta={beta})")
    if which == "g-regular":
        return _clamp_sqrt(1.0 - 4.0 * gamma * lam * mu / (1.0 + gamma / beta) ** 2)
    if which == "f-regular":
        m = min(4.0 * gamma * mu / (1.0 + gamma / beta) ** 2, 1.0 - lam)
        return _clamp_sqrt(1.0 - 0.5 * lam * m)
    if which == "mixed":
        m = min(gamma * mu, beta / gamma, 1.0 - lam)
        return _clamp_sqrt(1.0 - 4.0 * lam / 3.0 * m)
    raise ValueError(f"unknown regularity case {which!r}")


# ------------------------------------------------------ sublinear envelopes


def theorem3_bound(beta: float, gamma: float, k: int, norm_xg0_xstar_sq: float,
                   norm_z0_zstar_sq: float) -> tuple[float, Optional[float]]:
    """Objective bounds of smooth DRS (g with ``1/beta``-Lipschitz gradient).

    Returns
    -------
    best : float
        Bound on ``min_{i<=k} f(x_f^i) + g(x_f^i) - opt``.
    whole : float or None
        Bound on ``f(x_f^k) + g(x_f^k) - opt`` itself, available only when
        ``gamma < kappa beta``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    c = paper_constants()
    den = 2.0 * gamma * (k + 1)
    if gamma < c.rho * beta:
        best = norm_xg0_xstar_sq / den
    else:
        coef = (gamma ** 3 / beta - 2.0 * gamma * beta - beta ** 2) / (beta ** 2 + gamma ** 2)
        best = (norm_xg0_xstar_sq + coef * norm_z0_zstar_sq) / den
    whole = norm_xg0_xstar_sq / den if gamma < c.kappa * beta else None
    return best, whole


def fpr_bounds(kind: str, params: dict, k: int) -> float:
    """FPR envelope at step ``k``.

    Parameters
    ----------
    kind : {"generic", "smooth-drs"}
    params : dict
        generic: ``tau`` (infimum of ``lambda(1-lambda)``) and
        ``z0_zstar_sq``. smooth-drs: ``beta``, ``gamma``, ``xg0_xstar_sq``
        and optionally ``lam`` (must be 1/2).
    k : int

    Examples
    --------
    >>> fpr_bounds("generic", {"tau": 0.25, "z0_zstar_sq": 1.0}, 3)
    1.0
    """
    if kind == "generic":
        tau = float(params["tau"])
        if not tau > 0:
            raise NotApplicableError("generic FPR rate needs tau > 0")
        return float(params["z0_zstar_sq"]) / (tau * (k + 1))
    if kind == "smooth-drs":
        beta, gamma = float(params["beta"]), float(params["gamma"])
        kappa = paper_constants().kappa
        if params.get("lam", 0.5) != 0.5:
            raise NotApplicableError("smooth-drs FPR rate needs lambda = 1/2")
        if not gamma < kappa * beta:
            raise NotApplicableError("smooth-drs FPR rate needs gamma < kappa*beta")
        if k < 1:
            raise ValueError("smooth-drs FPR rate holds for k >= 1")
        den = k ** 2 * (1.0 + gamma / beta) ** 2 * (beta ** 2 - gamma ** 2 / kappa ** 2)
        return beta ** 2 * float(params["xg0_xstar_sq"]) / den
    raise ValueError(f"unknown FPR bound kind {kind!r}")


# ----------------------------------------------------- summable sequences


@dataclass
class SummabilityReport:
    """Findings of :func:`check_summable_rates`."""

    summable: bool
    total: float
    tail_share: float
    monotone: bool
    bigo_ok: Optional[bool]
    bigo_max_violation: float
    best_indices: np.ndarray
    best_values: np.ndarray
    weighted_ok: Optional[bool] = None
    notes: list = field(default_factory=list)


def check_summable_rates(a: Sequence[float], lam, witness: Optional[Sequence[float]] = None,
                         tol: float = 1e-7, tail_threshold: float = 0.1) -> SummabilityReport:
    """Check the rates implied by summability of ``sum lambda_k a_k``.

    Parameters
    ----------
    a : sequence of float
        Nonnegative terms.
    lam : float, sequence or RelaxationSchedule
        Weights ``lambda_k``.
    witness : sequence, optional
        ``b`` with ``lambda_k a_k <= b_k - b_{k+1}``; when given the weighted
        bound ``sum (k+1) lambda_k a_k <= sum b_k`` is checked.
    tol : float
        Relative tolerance of the pointwise checks.
    tail_threshold : float
        A finite sample is declared summable when its second half carries
        less than this share of the weighted total.

    Notes
    -----
    Summability of an infinite series cannot be decided from finitely many
    terms; the tail-share heuristic flags sequences such as constants or
    ``1/k`` whose second half still carries a large share of the total.
    For monotone ``a`` the finite weighted sum is a lower bound of the
    infinite one, so ``a_k <= (1/Lambda_k) sum`` checked with it is
    conservative.
    """
    a = np.asarray(a, dtype=float)
    N = a.shape[0]
    if np.ndim(lam) == 0 and not callable(lam):
        lv = np.full(N, float(lam))
    elif callable(lam):
        lv = np.array([lam(k) for k in range(N)])
    else:
        lv = np.asarray(lam, dtype=float)[:N]
    w = lv * a
    total = float(w.sum())
    tail = float(w[N // 2:].sum())
    share = tail / total if total > 0 else 0.0
    summable = bool(np.all(np.isfinite(w)) and share < tail_threshold)
    mono = bool(np.all(np.diff(a) <= 0))
    idx, best = best_transform(a)
    notes = []
    bigo_ok, worst = None, -math.inf
    if not summable:
        notes.append("not summable")
    elif mono:
        Lam = np.cumsum(lv)
        env = total / Lam
        worst = float(np.max((a - env) / np.maximum(env, np.finfo(float).tiny)))
        bigo_ok = worst <= tol
    weighted_ok = None
    if witness is not None:
        b = np.asarray(witness, dtype=float)
        lhs = float(np.sum((np.arange(N) + 1) * w))
        rhs = float(np.sum(b[:N]))
        weighted_ok = lhs <= rhs * (1.0 + tol) + tol
    return SummabilityReport(summable, total, share, mono, bigo_ok, worst, idx, best,
                             weighted_ok, notes)


# --------------------------------------------------------------- fitting


def _tail_window(n: int, tail_fraction: float, min_points: int) -> int:
    return min(n, max(int(math.ceil(tail_fraction * n)), min_points))


def fit_empirical_rate(seq: Sequence[float], tail_fraction: float = 0.5, min_points: int = 100,
                       k0: int = 1) -> tuple[float, float]:
    """Fit a power law and a linear factor to the tail of a sequence.

    Parameters
    ----------
    seq : sequence of float
        Positive values; ``seq[i]`` is taken to be the value at ``k = k0 + i``.
    tail_fraction : float
        Share of the sequence used (default: the last half).
    min_points : int
        Minimum window length when the sequence is long enough.
    k0 : int
        Index of the first element.

    Returns
    -------
    exponent : float
        Least-squares slope of ``log seq_k`` against ``log k``.
    linear_factor : float
        Geometric mean of ``seq_{k+1}/seq_k`` over the window.

    Raises
    ------
    DegenerateSequenceError
        Fewer than 10 points in the window, or non-positive values (exact
        zeros are reported as finite convergence).
    """
    s = np.asarray(seq, dtype=float)
    n = s.shape[0]
    w = _tail_window(n, tail_fraction, min_points)
    if w < 10:
        raise DegenerateSequenceError(f"tail window has {w} < 10 points")
    t = s[n - w:]
    if np.any(t == 0):
        raise DegenerateSequenceError("tail contains exact zeros: finite convergence",
                                      finite_convergence=True)
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise DegenerateSequenceError("tail has negative or non-finite values")
    k = np.arange(k0 + n - w, k0 + n, dtype=float)
    if k[0] <= 0:
        raise DegenerateSequenceError("power-law fit needs k >= 1 on the window")
    lt = np.log(t)
    exponent = float(np.polyfit(np.log(k), lt, 1)[0])
    factor = float(np.exp((lt[-1] - lt[0]) / (w - 1)))
    return exponent, factor


# ---------------------------------------------------------- certificates

#: Power of ``k`` in each sublinear envelope kind.
ENVELOPE_EXPONENTS = {
    "big-O-1-over-k": -1.0, "little-o-1-over-k": -1.0,
    "big-O-1-over-k2": -2.0, "little-o-1-over-k2": -2.0,
    "big-O-1-over-sqrtk": -0.5,
}
_KINDS = tuple(ENVELOPE_EXPONENTS) + ("linear",)


@dataclass(frozen=True)
class RateEnvelope:
    """A theoretical rate envelope ``seq_k <= c * rate(k)``.

    Parameters
    ----------
    kind : str
        ``big-O-1-over-k``, ``little-o-1-over-k``, ``big-O-1-over-k2``,
        ``little-o-1-over-k2``, ``big-O-1-over-sqrtk`` or ``linear``.
    c : float
        Nonnegative constant.
    sequence : str
        Which quantity it bounds (``fpr``, ``obj-gap``, ``S-sum``,
        ``residual``, ``distance``) or a trace column name.
    ergodicity : str
        ``nonergodic``, ``ergodic`` or ``best-iterate``.
    factors : sequence of float, optional
        Per-step factors of a linear envelope: the bound at ``k`` is
        ``c * prod_{i<k} factors[i]`` (the last factor repeats).
    shift : float
        Sublinear envelopes use ``k + shift`` as the denominator variable.
    k_start : int
        First index at which the envelope is claimed.
    horizon : sequence of float, optional
        Replaces ``k + shift`` (for instance by ``Lambda_k`` for ergodic
        rates).
    """

    kind: str
    c: float
    sequence: str = "fpr"
    ergodicity: str = "nonergodic"
    factors: Optional[tuple] = None
    shift: float = 1.0
    k_start: int = 0
    horizon: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if not self.c >= 0:
            raise ValueError("envelope constant must be nonnegative")
        if self.kind == "linear":
            if not self.factors:
                raise ValueError("linear envelopes need per-step factors")
            if any(not 0.0 <= f <= 1.0 for f in self.factors):
                raise ValueError("linear factors must lie in [0, 1]")

    @property
    def exponent(self) -> Optional[float]:
        return ENVELOPE_EXPONENTS.get(self.kind)

    @property
    def little_o(self) -> bool:
        return self.kind.startswith("little-o")

    def values(self, n: int) -> np.ndarray:
        """Envelope at ``k = 0, ..., n-1`` (``nan`` before ``k_start``)."""
        k = np.arange(n, dtype=float)
        if self.kind == "linear":
            f = np.asarray(self.factors, dtype=float)
            if f.shape[0] < n:
                f = np.concatenate([f, np.full(n - f.shape[0], f[-1])])
            prods = np.concatenate([[1.0], np.cumprod(f[: n - 1])])
            out = self.c * prods
        else:
            if self.horizon is not None:
                h = np.asarray(self.horizon, dtype=float)[:n]
            else:
                h = k + self.shift
            with np.errstate(divide="ignore"):
                out = self.c * h ** self.exponent
        out = np.asarray(out, dtype=float)
        out[: self.k_start] = np.nan
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "c": self.c, "sequence": self.sequence,
             "ergodicity": self.ergodicity, "shift": self.shift, "k_start": self.k_start}
        if self.factors is not None:
            d["factors"] = list(self.factors)
        if self.horizon is not None:
            d["horizon"] = list(self.horizon)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RateEnvelope":
        d = dict(d)
        for key in ("factors", "horizon"):
            if d.get(key) is not None:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)


@dataclass(frozen=True)
class RateCertificate:
    """An envelope together with its empirical verification.

    ``verdict`` is ``certified`` iff ``max_relative_violation <= tol``,
    ``violated`` otherwise, and ``not-applicable`` when the envelope's gate
    failed (no check was run).
    """

    envelope: Optional[RateEnvelope]
    max_relative_violation: float
    first_violation_k: Optional[int]
    fitted_exponent: float
    fitted_linear_factor: float
    verdict: str
    tol: float = 1e-7
    n_checked: int = 0
    little_o_supported: Optional[bool] = None
    finite_convergence: bool = False
    reason: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "certified"

    def to_dict(self) -> dict:
        f = lambda v: None if v is None or not math.isfinite(v) else float(v)
        return {
            "envelope": None if self.envelope is None else self.envelope.to_dict(),
            "max_relative_violation": f(self.max_relative_violation),
            "first_violation_k": self.first_violation_k,
            "fitted_exponent": f(self.fitted_exponent),
            "fitted_linear_factor": f(self.fitted_linear_factor),
            "verdict": self.verdict,
            "tol": self.tol,
            "n_checked": self.n_checked,
            "little_o_supported": self.little_o_supported,
            "finite_convergence": self.finite_convergence,
            "reason": self.reason,
        }

    @classmethod
    def not_applicable(cls, envelope: Optional[RateEnvelope], reason: str) -> "RateCertificate":
        return cls(envelope, math.nan, None, math.nan, math.nan, "not-applicable", reason=reason)


def certify(seq: Sequence[float], envelope: RateEnvelope, tol: float = 1e-7,
            atol: float = 0.0, k0: int = 0) -> RateCertificate:
    """Check ``seq_k <= envelope(k)`` pointwise and attach fitted rates.

    Parameters
    ----------
    seq : sequence of float
        ``seq[i]`` is the value at ``k = k0 + i``.
    envelope : RateEnvelope
    tol : float
        Relative tolerance: the violation at ``k`` is
        ``(seq_k - env_k - atol) / env_k``.
    atol : float
        Absolute slack, useful for linear envelopes that fall below
        floating-point resolution. Zero by default.
    k0 : int
        Index of ``seq[0]``.

    Returns
    -------
    RateCertificate
    """
    s = np.asarray(seq, dtype=float)
    n = s.shape[0]
    env = envelope.values(k0 + n)[k0:]
    mask = np.isfinite(env)
    excess = s - env - atol
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(env > 0, excess / np.where(env > 0, env, 1.0),
                       np.where(excess > 0, np.inf, 0.0))
    rel = np.where(mask, rel, -np.inf)
    rel = np.where(np.isnan(s), np.inf, rel)
    worst = float(np.max(rel)) if n else -math.inf
    bad = np.nonzero(rel > tol)[0]
    first = int(bad[0]) + k0 if bad.size else None
    verdict = "certified" if worst <= tol else "violated"

    exponent, factor, finite = math.nan, math.nan, False
    try:
        exponent, factor = fit_empirical_rate(s[max(0, 1 - k0):], k0=max(k0, 1))
    except DegenerateSequenceError as exc:
        finite = exc.finite_convergence
    little = None
    if envelope.little_o:
        little = bool(math.isfinite(exponent) and exponent <= envelope.exponent - 0.05) or finite
    return RateCertificate(envelope, worst, first, exponent, factor, verdict, tol,
                           int(mask.sum()), little, finite)
