import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from splitcert.rates import (
    ConditionNotMetError,
    DegenerateSequenceError,
    NotApplicableError,
    RateCertificate,
    RateEnvelope,
    bisect_root,
    certify,
    check_summable_rates,
    fit_empirical_rate,
    fpr_bounds,
    paper_constants,
    prs_linear_constant,
    theorem3_bound,
)

C = paper_constants()


# ---------------------------------------------------------------- constants


def test_kappa_is_twice_cos_two_pi_over_seven():
    # x^3 + x^2 - 2x - 1 has the roots 2 cos(2 pi j / 7), j = 1, 2, 3
    assert C.kappa == pytest.approx(2.0 * math.cos(2.0 * math.pi / 7.0), abs=1e-14)


def test_rho_and_theta_star():
    real = [r.real for r in np.roots([1.0, -2.0, 0.0, -1.0]) if abs(r.imag) < 1e-12]
    assert C.rho == pytest.approx(max(real), abs=1e-13)
    assert C.theta_star == pytest.approx(1.0 - 1.0 / C.kappa ** 2)
    assert 1.0 < C.kappa < C.rho


def test_bisect_root():
    assert bisect_root([1.0, 0.0, -2.0], 0.0, 2.0) == pytest.approx(math.sqrt(2.0), abs=1e-13)
    assert bisect_root([1.0, -1.0], 1.0, 3.0) == 1.0
    with pytest.raises(ValueError):
        bisect_root([1.0, 0.0, 1.0], -1.0, 1.0)


def test_prs_linear_constant_examples():
    assert prs_linear_constant("g-regular", 1.0, 1.0, 1.0, 1.0) == 0.0
    assert prs_linear_constant("mixed", 1.0, 1.0, 1.0, 0.5) == pytest.approx(math.sqrt(2 / 3))
    # f-regular: 1 - lam/2 min(4 gamma mu/(1 + gamma/beta)^2, 1 - lam)
    assert prs_linear_constant("f-regular", 1.0, 1.0, 1.0, 0.5) == pytest.approx(math.sqrt(0.875))
    assert prs_linear_constant("f-regular", 1.0, 1.0, 1.0, 1.0) == 1.0
    assert prs_linear_constant("g-regular", 1.0, 1.0, 1.0, 0.0) == 1.0


def test_prs_linear_constant_errors():
    with pytest.raises(ValueError):
        prs_linear_constant("g-regular", 1.0, 1.0, 1.0, 1.5)
    with pytest.raises(ValueError):
        prs_linear_constant("g-regular", 1.0, 1.0, 0.0, 0.5)
    with pytest.raises(ConditionNotMetError):
        prs_linear_constant("mixed", 0.0, 1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        prs_linear_constant("other", 1.0, 1.0, 1.0, 0.5)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(["g-regular", "f-regular", "mixed"]), st.floats(1e-3, 10.0),
       st.floats(1e-3, 10.0), st.floats(1e-3, 10.0), st.floats(0.0, 1.0))
def test_prs_linear_constant_in_unit_interval(which, mu, beta, gamma, lam):
    assert 0.0 <= prs_linear_constant(which, mu, beta, gamma, lam) <= 1.0


# ----------------------------------------------------------------- envelopes


def test_theorem3_bound_branches():
    beta = 1.0
    best, whole = theorem3_bound(beta, 1.0, 4, 2.0, 3.0)
    assert best == pytest.approx(2.0 / 10.0) and whole == pytest.approx(2.0 / 10.0)
    # kappa beta <= gamma < rho beta: best-iterate bound only
    gamma = 0.5 * (C.kappa + C.rho)
    best, whole = theorem3_bound(beta, gamma, 0, 2.0, 3.0)
    assert whole is None and best == pytest.approx(2.0 / (2.0 * gamma))
    # gamma >= rho beta adds the z-term
    gamma = 3.0
    coef = (27.0 - 6.0 - 1.0) / 10.0
    best, whole = theorem3_bound(beta, gamma, 0, 2.0, 3.0)
    assert whole is None and best == pytest.approx((2.0 + coef * 3.0) / 6.0)
    with pytest.raises(ValueError):
        theorem3_bound(beta, 1.0, -1, 1.0, 1.0)


def test_fpr_bounds():
    assert fpr_bounds("generic", {"tau": 0.25, "z0_zstar_sq": 1.0}, 3) == 1.0
    p = {"beta": 1.0, "gamma": 1.0, "xg0_xstar_sq": 1.0}
    expected = 1.0 / (4.0 * (1.0 - 1.0 / C.kappa ** 2))
    assert fpr_bounds("smooth-drs", p, 1) == pytest.approx(expected)
    assert fpr_bounds("smooth-drs", p, 2) == pytest.approx(expected / 4.0)
    with pytest.raises(NotApplicableError):
        fpr_bounds("generic", {"tau": 0.0, "z0_zstar_sq": 1.0}, 0)
    with pytest.raises(NotApplicableError):
        fpr_bounds("smooth-drs", dict(p, lam=0.7), 1)
    with pytest.raises(NotApplicableError):
        fpr_bounds("smooth-drs", dict(p, gamma=1.5 * C.kappa), 1)
    with pytest.raises(ValueError):
        fpr_bounds("smooth-drs", p, 0)
    with pytest.raises(ValueError):
        fpr_bounds("other", p, 1)


# ----------------------------------------------------------- summability


def test_summable_inverse_square():
    k = np.arange(1, 2001, dtype=float)
    rep = check_summable_rates(1.0 / k ** 2, 1.0)
    assert rep.summable and rep.monotone and rep.bigo_ok
    assert rep.total == pytest.approx(np.sum(1.0 / k ** 2))


def test_not_summable():
    rep = check_summable_rates(np.ones(500), 0.5)
    assert not rep.summable and rep.bigo_ok is None
    assert "not summable" in rep.notes
    rep = check_summable_rates(1.0 / np.sqrt(np.arange(1, 1001)), 1.0)
    assert not rep.summable


def test_summable_weighted_witness():
    k = np.arange(2000, dtype=float)
    b = 1.0 / (k + 1)
    a = b - 1.0 / (k + 2)
    rep = check_summable_rates(a, 1.0, witness=b)
    assert rep.weighted_ok
    # a witness too small to dominate fails
    assert not check_summable_rates(a, 1.0, witness=0.01 * b).weighted_ok


def test_summable_best_transform_for_nonmonotone():
    a = np.array([1.0, 0.1, 0.5, 0.01] + [0.0] * 20)
    rep = check_summable_rates(a, [0.5] * 24)
    assert not rep.monotone and rep.bigo_ok is None
    assert rep.best_values[:4].tolist() == [1.0, 0.1, 0.1, 0.01]


# -------------------------------------------------------------- fitting


def test_fit_power_law_and_geometric():
    k = np.arange(1, 1001, dtype=float)
    e, _ = fit_empirical_rate(1.0 / k ** 2)
    assert e == pytest.approx(-2.0, abs=1e-10)
    _, f = fit_empirical_rate(0.5 ** np.arange(300))
    assert f == pytest.approx(0.5, rel=1e-12)
    e, _ = fit_empirical_rate(3.0 / np.arange(10, 1010.0), k0=10)
    assert e == pytest.approx(-1.0, abs=1e-10)


def test_fit_degenerate_inputs():
    with pytest.raises(DegenerateSequenceError):
        fit_empirical_rate([1.0] * 5)
    with pytest.raises(DegenerateSequenceError) as exc:
        fit_empirical_rate([1.0] * 50 + [0.0] * 50)
    assert exc.value.finite_convergence
    with pytest.raises(DegenerateSequenceError) as exc:
        fit_empirical_rate([1.0] * 50 + [-1.0] * 50)
    assert not exc.value.finite_convergence


# --------------------------------------------------------- certificates


def test_certify_exact_envelope():
    env = RateEnvelope("big-O-1-over-k", 2.0)
    seq = env.values(500)
    cert = certify(seq, env)
    assert cert.verdict == "certified" and cert.passed
    # c/(k+1) is not an exact power of k, so the fitted slope is only close to -1
    assert cert.fitted_exponent == pytest.approx(-1.0, abs=5e-3)
    assert cert.n_checked == 500


def test_certify_detects_excess_at_first_index():
    env = RateEnvelope("big-O-1-over-k", 2.0)
    tol = 1e-7
    cert = certify(env.values(100) * (1.0 + 2.0 * tol), env, tol=tol)
    assert cert.verdict == "violated" and cert.first_violation_k == 0
    assert cert.max_relative_violation == pytest.approx(2.0 * tol, rel=1e-6)


def test_certify_absolute_slack():
    env = RateEnvelope("linear", 1.0, factors=(0.5,))
    seq = env.values(200) + 1e-18
    assert certify(seq, env).verdict == "violated"
    assert certify(seq, env, atol=1e-17).verdict == "certified"


def test_certify_respects_k_start_and_k0():
    env = RateEnvelope("big-O-1-over-k2", 1.0, k_start=5)
    seq = np.r_[np.full(5, 1e9), env.values(100)[5:]]
    cert = certify(seq, env)
    assert cert.passed and cert.n_checked == 95
    env = RateEnvelope("big-O-1-over-k2", 1.0)
    cert = certify(env.values(100)[3:], env, k0=3)
    assert cert.passed and cert.n_checked == 97


def test_little_o_support():
    k = np.arange(1, 2001, dtype=float)
    env = RateEnvelope("little-o-1-over-k2", 1.0)
    assert certify(1.0 / (k + 1.0) ** 3, env).little_o_supported
    assert not certify(env.values(2000), env).little_o_supported
    fin = certify(np.r_[1.0, np.zeros(300)], env)
    assert fin.finite_convergence and fin.little_o_supported


def test_not_applicable_certificate():
    cert = RateCertificate.not_applicable(None, "gamma too large")
    assert cert.verdict == "not-applicable" and not cert.passed
    d = cert.to_dict()
    assert d["max_relative_violation"] is None and d["reason"] == "gamma too large"


def test_nan_in_sequence_is_a_violation():
    env = RateEnvelope("big-O-1-over-k", 1.0)
    seq = env.values(50)
    seq[10] = np.nan
    assert certify(seq, env).verdict == "violated"


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=20, max_size=200),
       st.sampled_from(["big-O-1-over-k", "big-O-1-over-k2", "big-O-1-over-sqrtk"]),
       st.floats(0.1, 10.0), st.integers(0, 10_000))
def test_certify_sound(fractions, kind, c, pick):
    env = RateEnvelope(kind, c)
    vals = env.values(len(fractions))
    seq = np.asarray(fractions) * vals
    assert certify(seq, env).passed
    i = pick % len(seq)
    seq[i] = vals[i] * 1.01
    cert = certify(seq, env)
    assert cert.verdict == "violated" and cert.first_violation_k == i


def test_envelope_round_trip_and_validation():
    env = RateEnvelope("linear", 3.0, sequence="distance", factors=(0.9, 0.8), k_start=2)
    assert RateEnvelope.from_dict(env.to_dict()) == env
    assert np.allclose(env.values(4)[2:], [3.0 * 0.9 * 0.8, 3.0 * 0.9 * 0.8 ** 2])
    erg = RateEnvelope("big-O-1-over-k", 1.0, ergodicity="ergodic", horizon=(0.5, 1.0, 1.5))
    assert RateEnvelope.from_dict(erg.to_dict()) == erg
    assert np.allclose(erg.values(3), [2.0, 1.0, 1.0 / 1.5])
    with pytest.raises(ValueError):
        RateEnvelope("exponential", 1.0)
    with pytest.raises(ValueError):
        RateEnvelope("big-O-1-over-k", -1.0)
    with pytest.raises(ValueError):
        RateEnvelope("linear", 1.0)
    with pytest.raises(ValueError):
        RateEnvelope("linear", 1.0, factors=(1.2,))
