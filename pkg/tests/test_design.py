"""Inverse pulse design: coefficients, beta evaluation, lemma checks,
pulse assembly, verification."""

import math

import numpy as np
import pytest

from softsqueeze.core import ConstantBeta
from softsqueeze.design import (
    ConstantTail,
    SingularityError,
    ThetaAnsatz,
    ThetaDerivedBeta,
    beta_from_theta,
    build_chain,
    build_pulse,
    quarter_period,
    solve_theta_coeffs,
    theta_eval,
    validate_lemma,
    verify_design,
)
from softsqueeze.evolution import IntegratorConfig, integrate, integrate_symmetric

RNG = np.random.default_rng(3141)
PI = math.pi
HALF_PI = PI / 2
CFG = IntegratorConfig(steps=4000)


# ---------------------------------------------------------------------------
# coefficients


def test_coeffs_closed_form_b2():
    a = solve_theta_coeffs(2.0, 0.0)
    assert a.a1 == pytest.approx(33.0 / 16.0, abs=1e-14)
    assert a.a3 == pytest.approx(1.0 / 32.0, abs=1e-14)
    assert a.a5 == pytest.approx(-1.0 / 32.0, abs=1e-14)


def test_coeffs_closed_form_b_5_3():
    a = solve_theta_coeffs(5.0 / 3.0, 0.0)
    assert a.a1 == pytest.approx(1.7375, abs=1e-12)
    assert a.a3 == pytest.approx(0.0770833333333, abs=1e-12)
    assert a.a5 == pytest.approx(0.00625, abs=1e-12)


def test_coeffs_match_independent_solve():
    # same 3x3 system solved a second way (explicit inverse via Cramer)
    for _ in range(20):
        b = RNG.uniform(0.1, 10.0) * RNG.choice([-1.0, 1.0])
        beta0 = RNG.uniform(-5.0, 5.0)
        a = solve_theta_coeffs(b, beta0)
        m = np.array([[1.0, 3.0, 5.0], [1.0, -1.0, 1.0], [-1.0, 9.0, -25.0]])
        rhs = np.array([2.0, b, -2.0 / b - 2.0 * b * beta0])
        det_m = np.linalg.det(m)
        cramer = [
            np.linalg.det(np.column_stack(
                [rhs if k == j else m[:, k] for k in range(3)])) / det_m
            for j in range(3)
        ]
        assert a.a1 == pytest.approx(cramer[0], rel=1e-10)
        assert a.a3 == pytest.approx(cramer[1], rel=1e-10, abs=1e-12)
        assert a.a5 == pytest.approx(cramer[2], rel=1e-10, abs=1e-12)


def test_coeffs_residuals_fig4_parameters():
    a = solve_theta_coeffs(1.99, 0.28)
    assert max(abs(r) for r in a.residuals()) < 1e-12


def test_coeffs_reject_zero_b():
    with pytest.raises(ValueError):
        solve_theta_coeffs(0.0, 1.0)


# ---------------------------------------------------------------------------
# theta evaluation


def test_theta_basic_values():
    a = solve_theta_coeffs(2.0, 0.0)
    assert theta_eval(a, 0.0) == 0.0
    assert theta_eval(a, 0.0, 1) == pytest.approx(2.0, abs=1e-14)
    assert theta_eval(a, HALF_PI) == pytest.approx(a.b, abs=1e-14)
    assert theta_eval(a, HALF_PI, 1) == pytest.approx(0.0, abs=1e-14)


def test_theta_third_derivative_at_zero():
    a = solve_theta_coeffs(2.0, 0.0)
    # -(a1 + 27 a3 + 125 a5)
    assert theta_eval(a, 0.0, 3) == pytest.approx(1.0, abs=1e-12)


def test_theta_is_odd():
    a = solve_theta_coeffs(1.7, 0.3)
    taus = RNG.uniform(0.0, HALF_PI, size=32)
    assert np.allclose(theta_eval(a, taus), -theta_eval(a, -taus), atol=1e-14)


def test_theta_derivative_order_validation():
    a = solve_theta_coeffs(2.0, 0.0)
    with pytest.raises(ValueError):
        theta_eval(a, 0.0, 4)


def test_theta_derivatives_against_finite_differences():
    a = solve_theta_coeffs(1.3, -0.4)
    h = 1e-5
    for tau in (0.3, 1.0, 1.4):
        for order in (1, 2, 3):
            fd = (theta_eval(a, tau + h, order - 1)
                  - theta_eval(a, tau - h, order - 1)) / (2 * h)
            assert theta_eval(a, tau, order) == pytest.approx(fd, abs=5e-9)


# ---------------------------------------------------------------------------
# beta from theta


def test_beta_edge_value_is_beta0():
    for b, beta0 in ((2.0, 0.0), (1.99, 0.28), (5.0 / 3.0, 0.0), (0.7, -1.1)):
        a = solve_theta_coeffs(b, beta0)
        assert beta_from_theta(a, HALF_PI) == pytest.approx(beta0, abs=1e-12)


def test_beta_limit_at_origin():
    a = solve_theta_coeffs(2.0, 0.0)
    # theta'(0) = 2, theta'''(0) = 1 so the limit is -2*1/16
    assert beta_from_theta(a, 0.0) == pytest.approx(-0.125, abs=1e-14)


def test_beta_limit_matches_extrapolation_oracle():
    # Richardson in h^2 from regular-branch evaluations approaching 0
    a = solve_theta_coeffs(2.0, 0.0)
    h = 4e-3
    b_h = beta_from_theta(a, h)
    b_h2 = beta_from_theta(a, h / 2)
    extrap = (4.0 * b_h2 - b_h) / 3.0
    assert extrap == pytest.approx(-0.125, abs=1e-9)


def test_beta_near_zero_continuity():
    a = solve_theta_coeffs(1.99, 0.28)
    lim = beta_from_theta(a, 0.0)
    for tau in (1e-4, -1e-4):
        assert abs(beta_from_theta(a, tau) - lim) <= 1e-4


def test_beta_is_symmetric():
    a = solve_theta_coeffs(1.6, 0.2)
    taus = RNG.uniform(0.0, HALF_PI, size=64)
    assert np.allclose(beta_from_theta(a, taus), beta_from_theta(a, -taus),
                       atol=1e-10)


def test_beta_from_pure_sine_is_constant_quarter():
    # theta = 2 sin(tau) is the symmetric-interval u12 of beta = 1/4
    def theta(tau, order=0):
        return [2 * math.sin(tau), 2 * math.cos(tau),
                -2 * math.sin(tau), -2 * math.cos(tau)][order]

    for tau in (0.3, PI / 4, 1.2):
        assert beta_from_theta(theta, tau) == pytest.approx(0.25, abs=1e-12)
    u = integrate_symmetric(ConstantBeta(0.25), 1.2, CFG)
    assert u.u12 == pytest.approx(theta(1.2), abs=1e-10)


def test_beta_singularity_detected():
    # theta = sin(tau) vanishes at 0 with slope 1: Lemma condition violated
    def theta(tau, order=0):
        return [math.sin(tau), math.cos(tau),
                -math.sin(tau), -math.cos(tau)][order]

    with pytest.raises(SingularityError):
        beta_from_theta(theta, 1e-8)


def test_beta_array_matches_scalar():
    a = solve_theta_coeffs(1.99, 0.28)
    taus = np.linspace(-HALF_PI, HALF_PI, 41)
    arr = beta_from_theta(a, taus)
    scalars = [beta_from_theta(a, float(t)) for t in taus]
    assert np.allclose(arr, scalars, atol=0.0)


# ---------------------------------------------------------------------------
# lemma validation


def test_lemma_passes_for_designed_ansatz():
    rep = validate_lemma(solve_theta_coeffs(2.0, 0.0))
    assert rep.ok
    assert len(rep.theta_zeros) == 1
    z = rep.theta_zeros[0]
    assert z.tau == pytest.approx(0.0, abs=1e-12)
    assert z.theta_prime == pytest.approx(2.0, abs=1e-12)


def test_lemma_reports_edge_fourier_points():
    rep = validate_lemma(solve_theta_coeffs(1.99, 0.28))
    taus = sorted(f.tau for f in rep.fourier_points)
    assert taus[0] == pytest.approx(-HALF_PI, abs=1e-9)
    assert taus[-1] == pytest.approx(HALF_PI, abs=1e-9)
    edge = [f for f in rep.fourier_points if f.tau > 0][0]
    assert edge.b == pytest.approx(1.99, abs=1e-12)
    assert edge.beta == pytest.approx(0.28, abs=1e-12)
    assert edge.beta_prime_zero


def test_lemma_flags_bad_slope():
    def theta(tau, order=0):
        return [math.sin(tau), math.cos(tau),
                -math.sin(tau), -math.cos(tau)][order]

    rep = validate_lemma(theta, interval=(-1.0, 1.0))
    assert not rep.ok
    assert "slope" in rep.violations[0]


# ---------------------------------------------------------------------------
# pulse assembly


def test_build_pulse_soft_borders():
    pulse = build_pulse(solve_theta_coeffs(2.0, 0.0))
    assert pulse.interval == (-HALF_PI, HALF_PI)
    assert pulse.profile.beta(HALF_PI) == pytest.approx(0.0, abs=1e-12)
    assert pulse.profile.beta(-HALF_PI) == pytest.approx(0.0, abs=1e-12)
    assert pulse.tail is None and pulse.joins == ()


def test_build_pulse_tail_mismatch_rejected():
    a = solve_theta_coeffs(2.0, 0.0)
    with pytest.raises(ValueError):
        build_pulse(a, ConstantTail(beta0=0.5, duration=1.0))


def test_build_chain_stage_mismatch_rejected():
    with pytest.raises(ValueError):
        build_chain([solve_theta_coeffs(2.0, 0.0),
                     solve_theta_coeffs(1.5, 0.3)])


def test_quarter_period_values():
    assert quarter_period(0.28) == pytest.approx(5 * PI / (2 * math.sqrt(7)),
                                                 abs=1e-12)
    assert quarter_period(1.0) == pytest.approx(HALF_PI)
    with pytest.raises(ValueError):
        quarter_period(0.0)


def test_build_pulse_with_tail_layout():
    a = solve_theta_coeffs(1.99, 0.28)
    tail = ConstantTail(beta0=0.28, duration=quarter_period(0.28))
    pulse = build_pulse(a, tail)
    lo, hi = pulse.interval
    assert lo == pytest.approx(-HALF_PI)
    assert hi == pytest.approx(HALF_PI + tail.duration)
    assert pulse.profile.beta(HALF_PI + 0.5) == 0.28
    # single join at pi/2
    assert len(pulse.joins) == 1
    join = pulse.joins[0]
    assert join.tau == pytest.approx(HALF_PI)
    # beta and beta' are continuous there; beta'' jumps (reported, not hidden)
    assert abs(join.jumps[0]) <= 1e-12
    assert abs(join.jumps[1]) <= 1e-12
    assert abs(join.jumps[2]) > 0.1
    assert join.ok == (True, True, False)


def test_chain_join_continuity_between_equal_stages():
    a = solve_theta_coeffs(2.0, 0.0)
    pulse = build_chain([a, a])
    assert len(pulse.joins) == 1
    assert all(pulse.joins[0].ok)


def test_designed_profile_json_round_trip():
    from softsqueeze.core import profile_from_dict
    a = solve_theta_coeffs(1.99, 0.28)
    prof = ThetaDerivedBeta(a, offset=PI)
    again = profile_from_dict(prof.to_json_dict())
    taus = np.linspace(PI - HALF_PI, PI + HALF_PI, 33)
    assert np.allclose(prof.beta_array(taus), again.beta_array(taus), atol=1e-14)


# ---------------------------------------------------------------------------
# verification


def test_verify_single_stage_squeezed_fourier():
    pulse = build_pulse(solve_theta_coeffs(2.0, 0.0))
    rep = verify_design(pulse, CFG)
    assert rep.ok
    m = rep.stage_matrices[0]
    assert abs(m.u11) <= 1e-6 and abs(m.u22) <= 1e-6
    assert m.u12 == pytest.approx(2.0, abs=1e-6)
    assert m.u21 == pytest.approx(-0.5, abs=1e-6)


def test_verify_two_stage_amplifier():
    b1, b2 = 5.0 / 3.0, 184.0 / 95.0
    pulse = build_chain([solve_theta_coeffs(b1, 0.0),
                         solve_theta_coeffs(b2, 0.0)])
    rep = verify_design(pulse, CFG)
    assert rep.ok
    assert rep.lam == pytest.approx(-b2 / b1, abs=1e-6)
    assert rep.lam == pytest.approx(-1.16211, abs=1e-4)
    assert rep.total.u22 == pytest.approx(-b1 / b2, abs=1e-6)


def test_verify_stage_plus_tail_amplifier():
    a = solve_theta_coeffs(1.99, 0.28)
    pulse = build_pulse(a, ConstantTail(0.28, quarter_period(0.28)))
    rep = verify_design(pulse, CFG)
    assert rep.ok
    b2 = 1.0 / math.sqrt(0.28)   # tail acts as squeezed Fourier with 5/sqrt(7)
    assert b2 == pytest.approx(5.0 / math.sqrt(7.0), abs=1e-12)
    assert rep.lam == pytest.approx(-b2 / 1.99, abs=1e-6)
    assert 1.0 / abs(rep.lam) == pytest.approx(1.0530, abs=1e-3)


def test_verify_round_trip_theta_identity():
    # u12(tau, -tau) of the designed profile reproduces theta on a grid
    a = solve_theta_coeffs(2.0, 0.0)
    prof = ThetaDerivedBeta(a)
    for tau in np.linspace(0.15, HALF_PI, 7):
        u = integrate_symmetric(prof, float(tau), CFG)
        assert u.u12 == pytest.approx(theta_eval(a, float(tau)), abs=1e-6)
        assert u.u11 == pytest.approx(0.5 * theta_eval(a, float(tau), 1),
                                      abs=1e-6)


def test_verify_report_json_shape():
    pulse = build_pulse(solve_theta_coeffs(2.0, 0.0))
    rep = verify_design(pulse, CFG)
    d = rep.to_json_dict()
    assert d["ok"] is True
    assert d["lambda"] is None  # off-diagonal total has no diagonal squeeze
    assert len(d["stages"]) == 1


def test_verify_flags_non_quarter_tail():
    a = solve_theta_coeffs(1.99, 0.28)
    pulse = build_pulse(a, ConstantTail(0.28, 1.0))
    rep = verify_design(pulse, CFG)
    # stage 1 still checked; the non-quarter tail is exempt from the
    # squeezed-Fourier stage check
    assert rep.ok
    assert len(rep.stage_matrices) == 2
