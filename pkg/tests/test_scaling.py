import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from invmetrics.discs import AnalyticDisc
from invmetrics.domains import (
    Ball, Ellipsoid, check_derivatives, complex_hessians, norm_power, parse_polynomial,
    polynomial_function, to_complex,
)
from invmetrics.errors import BudgetExhausted, NoCauchyTrend, NotStronglyConvexAt
from invmetrics.geodesics import ball_geodesic
from invmetrics.hyperbolic import BallScalingAutomorphism
from invmetrics.scaling import (
    ScalingSchedule, ball_probe_grid, blended_family, blended_function, c2_distance, chi,
    chi_derivatives, half_ball_grid, lbk_disc, normal_form_from_remainder,
    normalize_at_boundary_point, scaled_defining, transport_geodesic,
)

from strategies import ball_points


def cubic_normal_form(coefficient=1.0):
    return normal_form_from_remainder(norm_power(2, 3, coefficient=coefficient))


def test_schedule_validation():
    s = ScalingSchedule.default(levels=4, t_count=10)
    assert s.levels == 4 and np.all(np.diff(s.t) > 0)
    with pytest.raises(ValueError):
        ScalingSchedule([0.5, 0.6], [0.1])
    with pytest.raises(ValueError):
        ScalingSchedule([0.5, 0.25], [0.1, 0.05])
    with pytest.raises(ValueError):
        ScalingSchedule([1.5], [0.1])
    assert s.to_dict()["eps"][0] == 0.25


def test_chi_profile():
    assert chi(-0.6) == 0.0 and chi(-0.5) == 0.0
    assert chi(-0.25) == 1.0 and chi(0.3) == 1.0
    # the bump is symmetric about s = 1/2, i.e. x = -3/8
    assert chi(-0.375) == pytest.approx(0.5, abs=1e-12)
    x = np.linspace(-0.5, -0.25, 201)
    assert np.all(np.diff(chi(x)) >= 0)


def test_chi_normalization_against_quadrature():
    bump = lambda s: np.exp(-1 / (s * (1 - s)))  # noqa: E731
    total = quad(bump, 0, 1, epsabs=1e-16, epsrel=1e-14)[0]
    x = -0.4
    s = 4 * x + 2
    assert chi(x) == pytest.approx(quad(bump, 0, s, epsabs=1e-16, epsrel=1e-14)[0] / total, abs=1e-12)


@given(st.floats(-0.49, -0.26))
def test_chi_derivatives_match_finite_differences(x):
    h = 1e-6
    c, d1, d2 = chi_derivatives(x)
    assert d1 == pytest.approx((chi(x + h) - chi(x - h)) / (2 * h), abs=1e-6)
    cp, dp, _ = chi_derivatives(x + h)
    cm, dm, _ = chi_derivatives(x - h)
    assert d2 == pytest.approx((dp - dm) / (2 * h), abs=1e-4)


def test_zero_remainder_is_ball_fixed_point():
    r = normal_form_from_remainder(norm_power(2, 3, coefficient=0.0))
    grid = half_ball_grid(2, 500)
    rho = Ball(2).defining
    for omt in (0.5, 1e-3, 1e-9):
        assert tuple(c2_distance(scaled_defining(r, one_minus_t=omt), rho, grid)) == (0, 0, 0)


@pytest.mark.parametrize("t", [0.5, 0.9, 0.999])
def test_scaled_value_at_origin(t):
    # -1 only when h vanishes along the inward normal; ||w||^3 leaves (1-t)^2/(1+t)
    assert scaled_defining(cubic_normal_form(0.0), t=t).value(np.zeros(2)) == -1.0
    expected = -1 + (1 - t) ** 2 / (1 + t)
    assert scaled_defining(cubic_normal_form(), t=t).value(np.zeros(2)) == pytest.approx(expected)


@settings(max_examples=15)
@given(ball_points(2, 1.0), st.floats(0.1, 0.9))
def test_scaled_defining_matches_direct_pullback(z, t):
    if z[-1].real <= -0.45:
        return
    r = cubic_normal_form()
    A = BallScalingAutomorphism(2, t=t)
    P = abs(1 + t * z[-1]) ** 2 / (1 - t * t)
    direct = P * r.value(A(z))
    assert scaled_defining(r, t=t).value(z) == pytest.approx(direct, abs=1e-10)


def test_scaled_defining_refuses_far_half_space():
    r = cubic_normal_form()
    with pytest.raises(ValueError):
        scaled_defining(r, t=0.5).value(np.array([0, -0.6]))
    assert np.isfinite(scaled_defining(r, t=0.5, strict=False).value(np.array([0, -0.6])))


def test_scaled_defining_derivatives():
    r = cubic_normal_form()
    pts = half_ball_grid(2, 100, seed=3)
    for omt in (0.5, 2.0 ** -6):
        gerr, herr = check_derivatives(scaled_defining(r, one_minus_t=omt), pts)
        assert gerr < 1e-6 and herr < 1e-5


def test_c2_distance_decreases_for_cubic_remainder():
    r = cubic_normal_form()
    rho = Ball(2).defining
    grid = half_ball_grid(2, 1000)
    rows = [tuple(c2_distance(scaled_defining(r, one_minus_t=2.0 ** -mu), rho, grid))
            for mu in (1, 2, 3, 4)]
    for col in zip(*rows):
        assert all(b < a for a, b in zip(col, col[1:]))


def test_blended_function_interpolates():
    r = cubic_normal_form()
    f = blended_function(r, one_minus_t=0.25)
    rt = scaled_defining(r, one_minus_t=0.25)
    rho = Ball(2).defining
    far = np.array([[0.1, -0.7], [0.3j, -0.55 + 0.2j]])
    near = np.array([[0.1, -0.2], [0.3j, 0.5 + 0.2j]])
    assert np.allclose(f.value(far), rho.value(far))
    assert np.allclose(f.value(near), rt.value(near))
    assert blended_function(r, one_minus_t=0.25, lift=0.1).value(far[0]) == pytest.approx(
        rho.value(far[0]) + 0.1)
    gerr, herr = check_derivatives(f, ball_probe_grid(2, 200, seed=4))
    assert gerr < 1e-6 and herr < 1e-5


def test_normal_form_of_ball_has_zero_remainder():
    nf = normalize_at_boundary_point(Ball(2), [0, 1])
    # only roundoff remains: evaluating h cancels O(|w|) terms
    floor = [1e3 * np.finfo(float).eps / s ** 2 for s in (1e-2, 1e-3, 1e-4)]
    assert all(x <= f for x, f in zip(nf.shell_ratios, floor))
    assert nf.remainder_vanishes


def _normal_form_jet(nf, step=1e-4):
    """Finite-difference gradient and Hessian of ``w -> m(w) r(Psi(w))`` at 0."""
    r = nf.base
    n = nf.n

    def G(x):
        w = to_complex(x)
        return float(nf.multiplier.value(w) * r.value(nf.chart(w)))
    e = np.eye(2 * n) * step
    grad = np.array([(G(e[i]) - G(-e[i])) / (2 * step) for i in range(2 * n)])
    H = np.array([[(G(e[i] + e[j]) - G(e[i] - e[j]) - G(-e[i] + e[j]) + G(-e[i] - e[j]))
                   / (4 * step ** 2) for j in range(2 * n)] for i in range(2 * n)])
    return G(np.zeros(2 * n)), grad, H


@pytest.mark.parametrize("a", [[0.0, 1 / np.sqrt(2)], [0.6, 0.8 / np.sqrt(2)],
                               [0.5j, np.sqrt(0.75 / 2)]])
def test_ellipsoid_normal_form_property(a):
    E = Ellipsoid((1.0, 2.0))
    nf = normalize_at_boundary_point(E, a)
    nf.base = E.defining
    v, grad, H = _normal_form_jet(nf)
    assert abs(v) < 1e-12
    # m r o Psi = 2 re w_n + |w|^2 + o(|w|^2)
    assert np.allclose(grad, [0, 0, 2, 0], atol=1e-7)
    L, Q = complex_hessians(H)
    assert np.allclose(L, np.eye(2), atol=1e-5) and np.allclose(Q, 0, atol=1e-5)
    assert nf.remainder_vanishes


def test_normal_form_requires_strong_convexity():
    flat = Ellipsoid((1.0, 1.0), exponents=(1, 2))
    with pytest.raises(NotStronglyConvexAt):
        normalize_at_boundary_point(flat, [1.0, 0.0])


def test_polynomial_remainder_normal_form():
    h = polynomial_function(2, parse_polynomial(2, "x1^3 + y2^4"), "h")
    r = normal_form_from_remainder(h)
    assert r.remainder_vanishes
    assert r.value(np.array([0, 1])) == 0.0
    quadratic = normal_form_from_remainder(polynomial_function(2, parse_polynomial(2, "0.5*x1^2")))
    assert not quadratic.remainder_vanishes


def test_blended_family_small():
    r = cubic_normal_form()
    sched = ScalingSchedule.default(levels=3, t_count=30)
    grid = ball_probe_grid(2, 2000, seed=1)
    fam = blended_family(r, sched, grid=grid, lattice_step=1 / 8, margin_resolution=12)
    vals = [m.value(grid) for m in fam.members]
    assert all(np.all(a > b) for a, b in zip(vals, vals[1:]))
    rho = Ball(2).defining.value(grid)
    assert all(np.max(np.abs(v - rho)) <= 3 * e for v, e in zip(vals, sched.eps))
    assert fam.mu0 is not None and len(fam.table()) == 3
    assert fam.t_values == sorted(fam.t_values)


def test_blended_family_budget_exhausted():
    r = cubic_normal_form()
    sched = ScalingSchedule([0.5, 0.25], [1e-6])
    with pytest.raises(BudgetExhausted):
        blended_family(r, sched, grid=ball_probe_grid(2, 200), margins=False)


def test_transport_geodesic_stays_a_ball_geodesic():
    f = ball_geodesic(2, [0, 0], [0.3, 0.2j])
    g = transport_geodesic(f, t=0.5)
    A = BallScalingAutomorphism(2, t=0.5)
    lam = np.array([0.0, 0.4, -0.7j])
    assert np.allclose(g(lam), A(f(lam)), atol=1e-9)
    assert abs(np.linalg.norm(g(np.array([1.0]))) - 1) < 1e-9


def test_lbk_ball_converges_to_boundary_point():
    res = lbk_disc(Ball(2), [0, 1], [0, 0], approach_count=4)
    assert res.endpoint_error < 1e-2
    assert res.gaps[-1] < 1e-6
    assert res.holder_ratio < 3
    assert res.to_dict()["disc"]["n"] == 2


def test_no_cauchy_trend_carries_gaps():
    err = NoCauchyTrend("x", [0.1, 0.2])
    assert err.gaps == [0.1, 0.2]
    assert isinstance(AnalyticDisc.constant([0, 0]), AnalyticDisc)
