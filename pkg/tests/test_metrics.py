import numpy as np
import pytest
from hypothesis import given, settings

from invmetrics.domains import (
    Annulus, Ball, Ellipsoid, Polydisc, Product, ReinhardtDAlpha, UnitDisc, boundary_grid,
)
from invmetrics.hyperbolic import ball_distance, poincare_distance, poincare_metric
from invmetrics.metrics import (
    UNSUPPORTED, Budget, ComparisonReport, caratheodory_lower, caratheodory_reiffen_lower,
    closed_form, compare, kobayashi_distance_upper, kobayashi_royden_upper, lempert_upper,
)

from strategies import ball_points

FAST = Budget(degree=12, n_random=0, agree=1)


def test_lempert_disc_from_origin():
    res = lempert_upper(UnitDisc(), [0.0], [0.4], FAST)
    assert res.value == pytest.approx(np.arctanh(0.4), abs=1e-6)
    assert res.value >= np.arctanh(0.4) - 1e-12
    # the witness is a feasible disc through both points
    assert np.allclose(res.witness(0), 0) and np.allclose(res.witness(res.xi), 0.4, atol=1e-6)
    assert res.witness.sup_norm() < 1


def test_lempert_ball_matches_closed_form():
    z, w = np.array([0.2, 0.1j]), np.array([-0.1, 0.3])
    res = lempert_upper(Ball(2), z, w, FAST)
    exact = ball_distance(z, w)
    assert exact - 1e-12 <= res.value <= exact + 1e-5


def test_lempert_of_coincident_points_is_zero():
    res = lempert_upper(Ball(2), [0.1, 0], [0.1, 0], FAST)
    assert res.value == 0.0


def test_points_must_be_interior():
    with pytest.raises(ValueError):
        lempert_upper(Ball(2), [1.1, 0], [0.1, 0], FAST)


def test_royden_ball_matches_closed_form():
    z, v = np.array([0.3, -0.2j]), np.array([1.0, 1j])
    res = kobayashi_royden_upper(Ball(2), z, v, FAST)
    exact = closed_form(Ball(2), "kappa", z, v)
    assert exact - 1e-12 <= res.value <= exact + 1e-5


@settings(max_examples=8)
@given(ball_points(2, 0.6), ball_points(2, 0.6))
def test_caratheodory_ball_is_sharp_lower_bound(z, w):
    c = caratheodory_lower(Ball(2), z, w).value
    exact = ball_distance(z, w)
    assert c <= exact + 1e-12
    assert c >= exact - 1e-7


def test_caratheodory_polydisc_is_max_of_factors():
    z, w = np.array([0.3, 0.1j]), np.array([-0.2, 0.5])
    exact = max(poincare_distance(0.3, -0.2), poincare_distance(0.1j, 0.5))
    assert caratheodory_lower(Polydisc(2), z, w).value == pytest.approx(exact, abs=1e-7)


def test_reiffen_polydisc():
    z, v = np.array([0.3, 0.5j]), np.array([1.0, 0.5])
    exact = max(poincare_metric(0.3, 1.0), poincare_metric(0.5j, 0.5))
    assert caratheodory_reiffen_lower(Polydisc(2), z, v).value == pytest.approx(exact, abs=1e-7)
    with pytest.raises(ValueError):
        caratheodory_reiffen_lower(Polydisc(2), z, [0, 0])


def test_punctured_disc_caratheodory_is_disc_distance():
    # bounded holomorphic functions extend across the puncture
    c = caratheodory_lower(Annulus(0.0), [0.5], [-0.3j]).value
    assert c == pytest.approx(poincare_distance(0.5, -0.3j), abs=1e-7)
    assert closed_form(Annulus(0.0), "k", [0.5], [-0.3j]) > c


def test_ellipsoid_bracket_closes_on_linear_image_of_ball():
    E = Ellipsoid((1.0, 2.0))
    z, w = np.array([0.1, 0.1j]), np.array([-0.3, 0.2])
    exact = closed_form(E, "k", z, w)
    T = np.sqrt([1.0, 2.0])
    assert exact == pytest.approx(ball_distance(T * z, T * w))
    rep = compare(E, z, w, budget=FAST)
    assert not rep.ordering_violations
    assert rep.c_low <= exact + 1e-9 and rep.l_up >= exact - 1e-9
    assert rep.gap < 1e-5
    assert rep.witness_functional.family == "ellipsoid-automorphism"


def test_reinhardt_domain_has_no_closed_form_but_ordered_bounds():
    D = ReinhardtDAlpha(0.5)
    z, w = np.array([0.2, 0.1]), np.array([-0.1, 0.3j])
    assert closed_form(D, "k", z, w) is UNSUPPORTED
    rep = compare(D, z, w, budget=FAST)
    assert not rep.ordering_violations
    # D_alpha lies in the bidisc, so its distances dominate the bidisc distance
    assert rep.l_up >= closed_form(Polydisc(2), "k", z, w) - 1e-9


def test_chains_never_exceed_single_disc():
    B = Ball(2)
    z, w = np.array([0.5, 0]), np.array([-0.3, 0.4j])
    l = lempert_upper(B, z, w, FAST).value
    k, chain = kobayashi_distance_upper(B, z, w, chain_depth=2, budget=FAST, return_chain=True)
    assert k <= l + 1e-12
    assert k >= closed_form(B, "k", z, w) - 1e-9
    assert np.allclose(chain[0], z) and np.allclose(chain[-1], w)
    with pytest.raises(ValueError):
        kobayashi_distance_upper(B, z, w, chain_depth=4)


def test_annulus_gap_example():
    A = Annulus(0.25)
    rep = compare(A, [0.5], [-0.5], budget=Budget(degree=8, n_random=0, agree=1))
    assert rep.k_exact is not None
    assert rep.gap_certified
    assert rep.c_low < rep.k_exact
    # coincident points give no gap
    same = ComparisonReport(np.array([0.5]), np.array([0.5]), c_low=0.0, k_up=0.0, l_up=0.0,
                            k_exact=0.0, c_low_coarse=0.0)
    assert not same.gap_certified


def test_annulus_witness_is_certified_on_the_boundary():
    A = Annulus(0.25)
    res = caratheodory_lower(A, [0.5], [-0.5])
    grid = boundary_grid(A, 4096).points
    assert np.max(np.abs(res.witness(grid))) < 1


def test_product_property():
    P = Product(UnitDisc(), Annulus(0.3))
    z, w = np.array([0.1, 0.5]), np.array([0.4j, 0.55])
    k = closed_form(P, "k", z, w)
    assert k == pytest.approx(max(poincare_distance(0.1, 0.4j), closed_form(Annulus(0.3), "k", [0.5], [0.55])))
    rep = compare(P, z, w, budget=FAST)
    assert not rep.ordering_violations
    assert rep.l_up >= k - 1e-9


def test_compare_with_direction():
    z, w, v = np.array([0.2, 0.0]), np.array([0.0, 0.3]), np.array([0.0, 1.0])
    rep = compare(Ball(2), z, w, v, FAST)
    exact = closed_form(Ball(2), "kappa", z, v)
    assert rep.gamma_low <= exact + 1e-9 <= rep.kappa_up + 2e-9
    assert rep.equality_certified
    d = rep.to_dict()
    assert d["ordering_violations"] == [] and d["witness_disc"]["n"] == 2
    row = rep.csv_row()
    assert set(row) == set(ComparisonReport.CSV_FIELDS)


def test_ordering_violation_reporting():
    rep = ComparisonReport(np.zeros(1), np.ones(1) * 0.5, c_low=1.0, k_up=0.5, l_up=0.5)
    assert rep.ordering_violations == ["c_low > k_up"]
    rep = ComparisonReport(np.zeros(1), np.ones(1) * 0.5, c_low=0.5 + 1e-7, k_up=0.5, l_up=0.5)
    assert rep.ordering_violations == []


def test_closed_form_rejects_unknown_quantity():
    with pytest.raises(ValueError):
        closed_form(Ball(2), "bergman", [0, 0], [0.1, 0])
    assert closed_form(Annulus(0.25), "c", [0.5], [-0.5]) is UNSUPPORTED


def test_far_annulus_pair_reports_infeasible_lempert():
    # polynomial discs of low degree cannot follow the core circle
    rep = compare(Annulus(0.3), [0.5], [-0.5], budget=Budget(degree=8, n_random=0, agree=1))
    assert rep.l_up is None and any("lempert" in note for note in rep.notes)
    assert rep.c_low < rep.k_exact
