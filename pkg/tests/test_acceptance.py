"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines as they are
produced; they are repeated in the terminal summary.
"""

from pathlib import Path

import numpy as np
import pytest

from conftest import record_criterion
from invmetrics.domains import (
    Annulus, Ball, Ellipsoid, HalfSpaceCap, Polydisc, Product, ReinhardtDAlpha, UnitDisc,
    check_derivatives, domain_from_config, norm_power,
)
from invmetrics.geodesics import (
    LeftInverse, ball_geodesic, certify_stationary, geodesic_perturbation_gap,
)
from invmetrics.harness import ExperimentConfig, c2_table, run_experiment, sample_pairs
from invmetrics.hyperbolic import ball_distance
from invmetrics.metrics import Budget, caratheodory_lower, closed_form, compare
from invmetrics.scaling import (
    ScalingSchedule, ball_probe_grid, blended_family, half_ball_grid, normal_form_from_remainder,
)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# tolerances
EQ_TOL = 1e-4
EQ_PAIRS = 50
EQ_RUNTIME = 120.0
ORDER_TOL = 2e-7
GAP_PAIRS = 10
GAP_MIN_CERTIFIED = 8
GAP_PLATEAU = 0.1
GAP_RUNTIME = 300.0
C2_LEVELS = 8
C2_RATIO = 1e-2
FIXED_POINT_TOL = 1e-12
PROBES = 10_000
FAMILY_SUP_FACTOR = 3.0
MU0_MAX = 4
STATIONARY_PAIRS = 20
RESIDUAL_TOL = 1e-8
ENERGY_TOL = 1e-8
INVERSE_TOL = 1e-8
INVERSE_POINTS = 100
LBK_LEVELS = 5
LBK_BALL_FINAL_GAP = 1e-3
HOLDER_RATIO = 3.0
ENDPOINT_TOL = 1e-2
ASYMPTOTIC_DIST = 1e-4
ASYMPTOTIC_WINDOW = (0.485, 0.515)
AMPLITUDES = (1e-2, 1e-3, 1e-4)
DERIVATIVE_TOL = 1e-5
DERIVATIVE_PROBES = 100


def _load(name):
    cfgs = ExperimentConfig.from_yaml(CONFIGS / name)
    return cfgs if isinstance(cfgs, list) else [cfgs]


@pytest.fixture(scope="module")
def equality_reports():
    return [run_experiment(cfg) for cfg in _load("equality.yaml")
            if cfg.domain["tag"] in ("UnitDisc", "Ball", "Polydisc")]


@pytest.fixture(scope="module")
def gap_report():
    return run_experiment(_load("gap.yaml")[0])


@pytest.fixture(scope="module")
def extra_comparisons():
    """Brackets on domains without a single closed form, for the ordering check."""
    budget = Budget(degree=12, n_random=0, agree=1)
    out = []
    for D in (Ellipsoid((1.0, 2.0)), ReinhardtDAlpha(0.5), Product(UnitDisc(), Annulus(0.3))):
        for z, w in sample_pairs(D, {"pairs": 3, "radius": 0.4}, 5):
            if D.model.tag == "Product":
                z, w = np.array([z[0], 0.5]), np.array([w[0], 0.55])
            out.append(compare(D, z, w, budget=budget))
    return out


def test_criterion_01_disc_ball_polydisc_equality(equality_reports):
    lines, ok = [], True
    for rep in equality_reports:
        domain = domain_from_config(rep.config["domain"])
        errs = []
        for c in rep.comparisons:
            exact = closed_form(domain, "k", c.z, c.w)
            errs.append(max(c.gap, abs(c.l_up - exact), abs(c.c_low - exact)))
        good = (len(errs) == EQ_PAIRS and max(errs) <= EQ_TOL and rep.runtime <= EQ_RUNTIME)
        ok &= good
        lines.append(f"{domain.name}: max err {max(errs):.1e}, {rep.runtime:.0f}s")
    record_criterion(1, ok, "; ".join(lines))
    assert ok


def test_criterion_02_ordering_chain(equality_reports, gap_report, extra_comparisons):
    reports = [c for r in equality_reports for c in r.comparisons]
    reports += gap_report.comparisons + extra_comparisons
    bad = 0
    for c in reports:
        if c.c_low is not None and c.k_up is not None and c.c_low > c.k_up + ORDER_TOL:
            bad += 1
        elif c.k_up is not None and c.l_up is not None and c.k_up > c.l_up:
            bad += 1
    ok = bad == 0 and len(reports) > 0
    record_criterion(2, ok, f"{len(reports)} reports, {bad} violations")
    assert ok


def test_criterion_03_annulus_strict_gap(gap_report):
    rows = gap_report.tables["gap"]
    strict = all(r["k_exact"] > r["c_16"] for r in rows)
    plateau = sum((r["c_16"] - r["c_8"]) < GAP_PLATEAU * (r["k_exact"] - r["c_16"]) for r in rows)
    ok = (len(rows) == GAP_PAIRS and strict and plateau >= GAP_MIN_CERTIFIED
          and gap_report.runtime <= GAP_RUNTIME)
    record_criterion(3, ok, f"{plateau}/{len(rows)} plateaued, strict gap {strict}, "
                            f"min gap {min(r['k_exact'] - r['c_16'] for r in rows):.2e}, "
                            f"{gap_report.runtime:.0f}s")
    assert ok


def test_criterion_04_scaling_c2_convergence():
    r = normal_form_from_remainder(norm_power(2, 3))
    zero = normal_form_from_remainder(norm_power(2, 3, coefficient=0.0))
    grid = half_ball_grid(2, 4000)
    mus = list(range(1, C2_LEVELS + 1))
    rows = c2_table(r, mus, grid)
    zero_rows = c2_table(zero, mus, grid)
    cols = ("sup_val", "sup_grad", "sup_hess")
    monotone = all(all(b[c] < a[c] for a, b in zip(rows, rows[1:])) for c in cols)
    ratios = [rows[-1][c] / rows[0][c] for c in cols]
    fixed = max(row[c] for row in zero_rows for c in cols)
    ok = monotone and max(ratios) <= C2_RATIO and fixed <= FIXED_POINT_TOL
    record_criterion(4, ok, f"monotone {monotone}, final/first "
                            f"{', '.join(f'{x:.3f}' for x in ratios)} (need <= {C2_RATIO}), "
                            f"h=0 row max {fixed:.1e}")
    assert ok


def test_criterion_05_blended_family():
    r = normal_form_from_remainder(norm_power(2, 3))
    sched = ScalingSchedule.default()
    grid = ball_probe_grid(2, PROBES)
    fam = blended_family(r, sched, grid=grid)
    vals = [m.value(grid) for m in fam.members]
    violations = int(sum(np.sum(a <= b) for a, b in zip(vals, vals[1:])))
    rho = Ball(2).defining.value(grid)
    sup_ok = all(np.max(np.abs(v - rho)) <= FAMILY_SUP_FACTOR * e for v, e in zip(vals, sched.eps))
    mu0 = fam.mu0
    margins_ok = mu0 is not None and mu0 <= MU0_MAX and all(m > 0 for m in fam.margins[mu0 - 1:])
    ok = violations == 0 and sup_ok and margins_ok
    record_criterion(5, ok, f"{violations} monotonicity violations, sup bound {sup_ok}, "
                            f"mu0 = {mu0}")
    assert ok


def test_criterion_06_stationary_certification():
    rng = np.random.default_rng(6)
    B = Ball(2)
    worst = {"residual": 0.0, "energy": 0.0, "inverse": 0.0}
    windings = set()
    for _ in range(STATIONARY_PAIRS):
        z, w = (_ball_point(rng, 0.9) for _ in range(2))
        f = ball_geodesic(2, z, w)
        cert = certify_stationary(B, f)
        worst["residual"] = max(worst["residual"], cert.boundary_residual)
        worst["energy"] = max(worst["energy"], cert.dual_negative_energy)
        F = LeftInverse(f, cert.dual_map)
        lam = (0.95 * np.sqrt(rng.random(INVERSE_POINTS))
               * np.exp(2j * np.pi * rng.random(INVERSE_POINTS)))
        for l in lam:
            x = f(l)
            windings.add(F.winding(x))
            worst["inverse"] = max(worst["inverse"], abs(F(x) - l))
    ok = (worst["residual"] <= RESIDUAL_TOL and worst["energy"] <= ENERGY_TOL
          and worst["inverse"] <= INVERSE_TOL and windings == {1})
    record_criterion(6, ok, f"residual {worst['residual']:.1e}, energy {worst['energy']:.1e}, "
                            f"F(f) error {worst['inverse']:.1e}, windings {sorted(windings)}")
    assert ok


def _ball_point(rng, radius):
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return radius * rng.random() ** 0.25 * v / np.linalg.norm(v)


def test_criterion_07_lbk_discs():
    rep = run_experiment(_load("lbk.yaml")[0])
    rows = {row["case"]: row for row in rep.tables["lbk"]}
    ball, ell = rows["ball_center"], rows["ellipsoid_offaxis"]
    ok = True
    for row in (ball, ell):
        ok &= (row["trend"] and len(row["gaps"]) == LBK_LEVELS - 1
               and row["holder_ratio"] <= HOLDER_RATIO and row["endpoint_error"] <= ENDPOINT_TOL)
    ok &= ball["gaps"][-1] <= LBK_BALL_FINAL_GAP
    record_criterion(7, ok, "; ".join(
        f"{name}: final gap {row['gaps'][-1]:.1e}, Hölder ratio {row['holder_ratio']:.2f}, "
        f"|f(1) - p| {row['endpoint_error']:.1e}" for name, row in rows.items()))
    assert ok


def test_criterion_08_boundary_asymptotics():
    z = np.array([1 - ASYMPTOTIC_DIST, 0])
    exact = float(ball_distance(np.zeros(2), z)) / -np.log(ASYMPTOTIC_DIST)
    numeric = caratheodory_lower(Ball(2), np.zeros(2), z).value / -np.log(ASYMPTOTIC_DIST)
    lo, hi = ASYMPTOTIC_WINDOW
    ok = lo <= numeric <= hi
    record_criterion(8, ok, f"ratio {numeric:.4f} (closed form {exact:.4f}), "
                            f"window [{lo}, {hi}]")
    assert ok


def test_criterion_09_perturbation_stability():
    B = Ball(2)
    lines, ok = [], True
    for z, X in ((np.zeros(2), np.array([1, 0])), (np.array([0.1, 0.2j]), np.array([1, 1j]))):
        gaps = [geodesic_perturbation_gap(B, HalfSpaceCap(a).defining, z, X) for a in AMPLITUDES]
        ok &= all(b < a for a, b in zip(gaps, gaps[1:]))
        lines.append(", ".join(f"{g:.1e}" for g in gaps))
    record_criterion(9, ok, "gaps " + " | ".join(lines))
    assert ok


def test_criterion_10_derivative_hygiene():
    rng = np.random.default_rng(10)
    models = [UnitDisc(), Ball(2), Polydisc(2), Annulus(0.25), Ellipsoid((1.0, 2.0)),
              Ellipsoid((1.0, 1.0), exponents=(1, 2)), ReinhardtDAlpha(0.5), HalfSpaceCap(0.1),
              Product(UnitDisc(), Annulus(0.3))]
    worst = 0.0
    for D in models:
        shape = (DERIVATIVE_PROBES, D.n)
        pts = rng.uniform(-1, 1, shape) + 1j * rng.uniform(-1, 1, shape)
        for g in D.constraints:
            worst = max(worst, *check_derivatives(g, D.bounding_radius * pts))
    ok = worst <= DERIVATIVE_TOL
    record_criterion(10, ok, f"{len(models)} models, worst relative error {worst:.1e}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
