"""One-sided bounds for the invariant functions and metrics, closed forms on
model domains and comparison reports.

Infima (Lempert function, Kobayashi distance, Kobayashi-Royden metric) get
upper bounds from feasible analytic discs; suprema (Carathéodory distance
and metric) get lower bounds from functionals whose sup over the domain is
known exactly or bounded on a dense boundary grid.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .discs import AnalyticDisc
from .domains import Ball, ModelDomain, UnitDisc, _radial_boundary, boundary_grid, domain_from_config
from .errors import Infeasible
from .hyperbolic import (annulus_kobayashi, annulus_lift, annulus_metric, ball_automorphism,
                         ball_distance, ball_metric, poincare_distance, poincare_metric)
from .optimize import Budget, DiscProgram, sample_points, validation_points

log = logging.getLogger(__name__)

__all__ = [
    "Budget", "LempertResult", "RoydenResult", "HoloFunctional", "CaratheodoryResult",
    "ComparisonReport", "UNSUPPORTED", "lempert_upper", "kobayashi_royden_upper",
    "caratheodory_lower", "caratheodory_reiffen_lower", "kobayashi_distance_upper",
    "closed_form", "compare",
]


class _Unsupported:
    """Marker returned by :func:`closed_form` when no formula is known."""

    def __repr__(self):
        return "Unsupported"

    def __bool__(self):
        return False


UNSUPPORTED = _Unsupported()


def _points(z, n=None):
    z = np.atleast_1d(np.asarray(z, complex))
    if n is not None and z.shape != (n,):
        raise ValueError(f"expected a point of C^{n}")
    return z


def _tag(D):
    return D.model.tag if getattr(D, "model", None) else None


def _check_interior(D, *pts, margin=1e-6):
    for p in pts:
        v = float(D.value(p[None])[0])
        if v > -margin:
            raise ValueError(f"point {p} is not strictly interior (value {v:.3e})")


# ---------------------------------------------------------------------------
# disc bounds

@dataclass
class LempertResult:
    value: float
    witness: AnalyticDisc
    xi: float
    margin: float
    starts: int = 0

    def __iter__(self):
        return iter((self.value, self.witness, self.xi))


@dataclass
class RoydenResult:
    value: float
    witness: AnalyticDisc
    margin: float
    starts: int = 0

    def __iter__(self):
        return iter((self.value, self.witness))


def _bisect_affine(program, lam, eps, lo, hi, increasing, iters=60):
    """Largest feasible (or smallest, for ``increasing=False``) scalar ``s``
    of the affine disc, by bisection; returns ``None`` if nothing is feasible."""
    c0 = np.zeros((program.d - 1, program.n))

    def ok(s):
        return program.margin(program.pack(s, c0), lam) >= eps

    good = lo if increasing else hi
    if not ok(good):
        return None
    bad = hi if increasing else lo
    if ok(bad):
        return bad
    for _ in range(iters):
        mid = 0.5 * (good + bad)
        if ok(mid):
            good = mid
        else:
            bad = mid
    return good


def _annulus_seeds(D, z, w, degree):
    """Truncated covering-map discs for the annulus (model-specific seeds)."""
    p = D.model.params
    r, R = p["r_minus"] / p["r_plus"], p["r_plus"]
    if r == 0:
        return []
    zn, wn = complex(z[0]) / R, complex(w[0]) / R
    a = -math.log(r) / math.pi
    lz, shift = annulus_lift(zn, r)
    lw, _ = annulus_lift(wn, r)
    seeds = []
    for k in (-1, 0, 1):
        uz, uw = np.exp(lz), np.exp(lw + k * shift)
        lam_w = (uw - uz) / (uw - np.conj(uz))
        xi = abs(lam_w)
        rot = lam_w / xi

        def cover(lam):
            h = (uz - np.conj(uz) * rot * lam) / (1 - rot * lam)
            return R * np.exp(1j * a * np.log(h))
        for s in (0.99, 0.97, 0.93, 0.85):
            if xi / s >= 1:
                continue
            N = 4 * (degree + 1) * 8
            lam = np.exp(2j * np.pi * np.arange(N) / N)
            coef = np.fft.fft(cover(s * lam)) / N
            seeds.append((xi / s, coef[2:degree + 1, None]))
    return seeds


EXCHANGE_LIMIT = 1e-3


def _disc_search(D, z, target, kind, budget, extra_seeds=()):
    d = budget.degree
    program = DiscProgram(D.constraints, z, target, kind, d)
    N = budget.boundary_samples
    lam = sample_points(N)
    lam_val = validation_points(N, budget.validation_factor)
    rng = np.random.default_rng(budget.seed)
    c0 = np.zeros((d - 1, program.n))
    if kind == "lempert":
        bounds = [(1e-9, 1 - 1e-12)] + [(None, None)] * (program.n_vars - 1)
        s_aff = _bisect_affine(program, lam, budget.eps_feas, 1e-9, 1 - 1e-12, increasing=False)
        s_start = s_aff if s_aff is not None else 1 - 1e-3
        scale = np.linalg.norm(target - z)
    else:
        big = 4 * D.bounding_radius / max(np.linalg.norm(target), 1e-300)
        bounds = [(0.0, big)] + [(None, None)] * (program.n_vars - 1)
        s_aff = _bisect_affine(program, lam, budget.eps_feas, 0.0, big, increasing=True)
        s_start = s_aff if s_aff is not None else 0.0
        scale = max(s_start * np.linalg.norm(target), 1e-3)

    seeds = [program.pack(s, c) for s, c in extra_seeds]
    seeds.append(program.pack(s_start, c0))
    seeds.append(program.pack(1 - 1e-3 if kind == "lempert" else 0.5 * s_start, c0))
    for _ in range(budget.n_random):
        c = 0.1 * scale * (rng.standard_normal((d - 1, program.n))
                           + 1j * rng.standard_normal((d - 1, program.n)))
        seeds.append(program.pack(s_start, c))

    best, agree, starts = None, 0, 0
    for x0 in seeds:
        starts += 1
        eps = budget.eps_feas
        x, grid = x0, lam
        for _ in range(4):
            x = program.solve(x, grid, eps, budget.maxiter, bounds)
            if not np.all(np.isfinite(x)):
                break
            g = program.constraint_values(x, lam_val, 0.0).reshape(-1, lam_val.size).min(axis=0)
            margin = float(g.min())
            if margin > 0 or margin < -EXCHANGE_LIMIT:
                break
            # exchange step: the grid missed a small overshoot between samples,
            # so add the worst validation points and warm-start from this disc
            worst = np.argsort(g)[:N]
            grid = np.concatenate([grid, lam_val[worst[g[worst] <= eps]]])
            eps *= 2
        else:
            continue
        if not (np.all(np.isfinite(x)) and margin > 0):
            continue
        val = x[0]
        better = best is None or (val < best[0][0] if kind == "lempert" else val > best[0][0])
        if best is not None and abs(val - best[0][0]) <= budget.agree_tol:
            agree += 1
        if better:
            if best is not None and abs(val - best[0][0]) > budget.agree_tol:
                agree = 0
            best = (x, margin)
        if best is not None and agree + 1 >= budget.agree:
            break
    if best is None:
        raise Infeasible(f"no feasible disc found on {D.name}")
    x, margin = best
    return program, x, margin, starts


def lempert_upper(D, z, w, budget=None):
    """Upper bound ``p(0, xi)`` for the Lempert function from a feasible disc."""
    budget = budget or Budget()
    z, w = _points(z, D.n), _points(w, D.n)
    if np.allclose(z, w, rtol=0, atol=1e-15):
        return LempertResult(0.0, AnalyticDisc.constant(z), 0.0, float(-D.value(z[None])[0]))
    _check_interior(D, z, w)
    seeds = _annulus_seeds(D, z, w, budget.degree) if _tag(D) == "Annulus" else []
    program, x, margin, starts = _disc_search(D, z, w, "lempert", budget, seeds)
    xi = float(x[0])
    return LempertResult(float(np.arctanh(xi)), program.disc(x), xi, margin, starts)


def kobayashi_royden_upper(D, z, v, budget=None):
    """Upper bound ``1/lambda`` for the Kobayashi-Royden metric."""
    budget = budget or Budget()
    z, v = _points(z, D.n), _points(v, D.n)
    if not np.any(v):
        raise ValueError("v must be nonzero")
    _check_interior(D, z)
    program, x, margin, starts = _disc_search(D, z, v, "royden", budget)
    if x[0] <= 0:
        raise Infeasible("no disc with positive derivative found")
    return RoydenResult(float(1.0 / x[0]), program.disc(x), margin, starts)


# ---------------------------------------------------------------------------
# Carathéodory functionals

@dataclass
class HoloFunctional:
    """Holomorphic function ``D -> unit disc`` used as a Carathéodory witness.

    ``family`` names the parametrization, ``params`` its coefficients and
    ``guard`` the post-scaling factor applied after the sup-norm bound.
    """
    n: int
    family: str
    params: dict
    guard: float
    degree: int = 1
    sup_bound: float = 1.0
    certification: str = "exact"
    evaluator: object = field(default=None, repr=False)
    derivative: object = field(default=None, repr=False)

    def __call__(self, zeta):
        return self.guard * self.evaluator(np.asarray(zeta, complex))

    def gradient(self, zeta):
        return self.guard * self.derivative(np.asarray(zeta, complex))

    def to_dict(self):
        def enc(v):
            v = np.asarray(v)
            if np.iscomplexobj(v):
                return {"re": v.real.tolist(), "im": v.imag.tolist()}
            return v.tolist()
        return {"n": self.n, "family": self.family, "degree": self.degree, "guard": self.guard,
                "sup_bound": self.sup_bound, "certification": self.certification,
                "params": {k: enc(v) for k, v in self.params.items()}}


@dataclass
class CaratheodoryResult:
    value: float
    witness: HoloFunctional | None

    def __iter__(self):
        return iter((self.value, self.witness))


GUARD = 1 - 1e-9


def _mobius_ratio(a, b):
    return abs(a - b) / abs(1 - np.conj(a) * b)


def _from_real(x, n):
    return x[:n] + 1j * x[n:]


def _to_ball(x, n):
    b = _from_real(x, n)
    return b / math.sqrt(1 + np.vdot(b, b).real)


def _from_ball(a):
    a = np.asarray(a, complex)
    b = a / math.sqrt(max(1 - np.vdot(a, a).real, 1e-300))
    return np.concatenate([b.real, b.imag])


def _ball_phi_derivative(a, z, v):
    a, z, v = (np.asarray(u, complex) for u in (a, z, v))
    aa = np.vdot(a, a).real
    if aa == 0:
        return -v
    s = math.sqrt(1 - aa)
    za = np.sum(z * np.conj(a))
    va = np.sum(v * np.conj(a))
    Pz, Pv = za / aa * a, va / aa * a
    Nz = a - Pz - s * (z - Pz)
    dN = -Pv - s * (v - Pv)
    Dz = 1 - za
    return (dN * Dz + Nz * va) / Dz ** 2


def _automorphism_family(D, z, w, v, budget):
    """``F = l . phi_a / S`` with exact sup ``S`` (ball, disc, polydisc)."""
    n = D.n
    poly = _tag(D) == "Polydisc"

    def build(x):
        if poly:
            b = _from_real(x[:2 * n], n)
            a = b / np.sqrt(1 + np.abs(b) ** 2)
        else:
            a = _to_ball(x[:2 * n], n)
        ell = _from_real(x[2 * n:], n)
        S = np.sum(np.abs(ell)) if poly else np.linalg.norm(ell)
        return a, ell, S

    def phi(a, zeta):
        if poly:
            return (zeta - a) / (1 - np.conj(a) * zeta)
        return ball_automorphism(a, zeta)

    def dphi(a, zeta, vec):
        if poly:
            return vec * (1 - np.abs(a) ** 2) / (1 - np.conj(a) * zeta) ** 2
        return _ball_phi_derivative(a, zeta, vec)

    def objective(x):
        a, ell, S = build(x)
        if S == 0:
            return 0.0
        Fz = np.sum(ell * phi(a, z)) / S
        if v is None:
            Fw = np.sum(ell * phi(a, w)) / S
            return -_mobius_ratio(Fz, Fw)
        return -abs(np.sum(ell * dphi(a, z, v))) / S / (1 - abs(Fz) ** 2)

    direction = (w - z) if v is None else v
    ell0 = np.conj(direction) / max(np.linalg.norm(direction), 1e-300)
    starts = []
    for a0 in ([z] if v is not None else [z, w, 0.5 * (z + w)]) + [np.zeros(n)]:
        if poly:
            b0 = a0 / np.sqrt(1 - np.abs(a0) ** 2)
            ab = np.concatenate([b0.real, b0.imag])
        else:
            ab = _from_ball(a0)
        starts.append(np.concatenate([ab, ell0.real, ell0.imag]))
        if poly:
            for j in range(n):
                e = np.zeros(n, complex)
                e[j] = 1
                starts.append(np.concatenate([ab, e.real, e.imag]))
    # polish only the most promising starts
    starts.sort(key=objective)
    best = None
    for x0 in starts[:2]:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(objective, x0, method="BFGS", options={"gtol": 1e-12, "maxiter": 2000})
            res = minimize(objective, res.x, method="Nelder-Mead",
                           options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    a, ell, S = build(best.x)
    ell = ell / S

    def ev(zeta):
        return np.sum(ell * phi(a, zeta), axis=-1)

    def der(zeta):
        # gradient vector (dF/dzeta_j) via directional derivatives
        return np.array([np.sum(ell * dphi(a, zeta, e)) for e in np.eye(n)])

    F = HoloFunctional(n, "polydisc-moebius" if poly else "ball-automorphism",
                       {"a": a, "l": ell}, GUARD, 1, 1.0, "exact", ev, der)
    return F


def _sup_samples(D, res):
    """Boundary samples sufficient for the maximum principle."""
    tag = _tag(D)
    n = D.n
    if tag == "Polydisc":
        ang = 2 * np.pi * np.arange(res) / res
        grids = np.meshgrid(*([ang] * n), indexing="ij")
        return np.stack([np.exp(1j * g).ravel() for g in grids], -1)
    if tag == "ReinhardtDAlpha":
        alpha = D.model.params["alpha"]
        ang = 2 * np.pi * np.arange(res) / res
        radii = []
        for t in np.linspace(0, 1, res // 2 + 1):
            radii.append((1.0, alpha * t))
            radii.append((alpha * t, 1.0))
            r1 = alpha ** t
            radii.append((r1, alpha / r1))
        A, B = np.meshgrid(ang, ang, indexing="ij")
        pts = [np.stack([r1 * np.exp(1j * A.ravel()), r2 * np.exp(1j * B.ravel())], -1)
               for r1, r2 in radii]
        return np.concatenate(pts)
    return boundary_grid(D, res).points


def _monomials(n, deg):
    return [a for k in range(1, deg + 1) for a in itertools.product(range(k + 1), repeat=n)
            if sum(a) == k]


def _solve_socp(M, objective_row, extra_eq=None):
    import cvxpy as cp

    c = cp.Variable(M.shape[1], complex=True)
    cons = [cp.abs(M @ c) <= 1]
    if extra_eq is not None:
        cons.append(extra_eq @ c == 0)
    prob = cp.Problem(cp.Maximize(cp.real(objective_row @ c)), cons)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            prob.solve(solver="CLARABEL")
        except Exception:  # solver failure: fall back to a second conic solver
            prob.solve(solver="SCS", eps=1e-9, max_iters=20000)
    if c.value is None:
        return None
    return np.asarray(c.value)


def _blaschke_like(z, r):
    """``x (x - z) / ((1 - conj(z) x)(x - r^2/conj(z)))``: zero at ``z``,
    poles at the reflections of ``z`` in both circles."""
    def B(x):
        return (x - z) * x / ((1 - np.conj(z) * x) * (x - r * r / np.conj(z)))
    return B


def _laurent_basis(z, r, d, zeta=None):
    ks = np.arange(-d, d + 1)
    Bz = _blaschke_like(z, r)
    Bzeta = _blaschke_like(zeta, r) if zeta is not None else None

    def basis(x):
        x = np.asarray(x, complex)
        B = Bz(x) if Bzeta is None else Bz(x) * Bzeta(x)
        pw = np.where(ks >= 0, x[..., None] ** np.maximum(ks, 0),
                      (r / x[..., None]) ** np.maximum(-ks, 0))
        return B[..., None] * pw
    return basis


def _laurent_zeros(c, r, d):
    """Zeros in ``r < |x| < 1`` of ``sum_k c_k x^k`` (negative ``k`` as ``(r/x)^|k|``)."""
    ks = np.arange(-d, d + 1)
    coef = np.where(ks >= 0, c, c * r ** np.abs(ks).astype(float))
    roots = np.roots(coef[::-1])
    return roots[(np.abs(roots) > r) & (np.abs(roots) < 1)]


def _annulus_solve(zn, w, v, r, R, degree, N, zeta):
    basis = _laurent_basis(zn, r, degree, zeta)
    ring = np.exp(2j * np.pi * np.arange(N) / N)
    M = basis(np.concatenate([ring, r * ring]))
    if v is None:
        row = basis(complex(w[0]) / R)
    else:
        # F'(z) = B'(z) L(z) since B(z) = 0
        h = 1e-6 * abs(zn)
        row = (basis(zn + h) - basis(zn - h)) / (2 * h) * complex(v[0]) / R
    return basis, _solve_socp(M, row)


PILOT_DEGREE = 24


def _annulus_family(D, z, w, v, degree, N):
    """Laurent polynomials times factors vanishing at ``z`` and at ``zeta``.

    ``F = B_z B_zeta L`` with ``B_z(x) = (x - z) x / ((1 - conj(z) x)(x - r^2/conj(z)))``
    is holomorphic on the closed annulus.  Extremal functions have a second
    zero ``zeta``; a pilot solve of degree ``max(degree, 24)`` without
    ``B_zeta`` locates it, so every degree uses the same factor, which
    removes the reflected poles that slow down Laurent convergence.  The
    better of the plain and the factored certified functionals is returned.
    """
    p = D.model.params
    R = p["r_plus"]
    r = p["r_minus"] / R
    zn = complex(z[0]) / R
    candidates = []
    basis, c = _annulus_solve(zn, w, v, r, R, degree, N, None)
    if c is not None:
        candidates.append(_certify_annulus(basis, c, r, R, degree, zn, None))
    pilot = max(degree, PILOT_DEGREE)
    if pilot != degree:
        _, c = _annulus_solve(zn, w, v, r, R, pilot, N, None)
    zeros = _laurent_zeros(c, r, pilot) if c is not None else []
    if len(zeros):
        # the zero farthest from both circles in the log-modulus sense
        depth = np.minimum(np.log(np.abs(zeros) / r), -np.log(np.abs(zeros)))
        zeta = complex(zeros[np.argmax(depth)])
        basis, c = _annulus_solve(zn, w, v, r, R, degree, N, zeta)
        if c is not None:
            candidates.append(_certify_annulus(basis, c, r, R, degree, zn, zeta))
    if not candidates:
        return None

    def score(F):
        if v is None:
            return abs(complex(F(np.asarray(w, complex)[None])[0]))
        return abs(complex(np.ravel(F.gradient(np.asarray(z, complex)[None]))[0]))
    return max(candidates, key=score)


def _certify_annulus(basis, c, r, R, degree, zn, zeta):
    # dense certification of the sup on both circles
    Nf = 1 << 16
    dense = np.exp(2j * np.pi * np.arange(Nf) / Nf)
    sup = 0.0
    for rad in (1.0, r):
        vals = np.abs(basis(rad * dense) @ c)
        # second-order guard between samples from discrete curvature
        curv = np.max(np.abs(np.roll(vals, 1) - 2 * vals + np.roll(vals, -1)))
        sup = max(sup, float(vals.max() + curv / 8))

    def ev(zeta_):
        return basis(np.asarray(zeta_, complex)[..., 0] / R) @ c / sup

    def der(zeta_, h=1e-7):
        x = np.asarray(zeta_, complex)[..., 0] / R
        return np.array([(basis(x + h) @ c - basis(x - h) @ c) / (2 * h) / sup / R])

    params = {"c": c, "r": r, "z": zn, "zeta": zeta}
    return HoloFunctional(1, "annulus-laurent", params, GUARD, degree, sup, "dense-grid", ev, der)


def _rational_family(D, z, w, v, degree, res, cert_res, refine=False):
    """``F = sum_a p_a (zeta^a - z^a) / (1 - b . zeta)`` with ``F(z) = 0``.

    ``b`` starts at the Wirtinger gradient ``dr/dzeta(z)``, which makes the
    family exact on ellipsoids; the sup is bounded on a boundary grid.
    """
    n = D.n
    mons = np.array(_monomials(n, degree))
    samples = _sup_samples(D, res)
    cert = _sup_samples(D, cert_res)
    if D.defining is not None:
        b0 = np.conj(D.defining.gradient(z[None])[0]) / 2
    else:
        b0 = np.zeros(n, complex)

    def basis(x, b):
        x = np.asarray(x, complex)
        num = np.prod(x[..., None, :] ** mons, axis=-1) - np.prod(z ** mons, axis=-1)
        return num / (1 - x @ b)[..., None]

    def grad_row(b, vec):
        # d/dzeta (zeta^a) at z applied to vec; denominator evaluated at z
        g = np.zeros(len(mons), complex)
        for j in range(n):
            e = mons.copy()
            coef = e[:, j].astype(float)
            e[:, j] = np.maximum(e[:, j] - 1, 0)
            g += coef * np.prod(z ** e, axis=-1) * vec[j]
        return g / (1 - z @ b)

    def solve(b):
        den = np.abs(1 - samples @ b)
        if den.min() < 1e-3:
            return None, -np.inf
        M = basis(samples, b)
        row = basis(w, b) if v is None else grad_row(b, v)
        c = _solve_socp(M, row)
        if c is None:
            return None, -np.inf
        return c, float(np.real(row @ c))

    b_best = b0
    c, val = solve(b0)
    if refine:
        def obj(x):
            return -solve(_from_real(x, n))[1]
        res_ = minimize(obj, np.concatenate([b0.real, b0.imag]), method="Nelder-Mead",
                        options={"maxfev": 40, "xatol": 1e-6})
        c2, val2 = solve(_from_real(res_.x, n))
        if val2 > val:
            b_best, c, val = _from_real(res_.x, n), c2, val2
    if c is None:
        return None
    if np.abs(1 - cert @ b_best).min() < 1e-3:
        return None
    vals = np.abs(basis(cert, b_best) @ c)
    sup = float(vals.max())
    # local ascent from the largest grid values (radial projection keeps points on the boundary)
    if D.defining is not None:
        top = cert[np.argsort(vals)[-8:]]
        for p0 in top:
            p = p0.copy()
            step = 0.02
            for _ in range(30):
                hgrid = 1e-6
                f0 = abs(basis(p, b_best) @ c)
                g = np.zeros(n, complex)
                for j in range(n):
                    e = np.zeros(n, complex)
                    e[j] = hgrid
                    g[j] = (abs(basis(p + e, b_best) @ c) - f0) / hgrid \
                        + 1j * (abs(basis(p + 1j * e, b_best) @ c) - f0) / hgrid
                q = p + step * g / max(np.linalg.norm(g), 1e-300)
                u = q - D.interior_point
                u = u / np.linalg.norm(u)
                qq, ok = _radial_boundary(D.defining, D.interior_point, u[None], 2 * D.bounding_radius + 1)
                if not ok[0]:
                    break
                f1 = abs(basis(qq[0], b_best) @ c)
                if f1 > f0:
                    p = qq[0]
                else:
                    step /= 2
            sup = max(sup, float(abs(basis(p, b_best) @ c)))

    def ev(zeta):
        return basis(zeta, b_best) @ c / sup

    def der(zeta):
        return np.array([grad_row(b_best, e) @ c for e in np.eye(n)]) / sup

    return HoloFunctional(n, "linear-fractional", {"c": c, "b": b_best, "monomials": mons,
                                                   "z": z}, GUARD, degree, sup, "grid", ev, der)


def _product_factors(D):
    factors = getattr(D, "factors", None)
    if factors is None:
        factors = [domain_from_config(m) for m in D.model.params["factors"]]
    out, off = [], 0
    for f in factors:
        out.append((f, slice(off, off + f.n)))
        off += f.n
    return out


def _functional(D, z, w, v, budget):
    tag = _tag(D)
    if tag in ("UnitDisc", "Ball", "Polydisc"):
        return _automorphism_family(D, z, w, v, budget)
    if tag == "Annulus":
        if D.model.params["r_minus"] == 0:
            # bounded functions extend across the puncture: use the disc family
            R = D.model.params["r_plus"]
            F = _automorphism_family(UnitDisc(), z / R, None if w is None else w / R,
                                     None if v is None else v / R, budget)
            ev, der = F.evaluator, F.derivative
            F.evaluator = lambda zeta: ev(zeta / R)
            F.derivative = lambda zeta: der(zeta / R) / R
            return F
        return _annulus_family(D, z, w, v, budget.c_degree, budget.c_grid)
    T = _ball_like_scaling(D.model) if tag == "Ellipsoid" else None
    if T is not None:
        # linear image of the ball: pull the ball family back through z -> T z
        F = _automorphism_family(Ball(D.n), T * z, None if w is None else T * w,
                                 None if v is None else T * v, budget)
        ev, der = F.evaluator, F.derivative
        F.evaluator = lambda zeta: ev(T * zeta)
        F.derivative = lambda zeta: T * der(T * zeta)
        F.family = "ellipsoid-automorphism"
        return F
    deg = max(1, min(budget.c_degree, 3))
    return _rational_family(D, z, w, v, deg, 24 if D.n == 2 else 256, 48 if D.n == 2 else 2048,
                            refine=budget.c_refine)


def caratheodory_lower(D, z, w, budget=None):
    """Lower bound ``p(F(z), F(w))`` for a certified functional ``F``."""
    budget = budget or Budget()
    z, w = _points(z, D.n), _points(w, D.n)
    if np.allclose(z, w, rtol=0, atol=1e-15):
        return CaratheodoryResult(0.0, None)
    if _tag(D) == "Product":
        best = CaratheodoryResult(0.0, None)
        for f, sl in _product_factors(D):
            r = caratheodory_lower(f, z[sl], w[sl], budget)
            if r.value > best.value:
                best = r
        return best
    F = _functional(D, z, w, None, budget)
    if F is None:
        return CaratheodoryResult(0.0, None)
    val = float(np.arctanh(min(_mobius_ratio(complex(F(z[None])[0]), complex(F(w[None])[0])),
                               1.0)))
    return CaratheodoryResult(val, F)


def caratheodory_reiffen_lower(D, z, v, budget=None):
    """Lower bound ``|F'(z) v| / (1 - |F(z)|^2)`` for a certified functional."""
    budget = budget or Budget()
    z, v = _points(z, D.n), _points(v, D.n)
    if not np.any(v):
        raise ValueError("v must be nonzero")
    if _tag(D) == "Product":
        vals = [caratheodory_reiffen_lower(f, z[sl], v[sl], budget) if np.any(v[sl])
                else CaratheodoryResult(0.0, None) for f, sl in _product_factors(D)]
        return max(vals, key=lambda r: r.value)
    F = _functional(D, z, None, v, budget)
    if F is None:
        return CaratheodoryResult(0.0, None)
    Fz = complex(F(z[None])[0])
    dv = complex(np.sum(F.gradient(z) * v))
    return CaratheodoryResult(float(abs(dv) / (1 - abs(Fz) ** 2)), F)


# ---------------------------------------------------------------------------
# chains

def _waypoints(D, z, w, count, rng):
    n = D.n
    cands = []
    if _tag(D) == "Annulus":
        rz, rw = abs(z[0]), abs(w[0])
        az, aw = np.angle(z[0]), np.angle(w[0])
        dth = (aw - az + np.pi) % (2 * np.pi) - np.pi
        for sgn in (1, -1):
            sweep = dth if sgn == 1 else dth - 2 * np.pi * np.sign(dth or 1)
            for k in range(1, count + 1):
                t = k / (count + 1)
                rad = rz ** (1 - t) * rw ** t
                cands.append(np.array([rad * np.exp(1j * (az + t * sweep))]))
    for k in range(1, count + 1):
        t = k / (count + 1)
        base = (1 - t) * z + t * w
        cands.append(base)
        jitter = 0.05 * np.linalg.norm(w - z) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        cands.append(base + jitter)
    return [u for u in cands if D.value(u[None])[0] < -1e-6]


def kobayashi_distance_upper(D, z, w, chain_depth=1, budget=None, waypoints=None,
                             return_chain=False):
    """Minimum over sampled chains of summed Lempert upper bounds.

    ``chain_depth`` is the number of links (1 to 3); the trivial chain is
    always included.
    """
    budget = budget or Budget()
    if not 1 <= chain_depth <= 3:
        raise ValueError("chain_depth must be 1, 2 or 3")
    z, w = _points(z, D.n), _points(w, D.n)
    cache = {}

    def l(a, b):
        key = (a.tobytes(), b.tobytes())
        if key not in cache:
            try:
                cache[key] = lempert_upper(D, a, b, budget).value
            except Infeasible:
                cache[key] = math.inf
        return cache[key]

    best, chain = l(z, w), [z, w]
    rng = np.random.default_rng(budget.seed)
    if chain_depth >= 2:
        pts = list(waypoints) if waypoints is not None else _waypoints(D, z, w, 3, rng)
        for u in pts:
            val = l(z, u) + l(u, w)
            if val < best:
                best, chain = val, [z, u, w]
    if chain_depth >= 3:
        pts = list(waypoints) if waypoints is not None else _waypoints(D, z, w, 2, rng)
        for u1, u2 in itertools.permutations(pts, 2):
            val = l(z, u1) + l(u1, u2) + l(u2, w)
            if val < best:
                best, chain = val, [z, u1, u2, w]
    if return_chain:
        return best, chain
    return best


# ---------------------------------------------------------------------------
# closed forms

DISTANCES = ("c", "k", "l")
METRICS = ("gamma", "kappa")


def _ball_like_scaling(model):
    """Diagonal ``T`` with ``D = T^{-1}(ball)`` for unperturbed quadratic ellipsoids."""
    p = model.params
    if p.get("perturbation") or any(m != 1 for m in p.get("exponents", [])):
        return None
    return np.sqrt(np.asarray(p["weights"], float))


def closed_form(D, quantity, z, w_or_v):
    """Exact value on model domains, or :data:`UNSUPPORTED`."""
    model = D if isinstance(D, ModelDomain) else getattr(D, "model", None)
    if model is None:
        return UNSUPPORTED
    if quantity not in DISTANCES + METRICS:
        raise ValueError(f"unknown quantity {quantity!r}")
    z = _points(z)
    x = _points(w_or_v)
    metric = quantity in METRICS
    tag = model.tag
    if tag == "UnitDisc":
        return float(poincare_metric(z[0], x[0]) if metric else poincare_distance(z[0], x[0]))
    if tag == "Ball":
        return float(ball_metric(z, x) if metric else ball_distance(z, x))
    if tag == "Polydisc":
        vals = poincare_metric(z, x) if metric else poincare_distance(z, x)
        return float(np.max(vals))
    if tag == "Annulus":
        if quantity in ("c", "gamma"):
            return UNSUPPORTED
        p = model.params
        if metric:
            return float(annulus_metric(p["r_minus"], z[0], x[0], p["r_plus"]))
        return float(annulus_kobayashi(p["r_minus"], z[0], x[0], p["r_plus"]))
    if tag == "Ellipsoid":
        T = _ball_like_scaling(model)
        if T is None:
            return UNSUPPORTED
        return float(ball_metric(T * z, T * x) if metric else ball_distance(T * z, T * x))
    if tag == "Product":
        vals, off = [], 0
        for f in model.params["factors"]:
            n = f.params.get("n", 1) if f.tag in ("Ball", "Polydisc", "HalfSpaceCap") else (
                len(f.params["weights"]) if f.tag == "Ellipsoid" else 2 if f.tag == "ReinhardtDAlpha" else 1)
            sl = slice(off, off + n)
            off += n
            if metric and not np.any(x[sl]):
                continue
            val = closed_form(f, quantity, z[sl], x[sl])
            if val is UNSUPPORTED:
                return UNSUPPORTED
            vals.append(val)
        return float(max(vals)) if vals else 0.0
    return UNSUPPORTED


# ---------------------------------------------------------------------------
# comparison reports

ORDER_TOL = 2e-7


@dataclass
class ComparisonReport:
    z: np.ndarray
    w: np.ndarray
    c_low: float | None = None
    k_up: float | None = None
    l_up: float | None = None
    gamma_low: float | None = None
    kappa_up: float | None = None
    v: np.ndarray | None = None
    k_exact: float | None = None
    c_low_coarse: float | None = None
    margins: dict = field(default_factory=dict)
    witness_disc: AnalyticDisc | None = None
    witness_functional: HoloFunctional | None = None
    tol_eq: float = 1e-4
    runtime: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def gap(self):
        if self.c_low is None or self.l_up is None:
            return None
        return self.l_up - self.c_low

    @property
    def equality_certified(self):
        return self.gap is not None and self.gap <= self.tol_eq

    @property
    def gap_certified(self):
        """``k_exact - c_d > 10 (c_d - c_{d/2})`` on models with exact ``k``."""
        if self.k_exact is None or self.c_low is None or self.c_low_coarse is None:
            return False
        return self.k_exact - self.c_low > 10 * (self.c_low - self.c_low_coarse)

    @property
    def ordering_violations(self):
        out = []
        if self.c_low is not None and self.k_up is not None and self.c_low > self.k_up + ORDER_TOL:
            out.append("c_low > k_up")
        if self.k_up is not None and self.l_up is not None and self.k_up > self.l_up + 1e-12:
            out.append("k_up > l_up")
        if (self.gamma_low is not None and self.kappa_up is not None
                and self.gamma_low > self.kappa_up + ORDER_TOL):
            out.append("gamma_low > kappa_up")
        return out

    def to_dict(self):
        def pt(a):
            return None if a is None else [[float(c.real), float(c.imag)] for c in np.atleast_1d(a)]
        return {
            "z": pt(self.z), "w": pt(self.w), "v": pt(self.v),
            "c_low": self.c_low, "c_low_coarse": self.c_low_coarse, "k_up": self.k_up,
            "l_up": self.l_up, "gamma_low": self.gamma_low, "kappa_up": self.kappa_up,
            "k_exact": self.k_exact, "gap": self.gap,
            "equality_certified": self.equality_certified,
            "gap_certified": self.gap_certified,
            "ordering_violations": self.ordering_violations,
            "margins": self.margins, "runtime": self.runtime, "notes": self.notes,
            "witness_disc": None if self.witness_disc is None else self.witness_disc.to_dict(),
            "witness_functional": (None if self.witness_functional is None
                                   else self.witness_functional.to_dict()),
        }

    CSV_FIELDS = ("z", "w", "c_low", "k_up", "l_up", "gap", "gamma_low", "kappa_up", "k_exact",
                  "equality_certified", "gap_certified", "ordering_violations")

    def csv_row(self):
        d = self.to_dict()

        def fmt(a):
            return " ".join(f"{complex(c):.12g}" for c in np.atleast_1d(a))
        row = {"z": fmt(self.z), "w": fmt(self.w)}
        for k in self.CSV_FIELDS[2:]:
            val = d[k]
            row[k] = ";".join(val) if isinstance(val, list) else val
        return row


def compare(D, z, w, v=None, budget=None, chain_depth=1, tol_eq=1e-4):
    """Assemble the bracket ``c_low <= k_up <= l_up`` (and ``gamma``/``kappa``)."""

    budget = budget or Budget()
    t0 = time.perf_counter()
    z, w = _points(z, D.n), _points(w, D.n)
    rep = ComparisonReport(z, w, v=None if v is None else _points(v, D.n), tol_eq=tol_eq)
    tag = _tag(D)
    if tag == "Product":
        return _compare_product(D, z, w, rep.v, budget, chain_depth, tol_eq, t0)
    c = caratheodory_lower(D, z, w, budget)
    rep.c_low, rep.witness_functional = c.value, c.witness
    try:
        lres = lempert_upper(D, z, w, budget)
        rep.l_up, rep.witness_disc = lres.value, lres.witness
        rep.margins["lempert"] = lres.margin
        rep.k_up = (lres.value if chain_depth == 1
                    else min(lres.value, kobayashi_distance_upper(D, z, w, chain_depth, budget)))
    except Infeasible as exc:
        rep.notes.append(f"lempert: {exc}")
    if tag == "Annulus":
        rep.k_exact = closed_form(D, "k", z, w)
        half = Budget(**{**budget.to_dict(), "c_degree": max(1, budget.c_degree // 2)})
        rep.c_low_coarse = caratheodory_lower(D, z, w, half).value
    if rep.v is not None:
        rep.gamma_low = caratheodory_reiffen_lower(D, z, rep.v, budget).value
        try:
            kr = kobayashi_royden_upper(D, z, rep.v, budget)
            rep.kappa_up = kr.value
            rep.margins["royden"] = kr.margin
        except Infeasible as exc:
            rep.notes.append(f"royden: {exc}")
    rep.runtime = time.perf_counter() - t0
    return rep


def _compare_product(D, z, w, v, budget, chain_depth, tol_eq, t0):
    """Product property: every quantity is the maximum over the factors."""

    parts = []
    for f, sl in _product_factors(D):
        parts.append(compare(f, z[sl], w[sl], None if v is None else v[sl], budget,
                             chain_depth, tol_eq))
    rep = ComparisonReport(z, w, v=v, tol_eq=tol_eq)

    def mx(attr):
        vals = [getattr(p, attr) for p in parts]
        return None if any(x is None for x in vals) else max(vals)
    rep.c_low, rep.k_up, rep.l_up = mx("c_low"), mx("k_up"), mx("l_up")
    rep.gamma_low, rep.kappa_up = mx("gamma_low"), mx("kappa_up")
    rep.k_exact = mx("k_exact")
    rep.c_low_coarse = mx("c_low_coarse")
    top = max(parts, key=lambda p: p.c_low)
    rep.witness_functional = top.witness_functional
    rep.notes.append("product reduction over %d factors" % len(parts))
    rep.runtime = time.perf_counter() - t0
    return rep
