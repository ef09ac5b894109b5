"""Stationary discs, dual maps and left inverses.

A disc ``f`` attached to ``bD`` is stationary when some positive weight
``rho`` on the circle makes ``zeta rho(zeta) conj(nu(f(zeta)))`` extend
holomorphically; the extension is the dual map ``f~``.  On convex domains
``F(z)``, the unique root of ``(z - f(eta)) . f~(eta)`` in the disc, is a
left inverse of ``f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discs import AnalyticDisc, disc_from_samples, holder_half_norm, next_pow2, winding_number
from .domains import Domain
from .errors import DegeneratePair, MultipleRoots, NotBoundaryAttached, NoRoot
from .hyperbolic import _phi_norm, ball_automorphism
from .metrics import Budget, kobayashi_royden_upper

__all__ = [
    "StationaryCertificate", "LeftInverse", "ball_geodesic", "certify_stationary",
    "left_inverse", "geodesic_perturbation_gap",
]

RESIDUAL_TOL = 1e-6
ENERGY_TOL = 1e-6


def ball_geodesic(n, z, w, tol=1e-10, return_xi=False):
    """Complex geodesic of the unit ball through ``z`` (at 0) and ``w``.

    The disc is ``lambda -> phi_z(lambda u)`` with ``u`` the direction of
    ``phi_z(w)``, so it hits ``w`` at ``xi = ||phi_z(w)||``.  The rational map
    is replaced by its Taylor polynomial with tail below ``tol``.

    Returns
    -------
    AnalyticDisc, or ``(AnalyticDisc, xi)`` when ``return_xi``.
    """
    z = np.asarray(z, complex).reshape(n)
    w = np.asarray(w, complex).reshape(n)
    if np.allclose(z, w, rtol=0, atol=1e-15):
        raise DegeneratePair("z and w coincide")
    p = ball_automorphism(z, w)
    xi = float(_phi_norm(z, w))
    u = p / np.linalg.norm(p)
    f = disc_from_samples(lambda lam: ball_automorphism(z, lam[:, None] * u), tol=tol)
    return (f, xi) if return_xi else f


@dataclass
class StationaryCertificate:
    """Numerical check of the stationarity conditions for a disc.

    Attributes
    ----------
    boundary_residual : float
        ``max |r(f(zeta_j))|`` over the circle grid.
    dual_negative_energy : float
        Relative Fourier energy of the negative modes of
        ``zeta rho(zeta) conj(nu(f(zeta)))``.
    dual_map : AnalyticDisc
        Nonnegative-mode synthesis ``f~``.
    rho : ndarray
        Positive weight samples on the grid.
    holder_estimate : float
        Grid estimate of the ``C^{1/2}`` norm of ``f`` on the circle.
    """
    boundary_residual: float
    dual_negative_energy: float
    dual_map: AnalyticDisc
    rho: np.ndarray
    holder_estimate: float
    diameter: float = 1.0
    rho_coefficients: np.ndarray = field(default=None, repr=False)

    @property
    def attached(self):
        return self.boundary_residual <= RESIDUAL_TOL * self.diameter

    @property
    def passes(self):
        return (self.attached and self.dual_negative_energy <= ENERGY_TOL
                and bool(np.all(self.rho > 0)))

    def raise_for_status(self):
        if not self.attached:
            raise NotBoundaryAttached(f"boundary residual {self.boundary_residual:.3e}")
        return self

    def to_dict(self):
        return {"boundary_residual": self.boundary_residual,
                "dual_negative_energy": self.dual_negative_energy,
                "holder_estimate": self.holder_estimate,
                "rho_min": float(np.min(self.rho)),
                "passes": self.passes,
                "dual_map": self.dual_map.to_dict()}


def _weight_basis(theta, degree):
    cols = [np.ones_like(theta)]
    for k in range(1, degree + 1):
        cols += [np.cos(k * theta), np.sin(k * theta)]
    return np.stack(cols, axis=1)


def _negative_modes(values):
    """Negative Fourier modes (per column) of samples on the circle grid."""
    N = values.shape[0]
    hat = np.fft.fft(values, axis=0) / N
    return hat[N // 2:]


def certify_stationary(D: Domain, f: AnalyticDisc, rho_samples=None, degree=16, N=None):
    """Certify the stationarity conditions for ``f`` on ``D``.

    When ``rho_samples`` is not given the weight is the trigonometric
    polynomial of degree ``degree`` with unit mean minimizing the negative
    energy of ``zeta rho conj(nu(f))``, a linear least-squares problem.
    """
    r = D.require_smooth()
    N = N or max(1024, next_pow2(8 * (f.degree + 2 * degree + 1)))
    theta = 2 * np.pi * np.arange(N) / N
    zeta = np.exp(1j * theta)
    pts = f(zeta)
    residual = float(np.max(np.abs(r.value(pts))))
    G = r.gradient(pts)
    nu = G / np.linalg.norm(G, axis=-1, keepdims=True)
    h = zeta[:, None] * np.conj(nu)  # (N, n)

    if rho_samples is None:
        B = _weight_basis(theta, degree)
        # negative modes of b_m h for every basis function b_m
        neg = np.moveaxis(_negative_modes(B[:, :, None] * h[:, None, :]), 1, -1)
        A = neg.reshape(-1, B.shape[1])
        A = np.concatenate([A.real, A.imag])
        beta_rest, *_ = np.linalg.lstsq(A[:, 1:], -A[:, 0], rcond=None)
        beta = np.concatenate([[1.0], beta_rest])
        rho = B @ beta
    else:
        beta = None
        rho = np.asarray(rho_samples, float)
        if rho.shape != (N,):
            raise ValueError(f"rho_samples must have {N} entries")

    g = rho[:, None] * h
    hat = np.fft.fft(g, axis=0) / N
    neg_e = float(np.sum(np.abs(hat[N // 2:]) ** 2))
    total = float(np.sum(np.abs(hat) ** 2))
    rel = neg_e / total if total > 0 else 0.0
    dual = AnalyticDisc(hat[: N // 2]).truncate(1e-15)
    holder = float(holder_half_norm(AnalyticDisc(f.coefficients), N=max(N, 1024)))
    return StationaryCertificate(residual, rel, dual, rho, holder, D.diameter, beta)


@dataclass
class LeftInverse:
    """``z -> F(z)``, the unique root of ``(z - f(eta)) . f~(eta)`` in the disc.

    ``certified_domain`` collects the points where the winding count
    confirmed uniqueness.
    """
    f: AnalyticDisc
    dual: AnalyticDisc
    radius: float = 1 - 1e-6
    certified_domain: list = field(default_factory=list)

    def _g(self, z, eta):
        return np.sum((z - self.f(eta)) * self.dual(eta), axis=-1)

    def _dg(self, z, eta):
        return np.sum(-self.f.derivative(eta) * self.dual(eta)
                      + (z - self.f(eta)) * self.dual.derivative(eta), axis=-1)

    def winding(self, z):
        deg = self.f.degree + self.dual.degree
        N = max(2048, next_pow2(16 * (deg + 1)))
        circle = self.radius * np.exp(2j * np.pi * np.arange(N) / N)
        return winding_number(self._g(z, circle))

    def __call__(self, z, max_iter=60):
        z = np.asarray(z, complex)
        k = self.winding(z)
        if k == 0:
            raise NoRoot("no solution of (z - f) . f~ = 0 in the disc")
        if k > 1:
            raise MultipleRoots(f"{k} solutions of (z - f) . f~ = 0 in the disc")
        starts = np.concatenate([[0.0], *[r * np.exp(2j * np.pi * np.arange(5) / 5)
                                          for r in (0.3, 0.6, 0.9)]])
        best = None
        for eta in starts:
            for _ in range(max_iter):
                dg = self._dg(z, eta)
                if dg == 0:
                    break
                step = self._g(z, eta) / dg
                eta = eta - step
                if abs(eta) > 2:
                    break
                if abs(step) < 1e-15:
                    break
            if abs(eta) < 1 and (best is None or abs(self._g(z, eta)) < abs(self._g(z, best))):
                best = eta
            if best is not None and abs(self._g(z, best)) < 1e-15:
                break
        if best is None:
            raise NoRoot("Newton did not reach the root inside the disc")
        self.certified_domain.append(z)
        return complex(best)


def left_inverse(f, f_dual, z):
    """Value ``F(z)`` of the left inverse built from ``f`` and its dual map."""
    return LeftInverse(f, f_dual)(z)


def _disc_grid(radius=1 - 1e-3, rings=16, per_ring=64):
    pts = [np.zeros(1, complex)]
    for r in np.linspace(radius / rings, radius, rings):
        pts.append(r * np.exp(2j * np.pi * np.arange(per_ring) / per_ring))
    return np.concatenate(pts)


def geodesic_perturbation_gap(D, r_perturbed, z, X, budget=None):
    """Sup distance on ``|lambda| <= 1 - 1e-3`` between the extremal discs
    with ``f(0) = z``, ``f'(0) > 0 * X`` of ``D`` and of ``{r_perturbed < 0}``.
    """
    budget = budget or Budget(degree=12)
    D2 = Domain([r_perturbed], D.interior_point, D.bounding_radius, r_perturbed,
                name=f"{D.name}~")
    f0 = kobayashi_royden_upper(D, z, X, budget).witness
    f1 = kobayashi_royden_upper(D2, z, X, budget).witness
    lam = _disc_grid()
    return float(np.max(np.linalg.norm(f0(lam) - f1(lam), axis=-1)))
