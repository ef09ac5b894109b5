"""Disc optimization shared by the Lempert and Kobayashi-Royden bounds.

Discs are polynomials of degree ``d``.  The interpolation data are pinned
analytically so the remaining unknowns are a scalar ``s`` and the
coefficients ``c_2, ..., c_d``:

* ``lempert``: ``f(l) = z + (w - z) l / s + sum_j c_j (l^j - s^(j-1) l)``,
  so ``f(0) = z`` and ``f(s) = w``; ``s`` is minimized.
* ``royden``: ``f(l) = z + s v l + sum_j c_j l^j``; ``s`` is maximized.

Feasibility ``g(f(l)) <= -eps`` is imposed for every constraint ``g`` of the
domain at boundary samples and on interior circles, and solved with SLSQP
using the analytic Jacobian.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .discs import AnalyticDisc, next_pow2

log = logging.getLogger(__name__)

INTERIOR_RADII = (0.25, 0.5, 0.75)


@dataclass
class Budget:
    """Optimization budget shared by the metric routines.

    Attributes
    ----------
    degree : int
        Polynomial degree of discs.
    grid : int or None
        Boundary samples of the optimization grid (default ``16 (d + 1)``
        rounded up to a power of two, at least 64).
    n_random : int
        Random perturbations of the affine seed.
    agree : int
        Stop once this many validated starts agree with the best value.
    c_degree : int
        Degree of Carathéodory functionals (Laurent or polynomial).
    """
    degree: int = 8
    grid: int | None = None
    n_random: int = 8
    maxiter: int = 500
    eps_feas: float = 1e-7
    validation_factor: int = 4
    agree: int = 2
    agree_tol: float = 1e-8
    seed: int = 0
    c_degree: int = 16
    c_grid: int = 512
    c_refine: bool = False

    @property
    def boundary_samples(self):
        return self.grid or max(64, next_pow2(16 * (self.degree + 1)))

    def to_dict(self):
        return dict(self.__dict__)


def sample_points(N, radii=INTERIOR_RADII, interior_factor=0.5):
    pts = [np.exp(2j * np.pi * np.arange(N) / N)]
    m = max(8, int(N * interior_factor))
    for r in radii:
        pts.append(r * np.exp(2j * np.pi * (np.arange(m) + 0.5) / m))
    return np.concatenate(pts)


def validation_points(N, factor):
    radii = tuple(k / 8 for k in range(1, 8))
    return sample_points(N * factor, radii, interior_factor=0.5)


class DiscProgram:
    def __init__(self, constraints, z, target, kind, degree):
        self.constraints = constraints
        self.z = np.asarray(z, complex)
        self.target = np.asarray(target, complex)
        self.kind = kind
        self.d = int(degree)
        self.n = self.z.shape[0]
        if self.d < 1:
            raise ValueError("degree must be >= 1")

    @property
    def n_vars(self):
        return 1 + 2 * (self.d - 1) * self.n

    def pack(self, s, c):
        c = np.asarray(c, complex).reshape(self.d - 1, self.n)
        return np.concatenate([[s], np.stack([c.real, c.imag], -1).ravel()])

    def unpack(self, x):
        c = x[1:].reshape(self.d - 1, self.n, 2)
        # SLSQP may probe slightly outside the bounds
        s = max(x[0], 1e-9) if self.kind == "lempert" else x[0]
        return s, c[..., 0] + 1j * c[..., 1]

    def coefficients(self, x):
        s, c = self.unpack(x)
        C = np.zeros((self.d + 1, self.n), complex)
        C[0] = self.z
        C[2:] = c
        j = np.arange(2, self.d + 1)
        if self.kind == "lempert":
            C[1] = (self.target - self.z) / s - np.sum(c * (s ** (j - 1))[:, None], axis=0)
        else:
            C[1] = s * self.target
        return C

    def disc(self, x):
        return AnalyticDisc(self.coefficients(x))

    def _dC_ds(self, x):
        s, c = self.unpack(x)
        dC = np.zeros((self.d + 1, self.n), complex)
        j = np.arange(2, self.d + 1)
        if self.kind == "lempert":
            dC[1] = -(self.target - self.z) / s ** 2 - np.sum(
                c * ((j - 1) * s ** np.maximum(j - 2, 0))[:, None], axis=0)
        else:
            dC[1] = self.target
        return dC

    def constraint_values(self, x, lam, eps):
        V = lam[:, None] ** np.arange(self.d + 1)
        f = V @ self.coefficients(x)
        return np.concatenate([-(g.value(f) + eps) for g in self.constraints])

    def constraint_jacobian(self, x, lam):
        s = self.unpack(x)[0]
        V = lam[:, None] ** np.arange(self.d + 1)
        f = V @ self.coefficients(x)
        df_ds = V @ self._dC_ds(x)
        B = V[:, 2:].copy()
        if self.kind == "lempert":
            B -= (s ** (np.arange(2, self.d + 1) - 1))[None, :] * V[:, 1:2]
        blocks = []
        for g in self.constraints:
            G = g.gradient(f)
            col_s = -np.real(np.sum(np.conj(G) * df_ds, axis=1))
            prod = np.conj(G)[:, None, :] * B[:, :, None]  # (K, d-1, n)
            cols = -np.stack([prod.real, -prod.imag], -1).reshape(len(lam), -1)
            blocks.append(np.column_stack([col_s, cols]))
        return np.vstack(blocks)

    def solve(self, x0, lam, eps, maxiter, bounds):
        sign = 1.0 if self.kind == "lempert" else -1.0
        grad = np.zeros(self.n_vars)
        grad[0] = sign
        cons = {"type": "ineq",
                "fun": lambda x: self.constraint_values(x, lam, eps),
                "jac": lambda x: self.constraint_jacobian(x, lam)}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(lambda x: sign * x[0], x0, jac=lambda x: grad, method="SLSQP",
                           constraints=[cons], bounds=bounds,
                           options={"ftol": 1e-10, "maxiter": maxiter})
        return res.x

    def margin(self, x, lam):
        """Minimum of ``-g(f(l))`` over the points (positive means feasible)."""
        return float(np.min(self.constraint_values(x, lam, 0.0)))
