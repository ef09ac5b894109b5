"""Hyperbolic geometry of the disc, the ball and the annulus.

Distances follow the ``tanh^{-1}`` convention, ``p(0, s) = atanh(s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .domains import HolomorphicMap
from .errors import LiftFailure, PoleHit

__all__ = [
    "poincare_distance", "poincare_metric", "MoebiusMap", "ball_automorphism",
    "ball_distance", "ball_metric", "BallScalingAutomorphism",
    "scaling_automorphism", "scaling_offset_map", "strip_distance",
    "annulus_lift", "annulus_kobayashi", "annulus_metric",
]


def poincare_distance(zeta, xi):
    """``atanh |zeta - xi| / |1 - conj(zeta) xi|``."""
    zeta = np.asarray(zeta, complex)
    xi = np.asarray(xi, complex)
    m = np.abs(zeta - xi) / np.abs(1 - np.conj(zeta) * xi)
    return np.arctanh(np.minimum(m, 1.0))


def poincare_metric(zeta, v):
    return np.abs(v) / (1 - np.abs(zeta) ** 2)


@dataclass(frozen=True)
class MoebiusMap:
    """``lambda -> phase * (lambda - a) / (1 - conj(a) lambda)``."""
    a: complex
    phase: complex = 1.0

    def __post_init__(self):
        if abs(self.a) >= 1:
            raise ValueError("MoebiusMap needs |a| < 1")
        if abs(abs(self.phase) - 1) > 1e-12:
            raise ValueError("phase must be unimodular")

    def __call__(self, lam):
        lam = np.asarray(lam, complex)
        return self.phase * (lam - self.a) / (1 - np.conj(self.a) * lam)

    def derivative(self, lam):
        lam = np.asarray(lam, complex)
        return self.phase * (1 - abs(self.a) ** 2) / (1 - np.conj(self.a) * lam) ** 2

    def inverse(self, mu):
        mu = np.asarray(mu, complex) / self.phase
        return (mu + self.a) / (1 + np.conj(self.a) * mu)


def ball_automorphism(a, z):
    """The involutive automorphism of the unit ball exchanging ``a`` and 0.

    ``phi_a(z) = (a - P z - s Q z) / (1 - <z, a>)`` with ``P`` the projection
    onto ``a``, ``Q = I - P`` and ``s = sqrt(1 - |a|^2)``.
    """
    a = np.asarray(a, complex)
    z = np.asarray(z, complex)
    r = np.linalg.norm(a)
    if r == 0:
        return -z
    # project on the unit vector: dividing by |a|^2 overflows for tiny a
    u = a / r
    zu = np.sum(z * np.conj(u), axis=-1, keepdims=True)
    Pz = zu * u
    s = math.sqrt(1 - r * r)
    return (a - Pz - s * (z - Pz)) / (1 - r * zu)


def _phi_norm(z, w):
    """``||phi_z(w)||`` computed from the stable closed form."""
    z = np.asarray(z, complex)
    w = np.asarray(w, complex)
    wz = np.sum(w * np.conj(z), -1)
    d = w - z
    # |1 - <w,z>|^2 - (1-|z|^2)(1-|w|^2) = |d|^2 + |<w,z>|^2 - |z|^2 |w|^2, and by
    # Lagrange's identity |z|^2 |w|^2 - |<w,z>|^2 = sum_{j<k} |z_j d_k - z_k d_j|^2
    n = z.shape[-1]
    j, k = np.triu_indices(n, 1)
    cross = np.sum(np.abs(z[..., j] * d[..., k] - z[..., k] * d[..., j]) ** 2, -1)
    num = np.sum(np.abs(d) ** 2, -1) - cross
    return np.sqrt(np.clip(num, 0, None)) / np.abs(1 - wz)


def ball_distance(z, w):
    """Carathéodory = Kobayashi = Lempert distance of the unit ball."""
    return np.arctanh(np.minimum(_phi_norm(z, w), 1.0))


def ball_metric(z, v):
    """Infinitesimal ball metric ``sqrt(|v|^2/(1-|z|^2) + |<v,z>|^2/(1-|z|^2)^2)``."""
    z = np.asarray(z, complex)
    v = np.asarray(v, complex)
    q = 1 - np.sum(np.abs(z) ** 2, -1)
    vz = np.sum(v * np.conj(z), -1)
    return np.sqrt(np.sum(np.abs(v) ** 2, -1) / q + np.abs(vz) ** 2 / q ** 2)


@dataclass(frozen=True)
class BallScalingAutomorphism:
    """``A_t(z) = (sqrt(1-t^2) z' / (1 + t z_n), (z_n + t) / (1 + t z_n))``.

    ``one_minus_t`` may be given instead of ``t`` to keep precision as
    ``t -> 1``.
    """
    n: int
    t: float | None = None
    one_minus_t: float | None = None

    def __post_init__(self):
        if (self.t is None) == (self.one_minus_t is None):
            raise ValueError("give exactly one of t and one_minus_t")
        if self.t is None:
            object.__setattr__(self, "t", 1.0 - self.one_minus_t)
        else:
            object.__setattr__(self, "one_minus_t", 1.0 - self.t)
        if not 0 <= self.t < 1:
            raise ValueError("t must lie in [0, 1)")

    @property
    def one_minus_t2(self):
        d = self.one_minus_t
        return d * (1.0 + self.t)

    def _denominator(self, z):
        D = 1 + self.t * z[..., -1]
        if np.any(np.abs(D) < 1e-14):
            raise PoleHit("1 + t z_n vanishes")
        return D

    def __call__(self, z):
        z = np.asarray(z, complex)
        D = self._denominator(z)
        out = np.empty(np.broadcast_shapes(z.shape), complex)
        out[..., :-1] = math.sqrt(self.one_minus_t2) * z[..., :-1] / D[..., None]
        out[..., -1] = (z[..., -1] + self.t) / D
        return out

    def offset(self, z):
        """``A_t(z) - a`` with ``a = (0', 1)``, free of cancellation."""
        z = np.asarray(z, complex)
        D = self._denominator(z)
        out = self(z)
        out[..., -1] = self.one_minus_t * (z[..., -1] - 1) / D
        return out

    def inverse(self, w):
        """``A_t^{-1} = A_{-t}``."""
        w = np.asarray(w, complex)
        D = 1 - self.t * w[..., -1]
        out = np.empty(w.shape, complex)
        out[..., :-1] = math.sqrt(self.one_minus_t2) * w[..., :-1] / D[..., None]
        out[..., -1] = (w[..., -1] - self.t) / D
        return out

    def holomorphic_map(self, centered=False):
        """The map (or ``A_t - a`` when ``centered``) with complex derivatives."""
        n, t, s = self.n, self.t, math.sqrt(self.one_minus_t2)
        c = self.one_minus_t2

        def jet(z, order):
            D = self._denominator(z)
            F = self.offset(z) if centered else self(z)
            out = (F,)
            if order >= 1:
                M = np.zeros(z.shape[:-1] + (n, n), complex)
                idx = np.arange(n - 1)
                M[..., idx, idx] = (s / D)[..., None]
                M[..., :-1, -1] = -s * t * z[..., :-1] / D[..., None] ** 2
                M[..., -1, -1] = c / D ** 2
                out += (M,)
            if order >= 2:
                T = np.zeros(z.shape[:-1] + (n, n, n), complex)
                idx = np.arange(n - 1)
                T[..., idx, idx, -1] = (-s * t / D ** 2)[..., None]
                T[..., idx, -1, idx] = (-s * t / D ** 2)[..., None]
                T[..., :-1, -1, -1] = 2 * s * t ** 2 * z[..., :-1] / D[..., None] ** 3
                T[..., -1, -1, -1] = -2 * t * c / D ** 3
                out += (T,)
            return out
        return HolomorphicMap(n, n, jet, "A_t - a" if centered else "A_t")


def scaling_automorphism(t, z):
    z = np.asarray(z, complex)
    return BallScalingAutomorphism(z.shape[-1], t=t)(z)


def scaling_offset_map(n, t=None, one_minus_t=None):
    return BallScalingAutomorphism(n, t=t, one_minus_t=one_minus_t).holomorphic_map(centered=True)


# ---------------------------------------------------------------------------
# annulus via the strip {0 < Im zeta < pi}

def strip_distance(z1, z2):
    """Hyperbolic distance of the strip ``{0 < Im < pi}`` (tanh^{-1} convention).

    ``exp`` maps the strip onto the upper half plane, where
    ``cosh(2p) = 1 + |u1 - u2|^2 / (2 Im u1 Im u2)``; written in strip
    coordinates this avoids overflow for distant translates.
    """
    z1 = np.asarray(z1, complex)
    z2 = np.asarray(z2, complex)
    d = z1.real - z2.real
    # cosh(d) - cos(e) = 2 sinh^2(d/2) + 2 sin^2(e/2), free of cancellation
    num = 2 * np.sinh(d / 2) ** 2 + 2 * np.sin((z1.imag - z2.imag) / 2) ** 2
    y = num / (np.sin(z1.imag) * np.sin(z2.imag))
    return 0.5 * np.log1p(y + np.sqrt(y * (y + 2)))


def _annulus_params(r_minus, r_plus):
    if not 0 <= r_minus < r_plus:
        raise LiftFailure("need 0 <= r_minus < r_plus")
    return r_minus / r_plus


def annulus_lift(z, r):
    """Lift of ``z`` (normalized annulus ``r < |z| < 1``) to the covering strip.

    The covering is ``zeta -> exp(i a zeta)`` with ``a = -ln(r)/pi``; deck
    transformations are translations by ``2 pi / a``.
    """
    a = -math.log(r) / math.pi
    z = np.asarray(z, complex)
    return np.angle(z) / a - 1j * np.log(np.abs(z)) / a, 2 * math.pi / a


def _check_annulus_points(r, *pts):
    for p in pts:
        m = np.abs(np.asarray(p, complex))
        if np.any(m <= r) or np.any(m >= 1):
            raise LiftFailure("point outside the annulus")


def annulus_kobayashi(r_minus, z, w, r_plus=1.0):
    """Exact Kobayashi (= Lempert) distance of ``r_minus < |z| < r_plus``.

    Minimizes the strip distance over deck translates; the search window
    doubles until the nearest excluded translate is provably farther.
    ``r_minus = 0`` gives the punctured disc (half-plane covering).
    """
    r = _annulus_params(r_minus, r_plus)
    z = complex(z) / r_plus
    w = complex(w) / r_plus
    _check_annulus_points(r, z, w)
    if z == w:
        return 0.0
    if r == 0:
        # punctured disc: exp(i zeta) from the upper half plane, deck shift 2 pi
        lz = np.angle(z) - 1j * np.log(abs(z))
        lw = np.angle(w) - 1j * np.log(abs(w))
        shift = 2 * math.pi

        def dist(k):
            a, b = lz, lw + shift * k
            return np.arctanh(abs(a - b) / abs(a - np.conj(b)))
    else:
        lz, shift = annulus_lift(z, r)
        lw, _ = annulus_lift(w, r)

        def dist(k):
            return strip_distance(lz, lw + shift * k)

    K = 3
    while True:
        ks = np.arange(-K, K + 1)
        vals = np.array([dist(k) for k in ks])
        best = float(vals.min())
        # distances grow monotonically in |k| beyond the minimizer
        if min(dist(K + 1), dist(-K - 1)) > best:
            return best
        K *= 2


def annulus_metric(r_minus, z, v, r_plus=1.0):
    """Kobayashi-Royden metric of the annulus via the strip density.

    With ``z = exp(i a zeta)`` the strip density ``1/(2 sin Im zeta)`` pulls
    back to ``|v| / (2 a |z| sin(-ln|z| / a))``.
    """
    r = _annulus_params(r_minus, r_plus)
    z = complex(z) / r_plus
    v = complex(v) / r_plus
    _check_annulus_points(r, z)
    if r == 0:
        return abs(v) / (2 * abs(z) * -math.log(abs(z)))
    a = -math.log(r) / math.pi
    return abs(v) / (2 * a * abs(z) * math.sin(-math.log(abs(z)) / a))
