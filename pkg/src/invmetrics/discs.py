"""Polynomial analytic discs, boundary traces and Fourier diagnostics."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AnalyticDisc", "BoundaryTrace", "FourierTail", "HolderEstimate",
    "evaluate", "holomorphic_extension_residual", "holder_half_norm",
    "next_pow2", "disc_from_samples", "winding_number",
]


def next_pow2(k):
    return 1 << max(int(k) - 1, 0).bit_length()


def _unit_circle(N):
    return np.exp(2j * np.pi * np.arange(N) / N)


class AnalyticDisc:
    """``f(lambda) = sum_j c_j lambda^j`` with ``c`` of shape ``(d + 1, n)``."""

    def __init__(self, coefficients):
        c = np.array(coefficients, dtype=complex)
        if c.ndim == 1:
            c = c[:, None]
        if c.ndim != 2 or c.shape[0] == 0:
            raise ValueError("coefficients must have shape (degree + 1, n)")
        self.coefficients = c

    @property
    def n(self):
        return self.coefficients.shape[1]

    @property
    def degree(self):
        return self.coefficients.shape[0] - 1

    @classmethod
    def constant(cls, z):
        return cls(np.asarray(z, complex).reshape(1, -1))

    def __call__(self, lam):
        """Horner evaluation; ``lam`` of any shape gives ``lam.shape + (n,)``."""
        lam = np.asarray(lam, complex)[..., None]
        out = np.broadcast_to(self.coefficients[-1], lam.shape[:-1] + (self.n,)).astype(complex)
        for c in self.coefficients[-2::-1]:
            out = out * lam + c
        return out

    def derivative(self, lam=None):
        """Derivative disc, or its value at ``lam`` when given."""
        d = self.degree
        c = self.coefficients[1:] * np.arange(1, d + 1)[:, None] if d else np.zeros((1, self.n))
        der = AnalyticDisc(c)
        return der if lam is None else der(lam)

    def trace(self, N=None):
        N = N or max(512, next_pow2(4 * (self.degree + 1)))
        if N < 4 * (self.degree + 1):
            raise ValueError("trace grid too coarse for this degree")
        return BoundaryTrace(self(_unit_circle(N)))

    def truncate(self, tol=0.0):
        """Drop trailing coefficients whose total energy is below ``tol``."""
        c = self.coefficients
        tail = np.cumsum(np.sum(np.abs(c[::-1]) ** 2, axis=1))[::-1]
        keep = int(np.sum(tail > tol ** 2)) or 1
        return AnalyticDisc(c[:keep])

    def compose_moebius_scale(self, s):
        """``lambda -> f(s lambda)`` for a complex scalar ``s``."""
        return AnalyticDisc(self.coefficients * (s ** np.arange(self.degree + 1))[:, None])

    def sup_norm(self, N=None):
        """Max of ``||f||`` on the closed disc (boundary samples)."""
        N = N or max(1024, 16 * (self.degree + 1))
        return float(np.max(np.linalg.norm(self(_unit_circle(N)), axis=-1)))

    def to_dict(self):
        c = self.coefficients
        inter = np.stack([c.real, c.imag], -1).reshape(c.shape[0], -1)
        return {"n": self.n, "degree": self.degree,
                "coefficients": [[float(x) for x in row] for row in inter]}

    @classmethod
    def from_dict(cls, data):
        arr = np.asarray(data["coefficients"], float).reshape(data["degree"] + 1, data["n"], 2)
        return cls(arr[..., 0] + 1j * arr[..., 1])

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"AnalyticDisc(n={self.n}, degree={self.degree})"


def evaluate(f, lam):
    return f(lam)


@dataclass
class BoundaryTrace:
    """Samples of a map on the grid ``zeta_j = exp(2 pi i j / N)``."""
    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, complex)
        if s.ndim == 1:
            s = s[:, None]
        N = s.shape[0]
        if N & (N - 1):
            raise ValueError("N must be a power of two")
        self.samples = s

    @property
    def N(self):
        return self.samples.shape[0]

    @property
    def points(self):
        return _unit_circle(self.N)


@dataclass
class FourierTail:
    negative_energy: float
    positive_energy: float
    coefficients: np.ndarray  # index k + N/2 holds the mode k, k in [-N/2, N/2)

    @property
    def extension(self):
        N = self.coefficients.shape[0]
        return AnalyticDisc(self.coefficients[N // 2:])

    @property
    def relative_negative_energy(self):
        total = self.negative_energy + self.positive_energy
        return self.negative_energy / total if total > 0 else 0.0


def holomorphic_extension_residual(g):
    """Split the Fourier energy of a trace into negative and nonnegative modes."""
    if not isinstance(g, BoundaryTrace):
        g = BoundaryTrace(g)
    if g.N < 8:
        raise ValueError("need N >= 8")
    hat = np.fft.fftshift(np.fft.fft(g.samples, axis=0) / g.N, axes=0)
    energy = np.sum(np.abs(hat) ** 2, axis=1)
    half = g.N // 2
    return FourierTail(float(energy[:half].sum()), float(energy[half:].sum()), hat)


def disc_from_samples(fn, tol=1e-10, N=64, max_N=1 << 16):
    """Polynomial disc approximating a map holomorphic near the closed disc.

    ``fn`` maps an array of points on the unit circle to ``(..., n)``
    values; the grid doubles until the upper half of the spectrum is
    negligible, then the expansion is cut where the tail drops below ``tol``.
    """
    while True:
        samples = np.asarray(fn(_unit_circle(N)), complex)
        if samples.ndim == 1:
            samples = samples[:, None]
        hat = np.fft.fft(samples, axis=0) / N
        high = np.sqrt(np.sum(np.abs(hat[N // 4:]) ** 2))
        if high <= 1e-2 * tol or N >= max_N:
            break
        N *= 2
    return AnalyticDisc(hat[: N // 2]).truncate(tol)


@dataclass
class HolderEstimate:
    seminorm: float
    sup_norm: float

    @property
    def total(self):
        return self.seminorm + self.sup_norm

    def __float__(self):
        return self.total


def holder_half_norm(f, N=1024):
    """Grid estimate of the C^{1/2} norm on the unit circle.

    The seminorm part is the maximum of ``||f(z)-f(w)|| / |z-w|^{1/2}`` over
    pairs at dyadic index gaps, so refining ``N`` never decreases it.  It is
    a lower estimate of the true norm.
    """
    if isinstance(f, BoundaryTrace):
        vals = f.samples
    else:
        if N < 256:
            raise ValueError("need N >= 256")
        vals = f(_unit_circle(N))
    N = vals.shape[0]
    if N < 256:
        raise ValueError("need N >= 256 samples")
    semi = 0.0
    gap = 1
    while gap <= N // 2:
        diff = np.linalg.norm(vals - np.roll(vals, -gap, axis=0), axis=1)
        chord = abs(1 - np.exp(2j * np.pi * gap / N))
        semi = max(semi, float(diff.max() / np.sqrt(chord)))
        gap *= 2
    return HolderEstimate(semi, float(np.linalg.norm(vals, axis=1).max()))


def winding_number(values):
    """Winding number around 0 of a closed sampled curve."""
    values = np.asarray(values, complex)
    steps = np.angle(np.roll(values, -1) / values)
    return int(np.rint(steps.sum() / (2 * np.pi)))
