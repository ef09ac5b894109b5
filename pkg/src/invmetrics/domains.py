"""Bounded domains in C^n described by C^2 defining functions.

Points are complex arrays of shape ``(..., n)``.  Real coordinates are
interleaved as ``(x1, y1, ..., xn, yn)`` and gradients are packaged as the
complex vector ``G = dr/dx + i dr/dy``, so that the first-order variation of
``r`` along ``dz`` is ``Re(sum(conj(G) * dz))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateGradient, NoConvergence, UnsupportedDomain

__all__ = [
    "DefiningFunction", "HolomorphicMap", "RealPolynomial", "Domain",
    "ModelDomain", "BoundaryGrid", "Membership",
    "to_real", "to_complex", "ball_function", "norm_power",
    "coordinate_function", "polynomial_function", "parse_polynomial",
    "UnitDisc", "Ball", "Polydisc", "Annulus", "Ellipsoid",
    "ReinhardtDAlpha", "HalfSpaceCap", "Product", "domain_from_config",
    "contains", "outward_normal", "levi_form", "complex_hessians",
    "strong_convexity_margin", "signed_distance", "boundary_grid",
    "sphere_directions", "check_derivatives",
]


def to_real(z):
    """Interleave real and imaginary parts: ``(..., n)`` -> ``(..., 2n)``."""
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1).reshape(*z.shape[:-1], 2 * z.shape[-1])


def to_complex(x):
    """Inverse of :func:`to_real`."""
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def _as_points(z, n):
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        z = z.reshape(1)
    if z.shape[-1] != n:
        raise ValueError(f"expected points with last dimension {n}, got shape {z.shape}")
    return z


class DefiningFunction:
    """Real C^2 function on C^n with analytic first and second derivatives.

    Parameters
    ----------
    n : int
        Complex dimension.
    jet : callable
        ``jet(x, order)`` on real coordinates ``x`` of shape ``(..., 2n)``
        returning ``(value,)``, ``(value, grad)`` or ``(value, grad, hess)``
        according to ``order`` in {0, 1, 2}.
    name : str, optional
        Label used in reports.
    """

    def __init__(self, n, jet, name="r"):
        self.n = int(n)
        self._jet = jet
        self.name = name

    def real_jet(self, x, order=2):
        x = np.asarray(x, dtype=float)
        return self._jet(x, order)

    def jet(self, z, order=2):
        """Value, complex gradient and real Hessian at ``z``."""
        z = _as_points(z, self.n)
        out = self._jet(to_real(z), order)
        if order >= 1:
            out = (out[0], to_complex(out[1])) + tuple(out[2:])
        return out

    def value(self, z):
        return self.jet(z, 0)[0]

    __call__ = value

    def gradient(self, z):
        return self.jet(z, 1)[1]

    def real_hessian(self, z):
        return self.jet(z, 2)[2]

    # algebra -----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, DefiningFunction):
            return add(self, other)
        return shift(self, float(other))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, DefiningFunction):
            return add(self, scale(other, -1.0))
        return shift(self, -float(other))

    def __mul__(self, other):
        if isinstance(other, DefiningFunction):
            return product(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __repr__(self):
        return f"DefiningFunction(n={self.n}, name={self.name!r})"

    @classmethod
    def from_callables(cls, n, value, gradient, hessian, name="user", validate=True,
                       probes=None, seed=0):
        """Wrap user callables and validate them against finite differences.

        ``value(z)``, ``gradient(z)`` (complex packed) and ``hessian(z)``
        (real, interleaved order) act on points of shape ``(n,)``.
        """
        def jet(x, order):
            flat = x.reshape(-1, 2 * n)
            zs = to_complex(flat)
            v = np.array([float(value(p)) for p in zs]).reshape(x.shape[:-1])
            out = (v,)
            if order >= 1:
                g = np.array([to_real(np.asarray(gradient(p), complex)) for p in zs])
                out += (g.reshape(x.shape),)
            if order >= 2:
                h = np.array([np.asarray(hessian(p), float) for p in zs])
                out += (h.reshape(*x.shape, 2 * n),)
            return out

        f = cls(n, jet, name)
        if validate:
            if probes is None:
                rng = np.random.default_rng(seed)
                probes = rng.standard_normal((20, n)) + 1j * rng.standard_normal((20, n))
                probes *= 0.5
            gerr, herr = check_derivatives(f, probes)
            if gerr > 1e-6 or herr > 1e-5:
                raise ValueError(
                    f"user derivatives disagree with finite differences "
                    f"(gradient {gerr:.2e}, hessian {herr:.2e})")
        return f


# ---------------------------------------------------------------------------
# combinators

def shift(f, c):
    def jet(x, order):
        out = f.real_jet(x, order)
        return (out[0] + c,) + tuple(out[1:])
    return DefiningFunction(f.n, jet, f"{f.name}+{c:g}")


def scale(f, c):
    def jet(x, order):
        return tuple(c * o for o in f.real_jet(x, order))
    return DefiningFunction(f.n, jet, f"{c:g}*{f.name}")


def add(f, g):
    if f.n != g.n:
        raise ValueError("dimension mismatch")

    def jet(x, order):
        return tuple(a + b for a, b in zip(f.real_jet(x, order), g.real_jet(x, order)))
    return DefiningFunction(f.n, jet, f"{f.name}+{g.name}")


def product(f, g):
    """Pointwise product ``f * g`` with the Leibniz rule."""
    def jet(x, order):
        a = f.real_jet(x, order)
        b = g.real_jet(x, order)
        out = (a[0] * b[0],)
        if order >= 1:
            out += (a[0][..., None] * b[1] + b[0][..., None] * a[1],)
        if order >= 2:
            outer = a[1][..., :, None] * b[1][..., None, :]
            out += (a[0][..., None, None] * b[2] + b[0][..., None, None] * a[2]
                    + outer + np.swapaxes(outer, -1, -2),)
        return out
    return DefiningFunction(f.n, jet, f"({f.name})*({g.name})")


def compose_scalar(phi, f, name=None):
    """``phi(f(z))`` for a scalar C^2 function given as ``phi(s, order)``."""
    def jet(x, order):
        a = f.real_jet(x, order)
        p = phi(a[0], order)
        out = (p[0],)
        if order >= 1:
            out += (p[1][..., None] * a[1],)
        if order >= 2:
            out += (p[1][..., None, None] * a[2]
                    + p[2][..., None, None] * a[1][..., :, None] * a[1][..., None, :],)
        return out
    return DefiningFunction(f.n, jet, name or f"phi({f.name})")


class HolomorphicMap:
    """Holomorphic map C^m -> C^n with first and second complex derivatives.

    ``jet(z, order)`` returns ``F`` of shape ``(..., n)``, the Jacobian
    ``M[..., j, k] = dF_j/dz_k`` and ``T[..., j, k, l] = d^2 F_j/dz_k dz_l``.
    """

    def __init__(self, m, n, jet, name="F"):
        self.m, self.n = int(m), int(n)
        self._jet = jet
        self.name = name

    def jet(self, z, order=2):
        return self._jet(np.asarray(z, dtype=complex), order)

    def __call__(self, z):
        return self.jet(z, 0)[0]

    @classmethod
    def polynomial(cls, const, linear, quadratic=None, name="P"):
        """``F(z) = const + linear @ z + quadratic[j] (z, z)`` with symmetric ``quadratic``."""
        const = np.asarray(const, complex)
        linear = np.asarray(linear, complex)
        n, m = linear.shape
        quad = np.zeros((n, m, m), complex) if quadratic is None else np.asarray(quadratic, complex)
        quad = 0.5 * (quad + np.swapaxes(quad, -1, -2))

        def jet(z, order):
            F = const + z @ linear.T + np.einsum("jkl,...k,...l->...j", quad, z, z)
            out = (F,)
            if order >= 1:
                M = linear + 2 * np.einsum("jkl,...l->...jk", quad, z)
                out += (M,)
            if order >= 2:
                out += (np.broadcast_to(2 * quad, z.shape[:-1] + quad.shape),)
            return out
        return cls(m, n, jet, name)


def compose_holomorphic(f, F, name=None):
    """Chain rule for ``f o F`` with ``f`` real and ``F`` holomorphic."""
    if F.n != f.n:
        raise ValueError("dimension mismatch")
    m = F.m

    def jet(x, order):
        z = to_complex(x)
        Fz = F.jet(z, order)
        a = f.real_jet(to_real(Fz[0]), order)
        out = (a[0],)
        if order == 0:
            return out
        M = Fz[1]
        # real Jacobian of F, rows (u_j, v_j), columns (x_k, y_k)
        J = np.empty(M.shape[:-2] + (2 * f.n, 2 * m))
        J[..., 0::2, 0::2] = M.real
        J[..., 0::2, 1::2] = -M.imag
        J[..., 1::2, 0::2] = M.imag
        J[..., 1::2, 1::2] = M.real
        out += (np.einsum("...ij,...i->...j", J, a[1]),)
        if order >= 2:
            H = np.einsum("...ia,...ij,...jb->...ab", J, a[2], J)
            G = to_complex(a[1])
            S = np.einsum("...j,...jkl->...kl", np.conj(G), Fz[2])
            H[..., 0::2, 0::2] += S.real
            H[..., 0::2, 1::2] -= S.imag
            H[..., 1::2, 0::2] -= S.imag
            H[..., 1::2, 1::2] -= S.real
            out += (H,)
        return out
    return DefiningFunction(m, jet, name or f"{f.name}o{F.name}")


# ---------------------------------------------------------------------------
# concrete defining functions

class RealPolynomial:
    """Real polynomial in the interleaved real coordinates.

    Parameters
    ----------
    n : int
        Complex dimension (``2n`` real variables).
    terms : dict
        Maps exponent tuples of length ``2n`` to real coefficients.
    """

    def __init__(self, n, terms):
        self.n = n
        items = [(tuple(int(e) for e in k), float(c)) for k, c in terms.items() if c != 0]
        for k, _ in items:
            if len(k) != 2 * n or min(k, default=0) < 0:
                raise ValueError(f"bad exponent {k}")
        self.exponents = np.array([k for k, _ in items], dtype=int).reshape(-1, 2 * n)
        self.coefficients = np.array([c for _, c in items], dtype=float)

    def __call__(self, x, order=2):
        x = np.asarray(x, float)
        E, C = self.exponents, self.coefficients
        N = 2 * self.n
        maxdeg = int(E.max()) if E.size else 0
        k = np.arange(maxdeg + 1)
        # P0[k] = x^k, P1[k] = k x^(k-1), P2[k] = k(k-1) x^(k-2)
        P0 = x[None] ** k.reshape(-1, *([1] * x.ndim))
        P1 = np.zeros_like(P0)
        P2 = np.zeros_like(P0)
        P1[1:] = k[1:].reshape(-1, *([1] * x.ndim)) * P0[:-1]
        if maxdeg >= 2:
            P2[2:] = (k[2:] * (k[2:] - 1)).reshape(-1, *([1] * x.ndim)) * P0[:-2]
        shape = x.shape[:-1]
        val = np.zeros(shape)
        grad = np.zeros(shape + (N,)) if order >= 1 else None
        hess = np.zeros(shape + (N, N)) if order >= 2 else None
        for e, c in zip(E, C):
            f0 = np.stack([P0[e[i], ..., i] for i in range(N)])
            val += c * np.prod(f0, axis=0)
            if order >= 1:
                for i in range(N):
                    if e[i] == 0:
                        continue
                    rest = np.prod(np.delete(f0, i, axis=0), axis=0)
                    grad[..., i] += c * P1[e[i], ..., i] * rest
                    if order >= 2:
                        if e[i] >= 2:
                            hess[..., i, i] += c * P2[e[i], ..., i] * rest
                        for j in range(i + 1, N):
                            if e[j] == 0:
                                continue
                            rest2 = np.prod(np.delete(f0, [i, j], axis=0), axis=0)
                            v = c * P1[e[i], ..., i] * P1[e[j], ..., j] * rest2
                            hess[..., i, j] += v
                            hess[..., j, i] += v
        return (val,) + ((grad,) if order >= 1 else ()) + ((hess,) if order >= 2 else ())

    def defining(self, name="poly"):
        return DefiningFunction(self.n, lambda x, order: self(x, order), name)


def _modulus_power_terms(n, j, m, weight, terms):
    """Add ``weight * |z_j|^(2m)`` expanded binomially into ``terms``."""
    for i in range(m + 1):
        e = [0] * (2 * n)
        e[2 * j] = 2 * i
        e[2 * j + 1] = 2 * (m - i)
        terms[tuple(e)] = terms.get(tuple(e), 0.0) + weight * math.comb(m, i)


def polynomial_function(n, terms, name="poly"):
    return RealPolynomial(n, terms).defining(name)


def ball_function(n, radius=1.0):
    """``rho(z) = -radius^2 + ||z||^2``."""
    terms = {tuple([0] * 2 * n): -radius ** 2}
    for j in range(n):
        _modulus_power_terms(n, j, 1, 1.0, terms)
    return polynomial_function(n, terms, "rho")


def coordinate_function(n, index):
    """The real coordinate ``x[index]`` in interleaved order."""
    e = [0] * (2 * n)
    e[index] = 1
    return polynomial_function(n, {tuple(e): 1.0}, f"x[{index}]")


def norm_power(n, p, center=None, coefficient=1.0):
    """``coefficient * ||z - center||^p`` for ``p >= 2`` (C^2 everywhere)."""
    if p < 2:
        raise ValueError("norm_power needs p >= 2 to be C^2")
    c = np.zeros(2 * n) if center is None else to_real(np.asarray(center, complex))

    def jet(x, order):
        d = x - c
        s2 = np.sum(d * d, axis=-1)
        s = np.sqrt(s2)
        out = (coefficient * s ** p,)
        if order >= 1:
            out += (coefficient * p * (s ** (p - 2))[..., None] * d,)
        if order >= 2:
            eye = np.eye(2 * n)
            with np.errstate(divide="ignore", invalid="ignore"):
                w = np.where(s > 0, p * (p - 2) * s ** (p - 4.0), 0.0) if p != 2 else np.zeros_like(s)
            out += (coefficient * ((p * s ** (p - 2))[..., None, None] * eye
                                   + w[..., None, None] * d[..., :, None] * d[..., None, :]),)
        return out
    return DefiningFunction(n, jet, f"|z-c|^{p:g}")


def parse_polynomial(n, text):
    """Parse a real polynomial in ``x1, y1, ..., xn, yn`` written as text."""
    import sympy

    syms = []
    for j in range(1, n + 1):
        syms += [sympy.Symbol(f"x{j}", real=True), sympy.Symbol(f"y{j}", real=True)]
    expr = sympy.sympify(text, locals={str(s): s for s in syms})
    poly = sympy.Poly(sympy.expand(expr), *syms)
    return {tuple(int(e) for e in mon): float(coef) for mon, coef in poly.terms()}


# ---------------------------------------------------------------------------
# domains

@dataclass(frozen=True)
class Membership:
    kind: str  # "interior", "boundary" or "exterior"
    margin: float | None = None

    def __bool__(self):
        return self.kind == "interior"


@dataclass(frozen=True)
class ModelDomain:
    """Tag plus parameters of a model domain with known geometry."""
    tag: str
    params: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"tag": self.tag}
        for k, v in self.params.items():
            out[k] = [f.to_dict() for f in v] if k == "factors" else v
        return out


@dataclass
class Domain:
    """Bounded domain ``{z : g(z) < 0 for every constraint g}``.

    Attributes
    ----------
    constraints : list of DefiningFunction
        All inequalities; membership uses their maximum.
    defining : DefiningFunction or None
        Single C^2 defining function, ``None`` for corner domains.
    interior_point : ndarray
    bounding_radius : float
    model : ModelDomain or None
    """
    constraints: list
    interior_point: np.ndarray
    bounding_radius: float
    defining: DefiningFunction | None = None
    model: ModelDomain | None = None
    name: str = "D"

    def __post_init__(self):
        self.interior_point = np.asarray(self.interior_point, complex).reshape(-1)
        self.constraints = list(self.constraints)
        if self.value(self.interior_point) >= 0:
            raise ValueError("interior_point is not inside the domain")

    @property
    def n(self):
        return self.constraints[0].n

    @property
    def is_smooth(self):
        return self.defining is not None

    @property
    def diameter(self):
        return 2.0 * self.bounding_radius

    def value(self, z):
        z = _as_points(z, self.n)
        return np.max([g.value(z) for g in self.constraints], axis=0)

    def require_smooth(self):
        if self.defining is None:
            raise UnsupportedDomain(f"{self.name} has no single C^2 defining function")
        return self.defining


def _model(domain, tag, **params):
    domain.model = ModelDomain(tag, params)
    return domain


def UnitDisc():
    f = ball_function(1)
    return _model(Domain([f], [0.0], 1.0, f, name="UnitDisc"), "UnitDisc")


def Ball(n=2):
    f = ball_function(n)
    return _model(Domain([f], np.zeros(n), 1.0, f, name=f"Ball({n})"), "Ball", n=n)


def _coordinate_disc(n, j, radius=1.0, inner=False, name=None):
    terms = {tuple([0] * 2 * n): (radius ** 2 if inner else -radius ** 2)}
    sign = -1.0 if inner else 1.0
    _modulus_power_terms(n, j, 1, sign, terms)
    return polynomial_function(n, terms, name or f"|z{j + 1}|^2")


def Polydisc(n=2):
    cons = [_coordinate_disc(n, j) for j in range(n)]
    return _model(Domain(cons, np.zeros(n), math.sqrt(n), name=f"Polydisc({n})"),
                  "Polydisc", n=n)


def Annulus(r_minus, r_plus=1.0):
    """Planar annulus ``r_minus < |z| < r_plus`` (``r_minus = 0`` gives a punctured disc)."""
    if not 0 <= r_minus < r_plus:
        raise ValueError("Annulus requires 0 <= r_minus < r_plus")
    outer = _coordinate_disc(1, 0, r_plus)
    inner = _coordinate_disc(1, 0, r_minus, inner=True, name="inner")
    mid = math.sqrt(r_minus * r_plus) if r_minus > 0 else 0.5 * r_plus
    d = Domain([outer, inner], [mid], r_plus, name=f"Annulus({r_minus:g},{r_plus:g})")
    return _model(d, "Annulus", r_minus=float(r_minus), r_plus=float(r_plus))


def Ellipsoid(weights=(1.0, 2.0), exponents=None, perturbation=None):
    """``-1 + sum_j w_j |z_j|^(2 m_j) + h`` with ``h`` a real polynomial.

    ``perturbation`` is either text in ``x1, y1, ...`` or an exponent dict.
    """
    weights = [float(w) for w in weights]
    n = len(weights)
    exponents = [1] * n if exponents is None else [int(m) for m in exponents]
    terms = {tuple([0] * 2 * n): -1.0}
    for j, (w, m) in enumerate(zip(weights, exponents)):
        _modulus_power_terms(n, j, m, w, terms)
    if perturbation is not None:
        extra = parse_polynomial(n, perturbation) if isinstance(perturbation, str) else perturbation
        for k, c in extra.items():
            terms[tuple(k)] = terms.get(tuple(k), 0.0) + float(c)
    f = polynomial_function(n, terms, "ellipsoid")
    # crude bound: the domain sits in the ball of radius max over axes
    radius = 1.5 * max(1.0, max(w ** (-1.0 / (2 * m)) for w, m in zip(weights, exponents)))
    d = Domain([f], np.zeros(n), radius, f, name="Ellipsoid")
    return _model(d, "Ellipsoid", weights=weights, exponents=exponents,
                  perturbation=perturbation if isinstance(perturbation, (str, type(None))) else
                  {",".join(map(str, k)): v for k, v in perturbation.items()})


def ReinhardtDAlpha(alpha):
    """``{|z1| < 1, |z2| < 1, |z1 z2| < alpha}``; exempt from C^2 operations."""
    if not 0 < alpha <= 1:
        raise ValueError("ReinhardtDAlpha requires alpha in (0, 1]")
    terms = {(0, 0, 0, 0): -alpha ** 2}
    for a, b in itertools.product(range(2), repeat=2):
        e = [0, 0, 0, 0]
        e[a] += 2
        e[2 + b] += 2
        terms[tuple(e)] = terms.get(tuple(e), 0.0) + 1.0
    cons = [_coordinate_disc(2, 0), _coordinate_disc(2, 1), polynomial_function(2, terms, "|z1z2|^2")]
    d = Domain(cons, np.zeros(2), math.sqrt(2), name=f"D_alpha({alpha:g})")
    return _model(d, "ReinhardtDAlpha", alpha=float(alpha))


def HalfSpaceCap(amplitude, n=2):
    """Ball perturbed by ``amplitude * (Re z1)^2``; requires ``amplitude > -1``."""
    if amplitude <= -1:
        raise ValueError("HalfSpaceCap needs amplitude > -1 to stay bounded")
    terms = {tuple([0] * 2 * n): -1.0}
    for j in range(n):
        _modulus_power_terms(n, j, 1, 1.0, terms)
    e = [0] * (2 * n)
    e[0] = 2
    terms[tuple(e)] += amplitude
    f = polynomial_function(n, terms, "cap")
    d = Domain([f], np.zeros(n), 1.0, f, name=f"HalfSpaceCap({amplitude:g})")
    return _model(d, "HalfSpaceCap", amplitude=float(amplitude), n=n)


def _embed(f, offset, n_total):
    m = f.n
    P = np.zeros((m, n_total), complex)
    P[np.arange(m), offset + np.arange(m)] = 1.0
    return compose_holomorphic(f, HolomorphicMap.polynomial(np.zeros(m), P), f.name)


def Product(*factors):
    """Cartesian product of domains; invariant distances follow the product property."""
    n_total = sum(f.n for f in factors)
    cons, offset = [], 0
    for f in factors:
        cons += [_embed(g, offset, n_total) for g in f.constraints]
        offset += f.n
    point = np.concatenate([f.interior_point for f in factors])
    radius = math.sqrt(sum(f.bounding_radius ** 2 for f in factors))
    d = Domain(cons, point, radius, name=" x ".join(f.name for f in factors))
    d.factors = list(factors)
    return _model(d, "Product", factors=[f.model for f in factors])


_BUILDERS = {
    "UnitDisc": lambda p: UnitDisc(),
    "Ball": lambda p: Ball(int(p.get("n", 2))),
    "Polydisc": lambda p: Polydisc(int(p.get("n", 2))),
    "Annulus": lambda p: Annulus(float(p["r_minus"]), float(p.get("r_plus", 1.0))),
    "Ellipsoid": lambda p: Ellipsoid(p.get("weights", (1.0, 2.0)), p.get("exponents"),
                                     p.get("perturbation")),
    "ReinhardtDAlpha": lambda p: ReinhardtDAlpha(float(p["alpha"])),
    "HalfSpaceCap": lambda p: HalfSpaceCap(float(p["amplitude"]), int(p.get("n", 2))),
    "Product": lambda p: Product(*[domain_from_config(f) for f in p["factors"]]),
}


def domain_from_config(spec):
    """Build a model domain from a mapping such as ``{"tag": "Ball", "n": 2}``."""
    if isinstance(spec, ModelDomain):
        spec = spec.to_dict()
    spec = dict(spec)
    tag = spec.pop("tag")
    if tag not in _BUILDERS:
        raise ValueError(f"unknown domain tag {tag!r}")
    return _BUILDERS[tag](spec)


# ---------------------------------------------------------------------------
# geometric data

def contains(D, z, tol_boundary=1e-12):
    v = float(D.value(np.asarray(z, complex).reshape(1, -1))[0])
    if v < -tol_boundary:
        return Membership("interior", -v)
    if v <= tol_boundary:
        return Membership("boundary")
    return Membership("exterior")


def _active_jet(D, z, order=2):
    """Jet of the constraint whose zero set is nearest (smallest |value|)."""
    z = _as_points(z, D.n)
    if D.defining is not None:
        return D.defining.jet(z, order)
    jets = [g.jet(z, order) for g in D.constraints]
    vals = np.stack([j[0] for j in jets])
    pick = np.argmin(np.abs(vals), axis=0)
    out = []
    for k in range(order + 1):
        stack = np.stack([j[k] for j in jets])
        out.append(np.take_along_axis(
            stack, pick.reshape((1,) + pick.shape + (1,) * (stack.ndim - 1 - pick.ndim)),
            axis=0)[0])
    return tuple(out)


def _check_on_boundary(D, z, tol):
    v = np.abs(D.value(z))
    if np.any(v > tol):
        raise ValueError(f"point is not on the boundary (|value| = {v.max():.3e})")


def outward_normal(D, z, tol_boundary=1e-10):
    """Unit complex normal ``G/||G||`` at a boundary point."""
    z = np.asarray(z, complex)
    _check_on_boundary(D, z.reshape(-1, D.n), tol_boundary)
    G = _active_jet(D, z, 1)[1]
    norm = np.linalg.norm(G, axis=-1, keepdims=True)
    if np.any(norm < 1e-10):
        raise DegenerateGradient("gradient vanishes at boundary point")
    return G / norm


def complex_hessians(H):
    """Levi matrix and holomorphic Hessian from a real Hessian.

    Returns ``(L, Q)`` with ``L[j,k] = d^2 r/dz_j dzbar_k`` and
    ``Q[j,k] = d^2 r/dz_j dz_k``.
    """
    Hxx, Hxy = H[..., 0::2, 0::2], H[..., 0::2, 1::2]
    Hyx, Hyy = H[..., 1::2, 0::2], H[..., 1::2, 1::2]
    L = 0.25 * ((Hxx + Hyy) + 1j * (Hxy - Hyx))
    Q = 0.25 * ((Hxx - Hyy) - 1j * (Hxy + Hyx))
    return L, Q


def levi_form(D, a, X, tol_boundary=1e-10):
    """``sum_jk d^2r/dz_j dzbar_k (a) X_j conj(X_k)``."""
    a = np.asarray(a, complex)
    _check_on_boundary(D, a.reshape(-1, D.n), tol_boundary)
    H = _active_jet(D, a, 2)[2]
    L, _ = complex_hessians(H)
    X = np.asarray(X, complex)
    return float(np.real(np.einsum("...jk,...j,...k->...", L, X, np.conj(X))))


@dataclass
class BoundaryGrid:
    points: np.ndarray
    normals: np.ndarray
    mesh: float

    def __len__(self):
        return len(self.points)


def strong_convexity_margin(D, grid):
    """Minimum tangential eigenvalue of the real Hessian over ``grid``."""
    pts = grid.points if isinstance(grid, BoundaryGrid) else np.asarray(grid, complex)
    if len(pts) == 0:
        raise ValueError("empty grid")
    _, G, H = _active_jet(D, pts, 2)
    g = to_real(G)
    nrm = g / np.linalg.norm(g, axis=-1, keepdims=True)
    P = np.eye(g.shape[-1]) - nrm[..., :, None] * nrm[..., None, :]
    M = P @ H @ P
    big = 10.0 * (1.0 + np.abs(H).sum(axis=(-1, -2)))
    M = M + big[..., None, None] * nrm[..., :, None] * nrm[..., None, :]
    return float(np.linalg.eigvalsh(M)[..., 0].min())


def sphere_directions(n, resolution=32, seed=0):
    """Unit vectors in C^n on a product angular grid (random for ``n >= 3``)."""
    if n == 1:
        th = 2 * np.pi * np.arange(resolution) / resolution
        return np.exp(1j * th)[:, None]
    if n == 2:
        nt = resolution // 4 + 1
        th = np.linspace(0, np.pi / 2, nt)
        ang = 2 * np.pi * np.arange(resolution) / resolution
        T, A, B = np.meshgrid(th, ang, ang, indexing="ij")
        pts = np.stack([np.cos(T) * np.exp(1j * A), np.sin(T) * np.exp(1j * B)], -1)
        pts = pts.reshape(-1, 2)
        # the poles carry a redundant phase; keep one copy per distinct point
        return np.unique(np.round(pts, 14), axis=0)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((resolution ** 2 * 4, n)) + 1j * rng.standard_normal((resolution ** 2 * 4, n))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _mesh(points):
    if len(points) < 2:
        return 0.0
    d, _ = cKDTree(to_real(points)).query(to_real(points), k=2)
    return float(d[:, 1].max())


def _radial_boundary(f, center, directions, s_max, steps=96):
    """First zero of ``f`` along rays ``center + s u``, refined to |f| <= 1e-12."""
    s_grid = np.linspace(0, s_max, steps + 1)[1:]
    pts = center + s_grid[None, :, None] * directions[:, None, :]
    vals = f.value(pts)
    hit = vals >= 0
    ok = hit.any(axis=1)
    first = np.argmax(hit, axis=1)
    lo = np.where(first > 0, s_grid[np.maximum(first - 1, 0)], 0.0)
    hi = s_grid[first]
    u = directions
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        v = f.value(center + mid[:, None] * u)
        lo = np.where(v < 0, mid, lo)
        hi = np.where(v < 0, hi, mid)
    s = 0.5 * (lo + hi)
    for _ in range(4):
        v, G = f.jet(center + s[:, None] * u, 1)
        ds = np.real(np.sum(np.conj(G) * u, axis=-1))
        s = s - np.where(np.abs(ds) > 1e-14, v / np.where(ds == 0, 1, ds), 0.0)
    return center + s[:, None] * u, ok


def boundary_grid(D, resolution=None):
    """Boundary samples with outward unit normals.

    ``resolution`` is the number of samples per angle (default 256 for
    planar domains and 32 for domains in C^2).
    """
    n = D.n
    res = resolution or (256 if n == 1 else 32)
    tag = D.model.tag if D.model else None
    if tag in ("UnitDisc", "Ball"):
        pts = sphere_directions(n, res)
    elif tag == "Annulus":
        p = D.model.params
        ring = np.exp(2j * np.pi * np.arange(res) / res)[:, None]
        pts = np.concatenate([p["r_plus"] * ring] + ([p["r_minus"] * ring] if p["r_minus"] > 0 else []))
    elif D.defining is not None:
        dirs = sphere_directions(n, res)
        pts, ok = _radial_boundary(D.defining, D.interior_point, dirs, 2 * D.bounding_radius + 1)
        pts = pts[ok]
    else:
        raise UnsupportedDomain(f"{D.name} has corners; no C^2 boundary grid")
    G = _active_jet(D, pts, 1)[1]
    norm = np.linalg.norm(G, axis=-1, keepdims=True)
    if np.any(norm < 1e-8):
        raise DegenerateGradient("gradient vanishes on the boundary grid")
    return BoundaryGrid(pts, G / norm, _mesh(pts))


# ---------------------------------------------------------------------------
# signed distance

def _nearest_on_zero_set(g, z, starts, max_iter=50, tol=1e-13):
    """Newton on the KKT system ``p - z = mu grad g(p)``, ``g(p) = 0``."""
    xz = to_real(z)
    best = None
    for p0 in starts:
        x = to_real(p0)
        v, gr = g.real_jet(x, 1)
        mu = float(np.dot(x - xz, gr) / max(np.dot(gr, gr), 1e-300))
        for _ in range(max_iter):
            v, gr, H = g.real_jet(x, 2)
            F = np.concatenate([x - xz - mu * gr, [v]])
            if np.linalg.norm(F) < tol:
                break
            N = len(x)
            J = np.zeros((N + 1, N + 1))
            J[:N, :N] = np.eye(N) - mu * H
            J[:N, N] = -gr
            J[N, :N] = gr
            try:
                step = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                break
            x = x + step[:N]
            mu += step[N]
        v = g.real_jet(x, 0)[0]
        if abs(v) < 1e-10:
            d = float(np.linalg.norm(x - xz))
            if best is None or d < best:
                best = d
    return best


def signed_distance(G, z, n_rays=None):
    """Negative distance to the boundary inside the closure, positive outside."""
    z = np.asarray(z, complex).reshape(-1)
    n = G.n
    dirs = sphere_directions(n, n_rays or (64 if n == 1 else 12))
    s_max = np.linalg.norm(z) + 2 * G.bounding_radius + 1
    best = None
    for g in G.constraints:
        sign = np.sign(g.value(z[None])[0]) or 1.0
        f = g if sign < 0 else scale(g, -1.0)
        pts, ok = _radial_boundary(f, z, dirs, s_max, steps=200)
        if not ok.any():
            continue
        pts = pts[ok]
        dist = np.linalg.norm(pts - z, axis=-1)
        starts = pts[np.argsort(dist)[:4]]
        d = _nearest_on_zero_set(g, z, starts)
        if d is not None and (best is None or d < best):
            best = d
    if best is None:
        raise NoConvergence("boundary projection failed")
    return -best if G.value(z[None])[0] <= 0 else best


def check_derivatives(f, points, step=1e-5):
    """Maximum relative errors of analytic gradient and Hessian against
    central finite differences (relative to ``max(norm, 1)``)."""
    x = to_real(np.asarray(points, complex).reshape(-1, f.n))
    _, g, H = f.real_jet(x, 2)
    N = x.shape[-1]
    g_fd = np.empty_like(g)
    H_fd = np.empty_like(H)
    for i in range(N):
        e = np.zeros(N)
        e[i] = step
        vp, gp = f.real_jet(x + e, 1)
        vm, gm = f.real_jet(x - e, 1)
        g_fd[:, i] = (vp - vm) / (2 * step)
        H_fd[:, :, i] = (gp - gm) / (2 * step)
    gerr = np.linalg.norm(g - g_fd, axis=-1) / np.maximum(np.linalg.norm(g, axis=-1), 1.0)
    herr = np.linalg.norm(H - H_fd, axis=(-1, -2)) / np.maximum(np.linalg.norm(H, axis=(-1, -2)), 1.0)
    return float(gerr.max()), float(herr.max())
