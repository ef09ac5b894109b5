"""Scaling of a strongly convex boundary point to the unit ball.

After a holomorphic change of coordinates a defining function near a
boundary point ``a = (0', 1)`` reads ``r = rho + h(z - a)`` with
``rho = -1 + ||z||^2`` and ``h = o(||z - a||^2)``.  The ball automorphisms
``A_t`` blow up a neighbourhood of ``a``, and

    r_t(z) = |1 + t z_n|^2 / (1 - t^2) * r(A_t(z))
           = rho(z) + |1 + t z_n|^2 / (1 - t^2) * h(A_t(z) - a),

which tends to ``rho`` in C^2 on ``{re z_n > -1/2}``.  A cut-off ``chi`` in
``re z_n`` blends ``r_t`` with ``rho`` into a globally defined family.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .discs import AnalyticDisc, disc_from_samples, holder_half_norm
from .domains import (
    DefiningFunction, Domain, HolomorphicMap, ModelDomain, ball_function, boundary_grid,
    complex_hessians, compose_holomorphic, outward_normal, product, sphere_directions,
    strong_convexity_margin, to_real,
)
from .errors import BudgetExhausted, NoCauchyTrend, NoConvergence, NotStronglyConvexAt
from .hyperbolic import BallScalingAutomorphism
from .metrics import Budget, lempert_upper

__all__ = [
    "ScalingSchedule", "NormalForm", "BlendedFamily", "C2Distance", "LBKResult",
    "normal_form_from_remainder", "normalize_at_boundary_point", "scaled_defining",
    "scaled_remainder", "chi", "chi_derivatives", "chi_function", "blended_family",
    "blended_function", "c2_distance", "ball_probe_grid", "half_ball_grid",
    "transport_geodesic", "lbk_disc",
]

NOISE_FLOOR = 1e-8
SHELLS = (1e-2, 1e-3, 1e-4)


# ---------------------------------------------------------------------------
# schedules

@dataclass
class ScalingSchedule:
    """Scaling parameters ``t`` and blending tolerances ``eps``.

    ``one_minus_t`` stores ``1 - t`` exactly so that parameters close to 1
    keep their precision.  Defaults are ``t_k = 1 - 2^-k`` and
    ``eps_mu = 4^-mu``.
    """
    one_minus_t: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        self.one_minus_t = np.asarray(self.one_minus_t, float)
        self.eps = np.asarray(self.eps, float)
        if np.any(self.one_minus_t <= 0) or np.any(self.one_minus_t >= 1):
            raise ValueError("t must lie in (0, 1)")
        if np.any(np.diff(self.one_minus_t) >= 0):
            raise ValueError("t must be strictly increasing")
        if np.any(self.eps <= 0) or np.any(3 * self.eps[1:] >= self.eps[:-1]):
            raise ValueError("eps must be positive with 3 eps[mu+1] < eps[mu]")

    @classmethod
    def default(cls, levels=6, t_count=60):
        return cls(2.0 ** -np.arange(1, t_count + 1), 4.0 ** -np.arange(1, levels + 1))

    @property
    def t(self):
        return 1.0 - self.one_minus_t

    @property
    def levels(self):
        return len(self.eps)

    def to_dict(self):
        return {"one_minus_t": self.one_minus_t.tolist(), "eps": self.eps.tolist()}


# ---------------------------------------------------------------------------
# normal form

def _north(n):
    e = np.zeros(n, complex)
    e[-1] = 1.0
    return e


def _shifted(f, e):
    """``z -> f(z - e)``."""
    c = to_real(e)

    def jet(x, order):
        return f.real_jet(x - c, order)
    return DefiningFunction(f.n, jet, f"{f.name}(z-a)")


class NormalForm(DefiningFunction):
    """Defining function ``rho(z) + h(z - a)`` with ``a = (0', 1)``.

    Attributes
    ----------
    h : DefiningFunction
        Remainder in the local variable ``w = z - a``.
    shell_ratios : list of float
        ``max |h(w)| / ||w||^2`` on the shells ``||w|| = 1e-2, 1e-3, 1e-4``.
    chart : HolomorphicMap or None
        Map ``w -> Psi(w)`` into the original coordinates.
    multiplier : DefiningFunction or None
        Positive factor ``m`` with ``rho(a + w) + h(w) = m(w) r(Psi(w))``.
    """

    def __init__(self, h, chart=None, multiplier=None, base_point=None, name="r_nf"):
        n = h.n
        self.h = h
        self.chart = chart
        self.multiplier = multiplier
        self.base_point = base_point
        total = ball_function(n) + _shifted(h, _north(n))
        super().__init__(n, total.real_jet, name)
        self.shell_ratios = _shell_ratios(h)

    @property
    def remainder_vanishes(self):
        """Whether ``h = o(||w||^2)`` holds on the shells."""
        r = self.shell_ratios
        # evaluating h cancels O(||w||) terms, so ratios carry eps/||w||^2 noise
        noise = [1e3 * np.finfo(float).eps / s ** 2 for s in SHELLS]
        small = all(x <= 0.1 for x in r)
        decreasing = all(b < a or b <= fl for a, b, fl in zip(r, r[1:], noise[1:]))
        return small and decreasing


def _shell_ratios(h, resolution=16):
    dirs = sphere_directions(h.n, resolution)
    return [float(np.max(np.abs(h.value(s * dirs))) / s ** 2) for s in SHELLS]


def normal_form_from_remainder(h, name=None):
    """Normal form ``rho(z) + h(z - a)`` from an explicit remainder ``h``."""
    return NormalForm(h, name=name or f"rho+{h.name}")


def _affine_real(n, const, kappa):
    """``const + 2 re(kappa . w)`` as a defining function of ``w``."""
    kappa = np.asarray(kappa, complex)
    g = np.empty(2 * n)
    g[0::2] = 2 * kappa.real
    g[1::2] = -2 * kappa.imag

    def jet(x, order):
        out = (const + x @ g,)
        if order >= 1:
            out += (np.broadcast_to(g, x.shape).copy(),)
        if order >= 2:
            out += (np.zeros(x.shape + (2 * n,)),)
        return out
    return DefiningFunction(n, jet, "m")


def normalize_at_boundary_point(D, a, check=True):
    """Holomorphic normal form of ``D`` at the boundary point ``a``.

    With ``G``, ``L`` and ``Q`` the gradient, Levi matrix and holomorphic
    Hessian of ``r`` at ``a``, the chart is ``Psi(w) = a + A w + q(w)``:
    the first ``n - 1`` columns of ``A`` are a Levi-orthonormal basis of
    the complex tangent space, the last column is ``2 G / ||G||^2``, and the
    quadratic part ``q`` (normal to the tangent space) cancels the
    holomorphic second-order terms.  A real affine multiplier
    ``m(w) = 1 + 2 re(kappa . w)`` removes the remaining mixed terms, so
    ``m(w) r(Psi(w)) = 2 re w_n + ||w||^2 + O(||w||^3)``.

    Raises
    ------
    NotStronglyConvexAt
        If the tangential Hessian or the Levi form degenerates at ``a``.
    """
    r = D.require_smooth()
    a = np.asarray(a, complex).reshape(D.n)
    n = D.n
    if strong_convexity_margin(D, a[None]) <= 1e-10:
        raise NotStronglyConvexAt(f"tangential Hessian degenerates at {a}")
    _, G, H = r.jet(a[None], 2)
    G = G[0]
    L, Q = complex_hessians(H[0])
    g2 = float(np.vdot(G, G).real)

    # complex tangent space {X : sum conj(G_j) X_j = 0}
    B = np.linalg.svd(np.eye(n) - np.outer(G, np.conj(G)) / g2)[0][:, : n - 1]
    M = B.T @ L @ np.conj(B)
    lam, U = np.linalg.eigh(M)
    if n > 1 and lam.min() <= 1e-10:
        raise NotStronglyConvexAt(f"Levi form degenerates at {a}")
    C = np.conj(U) / np.sqrt(lam)[None, :] if n > 1 else np.zeros((0, 0))
    A = np.column_stack([B @ C, 2 * G / g2]) if n > 1 else (2 * G / g2)[:, None]

    E = np.eye(n) - A.T @ L @ np.conj(A)
    kappa = E[:, -1].copy()
    kappa[-1] = E[-1, -1].real / 2
    quad_core = A.T @ Q @ A
    quad_core = quad_core + np.outer(kappa, _north(n)) + np.outer(_north(n), kappa)
    quad = -(G / g2)[:, None, None] * quad_core[None, :, :]
    chart = HolomorphicMap.polynomial(a, A, quad, name="Psi")
    m = _affine_real(n, 1.0, kappa)
    pulled = product(m, compose_holomorphic(r, chart))
    h = _remainder(pulled, n)
    nf = NormalForm(h, chart, m, a, name=f"nf({r.name})")
    if check and not nf.remainder_vanishes:
        raise NoConvergence(f"normal form remainder is not o(|w|^2): {nf.shell_ratios}")
    return nf


def _remainder(pulled, n):
    """``h(w) = m(w) r(Psi(w)) - 2 re w_n - ||w||^2``."""
    def jet(x, order):
        out = list(pulled.real_jet(x, order))
        out[0] = out[0] - 2 * x[..., -2] - np.sum(x * x, axis=-1)
        if order >= 1:
            g = 2 * x
            g[..., -2] += 2
            out[1] = out[1] - g
        if order >= 2:
            out[2] = out[2] - 2 * np.eye(2 * n)
        return tuple(out)
    return DefiningFunction(n, jet, "h")


# ---------------------------------------------------------------------------
# scaled defining functions

def _prefactor(n, t, one_minus_t2):
    """``|1 + t z_n|^2 / (1 - t^2)`` with analytic derivatives."""
    def jet(x, order):
        xn, yn = x[..., -2], x[..., -1]
        out = (((1 + t * xn) ** 2 + (t * yn) ** 2) / one_minus_t2,)
        if order >= 1:
            g = np.zeros(x.shape)
            g[..., -2] = 2 * t * (1 + t * xn) / one_minus_t2
            g[..., -1] = 2 * t * t * yn / one_minus_t2
            out += (g,)
        if order >= 2:
            H = np.zeros(x.shape + (2 * n,))
            H[..., -2, -2] = H[..., -1, -1] = 2 * t * t / one_minus_t2
            out += (H,)
        return out
    return DefiningFunction(n, jet, "P_t")


def _automorphism(n, t, one_minus_t):
    if (t is None) == (one_minus_t is None):
        raise ValueError("give exactly one of t and one_minus_t")
    A = BallScalingAutomorphism(n, t=t, one_minus_t=one_minus_t)
    if A.t <= 0:
        raise ValueError("t must lie in (0, 1)")
    return A


def _restrict_half_space(f, strict):
    if not strict:
        return f

    def jet(x, order):
        if np.any(x[..., -2] <= -0.5):
            raise ValueError("scaled defining function is only valid on re z_n > -1/2")
        return f.real_jet(x, order)
    return DefiningFunction(f.n, jet, f.name)


def scaled_remainder(r, t=None, one_minus_t=None, strict=True):
    """``r_t - rho``; stable as ``t -> 1`` when ``r`` is a :class:`NormalForm`."""
    n = r.n
    A = _automorphism(n, t, one_minus_t)
    P = _prefactor(n, A.t, A.one_minus_t2)
    if isinstance(r, NormalForm):
        inner = compose_holomorphic(r.h, A.holomorphic_map(centered=True))
        out = product(P, inner)
    else:
        out = product(P, compose_holomorphic(r, A.holomorphic_map())) - ball_function(n)
    out.name = f"{r.name}_t-rho"
    return _restrict_half_space(out, strict)


def scaled_defining(r, t=None, one_minus_t=None, strict=True):
    """``r_t(z) = |1 + t z_n|^2 / (1 - t^2) r(A_t(z))``.

    For a :class:`NormalForm` the equivalent form
    ``rho + |1 + t z_n|^2 / (1 - t^2) h(A_t(z) - a)`` is used, which avoids
    the cancellation in ``r(A_t(z))``.  With ``strict`` the function refuses
    points with ``re z_n <= -1/2``.

    Raises
    ------
    PoleHit
        If ``1 + t z_n`` vanishes.
    """
    out = ball_function(r.n) + scaled_remainder(r, t, one_minus_t, strict=False)
    out.name = f"{r.name}_t"
    return _restrict_half_space(out, strict)


# ---------------------------------------------------------------------------
# cut-off

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _bump(u):
    u = np.asarray(u, float)
    inside = (u > 0) & (u < 1)
    out = np.zeros_like(u)
    v = u[inside]
    out[inside] = np.exp(-1.0 / (v * (1 - v)))
    return out


def _bump_integral(s):
    """``int_0^s exp(-1/(u(1-u))) du`` for ``s`` in [0, 1] (Gauss-Legendre)."""
    s = np.asarray(s, float)
    u = 0.5 * s[..., None] * (_GL_NODES + 1)
    return 0.5 * s * np.sum(_GL_WEIGHTS * _bump(u), axis=-1)


_BUMP_TOTAL = float(_bump_integral(np.array(1.0)))


def chi_derivatives(x):
    """``(chi, chi', chi'')`` at ``x``.

    ``chi`` is the normalized primitive of ``exp(-1/(s(1-s)))`` with
    ``s = 4x + 2``, so it vanishes for ``x <= -1/2``, equals 1 for
    ``x >= -1/4`` and increases in between.
    """
    x = np.asarray(x, float)
    s = np.clip(4 * x + 2, 0.0, 1.0)
    # the bump is symmetric about 1/2; integrating the shorter side keeps
    # 1 - chi as accurate as chi
    lower = _bump_integral(np.minimum(s, 1 - s)) / _BUMP_TOTAL
    val = np.where(s <= 0.5, lower, 1.0 - lower)
    b = _bump(s)
    d1 = 4 * b / _BUMP_TOTAL
    with np.errstate(divide="ignore", invalid="ignore"):
        db = np.where(b > 0, b * (1 - 2 * s) / (s * (1 - s)) ** 2, 0.0)
    d2 = 16 * db / _BUMP_TOTAL
    return val, d1, d2


def chi(x):
    out = chi_derivatives(x)[0]
    return float(out) if out.ndim == 0 else out


def chi_function(n):
    """``z -> chi(re z_n)`` as a defining function."""
    def jet(x, order):
        c, d1, d2 = chi_derivatives(x[..., -2])
        out = (c,)
        if order >= 1:
            g = np.zeros(x.shape)
            g[..., -2] = d1
            out += (g,)
        if order >= 2:
            H = np.zeros(x.shape + (2 * n,))
            H[..., -2, -2] = d2
            out += (H,)
        return out
    return DefiningFunction(n, jet, "chi")


# ---------------------------------------------------------------------------
# blended family

def blended_function(r, t=None, one_minus_t=None, lift=0.0):
    """``chi(re z_n) r_t + (1 - chi(re z_n)) rho + lift`` on all of C^n.

    Written as ``rho + chi (r_t - rho) + lift``; the scaled part is only
    evaluated where ``chi`` does not vanish.
    """
    n = r.n
    rem = scaled_remainder(r, t, one_minus_t, strict=False)
    cut = chi_function(n)
    rho = ball_function(n)

    def jet(x, order):
        shape = x.shape[:-1]
        x = x.reshape(-1, 2 * n)
        out = [np.array(o, copy=True) for o in rho.real_jet(x, order)]
        out[0] = out[0] + lift
        mask = x[..., -2] > -0.5
        if not np.any(mask):
            return tuple(o.reshape(shape + o.shape[1:]) for o in out)
        xs = x[mask]
        c = cut.real_jet(xs, order)
        e = rem.real_jet(xs, order)
        out[0][mask] += c[0] * e[0]
        if order >= 1:
            out[1][mask] += c[0][:, None] * e[1] + e[0][:, None] * c[1]
        if order >= 2:
            outer = c[1][:, :, None] * e[1][:, None, :]
            out[2][mask] += (c[0][:, None, None] * e[2] + e[0][:, None, None] * c[2]
                             + outer + np.swapaxes(outer, -1, -2))
        return tuple(o.reshape(shape + o.shape[1:]) for o in out)
    return DefiningFunction(n, jet, f"rho~({r.name})")


def ball_probe_grid(n, count=10_000, boundary_fraction=0.3, seed=0):
    """Deterministic sample of the closed unit ball, part of it on the sphere."""
    rng = np.random.default_rng(seed)
    nb = int(count * boundary_fraction)
    v = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    radii = np.ones(count)
    radii[nb:] = rng.random(count - nb) ** (1 / (2 * n))
    return v * radii[:, None]


def half_ball_grid(n, count=10_000, seed=0):
    """Probe points of the closed ball with ``re z_n > -1/2``."""
    pts = ball_probe_grid(n, int(count * 1.6), seed=seed)
    return pts[pts[:, -1].real > -0.5][:count]


@dataclass
class BlendedFamily:
    """The family ``rho_mu = rho~_{s_mu} + 2 eps_mu`` and its domains.

    Attributes
    ----------
    base : DefiningFunction
        Normal form ``r``.
    indices : list of int
        Chosen positions ``s_mu`` in the schedule.
    members : list of DefiningFunction
        ``rho_mu``.
    sups : list of float
        ``sup |rho~_{s_mu} - rho|`` over the probe grid.
    domains : list of Domain
        ``D_mu``, the component of ``{rho_mu < 0}`` containing 0.
    margins : list of float
        Strong convexity margins of ``D_mu`` (empty if not computed).
    mu0 : int or None
        First level (1-based) from which every margin is positive.
    """
    base: DefiningFunction
    schedule: ScalingSchedule
    indices: list
    members: list
    sups: list
    domains: list
    component_in_ball: list
    margins: list = field(default_factory=list)
    mu0: int | None = None

    @property
    def t_values(self):
        return [float(self.schedule.t[i]) for i in self.indices]

    @property
    def one_minus_t(self):
        return [float(self.schedule.one_minus_t[i]) for i in self.indices]

    def table(self):
        rows = []
        for mu, i in enumerate(self.indices):
            rows.append({"mu": mu + 1, "eps": float(self.schedule.eps[mu]),
                         "one_minus_t": float(self.schedule.one_minus_t[i]),
                         "sup": self.sups[mu],
                         "margin": self.margins[mu] if self.margins else float("nan"),
                         "component_in_ball": self.component_in_ball[mu]})
        return rows


def _lattice_component(f, n, step, radius=1.05):
    """Lattice points of the component of ``{f < 0}`` containing 0."""
    ticks = np.arange(-radius, radius + step / 2, step)
    size = len(ticks) ** (2 * n)
    if size > 5e6:
        raise ValueError(f"membership lattice too large ({size:.0f} points)")
    mesh = np.stack(np.meshgrid(*([ticks] * (2 * n)), indexing="ij"), -1)
    vals = np.empty(mesh.shape[:-1])
    flat = mesh.reshape(-1, 2 * n)
    out = vals.reshape(-1)
    for k in range(0, len(flat), 200_000):
        out[k:k + 200_000] = f.real_jet(flat[k:k + 200_000], 0)[0]
    labels, _ = ndimage.label(vals < 0)
    origin = tuple(int(np.argmin(np.abs(ticks))) for _ in range(2 * n))
    if labels[origin] == 0:
        raise ValueError("origin is not inside {f < 0}")
    return mesh[labels == labels[origin]]


def blended_family(r, schedule=None, grid=None, lattice_step=1 / 16, margins=True,
                   margin_resolution=None):
    """Build ``rho_mu`` and ``D_mu`` level by level.

    At level ``mu`` the first schedule index after the previous one with
    ``sup |rho~_t - rho| < eps_mu`` on ``grid`` is chosen, and the
    function is lifted by ``2 eps_mu``.

    Raises
    ------
    BudgetExhausted
        If no remaining ``t`` meets the bound at some level.
    """
    n = r.n
    schedule = schedule or ScalingSchedule.default()
    grid = ball_probe_grid(n) if grid is None else np.asarray(grid, complex)
    rho_vals = ball_function(n).value(grid)
    indices, members, sups, domains, inside = [], [], [], [], []
    start = 0
    for mu, eps in enumerate(schedule.eps):
        for k in range(start, len(schedule.one_minus_t)):
            f = blended_function(r, one_minus_t=schedule.one_minus_t[k])
            sup = float(np.max(np.abs(f.value(grid) - rho_vals)))
            if sup < eps:
                break
        else:
            raise BudgetExhausted(f"no t in the schedule meets eps_{mu + 1} = {eps:g}")
        start = k + 1
        member = blended_function(r, one_minus_t=schedule.one_minus_t[k], lift=2 * eps)
        member.name = f"rho_{mu + 1}"
        comp = _lattice_component(member, n, lattice_step)
        in_ball = bool(np.all(np.sum(comp ** 2, axis=-1) <= 1 + 1e-12))
        cons = [member] if in_ball else [member, ball_function(n)]
        Dm = Domain(cons, np.zeros(n), 1.0, member, name=f"D_{mu + 1}")
        Dm.model = ModelDomain("Blended", {"level": mu + 1})
        indices.append(k)
        members.append(member)
        sups.append(sup)
        domains.append(Dm)
        inside.append(in_ball)
    fam = BlendedFamily(r, schedule, indices, members, sups, domains, inside)
    if margins:
        fam.margins = [strong_convexity_margin(Dm, boundary_grid(Dm, margin_resolution))
                       for Dm in domains]
        fam.mu0 = next((mu + 1 for mu in range(len(domains))
                        if all(m > 0 for m in fam.margins[mu:])), None)
    return fam


# ---------------------------------------------------------------------------
# C^2 distance

@dataclass(frozen=True)
class C2Distance:
    sup_val: float
    sup_grad: float
    sup_hess: float

    def __iter__(self):
        return iter((self.sup_val, self.sup_grad, self.sup_hess))


def c2_distance(f, g, grid):
    """Grid suprema of ``|f - g|``, ``||grad f - grad g||`` and the spectral
    norm of the Hessian difference."""
    x = to_real(np.asarray(grid, complex))
    a = f.real_jet(x, 2)
    b = g.real_jet(x, 2)
    dv = float(np.max(np.abs(a[0] - b[0])))
    dg = float(np.max(np.linalg.norm(a[1] - b[1], axis=-1)))
    dH = a[2] - b[2]
    dh = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (dH + np.swapaxes(dH, -1, -2))))))
    return C2Distance(dv, dg, dh)


# ---------------------------------------------------------------------------
# geodesics

def transport_geodesic(f, t=None, one_minus_t=None, tol=1e-10):
    """``A_t o f`` re-expanded as a polynomial disc.

    Raises
    ------
    PoleHit
        If ``1 + t f_n`` vanishes on the closed disc.
    """
    A = _automorphism(f.n, t, one_minus_t)
    return disc_from_samples(lambda lam: A(f(lam)), tol=tol)


@dataclass
class LBKResult:
    """Approximating geodesics and their limit diagnostics."""
    disc: AnalyticDisc
    discs: list
    xis: list
    targets: list
    gaps: list
    holder: list
    endpoint_error: float

    @property
    def holder_ratio(self):
        return max(self.holder) / min(self.holder)

    def to_dict(self):
        return {"xis": self.xis, "gaps": self.gaps, "holder": self.holder,
                "holder_ratio": self.holder_ratio, "endpoint_error": self.endpoint_error,
                "disc": self.disc.to_dict()}


def _sup_circle(f, g, N=1024):
    lam = np.exp(2j * np.pi * np.arange(N) / N)
    return float(np.max(np.linalg.norm(f(lam) - g(lam), axis=-1)))


def lbk_disc(D, p, q, approach_count=5, budget=None):
    """Geodesic through ``q`` hitting the boundary point ``p`` at 1, as a limit.

    Targets ``a_nu = p - 2^-nu nu_D(p)`` approach ``p`` along the inward
    normal; extremal discs through ``(q, a_nu)`` are computed with
    :func:`lempert_upper`.  Consecutive sup-norm gaps must decrease (gaps
    below ``1e-8`` count as converged).

    Raises
    ------
    NoCauchyTrend
        If the gap sequence fails to decrease.
    """
    budget = budget or Budget(degree=16)
    p = np.asarray(p, complex).reshape(D.n)
    q = np.asarray(q, complex).reshape(D.n)
    nu = outward_normal(D, p[None])[0]
    discs, xis, targets = [], [], []
    for k in range(1, approach_count + 1):
        a = p - 2.0 ** -k * nu
        res = lempert_upper(D, q, a, budget)
        discs.append(res.witness)
        xis.append(res.xi)
        targets.append(a)
    gaps = [_sup_circle(f, g) for f, g in zip(discs, discs[1:])]
    holder = [float(holder_half_norm(f)) for f in discs]
    final = discs[-1]
    err = float(np.linalg.norm(final(np.array([1.0]))[0] - p))
    result = LBKResult(final, discs, xis, targets, gaps, holder, err)
    if any(b >= a and b > NOISE_FLOOR for a, b in zip(gaps, gaps[1:])):
        raise NoCauchyTrend("approximating geodesics do not form a Cauchy trend", gaps)
    return result
