"""Asymptotically flat metrics ``g = delta + h1(theta)/r + Q`` on an end of R^3.

``h1`` is a symmetric 3x3 array of angular functions, extended constantly
along rays; ``Q`` is an O(r^-2) remainder with its own derivative model.
Everything is vectorised over a batch of points; derivative arrays put the
differentiation index first, ``dg[..., k, i, j] = d_k g_ij``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, OutOfDomainError
from .harmonics import n_modes, radial_extension, resize_coefficients, Y00

__all__ = [
    "MetricValue",
    "MetricField",
    "SchwarzschildTail",
    "CallableRemainder",
    "eval_metric",
    "scalar_curvature",
    "coordinate_laplacian",
    "flat",
    "example51",
    "schwarzschild",
    "from_h1",
    "perturbed_isotropic",
    "BUILTINS",
    "christoffel_symbols",
    "ricci_tensor",
]

DEFAULT_INNER_RADIUS = 10.0


def christoffel_symbols(g_inv, dg):
    """Gamma[..., k, i, j] = Gamma^k_ij from g^-1 and first derivatives."""
    T = dg + np.swapaxes(dg, -3, -2) - np.moveaxis(dg, -3, -1)
    # T[..., i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
    return 0.5 * np.einsum("...kl,...ijl->...kij", g_inv, T)


def ricci_tensor(g_inv, dg, d2g):
    T = dg + np.swapaxes(dg, -3, -2) - np.moveaxis(dg, -3, -1)
    gam = 0.5 * np.einsum("...kl,...ijl->...kij", g_inv, T)
    dginv = -np.einsum("...ka,...mab,...bl->...mkl", g_inv, dg, g_inv)
    # d_m T_ijl
    dT = d2g + np.einsum("...mjil->...mijl", d2g) - np.einsum("...mlij->...mijl", d2g)
    dgam = 0.5 * (np.einsum("...mkl,...ijl->...mkij", dginv, T)
                  + np.einsum("...kl,...mijl->...mkij", g_inv, dT))
    ric = (np.einsum("...kkij->...ij", dgam)
           - np.einsum("...jkik->...ij", dgam)
           + np.einsum("...kkl,...lij->...ij", gam, gam)
           - np.einsum("...kjl,...lik->...ij", gam, gam))
    return 0.5 * (ric + np.swapaxes(ric, -1, -2))


@dataclass(frozen=True, eq=False)
class MetricValue:
    """Metric data at a batch of points.

    Attributes
    ----------
    g, g_inv : (..., 3, 3)
    dg : (..., 3, 3, 3)
        ``dg[..., k, i, j] = d_k g_ij``.
    christoffel : (..., 3, 3, 3)
        ``christoffel[..., k, i, j] = Gamma^k_ij``.
    d2g : (..., 3, 3, 3, 3) or None
        ``d2g[..., l, k, i, j] = d_l d_k g_ij``.
    """

    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    christoffel: np.ndarray
    d2g: np.ndarray = None

    @property
    def h(self):
        return self.g - np.eye(3)

    def ricci(self):
        if self.d2g is None:
            raise InvalidArgumentError("second derivatives were not evaluated")
        return ricci_tensor(self.g_inv, self.dg, self.d2g)

    def scalar_curvature(self):
        return np.einsum("...ij,...ij->...", self.g_inv, self.ricci())

    def coordinate_laplacian(self):
        """Delta_g x^k = -g^{mn} Gamma^k_mn, shape (..., 3)."""
        return -np.einsum("...mn,...kmn->...k", self.g_inv, self.christoffel)


def _radial_derivs(coeffs, s, u):
    """f = sum_k c_k s^-k as a function of x with s = |x - a|, u = (x - a)/s."""
    f = np.zeros_like(s)
    f1 = np.zeros_like(s)
    f2 = np.zeros_like(s)
    for k, c in enumerate(coeffs):
        if c == 0.0:
            continue
        f += c * s ** (-k)
        f1 += -k * c * s ** (-k - 1)
        f2 += k * (k + 1) * c * s ** (-k - 2)
    uu = u[:, :, None] * u[:, None, :]
    df = f1[:, None] * u
    d2f = f2[:, None, None] * uu + (f1 / s)[:, None, None] * (np.eye(3) - uu)
    return f, df, d2f


class SchwarzschildTail:
    """Remainder turning ``h1 = 2m delta`` into isotropic Schwarzschild.

    The full metric is ``(1 + m/(2|x-a|))**4 delta``; ``Q`` is that minus
    ``delta + 2m delta/|x|``.
    """

    name = "schwarzschild-tail"

    def __init__(self, m, center=(0.0, 0.0, 0.0)):
        self.m = float(m)
        self.center = np.asarray(center, dtype=float)

    def params(self):
        return {"m": self.m, "center": self.center.tolist()}

    def evaluate(self, x):
        m = self.m
        psi4 = [0.0, 2 * m, 1.5 * m ** 2, 0.5 * m ** 3, m ** 4 / 16.0]
        if not np.any(self.center):
            s = np.linalg.norm(x, axis=1)
            f, df, d2f = _radial_derivs([0.0, 0.0] + psi4[2:], s, x / s[:, None])
        else:
            d = x - self.center
            s = np.linalg.norm(d, axis=1)
            f, df, d2f = _radial_derivs(psi4, s, d / s[:, None])
            r = np.linalg.norm(x, axis=1)
            f0, df0, d2f0 = _radial_derivs([0.0, 2 * m], r, x / r[:, None])
            f, df, d2f = f - f0, df - df0, d2f - d2f0
        eye = np.eye(3)
        Q = f[:, None, None] * eye
        dQ = df[:, :, None, None] * eye
        d2Q = d2f[:, :, :, None, None] * eye
        return Q, dQ, d2Q


class CallableRemainder:
    """User remainder ``Q(x)`` with 5-point central-difference derivatives.

    ``func`` must accept a (P, 3) array and return (P, 3, 3). The step is
    ``rel_step * |x|``.
    """

    name = "user-supplied-callable"

    def __init__(self, func, rel_step=1e-4):
        self.func = func
        self.rel_step = float(rel_step)

    def params(self):
        return {"rel_step": self.rel_step}

    def _d(self, fn, x, k, h):
        e = np.zeros(3)
        e[k] = 1.0
        hh = h[:, None] * e
        return (-fn(x + 2 * hh) + 8 * fn(x + hh) - 8 * fn(x - hh)
                + fn(x - 2 * hh)) / (12.0 * h[:, None, None])

    def evaluate(self, x):
        h = self.rel_step * np.linalg.norm(x, axis=1)
        Q = np.asarray(self.func(x), dtype=float)
        dQ = np.stack([self._d(self.func, x, k, h) for k in range(3)], axis=1)
        d2Q = np.empty(x.shape[:1] + (3, 3, 3, 3))
        for k in range(3):
            def dk(y, k=k):
                return self._d(self.func, y, k, self.rel_step * np.linalg.norm(y, axis=1))
            for l in range(3):
                d2Q[:, l, k] = self._d(dk, x, l, h)
        return Q, dQ, 0.5 * (d2Q + np.swapaxes(d2Q, 1, 2))


class MetricField:
    """``g_ij = delta_ij + h1_ij(x/|x|)/|x| + Q_ij(x)`` for ``|x| >= inner_radius``.

    Parameters
    ----------
    h1 : (3, 3, N) array
        Real-harmonic coefficients of each component (symmetric in i, j).
    q : None, SchwarzschildTail, CallableRemainder
    inner_radius : float
    name : str, optional
        Label used in reports and metric-spec files.
    """

    def __init__(self, h1, q=None, inner_radius=DEFAULT_INNER_RADIUS, name=None):
        h1 = np.array(h1, dtype=float)
        if h1.ndim != 3 or h1.shape[:2] != (3, 3):
            raise InvalidArgumentError("h1 must have shape (3, 3, N)")
        if not np.allclose(h1, np.swapaxes(h1, 0, 1), rtol=0, atol=1e-14):
            raise InvalidArgumentError("h1 must be symmetric")
        L = max(1, int(round(np.sqrt(h1.shape[-1]))) - 1)
        if n_modes(L) < h1.shape[-1]:
            raise InvalidArgumentError("h1 coefficient count is not (L+1)^2")
        self.h1 = resize_coefficients(0.5 * (h1 + np.swapaxes(h1, 0, 1)), L)
        self.h1.setflags(write=False)
        self.L_h = L
        self.q = q
        self.inner_radius = float(inner_radius)
        self.name = name or "custom"

    def __repr__(self):
        qn = "none" if self.q is None else self.q.name
        return (f"MetricField(name={self.name!r}, L_h={self.L_h}, q={qn}, "
                f"inner_radius={self.inner_radius})")

    @property
    def has_h1(self):
        return bool(np.any(self.h1))

    def check_domain(self, x):
        r = np.linalg.norm(np.asarray(x, dtype=float).reshape(-1, 3), axis=1)
        bad = r < self.inner_radius * (1 - 1e-12)
        if np.any(bad):
            raise OutOfDomainError(
                f"point at radius {r[bad].min():.6g} is inside inner_radius "
                f"{self.inner_radius:g}")

    def evaluate(self, x, second=True):
        """Return a :class:`MetricValue` at points ``x`` of shape (..., 3)."""
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        xf = x.reshape(-1, 3)
        self.check_domain(xf)
        P = xf.shape[0]
        g = np.broadcast_to(np.eye(3), (P, 3, 3)).copy()
        dg = np.zeros((P, 3, 3, 3))
        d2g = np.zeros((P, 3, 3, 3, 3)) if second else None
        if self.has_h1:
            r = np.linalg.norm(xf, axis=1)
            derivs = 2 if second else 1
            out = radial_extension(self.h1, self.L_h, xf, derivs=derivs)
            F = np.moveaxis(out[0], -1, 0)              # (P, 3, 3)
            dF = np.moveaxis(out[1], -2, 0)             # (P, 3, 3, k)
            dF = np.moveaxis(dF, -1, 1)                 # (P, k, 3, 3)
            ir = 1.0 / r
            xr3 = xf * (ir ** 3)[:, None]
            g += F * ir[:, None, None]
            dg += dF * ir[:, None, None, None] - xr3[:, :, None, None] * F[:, None]
            if second:
                d2F = np.moveaxis(out[2], (-3, -2, -1), (0, 1, 2))  # (P, k, l, 3, 3)
                eye = np.eye(3)
                hess_ir = (3.0 * xf[:, :, None] * xf[:, None, :] * (ir ** 5)[:, None, None]
                           - eye * (ir ** 3)[:, None, None])
                d2g += (d2F * ir[:, None, None, None, None]
                        - xr3[:, :, None, None, None] * dF[:, None]
                        - xr3[:, None, :, None, None] * dF[:, :, None]
                        + hess_ir[:, :, :, None, None] * F[:, None, None])
        if self.q is not None:
            Q, dQ, d2Q = self.q.evaluate(xf)
            g += Q
            dg += dQ
            if second:
                d2g += d2Q
        g_inv = np.linalg.inv(g)
        gam = christoffel_symbols(g_inv, dg)
        rs = lambda a: None if a is None else a.reshape(shape + a.shape[1:])
        return MetricValue(rs(g), rs(g_inv), rs(dg), rs(gam), rs(d2g))

    def h1_at(self, directions):
        """h1_ij at unit vectors, shape (P, 3, 3)."""
        vals = radial_extension(self.h1, self.L_h, directions, derivs=0)
        return np.moveaxis(vals, -1, 0)


def eval_metric(field, x, second=True):
    return field.evaluate(x, second=second)


def scalar_curvature(field, x):
    return field.evaluate(x, second=True).scalar_curvature()


def coordinate_laplacian(field, x, k=None):
    """``Delta_g x^k = -g^{mn} Gamma^k_mn``; all three axes when ``k`` is None."""
    lap = field.evaluate(x, second=False).coordinate_laplacian()
    return lap if k is None else lap[..., k]


def _iso_h1(scale, L=1):
    c = np.zeros((3, 3, n_modes(L)))
    for i in range(3):
        c[i, i, 0] = scale / Y00
    return c


def flat(inner_radius=0.0):
    return MetricField(np.zeros((3, 3, 4)), None, inner_radius=inner_radius,
                       name="flat")


def example51(inner_radius=DEFAULT_INNER_RADIUS):
    """``g_ij = delta_ij + delta_ij/r``."""
    return MetricField(_iso_h1(1.0), None, inner_radius=inner_radius,
                       name="example51")


def schwarzschild(m=1.0, center=(0.0, 0.0, 0.0), inner_radius=DEFAULT_INNER_RADIUS):
    """Isotropic Schwarzschild ``(1 + m/(2|x-a|))**4 delta`` with ``a = center``."""
    center = np.asarray(center, dtype=float)
    if np.linalg.norm(center) >= inner_radius:
        raise InvalidArgumentError("center must lie inside inner_radius")
    return MetricField(_iso_h1(2.0 * m), SchwarzschildTail(m, center),
                       inner_radius=inner_radius, name="schwarzschild")


def from_h1(h1, q=None, inner_radius=DEFAULT_INNER_RADIUS, name="custom"):
    return MetricField(h1, q, inner_radius=inner_radius, name=name)


def perturbed_isotropic(eps=0.05, degree=4, seed=0, scale=1.0,
                        inner_radius=DEFAULT_INNER_RADIUS):
    """``h1 = scale * delta + eps * P`` with P a random symmetric band-limited
    tensor of unit spectral size per component (fixed ``seed``)."""
    if degree < 1:
        raise InvalidArgumentError("degree must be >= 1")
    rng = np.random.default_rng(int(seed))
    N = n_modes(int(degree))
    P = rng.standard_normal((3, 3, N)) / np.sqrt(N)
    P = 0.5 * (P + np.swapaxes(P, 0, 1))
    h1 = _iso_h1(scale, int(degree)) + eps * P
    return MetricField(h1, None, inner_radius=inner_radius, name="perturbed")


BUILTINS = {
    "flat": flat,
    "example51": example51,
    "schwarzschild": schwarzschild,
    "perturbed": perturbed_isotropic,
}
