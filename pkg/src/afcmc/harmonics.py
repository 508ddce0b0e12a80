"""Real spherical-harmonic machinery on the unit sphere.

The basis functions are evaluated as polynomials in the Cartesian components
of the unit vector, ``Y_lm(n) = s * Qbar_lm(n_z) * Re/Im (n_x + i n_y)**m``,
so values and derivatives are regular everywhere, poles included. Nodes are
Gauss-Legendre in ``cos(theta)`` crossed with a uniform azimuthal grid.

Mode ordering is degree-major, order-minor: ``n = l*l + l + m`` with
``m = -l..l``; ``m < 0`` holds the sine functions. Coefficients for a lower
``L_max`` are therefore a prefix of those for a higher one.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidArgumentError, MeanNotZeroError

__all__ = [
    "HarmonicBasis",
    "SphereFunction",
    "build_basis",
    "n_modes",
    "mode_index",
    "mode_degrees_orders",
    "real_sph_harm",
    "radial_extension",
    "analyze",
    "synthesize",
    "apply_laplacian",
    "invert_laplacian",
    "resize_coefficients",
    "sobolev_norm",
    "MEAN_ZERO_RTOL",
    "Y00",
]

MEAN_ZERO_RTOL = 1e-9
Y00 = 0.5 / np.sqrt(np.pi)


def n_modes(L_max):
    return (L_max + 1) ** 2


def mode_index(l, m):
    if abs(m) > l:
        raise InvalidArgumentError(f"|m| > l for (l, m) = ({l}, {m})")
    return l * l + l + m


def mode_degrees_orders(L_max):
    degrees = np.concatenate([np.full(2 * l + 1, l) for l in range(L_max + 1)])
    orders = np.concatenate([np.arange(-l, l + 1) for l in range(L_max + 1)])
    return degrees, orders


def _legendre_tables(L, z, derivs):
    """Qbar_lm(z) and its z-derivatives for 0 <= m <= l <= L.

    ``Qbar_lm(cos t) * sin(t)**m`` is the orthonormalised associated Legendre
    function (no Condon-Shortley phase).
    """
    Q = {}
    dQ = {}
    d2Q = {}
    zero = np.zeros_like(z)
    qmm = np.full_like(z, 1.0 / np.sqrt(4.0 * np.pi))
    for m in range(L + 1):
        if m > 0:
            qmm = qmm * np.sqrt((2 * m + 1) / (2.0 * m))
        Q[m, m] = qmm
        dQ[m, m] = zero
        d2Q[m, m] = zero
        if m + 1 <= L:
            c = np.sqrt(2 * m + 3.0)
            Q[m + 1, m] = c * z * qmm
            dQ[m + 1, m] = c * qmm
            d2Q[m + 1, m] = zero
        for l in range(m + 2, L + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            Q[l, m] = a * (z * Q[l - 1, m] - b * Q[l - 2, m])
            if derivs >= 1:
                dQ[l, m] = a * (Q[l - 1, m] + z * dQ[l - 1, m] - b * dQ[l - 2, m])
            if derivs >= 2:
                d2Q[l, m] = a * (2.0 * dQ[l - 1, m] + z * d2Q[l - 1, m]
                                 - b * d2Q[l - 2, m])
    return Q, dQ, d2Q


def real_sph_harm(L_max, directions, derivs=0):
    """Evaluate the real orthonormal basis up to degree ``L_max``.

    Parameters
    ----------
    L_max : int
    directions : (P, 3) array
        Unit vectors (normalised internally).
    derivs : {0, 1, 2}
        Also return the Cartesian gradient (N, P, 3) and Hessian (N, P, 3, 3)
        of the polynomial extension. Only their tangential parts are
        meaningful; see :func:`radial_extension`.
    """
    n = np.asarray(directions, dtype=float).reshape(-1, 3)
    n = n / np.linalg.norm(n, axis=1, keepdims=True)
    x, y, z = n.T
    P = n.shape[0]
    N = n_modes(L_max)
    Q, dQ, d2Q = _legendre_tables(L_max, z, derivs)

    w = x + 1j * y
    W = [np.ones(P, dtype=complex)]
    for m in range(1, L_max + 1):
        W.append(W[-1] * w)
    czero = np.zeros(P, dtype=complex)

    def Wm(k):
        return W[k] if k >= 0 else czero

    Y = np.empty((N, P))
    G = np.empty((N, P, 3)) if derivs >= 1 else None
    Hs = np.empty((N, P, 3, 3)) if derivs >= 2 else None
    sqrt2 = np.sqrt(2.0)
    for l in range(L_max + 1):
        for m in range(0, l + 1):
            q = Q[l, m]
            s = 1.0 if m == 0 else sqrt2
            base = s * q * W[m]
            if derivs >= 1:
                gx = s * q * m * Wm(m - 1)
                gy = s * q * 1j * m * Wm(m - 1)
                gz = s * dQ[l, m] * W[m]
            if derivs >= 2:
                w2 = m * (m - 1) * Wm(m - 2)
                hxx = s * q * w2
                hxy = s * q * 1j * w2
                hyy = -s * q * w2
                hxz = s * dQ[l, m] * m * Wm(m - 1)
                hyz = s * dQ[l, m] * 1j * m * Wm(m - 1)
                hzz = s * d2Q[l, m] * W[m]
            parts = [(m, np.real)] if m == 0 else [(m, np.real), (-m, np.imag)]
            for mm, part in parts:
                k = mode_index(l, mm)
                Y[k] = part(base)
                if derivs >= 1:
                    G[k, :, 0] = part(gx)
                    G[k, :, 1] = part(gy)
                    G[k, :, 2] = part(gz)
                if derivs >= 2:
                    hh = Hs[k]
                    hh[:, 0, 0] = part(hxx)
                    hh[:, 0, 1] = hh[:, 1, 0] = part(hxy)
                    hh[:, 1, 1] = part(hyy)
                    hh[:, 0, 2] = hh[:, 2, 0] = part(hxz)
                    hh[:, 1, 2] = hh[:, 2, 1] = part(hyz)
                    hh[:, 2, 2] = part(hzz)
    out = [Y]
    if derivs >= 1:
        out.append(G)
    if derivs >= 2:
        out.append(Hs)
    return out[0] if derivs == 0 else tuple(out)


def radial_extension(coeffs, L_max, x, derivs=2):
    """Value and Cartesian derivatives of ``F(x) = f(x/|x|)``.

    ``coeffs`` has shape (..., N) for a stack of angular functions; ``x`` has
    shape (P, 3). Returns ``F`` (..., P), ``dF`` (..., P, 3) and
    ``d2F`` (..., P, 3, 3) up to the requested order.
    """
    x = np.asarray(x, dtype=float).reshape(-1, 3)
    coeffs = np.asarray(coeffs, dtype=float)
    r = np.linalg.norm(x, axis=1)
    n = x / r[:, None]
    tabs = real_sph_harm(L_max, n, derivs=derivs)
    if derivs == 0:
        return np.tensordot(coeffs, tabs, axes=(-1, 0))
    Y = tabs[0]
    F = np.tensordot(coeffs, Y, axes=(-1, 0))
    p = np.tensordot(coeffs, tabs[1], axes=(-1, 0))
    np_ = np.einsum("...pj,pj->...p", p, n)
    Pp = p - np_[..., None] * n
    dF = Pp / r[:, None]
    if derivs == 1:
        return F, dF
    Hp = np.tensordot(coeffs, tabs[2], axes=(-1, 0))
    proj = np.eye(3) - n[:, :, None] * n[:, None, :]
    PHP = np.einsum("pka,...pab,pbi->...pki", proj, Hp, proj)
    d2F = (PHP
           - n[:, :, None] * Pp[..., None, :]
           - Pp[..., :, None] * n[:, None, :]
           - proj * np_[..., None, None]) / (r ** 2)[:, None, None]
    return F, dF, d2F


class HarmonicBasis:
    """Real spherical-harmonic basis with a tensor quadrature grid.

    Immutable after construction. Derivative tables at the nodes (with
    respect to the polar angle ``theta`` and azimuth ``phi``) are computed
    lazily on first use.
    """

    def __init__(self, L_max, nlat=None, nlon=None):
        L_max = int(L_max)
        if L_max < 1:
            raise InvalidArgumentError("L_max must be >= 1")
        nlat = L_max + 1 if nlat is None else int(nlat)
        nlon = 2 * L_max + 2 if nlon is None else int(nlon)
        if nlat < L_max + 1 or nlon < 2 * L_max + 1:
            raise InvalidArgumentError("grid too coarse for exact quadrature")
        self.L_max = L_max
        self.nlat = nlat
        self.nlon = nlon
        u, wu = np.polynomial.legendre.leggauss(nlat)
        phi1 = 2.0 * np.pi * np.arange(nlon) / nlon
        cos_t = np.repeat(u, nlon)
        self.theta = np.arccos(cos_t)
        self.phi = np.tile(phi1, nlat)
        self.weights = np.repeat(wu, nlon) * (2.0 * np.pi / nlon)
        st = np.sqrt(1.0 - cos_t ** 2)
        self.sin_theta = st
        self.cos_theta = cos_t
        self.directions = np.stack(
            [st * np.cos(self.phi), st * np.sin(self.phi), cos_t], axis=1)
        self.degrees, self.orders = mode_degrees_orders(L_max)
        self.eigenvalues = -(self.degrees * (self.degrees + 1.0))
        self.Y = real_sph_harm(L_max, self.directions)
        for arr in (self.theta, self.phi, self.weights, self.directions,
                    self.Y, self.eigenvalues):
            arr.setflags(write=False)

    @property
    def size(self):
        return self.Y.shape[0]

    @property
    def n_nodes(self):
        return self.Y.shape[1]

    def __repr__(self):
        return (f"HarmonicBasis(L_max={self.L_max}, nlat={self.nlat}, "
                f"nlon={self.nlon})")

    @cached_property
    def frame(self):
        """n, n_theta, n_phi, n_thth, n_thph, n_phph at the nodes."""
        st, ct = self.sin_theta, self.cos_theta
        cp, sp = np.cos(self.phi), np.sin(self.phi)
        n = self.directions
        n_t = np.stack([ct * cp, ct * sp, -st], axis=1)
        n_p = np.stack([-st * sp, st * cp, np.zeros_like(st)], axis=1)
        n_tt = -n
        n_tp = np.stack([-ct * sp, ct * cp, np.zeros_like(st)], axis=1)
        n_pp = np.stack([-st * cp, -st * sp, np.zeros_like(st)], axis=1)
        return n, n_t, n_p, n_tt, n_tp, n_pp

    @cached_property
    def derivative_tables(self):
        """(dY, d2Y): shapes (N, P, 2) and (N, P, 2, 2) in (theta, phi)."""
        _, G, H = real_sph_harm(self.L_max, self.directions, derivs=2)
        n, n_t, n_p, n_tt, n_tp, n_pp = self.frame
        dY = np.stack([np.einsum("npj,pj->np", G, n_t),
                       np.einsum("npj,pj->np", G, n_p)], axis=-1)
        tt = np.einsum("pa,npab,pb->np", n_t, H, n_t) + np.einsum("npj,pj->np", G, n_tt)
        tp = np.einsum("pa,npab,pb->np", n_t, H, n_p) + np.einsum("npj,pj->np", G, n_tp)
        pp = np.einsum("pa,npab,pb->np", n_p, H, n_p) + np.einsum("npj,pj->np", G, n_pp)
        d2Y = np.stack([np.stack([tt, tp], -1), np.stack([tp, pp], -1)], -2)
        return dY, d2Y

    def inner(self, a, b):
        """Quadrature inner product of node arrays."""
        return np.sum(self.weights * a * b, axis=-1)

    def integrate(self, values):
        return np.sum(self.weights * np.asarray(values), axis=-1)


def build_basis(L_max, nlat=None, nlon=None):
    """Basis of ``(L_max+1)**2`` real harmonics with an exact quadrature grid.

    The default grid (``L_max+1`` Gauss-Legendre latitudes, ``2*L_max+2``
    longitudes) integrates products of two degree-``L_max`` functions
    exactly. Pass larger ``nlat``/``nlon`` to oversample nonlinear data.
    """
    return HarmonicBasis(L_max, nlat=nlat, nlon=nlon)


@dataclass(frozen=True, eq=False)
class SphereFunction:
    """Scalar field on the unit sphere as a coefficient vector.

    ``coeffs`` may carry leading batch axes, e.g. (3, N) for a vector of
    three angular functions.
    """

    coeffs: np.ndarray
    basis: HarmonicBasis

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape[-1] != self.basis.size:
            raise InvalidArgumentError(
                f"expected {self.basis.size} coefficients, got {c.shape[-1]}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def L_max(self):
        return self.basis.L_max

    def values(self):
        return synthesize(self)

    def mean(self):
        return self.coeffs[..., 0] * Y00

    def evaluate(self, directions):
        Y = real_sph_harm(self.basis.L_max, directions)
        return np.tensordot(self.coeffs, Y, axes=(-1, 0))

    def coefficient(self, l, m):
        return self.coeffs[..., mode_index(l, m)]

    def __add__(self, other):
        return SphereFunction(self.coeffs + other.coeffs, self.basis)

    def __sub__(self, other):
        return SphereFunction(self.coeffs - other.coeffs, self.basis)

    def __mul__(self, scalar):
        return SphereFunction(self.coeffs * scalar, self.basis)

    __rmul__ = __mul__


def analyze(basis, values):
    """Project node values onto the basis by quadrature."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != basis.n_nodes:
        raise InvalidArgumentError(
            f"expected {basis.n_nodes} node values, got {values.shape[-1]}")
    return SphereFunction((values * basis.weights) @ basis.Y.T, basis)


def synthesize(f):
    return np.tensordot(f.coeffs, f.basis.Y, axes=(-1, 0))


def apply_laplacian(f):
    return SphereFunction(f.coeffs * f.basis.eigenvalues, f.basis)


def invert_laplacian(f, rtol=MEAN_ZERO_RTOL):
    """Solve ``Delta_S u = f`` for mean-zero ``u``.

    Raises
    ------
    MeanNotZeroError
        If the mode-0 coefficient of ``f`` exceeds ``rtol`` times the
        coefficient norm. Subtract the mean first.
    """
    c = f.coeffs
    c0 = np.abs(c[..., 0])
    norm = np.linalg.norm(c, axis=-1)
    if np.any(c0 > rtol * np.maximum(norm, np.finfo(float).tiny)):
        raise MeanNotZeroError(f"mean of input is not zero (mode-0 coefficient {c0})")
    out = np.zeros_like(c)
    out[..., 1:] = c[..., 1:] / f.basis.eigenvalues[1:]
    return SphereFunction(out, f.basis)


def resize_coefficients(coeffs, L_new):
    """Truncate or zero-pad coefficients to degree ``L_new``."""
    coeffs = np.asarray(coeffs, dtype=float)
    N = n_modes(L_new)
    if coeffs.shape[-1] >= N:
        return coeffs[..., :N].copy()
    pad = [(0, 0)] * (coeffs.ndim - 1) + [(0, N - coeffs.shape[-1])]
    return np.pad(coeffs, pad)


def sobolev_norm(coeffs, m):
    """Spectral W^{m,2} norm: sqrt(sum (1 + l(l+1))**m * c**2).

    Leading axes of ``coeffs`` are summed over, so a (3, 3, N) tensor of
    angular functions gives a single norm.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    L = int(round(np.sqrt(coeffs.shape[-1]))) - 1
    deg, _ = mode_degrees_orders(L)
    w = (1.0 + deg * (deg + 1.0)) ** m
    return float(np.sqrt(np.sum(w * coeffs ** 2)))
