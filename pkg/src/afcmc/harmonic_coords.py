"""Asymptotically harmonic coordinates for ``g = delta + h1(theta)/r + Q``.

The leading ``r^-2`` part of ``Delta_g x^k`` is extracted numerically by a
fit in ``1/r``, expanded in spherical harmonics, and cancelled by

    y^k = x^k + lambda0^k / (2 sqrt(pi)) * log r + g1_k(theta),

where ``g1_k`` inverts the sphere Laplacian on the mean-free part of the
source. :class:`TransformedMetric` gives the pulled-back metric in ``y``.
"""

from dataclasses import dataclass, field as dc_field
import warnings

import numpy as np

from .errors import InvalidArgumentError, OutOfDomainError, ResolutionWarning
from .harmonics import (Y00, analyze, build_basis, invert_laplacian, mode_index,
                        radial_extension, resize_coefficients, sobolev_norm,
                        SphereFunction)
from .metric import MetricValue, christoffel_symbols

__all__ = [
    "SourceTerm",
    "CoordinateMap",
    "TransformedMetric",
    "EllipticityReport",
    "source_term",
    "build_harmonic_map",
    "transform_metric",
    "ellipticity_check",
    "harmonic_residual",
    "cube_directions",
    "h1_distance",
    "DEFAULT_SOURCE_RADII",
]

DEFAULT_SOURCE_RADII = tuple(1e3 * 2 ** k for k in range(7))


def cube_directions():
    """The 26 unit vectors towards the neighbours of a cube cell."""
    pts = [(i, j, k) for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)
           if (i, j, k) != (0, 0, 0)]
    d = np.array(pts, dtype=float)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


@dataclass
class SourceTerm:
    """``S_k(theta)``, the limit of ``-r^2 Delta_g x^k`` along rays."""

    S: SphereFunction
    fit_residual: np.ndarray
    radii: np.ndarray
    warnings: list = dc_field(default_factory=list)

    @property
    def lambda0(self):
        return self.S.coeffs[:, 0].copy()


def source_term(field, r_samples=DEFAULT_SOURCE_RADII, L_max=None, fit_order=2):
    """Fit ``-r^2 Delta_g x^k = S_k + b_1/r + ... + b_p/r^p`` along every node ray.

    ``fit_order`` is clipped to ``len(r_samples) - 1``. A poor-separation
    warning is attached when the fit residual exceeds 10% of ``max|S_k|``.
    """
    r = np.asarray(r_samples, dtype=float)
    if r.ndim != 1 or r.size < 2:
        raise InvalidArgumentError("need at least 2 sample radii")
    if r.min() < field.inner_radius:
        raise InvalidArgumentError("sample radius inside inner_radius")
    L = L_max if L_max is not None else field.L_h + 2
    basis = build_basis(L)
    n = basis.directions
    pts = r[:, None, None] * n[None]
    lap = field.evaluate(pts, second=False).coordinate_laplacian()   # (nr, P, 3)
    vals = -(r ** 2)[:, None, None] * lap
    order = min(fit_order, r.size - 1)
    A = np.stack([r ** (-j) for j in range(order + 1)], axis=1)
    B = vals.reshape(r.size, -1)
    coef, *_ = np.linalg.lstsq(A, B, rcond=None)
    resid = np.abs(A @ coef - B).max(axis=0).reshape(n.shape[0], 3)
    S_nodes = coef[0].reshape(n.shape[0], 3).T                           # (3, P)
    S = analyze(basis, S_nodes)
    notes = []
    scale = np.abs(S_nodes).max(axis=1)
    for k in range(3):
        if resid[:, k].max() > 0.1 * scale[k] and resid[:, k].max() > 1e-14:
            msg = f"poor separation of r^-2 term for axis {k}: residual {resid[:, k].max():.3g}"
            notes.append(msg)
            warnings.warn(msg, ResolutionWarning, stacklevel=2)
    return SourceTerm(S, resid, r, notes)


class CoordinateMap:
    """``y(x) = x + lambda0/(2 sqrt(pi)) log|x| + g1(x/|x|)``."""

    def __init__(self, lambda0, angular, inner_radius=0.0, notes=()):
        self.lambda0 = np.asarray(lambda0, dtype=float)
        self.angular = angular
        self.notes = list(notes)
        self._c = self.lambda0 / (2.0 * np.sqrt(np.pi))
        bound = np.abs(self._c).sum() + self._gradient_bound()
        self.threshold = max(float(inner_radius), 4.0 * bound)

    def _gradient_bound(self):
        fine = build_basis(max(2 * self.angular.L_max, 8))
        _, dF = radial_extension(self.angular.coeffs, self.angular.L_max,
                                 fine.directions, derivs=1)
        return float(np.sqrt((dF ** 2).sum(axis=(0, 2))).max())

    @property
    def L_max(self):
        return self.angular.L_max

    def xhat_coefficients(self):
        """B with degree-1 part of ``g1_k`` equal to ``sum_j B[k, j] xhat_j``."""
        c = np.sqrt(3.0 / (4.0 * np.pi))
        a = self.angular.coeffs
        return c * np.stack([a[:, mode_index(1, 1)], a[:, mode_index(1, -1)],
                             a[:, mode_index(1, 0)]], axis=1)

    def check_domain(self, x):
        r = np.linalg.norm(np.asarray(x).reshape(-1, 3), axis=1)
        if np.any(r < self.threshold * (1 - 1e-12)):
            raise OutOfDomainError(
                f"radius {r.min():.6g} below invertibility threshold {self.threshold:.6g}")

    def derivatives(self, x):
        """``y``, Jacobian ``J[k, i] = dy^k/dx^i`` and ``Hess[k, i, j]``."""
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        r = np.linalg.norm(x, axis=1)
        F, dF, d2F = radial_extension(self.angular.coeffs, self.L_max, x, derivs=2)
        c = self._c
        y = x + np.log(r)[:, None] * c + F.T
        xr2 = x / (r ** 2)[:, None]
        J = np.eye(3) + c[None, :, None] * xr2[:, None, :] + np.moveaxis(dF, 0, 1)
        eye = np.eye(3)
        hlog = (eye / (r ** 2)[:, None, None]
                - 2.0 * x[:, :, None] * x[:, None, :] / (r ** 4)[:, None, None])
        Hs = c[None, :, None, None] * hlog[:, None] + np.moveaxis(d2F, 0, 1)
        return y, J, Hs

    def forward(self, x):
        return self.derivatives(x)[0]

    def jacobian(self, x):
        return self.derivatives(x)[1]

    def inverse(self, y, tol=1e-14, max_iter=100):
        y = np.asarray(y, dtype=float).reshape(-1, 3)
        x = y.copy()
        for _ in range(max_iter):
            yx = self.forward(x)
            step = yx - y
            x = x - step
            if np.max(np.abs(step)) <= tol * np.max(np.abs(y)):
                break
        return x


def build_harmonic_map(field, r_samples=DEFAULT_SOURCE_RADII, L_max=None, fit_order=2):
    src = source_term(field, r_samples, L_max=L_max, fit_order=fit_order)
    c = src.S.coeffs.copy()
    c[:, 0] = 0.0
    angular = invert_laplacian(SphereFunction(c, src.S.basis))
    return CoordinateMap(src.lambda0, angular, inner_radius=field.inner_radius,
                         notes=src.warnings)


def harmonic_residual(cmap, field, x):
    """``Delta_g y^k`` at points ``x`` (P, 3) in the original coordinates."""
    x = np.asarray(x, dtype=float).reshape(-1, 3)
    mv = field.evaluate(x, second=False)
    _, J, Hs = cmap.derivatives(x)
    return (np.einsum("pij,pkij->pk", mv.g_inv, Hs)
            - np.einsum("pij,pmij,pkm->pk", mv.g_inv, mv.christoffel, J))


class TransformedMetric:
    """``g~_ij = g(d/dy^i, d/dy^j)`` with derivatives in ``y``.

    ``evaluate(y)`` takes points in the new coordinates (so ADM routines work
    unchanged); ``evaluate_at_x`` takes original-coordinate points.
    """

    def __init__(self, cmap, field):
        self.map = cmap
        self.field = field
        self.inner_radius = 2.0 * cmap.threshold

    @property
    def L_h(self):
        return max(self.field.L_h, self.map.L_max) + 1

    def evaluate_at_x(self, x, second=False):
        if second:
            raise InvalidArgumentError("second derivatives are not provided")
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        self.map.check_domain(x)
        mv = self.field.evaluate(x, second=False)
        _, J, Hs = self.map.derivatives(x)
        K = np.linalg.inv(J)                                   # K[a, i] = dx^a/dy^i
        gt = np.einsum("pai,pab,pbj->pij", K, mv.g, K)
        dK = -np.einsum("pak,pkbc,pbi->pcai", K, Hs, K)        # d_c K[a, i]
        dgx = (np.einsum("pcai,pab,pbj->pcij", dK, mv.g, K)
               + np.einsum("pai,pcab,pbj->pcij", K, mv.dg, K)
               + np.einsum("pai,pab,pcbj->pcij", K, mv.g, dK))
        dgy = np.einsum("pcm,pcij->pmij", K, dgx)
        g_inv = np.linalg.inv(gt)
        return MetricValue(gt, g_inv, dgy, christoffel_symbols(g_inv, dgy))

    def evaluate(self, y, second=False):
        y = np.asarray(y, dtype=float)
        shape = y.shape[:-1]
        x = self.map.inverse(y.reshape(-1, 3))
        mv = self.evaluate_at_x(x, second=second)
        rs = lambda a: a.reshape(shape + a.shape[1:])
        return MetricValue(rs(mv.g), rs(mv.g_inv), rs(mv.dg), rs(mv.christoffel))

    def h_tilde(self, x):
        """``g~ - delta`` at original-coordinate points."""
        return self.evaluate_at_x(x).g - np.eye(3)

    def closed_form(self, x):
        """First-order ``h~`` from ``h``, ``lambda0`` and ``g1``; error O(r^-2)."""
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        r = np.linalg.norm(x, axis=1)
        h = self.field.evaluate(x, second=False).h
        n = x / r[:, None]
        lam = self.map.lambda0
        t1 = (lam[None, :, None] * n[:, None, :] + lam[None, None, :] * n[:, :, None])
        t1 /= (2.0 * np.sqrt(np.pi) * r)[:, None, None]
        _, dF = radial_extension(self.map.angular.coeffs, self.map.L_max, x, derivs=1)
        G = np.moveaxis(dF, 0, 1) * r[:, None, None]           # G[p, i, j] = g1_i,j
        return h - t1 - (G + np.swapaxes(G, 1, 2)) / r[:, None, None]


def transform_metric(cmap, field):
    return TransformedMetric(cmap, field)


def h1_distance(field, m=3, scale=1.0):
    """Spectral ``W^{m,2}`` norm of ``h1 - scale * delta``."""
    c = np.array(field.h1)
    for i in range(3):
        c[i, i, 0] -= scale / Y00
    return sobolev_norm(c, m)


@dataclass
class EllipticityReport:
    min_eigenvalue: float
    max_eigenvalue: float
    per_radius: dict
    margin: float
    elliptic: bool
    w_distance: float
    sobolev_order: int

    def summary(self):
        return {"min_eigenvalue": self.min_eigenvalue,
                "max_eigenvalue": self.max_eigenvalue,
                "margin": self.margin, "elliptic": self.elliptic,
                f"W{self.sobolev_order},2_distance": self.w_distance}


def ellipticity_check(tm, r_samples=(1e2, 1e3, 1e4), directions=None, margin=0.05,
                      sobolev_order=3, scale=1.0):
    """Extreme eigenvalues of ``|y| h~_ij`` over a sample set.

    The verdict is elliptic iff the smallest eigenvalue is at least
    ``margin``. The measured ``W^{m,2}`` distance of ``h1`` from
    ``scale * delta`` is reported alongside; no threshold is tied to it.
    """
    d = cube_directions() if directions is None else np.asarray(directions, float)
    d = d / np.linalg.norm(d, axis=1, keepdims=True)
    lo, hi = np.inf, -np.inf
    per = {}
    for r in r_samples:
        x = r * d
        y = tm.map.forward(x)
        ev = np.linalg.eigvalsh(np.linalg.norm(y, axis=1)[:, None, None] * tm.h_tilde(x))
        per[float(r)] = (float(ev.min()), float(ev.max()))
        lo, hi = min(lo, ev.min()), max(hi, ev.max())
    return EllipticityReport(float(lo), float(hi), per, margin, bool(lo >= margin),
                             h1_distance(tm.field, sobolev_order, scale), sobolev_order)
