"""Geometry of radial graphs ``X(theta) = c + rho(theta) xhat(theta)``.

Everything is evaluated at the quadrature nodes of the surface's
:class:`~afcmc.harmonics.HarmonicBasis` in the (theta, phi) chart; the
nodes avoid the poles so the chart is regular there. Sign conventions:
the normal points away from the center and ``A_ab = -<D_a X_b, nu>``, so a
round sphere of radius R has ``H = 2/R``.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import eigh, null_space

from .errors import InvalidArgumentError, NotImmersedError
from .harmonics import Y00, analyze, build_basis, resize_coefficients, SphereFunction

__all__ = [
    "GraphSurface",
    "SurfaceReport",
    "BandDiagnostics",
    "surface_geometry",
    "mean_curvature_nodes",
    "mean_curvature_difference",
    "gauss_map_diagnostics",
    "jacobi_spectrum",
    "identity_integrals",
]

IMMERSION_TOL = 1e-12


class GraphSurface:
    """A sphere-topology surface given as a radial graph about ``center``."""

    def __init__(self, rho, center=(0.0, 0.0, 0.0)):
        if not isinstance(rho, SphereFunction) or rho.coeffs.ndim != 1:
            raise InvalidArgumentError("rho must be a scalar SphereFunction")
        self.rho = rho
        self.center = np.asarray(center, dtype=float).reshape(3)
        if np.any(rho.values() <= 0):
            raise NotImmersedError("rho must be positive at every node")

    @classmethod
    def sphere(cls, R, center=(0.0, 0.0, 0.0), L_max=8, basis=None):
        basis = basis or build_basis(L_max)
        c = np.zeros(basis.size)
        c[0] = R / Y00
        return cls(SphereFunction(c, basis), center)

    @classmethod
    def from_coefficients(cls, coeffs, center=(0.0, 0.0, 0.0), basis=None):
        coeffs = np.asarray(coeffs, dtype=float)
        if basis is None:
            L = int(round(np.sqrt(coeffs.size))) - 1
            basis = build_basis(L)
        return cls(SphereFunction(coeffs, basis), center)

    @property
    def basis(self):
        return self.rho.basis

    @property
    def L_max(self):
        return self.basis.L_max

    @property
    def mean_radius(self):
        return float(self.rho.coeffs[0] * Y00)

    def resampled(self, L_max=None, nlat=None, nlon=None):
        """Same surface on another grid; coefficients are padded or truncated."""
        L = self.L_max if L_max is None else L_max
        basis = build_basis(L, nlat=nlat, nlon=nlon)
        return GraphSurface(SphereFunction(resize_coefficients(self.rho.coeffs, L), basis),
                            self.center)

    def points(self):
        return self.center + self.rho.values()[:, None] * self.basis.directions

    @property
    def r0(self):
        return float(np.linalg.norm(self.points(), axis=1).min())

    @property
    def r1(self):
        return float(np.linalg.norm(self.points(), axis=1).max())

    def embedding(self):
        """``X`` (P, 3), ``X_a`` (P, 2, 3) and ``X_ab`` (P, 2, 2, 3)."""
        return _embedding(self.basis, self.center, self.rho.coeffs)


def _embedding(basis, center, coeffs):
    """Embedding and its chart derivatives; ``coeffs`` may carry batch axes."""
    dY, d2Y = basis.derivative_tables
    n, n_t, n_p, n_tt, n_tp, n_pp = basis.frame
    rho = coeffs @ basis.Y
    drho = np.einsum("...n,npa->...pa", coeffs, dY)
    d2rho = np.einsum("...n,npab->...pab", coeffs, d2Y)
    dn = np.stack([n_t, n_p], axis=1)
    d2n = np.stack([np.stack([n_tt, n_tp], 1), np.stack([n_tp, n_pp], 1)], 1)
    X = center + rho[..., None] * n
    Xa = drho[..., None] * n[:, None, :] + rho[..., None, None] * dn
    Xab = (d2rho[..., None] * n[:, None, None, :]
           + drho[..., :, None, None] * dn[:, None, :, :]
           + drho[..., None, :, None] * dn[:, :, None, :]
           + rho[..., None, None, None] * d2n)
    return X, Xa, Xab


def _inv2(m):
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    inv = np.stack([np.stack([m[..., 1, 1], -m[..., 0, 1]], -1),
                    np.stack([-m[..., 1, 0], m[..., 0, 0]], -1)], -2)
    return inv / det[..., None, None], det


def _euclidean_part(basis, center, coeffs):
    X, Xa, Xab = _embedding(basis, center, coeffs)
    gam = np.einsum("...ai,...bi->...ab", Xa, Xa)
    gam_inv, det = _inv2(gam)
    if np.any(det <= IMMERSION_TOL * np.max(np.abs(det))):
        raise NotImmersedError("induced metric is degenerate at some node")
    cross = np.cross(Xa[..., 0, :], Xa[..., 1, :])
    N = cross / np.linalg.norm(cross, axis=-1, keepdims=True)
    A = -np.einsum("...abi,...i->...ab", Xab, N)
    return X, Xa, Xab, gam, gam_inv, det, N, A


def _metric_part(mv, Xa, Xab, omega):
    g, g_inv, Gam = mv.g, mv.g_inv, mv.christoffel
    gam = np.einsum("...ai,...ij,...bj->...ab", Xa, g, Xa)
    gam_inv, det = _inv2(gam)
    norm = np.sqrt(np.einsum("...i,...ij,...j->...", omega, g_inv, omega))
    nu = np.einsum("...ij,...j->...i", g_inv, omega) / norm[..., None]
    cov = Xab + np.einsum("...ikl,...ak,...bl->...abi", Gam, Xa, Xa)
    A = -np.einsum("...i,...abi->...ab", omega, cov) / norm[..., None, None]
    return gam, gam_inv, det, nu, A, norm


def mean_curvature_nodes(field, basis, center, coeffs):
    """Mean curvature of the graph in ``field`` at the nodes (used by the solver).

    ``coeffs`` may be (N,) or (B, N); the result is (P,) or (B, P).
    """
    X, Xa, Xab, _, gam_inv, _, N, A = _euclidean_part(basis, center, coeffs)
    if field is not None:
        mv = field.evaluate(X, second=False)
        _, gam_inv, _, _, A, _ = _metric_part(mv, Xa, Xab, N)
    return np.einsum("...ab,...ab->...", gam_inv, A)


@dataclass
class SurfaceReport:
    """Per-node geometry in ``g`` and in the Euclidean metric, plus integrals.

    Per-node arrays have leading axis P (nodes). ``weights``/``weights_e``
    are quadrature weights already multiplied by the area densities, so
    ``sum(f * weights)`` integrates ``f dmu``.
    """

    surface: GraphSurface
    X: np.ndarray
    tangents: np.ndarray
    H: np.ndarray
    H_e: np.ndarray
    A: np.ndarray
    A_e: np.ndarray
    traceless: np.ndarray
    traceless_e: np.ndarray
    gamma: np.ndarray
    gamma_e: np.ndarray
    gamma_inv: np.ndarray
    gamma_e_inv: np.ndarray
    K_e: np.ndarray
    nu: np.ndarray
    nu_e: np.ndarray
    weights: np.ndarray
    weights_e: np.ndarray
    norm_A2: np.ndarray
    norm_A2_e: np.ndarray
    norm_traceless2: np.ndarray
    norm_traceless2_e: np.ndarray
    ric_nu: np.ndarray
    metric: object = dc_field(repr=False, default=None)

    @property
    def area(self):
        return float(self.weights.sum())

    @property
    def area_e(self):
        return float(self.weights_e.sum())

    @property
    def willmore(self):
        return float(0.5 * np.sum(self.H_e ** 2 * self.weights_e))

    @property
    def r0(self):
        return float(np.linalg.norm(self.X, axis=1).min())

    @property
    def r1(self):
        return float(np.linalg.norm(self.X, axis=1).max())

    @property
    def diam(self):
        """Largest node-to-node chord (a lower estimate of the diameter)."""
        d = self.X[:, None, :] - self.X[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    @property
    def diam_upper(self):
        return float(2.0 * np.linalg.norm(self.X - self.surface.center, axis=1).max())

    @property
    def mean_H(self):
        return float(np.sum(self.H * self.weights) / self.area)

    def integrate(self, values, euclidean=False):
        w = self.weights_e if euclidean else self.weights
        return np.tensordot(np.asarray(values), w, axes=([-1], [0]))

    def summary(self):
        return {"area": self.area, "area_e": self.area_e, "willmore": self.willmore,
                "mean_H": self.mean_H, "r0": self.r0, "r1": self.r1,
                "diam": self.diam, "diam_upper": self.diam_upper,
                "sup_traceless": float(np.sqrt(self.norm_traceless2.max()))}

    def node_rows(self):
        """(theta, phi, x, y, z, H, H_e, K_e) per node."""
        b = self.surface.basis
        return [tuple(map(float, (t, p, *x, h, he, k)))
                for t, p, x, h, he, k in zip(b.theta, b.phi, self.X, self.H, self.H_e, self.K_e)]


def _norm2(gam_inv, T):
    return np.einsum("pac,pbd,pab,pcd->p", gam_inv, gam_inv, T, T)


def surface_geometry(s, field=None):
    """Fundamental forms, curvatures, normals and area forms of ``s``.

    ``field=None`` means the flat metric.

    Raises
    ------
    NotImmersedError
        If the induced Euclidean metric degenerates at a node.
    """
    basis = s.basis
    X, Xa, Xab, gam_e, gam_e_inv, det_e, N, A_e = _euclidean_part(basis, s.center, s.rho.coeffs)
    H_e = np.einsum("pab,pab->p", gam_e_inv, A_e)
    w_e = basis.weights * np.sqrt(det_e) / basis.sin_theta
    trf_e = A_e - 0.5 * H_e[:, None, None] * gam_e
    K_e = (A_e[:, 0, 0] * A_e[:, 1, 1] - A_e[:, 0, 1] * A_e[:, 1, 0]) / det_e
    if field is None:
        gam, gam_inv, A, H, nu, w, trf = gam_e, gam_e_inv, A_e, H_e, N, w_e, trf_e
        ric = np.zeros(len(H))
        mv = None
    else:
        mv = field.evaluate(X, second=True)
        gam, gam_inv, det, nu, A, _ = _metric_part(mv, Xa, Xab, N)
        H = np.einsum("pab,pab->p", gam_inv, A)
        w = basis.weights * np.sqrt(det) / basis.sin_theta
        trf = A - 0.5 * H[:, None, None] * gam
        ric = np.einsum("pij,pi,pj->p", mv.ricci(), nu, nu)
    return SurfaceReport(
        surface=s, X=X, tangents=Xa, H=H, H_e=H_e, A=A, A_e=A_e,
        traceless=trf, traceless_e=trf_e, gamma=gam, gamma_e=gam_e,
        gamma_inv=gam_inv, gamma_e_inv=gam_e_inv, K_e=K_e, nu=nu, nu_e=N,
        weights=w, weights_e=w_e, norm_A2=_norm2(gam_inv, A),
        norm_A2_e=_norm2(gam_e_inv, A_e), norm_traceless2=_norm2(gam_inv, trf),
        norm_traceless2_e=_norm2(gam_e_inv, trf_e), ric_nu=ric, metric=mv)


@dataclass
class CurvatureDifference:
    direct: np.ndarray
    formula: np.ndarray
    terms: np.ndarray

    @property
    def residual(self):
        return self.direct - self.formula


def mean_curvature_difference(s, field):
    """``H - H_e`` directly and from its first-order expansion in ``h``.

    The expansion is
    ``-A_e^{ab} h_ab + H_e h(nu_e, nu_e)/2 - f^{ij} nu^l d_i h_jl + f^{ij} nu^l d_l h_ij / 2``
    with ``f^{ij}`` the Euclidean tangential projector; ``terms`` holds the
    four pieces with shape (4, P).
    """
    rep = surface_geometry(s, field)
    mv = rep.metric
    P = len(rep.H)
    if mv is None:
        z = np.zeros(P)
        return CurvatureDifference(z, z.copy(), np.zeros((4, P)))
    h = mv.g - np.eye(3)
    dh = mv.dg
    Xa, gi, v = rep.tangents, rep.gamma_e_inv, rep.nu_e
    f = np.einsum("pab,pai,pbj->pij", gi, Xa, Xa)
    A_up = np.einsum("pac,pbd,pcd->pab", gi, gi, rep.A_e)
    h_ab = np.einsum("pai,pij,pbj->pab", Xa, h, Xa)
    t1 = -np.einsum("pab,pab->p", A_up, h_ab)
    t2 = 0.5 * rep.H_e * np.einsum("pi,pij,pj->p", v, h, v)
    t3 = -np.einsum("pij,pl,pijl->p", f, v, dh)
    t4 = 0.5 * np.einsum("pij,pl,plij->p", f, v, dh)
    terms = np.stack([t1, t2, t3, t4])
    return CurvatureDifference(rep.H - rep.H_e, terms.sum(0), terms)


def _surface_gradient_norm(basis, gam_inv, values):
    coeffs = analyze(basis, values).coeffs
    dY, _ = basis.derivative_tables
    d = np.einsum("n,npa->pa", coeffs, dY)
    return np.sqrt(np.maximum(np.einsum("pab,pa,pb->p", gam_inv, d, d), 0.0))


@dataclass
class BandDiagnostics:
    """Per radial band ``r0 e^{kL} <= |x| < r0 e^{(k+1)L}``."""

    edges: np.ndarray
    energy: np.ndarray
    tension_sup: np.ndarray
    hopf_l1: np.ndarray
    node_counts: np.ndarray
    notes: list = dc_field(default_factory=list)

    def rows(self):
        return [(float(a), float(b), float(e), float(t), float(h), int(c))
                for a, b, e, t, h, c in zip(self.edges[:-1], self.edges[1:], self.energy,
                                            self.tension_sup, self.hopf_l1, self.node_counts)]

    def profile_is_end_peaked(self, rtol=1e-9):
        """True if the maximum sits at an end band and no interior band is a
        strict local maximum of the energy profile (empty bands ignored)."""
        e = self.energy[self.node_counts > 0]
        if e.size < 3:
            return True
        k = int(np.argmax(e))
        if 0 < k < e.size - 1:
            return False
        tol = rtol * e.max()
        return not any(e[i] > e[i - 1] + tol and e[i] > e[i + 1] + tol
                       for i in range(1, e.size - 1))


def gauss_map_diagnostics(s, field=None, band_width=1.0, edges=None):
    """Dirichlet energy, rescaled tension and Hopf L1 norm of the Euclidean
    Gauss map, binned over radial bands of width ``band_width`` e-folds.

    The energy density is ``|A_e|^2``; the tension is ``r^2 |grad H_e|``; the
    Hopf density is ``sqrt(2) |trace-free part of A_e A_e|``.
    """
    rep = surface_geometry(s, field)
    r = np.linalg.norm(rep.X, axis=1)
    notes = []
    if edges is None:
        span = np.log(rep.r1 / rep.r0) / band_width
        nb = max(1, int(np.floor(span + 1e-9)))
        edges = rep.r0 * np.exp(band_width * np.arange(nb + 1))
        if nb == 1 and span < 1:
            edges[-1] = rep.r1
        elif span - nb > 1e-9:
            notes.append(f"partial outer band [{edges[-1]:.6g}, {rep.r1:.6g}] dropped")
    edges = np.asarray(edges, dtype=float)
    idx = np.clip(np.searchsorted(edges, r, side="right") - 1, 0, len(edges) - 2)
    inside = (r >= edges[0] * (1 - 1e-12)) & (r < edges[-1] * (1 + 1e-12))
    gi = rep.gamma_e_inv
    tension = r ** 2 * _surface_gradient_norm(s.basis, gi, rep.H_e)
    III = np.einsum("pac,pcd,pdb->pab", rep.A_e, gi, rep.A_e)
    tr = np.einsum("pab,pab->p", gi, III)
    III0 = III - 0.5 * tr[:, None, None] * rep.gamma_e
    hopf = np.sqrt(2.0 * np.maximum(_norm2(gi, III0), 0.0))
    nb = len(edges) - 1
    energy, tsup, hl1, counts = (np.zeros(nb) for _ in range(4))
    for k in range(nb):
        m = inside & (idx == k)
        counts[k] = m.sum()
        if not m.any():
            notes.append(f"band {k} [{edges[k]:.6g}, {edges[k + 1]:.6g}) has no nodes; skipped")
            continue
        energy[k] = np.sum(rep.norm_A2_e[m] * rep.weights_e[m])
        tsup[k] = tension[m].max()
        hl1[k] = np.sum(hopf[m] * rep.weights_e[m])
    return BandDiagnostics(edges, energy, tsup, hl1, counts.astype(int), notes)


def jacobi_spectrum(s, field=None, n_eigs=4, L_max=None):
    """Lowest eigenvalues of ``-Delta - (|A|^2 + Ric(nu, nu))`` on functions
    with ``oint f dmu = 0``.

    Galerkin discretization over the real harmonics up to ``L_max``
    (default: the surface's) with the ``dmu`` mass matrix.
    """
    if n_eigs < 1:
        raise InvalidArgumentError("n_eigs must be >= 1")
    rep = surface_geometry(s, field)
    b = s.basis
    N = (min(L_max, b.L_max) + 1) ** 2 if L_max is not None else b.size
    Y = b.Y[:N]
    dY = b.derivative_tables[0][:N]
    w = rep.weights
    grad = np.einsum("npa,pab,mpb->nm", dY * w[None, :, None], rep.gamma_inv, dY)
    V = rep.norm_A2 + rep.ric_nu
    K = grad - (Y * (V * w)) @ Y.T
    M = (Y * w) @ Y.T
    Z = null_space((Y @ w)[None, :])
    ev = eigh(Z.T @ K @ Z, Z.T @ M @ Z, eigvals_only=True)
    return ev[:n_eigs]


def identity_integrals(rep, a_values=(2, 3)):
    """Integral identities and inequalities evaluated on one surface.

    Keys: ``divergence`` (oint 2 <x, nu_e>/r^3 dmu_e, 8 pi when the origin
    is enclosed), ``gauss_bonnet`` (oint K_e dmu_e), ``H2`` (oint H^2 dmu),
    ``traceless2`` (oint |A°|^2 dmu), ``stability`` (oint |A|^2 + Ric(nu,nu)),
    ``position_moment`` / ``position_bound`` (oint <X,nu> r^-4 dmu against
    H^2 |Sigma|), ``balancing`` (oint (H - H_e) nu_e dmu_e per axis),
    ``radial_moments`` (per exponent a: identity defect and its r^{-a-1} scale).
    """
    X = rep.X
    r = np.linalg.norm(X, axis=1)
    w, we = rep.weights, rep.weights_e
    Hbar = rep.mean_H
    if rep.metric is not None:
        Xnu = np.einsum("pi,pij,pj->p", X, rep.metric.g, rep.nu)
    else:
        Xnu = np.einsum("pi,pi->p", X, rep.nu)
    out = {
        "divergence": float(np.sum(2.0 * np.einsum("pi,pi->p", X, rep.nu_e) / r ** 3 * we)),
        "gauss_bonnet": float(np.sum(rep.K_e * we)),
        "H2": float(np.sum(rep.H ** 2 * w)),
        "traceless2": float(np.sum(rep.norm_traceless2 * w)),
        "stability": float(np.sum((rep.norm_A2 + rep.ric_nu) * w)),
        "position_moment": float(np.sum(Xnu * r ** -4 * w)),
        "position_bound": float(Hbar ** 2 * rep.area),
        "balancing": np.einsum("p,pi->i", (rep.H - rep.H_e) * we, rep.nu_e),
    }
    lem = {}
    for a in a_values:
        lhs = ((2 - a) * np.sum(r ** -a * w) + a * np.sum(Xnu ** 2 * r ** (-a - 2) * w)
               - Hbar * np.sum(Xnu * r ** -a * w))
        lem[a] = (float(lhs), float(np.sum(r ** (-a - 1) * w)))
    out["radial_moments"] = lem
    return out
