"""Constant-mean-curvature radial graphs and foliations.

The unknowns are the harmonic coefficients of ``rho`` plus the scalar
``H``. The equations are the Galerkin projections of ``H(rho) - H`` onto
every basis mode together with ``mean(rho) = R``. A damped Newton
iteration with a forward-difference Jacobian and least-squares steps (the
flat case is translation-degenerate) solves the system.
"""

from dataclasses import dataclass, field as dc_field
import warnings

import numpy as np

from .adm import center_of_mass
from .errors import (AFError, DivergedError, InvalidArgumentError, MassZeroError,
                     ResolutionWarning)
from .harmonics import Y00, build_basis, mode_index, SphereFunction
from .surface import (GraphSurface, identity_integrals, jacobi_spectrum,
                      mean_curvature_nodes, surface_geometry)

__all__ = [
    "CMCSolution",
    "LeafRecord",
    "Foliation",
    "LeafVerification",
    "solve_cmc",
    "build_foliation",
    "verify_leaf",
    "schwarzschild_sphere_H",
    "fit_power_law",
    "DEFAULT_TOL",
    "DEFAULT_MAX_ITER",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50
FD_REL_STEP = 1e-6


def schwarzschild_sphere_H(R, m):
    """Mean curvature of the coordinate sphere ``|x| = R`` in isotropic Schwarzschild."""
    psi = 1.0 + m / (2.0 * R)
    return 2.0 / (R * psi ** 2) * (1.0 - m / (R * psi))


def fit_power_law(x, y):
    """Fit ``|y| = C x^(-p)`` in log-log space; returns ``(p, C)``."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.abs(np.asarray(y, float)))
    slope, icpt = np.polyfit(lx, ly, 1)
    return float(-slope), float(np.exp(icpt))


@dataclass
class CMCSolution:
    surface: GraphSurface
    H: float
    residual: float
    galerkin_residual: float
    iterations: int
    flags: list = dc_field(default_factory=list)

    @property
    def converged(self):
        return "not-converged" not in self.flags


def _translation_rows(basis):
    return [mode_index(1, m) for m in (-1, 0, 1)]


def _residual(field, basis, center, R, u, pinned, pin_values):
    """Scaled equations for one or a batch (B, N+1) of unknown vectors."""
    coeffs = u[..., :-1] * R
    H = u[..., -1] / R
    Hn = mean_curvature_nodes(field, basis, center, coeffs)
    F = ((Hn - H[..., None]) * R * basis.weights) @ basis.Y.T
    if pinned:
        F[..., pinned] = u[..., pinned] - pin_values
    F = np.concatenate([F, (u[..., :1] * Y00 - 1.0)], axis=-1)
    return F, Hn, H


def solve_cmc(field, center=(0.0, 0.0, 0.0), R=100.0, L_max=8, tol=DEFAULT_TOL,
              max_iter=DEFAULT_MAX_ITER, initial=None, H0=None, pin_translations=False,
              basis=None):
    """Solve ``H(rho) = const`` with ``mean(rho) = R`` about ``center``.

    Parameters
    ----------
    initial : GraphSurface or None
        Warm start; its coefficients are padded/truncated and rescaled to mean R.
    pin_translations : bool
        Replace the three degree-1 equations by ``rho_{1m} = initial value``.
        The result is then CMC only modulo degree-1 modes; this gives
        off-center diagnostic leaves where true CMC spheres do not exist.

    Returns
    -------
    CMCSolution
        ``residual`` is the nodal ``sup|H(rho) - H| / |H|``.

    Raises
    ------
    DivergedError
        No convergence within ``max_iter`` or immersion lost twice in a row.
    """
    center = np.asarray(center, dtype=float).reshape(3)
    if R <= 0 or tol <= 0:
        raise InvalidArgumentError("R and tol must be positive")
    if L_max < 2:
        raise InvalidArgumentError("L_max must be >= 2 for the solver")
    inner = getattr(field, "inner_radius", 0.0) if field is not None else 0.0
    if R * (1 - 1e-3) < inner + np.linalg.norm(center):
        raise InvalidArgumentError(
            f"R={R:g} too small for inner_radius {inner:g} and |center| {np.linalg.norm(center):g}")
    basis = basis or build_basis(L_max)
    c0 = np.zeros(basis.size)
    if initial is not None:
        ic = np.zeros(basis.size)
        k = min(basis.size, initial.rho.coeffs.size)
        ic[:k] = initial.rho.coeffs[:k]
        c0 = ic * (R / (ic[0] * Y00))
    else:
        c0[0] = R / Y00
    pinned = _translation_rows(basis) if pin_translations else []
    pin_values = (c0 / R)[pinned] if pinned else None
    u = np.append(c0 / R, 0.0)
    if H0 is None:
        u[-1] = np.mean(mean_curvature_nodes(field, basis, center, c0)) * R
    else:
        u[-1] = H0 * R

    def F_of(v):
        return _residual(field, basis, center, R, v, pinned, pin_values)

    F, Hn, H = F_of(u)
    it = 0
    flags = []
    while True:
        gres = float(np.max(np.abs(F)))
        nodal = float(np.max(np.abs(Hn - H)) / abs(H))
        target = tol * abs(H) * R
        if gres <= target or nodal <= tol:
            break
        if it >= max_iter:
            raise DivergedError(f"no convergence after {max_iter} iterations "
                                f"(residual {gres:.3e})", residual=gres)
        V = u[None, :] + FD_REL_STEP * np.eye(u.size)
        J = ((F_of(V)[0] - F) / FD_REL_STEP).T
        step = np.linalg.lstsq(J, -F, rcond=1e-12)[0]
        t, fails = 1.0, 0
        while True:
            try:
                Fn, Hnn, Hn_ = F_of(u + t * step)
                if np.max(np.abs(Fn)) < gres or t < 1e-4:
                    break
            except AFError as err:
                fails += 1
                if fails > 8:
                    raise DivergedError(f"immersion lost: {err}", residual=gres) from err
            t *= 0.5
        if np.max(np.abs(Fn)) >= gres and np.max(np.abs(Fn)) > 10 * target:
            raise DivergedError(f"line search stalled (residual {gres:.3e})", residual=gres)
        stalled = np.max(np.abs(Fn)) >= gres
        u, F, Hn, H = u + t * step, Fn, Hnn, Hn_
        it += 1
        if stalled:
            flags.append("stagnated-near-tolerance")
            break
    gres = float(np.max(np.abs(F)))
    nodal = float(np.max(np.abs(Hn - H)) / abs(H))
    if nodal > tol:
        flags.append("nodal-residual-above-tol")
        warnings.warn(f"nodal residual {nodal:.3e} exceeds tol {tol:.1e} at L_max={basis.L_max}; "
                      "increase L_max", ResolutionWarning, stacklevel=2)
    if pin_translations:
        flags.append("translations-pinned")
    s = GraphSurface(SphereFunction(u[:-1] * R, basis), center)
    return CMCSolution(s, float(H), nodal, gres / (abs(H) * R), it, flags)


@dataclass
class LeafVerification:
    """Per-leaf checks; ``values`` hold measured numbers, ``passed`` verdicts."""

    values: dict
    passed: dict

    @property
    def ok(self):
        return all(self.passed.values())

    def failures(self):
        return [k for k, v in self.passed.items() if not v]


def verify_leaf(sol, field, tol=DEFAULT_TOL, n_eigs=4, identity_rtol=1e-6):
    """Run the identity and inequality battery on a converged leaf.

    Pinned numbers (8 pi, 4 pi, 16 pi) are checked with ``identity_rtol``;
    inequalities with existential constants report the fitted ratio only.
    """
    s = sol.surface if isinstance(sol, CMCSolution) else sol
    H = sol.H if isinstance(sol, CMCSolution) else None
    rep = surface_geometry(s, field)
    H = rep.mean_H if H is None else H
    ids = identity_integrals(rep)
    eig = jacobi_spectrum(s, field, n_eigs)
    r0 = rep.r0
    enclosed = np.linalg.norm(s.center) < r0
    v = {
        "divergence": ids["divergence"],
        "gauss_bonnet": ids["gauss_bonnet"],
        "H2": ids["H2"],
        "H2_defect_times_r0": (ids["H2"] - 16 * np.pi) * r0,
        "traceless2_times_r0": ids["traceless2"] * r0,
        "stability": ids["stability"],
        "position_moment": ids["position_moment"],
        "position_bound": ids["position_bound"],
        "balancing": [float(b) for b in ids["balancing"]],
        "balancing_bound": 10 * tol * abs(H) * rep.area,
        "radial_moments": {a: {"defect": d, "scale": sc, "ratio": abs(d) / sc}
                    for a, (d, sc) in ids["radial_moments"].items()},
        "min_jacobi": float(eig[0]),
        "jacobi": [float(e) for e in eig],
        "r0": r0,
        "r1": rep.r1,
        "r1_over_r0": rep.r1 / r0,
        "diam_H": (rep.diam * H, rep.diam_upper * H),
        "willmore": rep.willmore,
    }
    p = {
        "divergence": (not enclosed) or abs(v["divergence"] / (8 * np.pi) - 1) <= identity_rtol,
        "gauss_bonnet": abs(v["gauss_bonnet"] / (4 * np.pi) - 1) <= identity_rtol,
        "stability": v["stability"] <= 8 * np.pi + 1e-6,
        "position": v["position_moment"] <= v["position_bound"],
        "balancing": max(abs(b) for b in v["balancing"]) <= v["balancing_bound"],
        "jacobi": v["min_jacobi"] >= -tol * abs(H) ** 2,
    }
    return LeafVerification(v, p)


@dataclass
class LeafRecord:
    R: float
    solution: CMCSolution = None
    verification: LeafVerification = None
    error: str = None

    @property
    def H(self):
        return self.solution.H if self.solution else float("nan")

    @property
    def surface(self):
        return self.solution.surface if self.solution else None


@dataclass
class Foliation:
    leaves: list
    center: np.ndarray
    flags: list = dc_field(default_factory=list)

    @property
    def complete(self):
        return all(leaf.error is None for leaf in self.leaves)

    def converged_leaves(self):
        return [leaf for leaf in self.leaves if leaf.error is None]

    def summary_rows(self):
        """(R, H, r0, r1, willmore, min_jacobi, flags) per leaf."""
        rows = []
        for leaf in self.leaves:
            if leaf.error is not None:
                rows.append((leaf.R, float("nan"), float("nan"), float("nan"),
                             float("nan"), float("nan"), "error:" + leaf.error.replace(",", ";")))
                continue
            v = leaf.verification.values
            fl = list(leaf.solution.flags) + ["fail:" + f for f in leaf.verification.failures()]
            rows.append((leaf.R, leaf.H, v["r0"], v["r1"], v["willmore"], v["min_jacobi"],
                         ";".join(fl) if fl else "ok"))
        return rows

    def min_gap(self):
        """Smallest ``rho_{k+1} - rho_k`` over nodes of a common fine grid."""
        good = self.converged_leaves()
        if len(good) < 2:
            return float("inf")
        b = build_basis(max(leaf.surface.L_max for leaf in good) * 2)
        vals = [leaf.surface.rho.evaluate(b.directions) for leaf in good]
        return float(min(np.min(b - a) for a, b in zip(vals[:-1], vals[1:])))


def build_foliation(field, schedule, center=None, L_max=8, tol=DEFAULT_TOL,
                    max_iter=DEFAULT_MAX_ITER, verify=True, n_eigs=4):
    """Solve one leaf per radius with warm starts and check the ordering.

    ``center=None`` uses the center of mass when the mass is positive and
    the origin otherwise. A leaf that fails to converge is recorded with an
    error marker and the construction stops there.
    """
    schedule = np.asarray(schedule, dtype=float)
    if schedule.ndim != 1 or schedule.size < 1 or np.any(np.diff(schedule) <= 0):
        raise InvalidArgumentError("schedule must be strictly increasing")
    flags = []
    if center is None:
        center = np.zeros(3)
        if field is not None and field.has_h1:
            try:
                rep = center_of_mass(field)
                if rep.mass > 0:
                    center = np.asarray(rep.center, dtype=float)
                else:
                    flags.append("non-positive-mass-origin-center")
            except MassZeroError:
                flags.append("zero-mass-origin-center")
    center = np.asarray(center, dtype=float).reshape(3)
    leaves, prev = [], None
    for R in schedule:
        try:
            sol = solve_cmc(field, center, R, L_max=L_max, tol=tol, max_iter=max_iter,
                            initial=prev)
        except AFError as err:
            leaves.append(LeafRecord(float(R), error=str(err)))
            flags.append(f"diverged-at-R={R:g}")
            break
        ver = verify_leaf(sol, field, tol=tol, n_eigs=n_eigs) if verify else None
        leaves.append(LeafRecord(float(R), sol, ver))
        prev = sol.surface
    fol = Foliation(leaves, center, flags)
    Hs = [leaf.H for leaf in fol.converged_leaves()]
    if np.any(np.diff(Hs) >= 0):
        fol.flags.append("H-not-strictly-decreasing")
    if fol.min_gap() <= 0:
        fol.flags.append("leaves-not-nested")
    return fol
