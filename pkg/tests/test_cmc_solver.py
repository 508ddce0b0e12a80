import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from afcmc.adm import center_of_mass
from afcmc.cmc_solver import (build_foliation, fit_power_law, schwarzschild_sphere_H,
                              solve_cmc, verify_leaf)
from afcmc.errors import DivergedError, InvalidArgumentError, ResolutionWarning
from afcmc.harmonics import build_basis, mode_degrees_orders
from afcmc.metric import flat, perturbed_isotropic, schwarzschild
from afcmc.surface import GraphSurface, surface_geometry


def test_flat_round_sphere():
    sol = solve_cmc(flat(), (1.0, -2.0, 0.5), 5.0)
    assert sol.residual <= 1e-12
    assert_allclose(sol.H, 0.4, rtol=1e-14)
    assert np.abs(sol.surface.rho.coeffs[1:]).max() == 0


def test_flat_perturbed_start_returns_round_sphere():
    b = build_basis(6)
    start = GraphSurface.sphere(5.0, basis=b)
    c = start.rho.coeffs.copy()
    l, _ = mode_degrees_orders(6)
    c[l == 2] += 0.05
    with warnings.catch_warnings():
        warnings.simplefilter("error", ResolutionWarning)
        sol = solve_cmc(flat(), (0, 0, 0), 5.0, L_max=6, initial=GraphSurface(start.rho.__class__(c, b)))
    assert sol.residual <= 1e-10
    assert_allclose(sol.H, 0.4, rtol=1e-9)
    # degree 1 is the free translation kernel
    assert np.abs(sol.surface.rho.coeffs[l >= 2]).max() <= 1e-9


def test_schwarzschild_leaf_round(oracles):
    for m, R, H in oracles["schwarzschild_sphere_H"]:
        sol = solve_cmc(schwarzschild(m), (0, 0, 0), R)
        c = sol.surface.rho.coeffs
        assert np.abs(c[1:]).max() <= 1e-8 * c[0]
        assert abs(sol.H / H - 1) <= 1e-8
        assert_allclose(schwarzschild_sphere_H(R, m), H, rtol=1e-14)


def test_generic_leaf_graph_size_is_bounded():
    f = perturbed_isotropic(0.1)
    C = center_of_mass(f).center
    dev = []
    for R in (100.0, 400.0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ResolutionWarning)
            sol = solve_cmc(f, C, R, L_max=8)
        assert sol.galerkin_residual <= 1e-10
        dev.append(np.abs(sol.surface.rho.values() - R).max())
    assert max(dev) < 10.0 and dev[1] < 1.5 * dev[0]


def test_nodal_residual_warning_when_underresolved():
    f = perturbed_isotropic(0.3)
    with pytest.warns(ResolutionWarning):
        sol = solve_cmc(f, (0, 0, 0), 100.0, L_max=4)
    assert "nodal-residual-above-tol" in sol.flags


def test_resolution_certificate_at_double_nodes():
    sol = solve_cmc(schwarzschild(1.0), (0, 0, 0), 200.0, L_max=8)
    fine = sol.surface.resampled(16)
    rep = surface_geometry(fine, schwarzschild(1.0))
    assert np.abs(rep.H - sol.H).max() <= 1e-10 * sol.H


def test_warm_start_consistency():
    f = perturbed_isotropic(0.05)
    C = center_of_mass(f).center
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        direct = solve_cmc(f, C, 200.0, L_max=8)
        half = solve_cmc(f, C, 100.0, L_max=8)
        cont = solve_cmc(f, C, 200.0, L_max=8, initial=half.surface)
    assert np.abs(direct.surface.rho.values() - cont.surface.rho.values()).max() <= 10 * 1e-10 * 200


def test_parity_symmetric_metric_has_even_leaf():
    # example51 plus a schwarzschild tail are both x -> -x symmetric
    sol = solve_cmc(schwarzschild(2.0), (0, 0, 0), 150.0, L_max=8)
    l, _ = mode_degrees_orders(8)
    assert np.abs(sol.surface.rho.coeffs[l % 2 == 1]).max() <= 1e-10 * 150


def test_argument_errors():
    with pytest.raises(InvalidArgumentError):
        solve_cmc(schwarzschild(1.0), (0, 0, 0), 5.0)
    with pytest.raises(InvalidArgumentError):
        solve_cmc(flat(), (0, 0, 0), 5.0, L_max=1)
    with pytest.raises(InvalidArgumentError):
        build_foliation(flat(), [100, 50])


def test_divergence_reported():
    with pytest.raises(DivergedError):
        solve_cmc(perturbed_isotropic(0.3), (0, 0, 0), 100.0, max_iter=0)


def test_flat_foliation_exact():
    fol = build_foliation(flat(), [50.0, 100.0, 200.0])
    assert fol.complete and not fol.flags
    for leaf in fol.leaves:
        assert leaf.H * leaf.R / 2 == pytest.approx(1.0, abs=1e-14)
    assert "zero-mass-origin-center" not in fol.flags


def test_schwarzschild_foliation_rate_and_nesting():
    sched = [100.0 * 2 ** k for k in range(5)]
    fol = build_foliation(schwarzschild(1.0), sched)
    assert fol.complete and not fol.flags
    R = np.array([leaf.surface.mean_radius for leaf in fol.leaves])
    H = np.array([leaf.H for leaf in fol.leaves])
    p, _ = fit_power_law(R, H * R / 2 - 1)
    assert 0.8 <= p <= 1.2
    assert np.all(np.diff(H) < 0) and fol.min_gap() > 0
    for leaf in fol.leaves:
        assert leaf.verification.ok, leaf.verification.failures()
        assert leaf.verification.values["min_jacobi"] > 0
    rows = fol.summary_rows()
    assert [r[0] for r in rows] == sched and all(r[-1] == "ok" for r in rows)


def test_foliation_partial_on_failure():
    fol = build_foliation(perturbed_isotropic(0.3), [100.0, 200.0], max_iter=0, verify=False)
    assert not fol.complete and fol.leaves[0].error
    assert any(f.startswith("diverged") for f in fol.flags)


def test_verify_round_sphere_closed_forms():
    R = 30.0
    s = GraphSurface.sphere(R, L_max=8)
    ver = verify_leaf(s, flat())
    v = ver.values
    assert_allclose(v["position_moment"], 4 * np.pi / R, rtol=1e-12)
    assert_allclose(v["position_bound"], 16 * np.pi, rtol=1e-12)
    assert_allclose(v["H2"], 16 * np.pi, rtol=1e-12)
    assert_allclose(v["divergence"], 8 * np.pi, rtol=1e-12)
    assert ver.ok
