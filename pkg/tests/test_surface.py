import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from afcmc.errors import InvalidArgumentError, NotImmersedError
from afcmc.harmonics import SphereFunction, build_basis
from afcmc.metric import example51, flat, perturbed_isotropic, schwarzschild
from afcmc.surface import (GraphSurface, gauss_map_diagnostics, identity_integrals,
                           jacobi_spectrum, mean_curvature_difference, surface_geometry)


def bumpy(R=50.0, amp=0.05, L=10, seed=0, center=(0.0, 0.0, 0.0)):
    b = build_basis(L)
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(b.size) * amp * R / (1 + b.degrees) ** 2
    c[0] = R / (0.5 / np.sqrt(np.pi))
    return GraphSurface(SphereFunction(c, b), center)


@pytest.mark.parametrize("R", [0.5, 5.0, 300.0])
def test_round_sphere_flat(R):
    rep = surface_geometry(GraphSurface.sphere(R, center=(0.3, -1.0, 2.0), L_max=16))
    assert_allclose(rep.H_e, 2 / R, rtol=1e-12)
    assert_allclose(rep.H, rep.H_e)
    assert_allclose(np.sum(rep.H_e ** 2 * rep.weights_e), 16 * np.pi, rtol=1e-12)
    assert_allclose(rep.willmore, 8 * np.pi, rtol=1e-12)
    assert rep.norm_traceless2.max() < 1e-20 / R ** 2
    assert_allclose(rep.area_e, 4 * np.pi * R ** 2, rtol=1e-12)


def test_schwarzschild_coordinate_sphere(oracles):
    for m, R, H in oracles["schwarzschild_sphere_H"]:
        rep = surface_geometry(GraphSurface.sphere(R, L_max=6), schwarzschild(m))
        assert np.abs(rep.H / H - 1).max() <= 1e-8


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 0.15))
def test_pointwise_identities_on_bumpy_graphs(seed, amp):
    s = bumpy(amp=amp, seed=seed)
    rep = surface_geometry(s, perturbed_isotropic(0.2))
    tr = np.einsum("pab,pab->p", rep.gamma_inv, rep.traceless)
    assert np.abs(tr).max() <= 1e-10 * np.abs(rep.H).max()
    euler = 0.25 * rep.H_e ** 2 - 0.5 * rep.norm_traceless2_e
    assert np.abs(rep.K_e - euler).max() <= 1e-9 * np.abs(rep.K_e).max()


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_gauss_bonnet_and_divergence(seed):
    s = bumpy(amp=0.08, seed=seed, L=8).resampled(nlat=40, nlon=80)
    rep = surface_geometry(s)
    ids = identity_integrals(rep)
    assert_allclose(ids["gauss_bonnet"], 4 * np.pi, rtol=1e-6)
    assert_allclose(ids["divergence"], 8 * np.pi, rtol=1e-6)


def test_divergence_vanishes_when_origin_outside():
    s = GraphSurface.sphere(3.0, center=(10.0, 0, 0), L_max=30)
    assert abs(identity_integrals(surface_geometry(s))["divergence"]) < 1e-6


def test_not_immersed():
    b = build_basis(4)
    c = np.zeros(b.size)
    c[0] = -1.0
    with pytest.raises(NotImmersedError):
        GraphSurface(SphereFunction(c, b))


def test_flat_difference_vanishes():
    d = mean_curvature_difference(GraphSurface.sphere(20.0), None)
    assert np.all(d.direct == 0) and np.all(d.formula == 0)
    d = mean_curvature_difference(bumpy(), flat())
    assert np.abs(d.direct).max() < 1e-15 and np.all(d.formula == 0)


def test_four_term_formula_residual_is_third_order():
    scaled = []
    for R in (1e2, 1e3, 1e4):
        d = mean_curvature_difference(GraphSurface.sphere(R), example51())
        scaled.append(np.abs(d.residual).max() * R ** 3)
        assert np.abs(d.terms).max() * R ** 2 > 0.5
    assert max(scaled) <= 1.5 * min(scaled)


def test_four_term_formula_generic():
    f = perturbed_isotropic(0.2)
    scaled = []
    for R in (1e2, 1e3, 1e4):
        d = mean_curvature_difference(bumpy(R=R, amp=0.02), f)
        scaled.append(np.abs(d.residual).max() * R ** 3)
    assert max(scaled) <= 3 * min(scaled)


def test_jacobi_round_sphere(oracles):
    ref = np.array(oracles["round_sphere_jacobi_R2"])
    for R in (1.0, 7.0, 250.0):
        ev = jacobi_spectrum(GraphSurface.sphere(R, L_max=8), flat(), n_eigs=ref.size)
        assert np.abs(ev * R ** 2 - ref).max() <= 1e-6


def test_jacobi_mean_zero_uses_g_volume():
    s = GraphSurface.sphere(100.0, L_max=6)
    ev = jacobi_spectrum(s, schwarzschild(1.0), n_eigs=1)
    assert ev[0] > 0


def test_jacobi_rejects_bad_count():
    with pytest.raises(InvalidArgumentError):
        jacobi_spectrum(GraphSurface.sphere(1.0), None, n_eigs=0)


def test_gauss_round_sphere_zero_tension_and_hopf():
    diag = gauss_map_diagnostics(GraphSurface.sphere(50.0, center=(30.0, 0, 0), L_max=12))
    assert diag.tension_sup.max() <= 1e-10
    assert diag.hopf_l1.max() <= 1e-10


def test_gauss_energy_counts_sphere_area():
    s = GraphSurface.sphere(50.0, L_max=12)
    diag = gauss_map_diagnostics(s)
    assert len(diag.energy) == 1
    assert_allclose(diag.energy[0], 8 * np.pi, rtol=1e-12)


def test_empty_band_is_noted():
    s = GraphSurface.sphere(50.0, L_max=8)
    diag = gauss_map_diagnostics(s, edges=[1.0, 2.0, 60.0])
    assert diag.node_counts[0] == 0 and diag.notes


def test_report_scalars():
    R = 10.0
    rep = surface_geometry(GraphSurface.sphere(R, center=(1, 2, 3), L_max=10))
    assert rep.diam <= 2 * R + 1e-9 and rep.diam_upper == pytest.approx(2 * R)
    assert rep.diam > 1.9 * R
    assert rep.r0 == pytest.approx(R - np.sqrt(14), rel=1e-2)
