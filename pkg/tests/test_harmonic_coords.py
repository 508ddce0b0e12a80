import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from afcmc.adm import adm_mass
from afcmc.errors import OutOfDomainError, ResolutionWarning
from afcmc.harmonic_coords import (build_harmonic_map, cube_directions, ellipticity_check,
                                   h1_distance, harmonic_residual, source_term,
                                   transform_metric)
from afcmc.metric import (CallableRemainder, coordinate_laplacian, example51, flat, from_h1,
                          perturbed_isotropic)

RADII = (1e2, 1e3, 1e4)


@pytest.fixture(scope="module")
def ex51():
    f = example51()
    cmap = build_harmonic_map(f)
    return f, cmap, transform_metric(cmap, f)


@pytest.fixture(scope="module")
def pert():
    f = perturbed_isotropic(0.1, degree=4, seed=11)
    cmap = build_harmonic_map(f)
    return f, cmap, transform_metric(cmap, f)


def test_cube_directions():
    d = cube_directions()
    assert d.shape == (26, 3)
    assert_allclose(np.linalg.norm(d, axis=1), 1.0)


def test_flat_source_is_zero():
    src = source_term(flat(inner_radius=1.0))
    assert np.abs(src.S.coeffs).max() == 0.0


def test_example51_source_is_half_xhat():
    src = source_term(example51())
    b = src.S.basis
    assert np.abs(src.S.values() - 0.5 * b.directions.T).max() <= 1e-6
    assert not src.warnings


def test_source_resolution_refinement():
    f = perturbed_isotropic(0.1, degree=4, seed=11)
    a = source_term(f, L_max=6).S.coeffs
    b = source_term(f, L_max=12).S.coeffs
    assert np.abs(b[:, : a.shape[1]] - a).max() < 1e-8
    assert np.abs(b[:, a.shape[1]:]).max() < 1e-8


def test_poor_separation_warns():
    # an oscillating r^-2 remainder has no expansion in powers of 1/r
    def wiggle(x):
        r = np.linalg.norm(x, axis=-1)
        return (np.cos(r) / r ** 2)[..., None, None] * np.eye(3)

    f = from_h1(example51().h1, CallableRemainder(wiggle))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        src = source_term(f, r_samples=(100.0, 130.0, 170.0, 220.0))
    assert src.warnings
    assert any(issubclass(w.category, ResolutionWarning) for w in caught)


def test_flat_map_is_identity():
    cmap = build_harmonic_map(flat(inner_radius=1.0))
    assert np.all(cmap.lambda0 == 0) and np.all(cmap.angular.coeffs == 0)
    x = np.array([[50.0, -3.0, 2.0]])
    assert_allclose(cmap.forward(x), x)


def test_example51_map_coefficients(ex51):
    _, cmap, _ = ex51
    assert np.abs(cmap.lambda0).max() < 1e-12
    assert np.abs(cmap.xhat_coefficients() + 0.25 * np.eye(3)).max() < 1e-8
    assert np.abs(cmap.angular.coeffs[:, 0]).max() == 0.0
    x = 300.0 * cube_directions()
    r = np.linalg.norm(x, axis=1, keepdims=True)
    assert np.abs(cmap.forward(x) - (x - 0.25 * x / r)).max() < 1e-8


def test_jacobian_matches_finite_differences(pert):
    _, cmap, _ = pert
    x = np.array([[120.0, -40.0, 75.0]])
    _, J, Hs = cmap.derivatives(x)
    h = 1e-3
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        _, Jp, _ = cmap.derivatives(x + e)
        _, Jm, _ = cmap.derivatives(x - e)
        yp, ym = cmap.forward(x + e), cmap.forward(x - e)
        assert_allclose(J[0, :, k], (yp - ym)[0] / (2 * h), atol=1e-9)
        assert_allclose(Hs[0, :, :, k], (Jp - Jm)[0] / (2 * h), atol=1e-9)


def test_inverse_round_trip(pert):
    _, cmap, _ = pert
    x = 500.0 * cube_directions()
    assert_allclose(cmap.inverse(cmap.forward(x)), x, atol=1e-10)


@pytest.mark.parametrize("which", ["ex51", "pert"])
def test_harmonicity_gain(which, ex51, pert):
    f, cmap, _ = ex51 if which == "ex51" else pert
    d = cube_directions()
    gy = [np.abs(harmonic_residual(cmap, f, r * d)).max() * r ** 3 for r in RADII]
    gx = [np.abs(coordinate_laplacian(f, r * d)).max() * r ** 3 for r in RADII]
    assert max(gy) <= 2 * min(gy) + 1e-6
    assert_allclose(np.array(gx[1:]) / np.array(gx[:-1]), 10.0, rtol=0.05)


def test_flat_transformed_metric_vanishes():
    f = flat(inner_radius=1.0)
    tm = transform_metric(build_harmonic_map(f), f)
    assert np.abs(tm.h_tilde(50.0 * cube_directions())).max() == 0.0


def test_example51_transformed_metric(ex51):
    _, _, tm = ex51
    d = cube_directions()
    for r in RADII:
        x = r * d
        ref = 1.5 * np.eye(3) / r - x[:, :, None] * x[:, None, :] / (2 * r ** 3)
        assert np.abs(tm.h_tilde(x) - ref).max() * r ** 2 <= 1.0


def test_closed_form_agrees_to_second_order(pert):
    _, _, tm = pert
    d = cube_directions()
    dev = [np.abs(tm.h_tilde(r * d) - tm.closed_form(r * d)).max() * r ** 2 for r in RADII]
    assert max(dev) <= 2 * min(dev) + 1e-9


def test_transformed_metric_decays(pert):
    _, _, tm = pert
    d = cube_directions()
    s = [np.abs(tm.h_tilde(r * d)).max() * r for r in RADII]
    assert max(s) <= 1.5 * min(s)


def test_example51_trace_and_eigenvalues(ex51):
    _, _, tm = ex51
    x = 1e3 * cube_directions()
    ht = tm.h_tilde(x)
    y = tm.map.forward(x)
    ry = np.linalg.norm(y, axis=1)
    assert np.abs(ry * np.trace(ht, axis1=1, axis2=2) - 4.0).max() <= 1e-2
    ev = np.linalg.eigvalsh(ry[:, None, None] * ht)
    assert np.abs(ev - [1.0, 1.5, 1.5]).max() <= 1e-2


def test_trace_matches_eight_times_mass(pert):
    f, _, tm = pert
    m = adm_mass(f).mass
    x = 1e3 * cube_directions()
    r = np.linalg.norm(tm.map.forward(x), axis=1)
    tr = r * np.trace(tm.h_tilde(x), axis1=1, axis2=2)
    assert np.abs(tr / (8 * m) - 1).max() <= 0.05


def test_mass_invariant_under_harmonization(pert):
    f, _, tm = pert
    a = adm_mass(f, [1e3 * 2 ** k for k in range(5)])
    b = adm_mass(tm, [1e3 * 2 ** k for k in range(5)])
    assert abs(a.mass - b.mass) <= 2 * max(a.error_estimate, b.error_estimate, 1e-6)


def test_below_threshold_is_out_of_domain(ex51):
    _, _, tm = ex51
    with pytest.raises(OutOfDomainError):
        tm.evaluate_at_x(np.array([[1.0, 0.0, 0.0]]))


def test_ellipticity_verdicts(ex51):
    _, _, tm = ex51
    rep = ellipticity_check(tm)
    assert rep.elliptic and abs(rep.min_eigenvalue - 1) < 0.01 and abs(rep.max_eigenvalue - 1.5) < 0.01
    f = flat(inner_radius=1.0)
    rep0 = ellipticity_check(transform_metric(build_harmonic_map(f), f))
    assert not rep0.elliptic and rep0.max_eigenvalue == 0.0


def test_small_perturbation_stays_elliptic(pert):
    _, _, tm = pert
    rep = ellipticity_check(tm)
    assert rep.elliptic
    assert rep.w_distance > 0


def test_h1_distance_zero_for_isotropic():
    assert h1_distance(example51()) == 0.0
    assert h1_distance(perturbed_isotropic(0.0, scale=2.0), scale=2.0) == 0.0
