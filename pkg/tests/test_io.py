import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from afcmc import io as afio
from afcmc.errors import InvalidArgumentError
from afcmc.harmonics import n_modes
from afcmc.metric import CallableRemainder, example51, from_h1, perturbed_isotropic, schwarzschild
from afcmc.surface import GraphSurface

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 6).flatmap(lambda L: st.lists(finite, min_size=n_modes(L), max_size=n_modes(L))))
def test_coefficients_round_trip_byte_identical(vals):
    text = afio.format_coefficients(vals)
    back = afio.parse_coefficients(text)
    assert np.array_equal(back, np.asarray(vals)) or np.allclose(back, vals, equal_nan=True)
    assert afio.format_coefficients(back) == text


def test_coefficient_file_layout(tmp_path):
    p = tmp_path / "c.coef"
    afio.write_coefficients(p, [1.5, 0.0, -2.0, 0.25])
    assert p.read_text().splitlines() == ["L_max 1", "0 0 1.5", "1 -1 0.0", "1 0 -2.0", "1 1 0.25"]
    assert_allclose(afio.read_coefficients(p), [1.5, 0.0, -2.0, 0.25])


@pytest.mark.parametrize("text", ["", "L_max 1\n0 0 1\n", "L_max 1\n0 0 1\n1 0 2\n1 -1 3\n1 1 4\n",
                                  "L 1\n", "L_max 0\n0 0 1\nextra\n"])
def test_bad_coefficient_files(text):
    with pytest.raises(InvalidArgumentError):
        afio.parse_coefficients(text)


@pytest.mark.parametrize("field", [example51(), schwarzschild(1.5, center=(0.5, 0, -1)),
                                   perturbed_isotropic(0.2)], ids=["ex51", "schw", "pert"])
def test_metric_spec_round_trip(field, tmp_path):
    p = tmp_path / "m.spec"
    afio.write_metric_spec(p, field)
    back = afio.read_metric_spec(p)
    assert afio.format_metric_spec(back) == p.read_text()
    x = np.array([[40.0, 13.0, -22.0]])
    assert_allclose(back.evaluate(x).g, field.evaluate(x).g, rtol=1e-15)


def _tail(x):
    r = np.linalg.norm(x, axis=-1)
    return (1.0 / r ** 2)[..., None, None] * np.eye(3)


def test_metric_spec_callable(tmp_path):
    f = from_h1(example51().h1, CallableRemainder(_tail))
    text = afio.format_metric_spec(f)
    assert "user-supplied-callable" in text and "test_io:_tail" in text


def test_metric_spec_missing_block():
    text = afio.format_metric_spec(example51())
    cut = text[: text.index("block h33")]
    with pytest.raises(InvalidArgumentError):
        afio.parse_metric_spec(cut)


def test_surface_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    s = GraphSurface.sphere(7.0, center=(0.1, -0.2, 1 / 3), L_max=5)
    c = s.rho.coeffs + 1e-3 * rng.standard_normal(s.rho.coeffs.size)
    s = GraphSurface(s.rho.__class__(c, s.basis), s.center)
    p = tmp_path / "s.surf"
    afio.write_surface(p, s)
    first = p.read_bytes()
    back = afio.read_surface(p)
    afio.write_surface(p, back)
    assert p.read_bytes() == first
    assert np.array_equal(back.rho.coeffs, s.rho.coeffs)
    assert np.array_equal(back.center, s.center)


def test_table_format(tmp_path):
    p = tmp_path / "t.csv"
    afio.write_table(p, ["a", "b"], [(0.1, "x"), (2.0, "y;z")])
    assert p.read_text() == "a,b\n0.1,x\n2.0,y;z\n"


def test_builtin_parsing():
    assert afio.parse_builtin("schwarzschild,m=2,center=1;0;0") == (
        "schwarzschild", {"m": 2, "center": [1.0, 0.0, 0.0]})
    f = afio.load_metric("builtin:schwarzschild,m=2,center=1;0;0")
    assert f.q.m == 2.0
    with pytest.raises(InvalidArgumentError):
        afio.load_metric("builtin:nope")
    with pytest.raises(InvalidArgumentError):
        afio.load_metric("builtin:flat,bogus=1")
