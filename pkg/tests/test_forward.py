from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pencilspec import entire
from pencilspec.coefficients import CoefficientPair, glue
from pencilspec.errors import InputError
from pencilspec.forward import (
    Chain,
    Subspectrum,
    boundary_S,
    char_fn,
    eigenvalues,
    find_zeros,
    integrate,
    reduce_mod1,
    wronskian,
)

PI = np.pi


def rho(lam, a):
    return np.sqrt(lam * lam - 2 * a * lam + 0j)


def test_free_integration_lambda_one(free_pair):
    ev = integrate(free_pair, 1.0, 0.0, 1.0)
    assert abs(ev.y) < 1e-9 and abs(ev.y1 + 1) < 1e-9


def test_free_integration_lambda_half(free_pair):
    ev = integrate(free_pair, 0.5, 0.0, 1.0)
    assert abs(ev.y - 2) < 1e-9 and abs(ev.y1) < 1e-9


def test_constant_p_closed_form(unit_pair):
    r = np.sqrt(3.0)
    ev = integrate(unit_pair, 3.0, 0.0, 1.0)
    assert ev.y == pytest.approx(np.sin(PI * r) / r, abs=1e-10)
    assert ev.y1 == pytest.approx(np.cos(PI * r), abs=1e-10)


@pytest.mark.parametrize("n", [-3, -1, 1, 2, 5])
def test_free_boundary_at_integers(free_pair, n):
    ev = boundary_S(free_pair, float(n))
    assert abs(ev.y) < 1e-10
    assert ev.y1 == pytest.approx((-1) ** n, abs=1e-10)


def test_free_boundary_at_zero(free_pair):
    assert boundary_S(free_pair, 0.0).y == pytest.approx(PI, abs=1e-10)


def test_constant_p_boundary_closed_form(unit_pair):
    r = rho(2.5, 1.0)
    assert boundary_S(unit_pair, 2.5).y == pytest.approx(np.sin(PI * r) / r, abs=1e-10)


def test_backward_integration_matches_closed_form():
    right = CoefficientPair.from_functions(1.0, 0.0, interval=(PI, 2 * PI))
    lam = np.array([0.7, 2.0 + 0.5j, 4.2])
    ev = integrate(right, lam, 0.0, 1.0, "backward")
    r = rho(lam, 1.0)
    assert np.allclose(ev.y, -np.sin(PI * r) / r, atol=1e-10)
    assert np.allclose(ev.y1, np.cos(PI * r), atol=1e-10)


def test_wronskian_examples(free_pair):
    assert abs(wronskian(free_pair, 1.0) - 1) < 1e-10
    stepped = CoefficientPair.constant(1.0, 0.0, jumps=[(PI / 2, 1.0)])
    assert abs(wronskian(stepped, 2 + 1j) - 1) < 1e-8
    assert abs(wronskian(stepped, 0.0) - 1) < 1e-10


def test_char_fn_examples(free_pair):
    assert abs(char_fn(free_pair, 0.0, 1.0, 3.0)) < 1e-10
    assert abs(char_fn(free_pair, 1.0, 0.0, 2.5)) < 1e-10
    expected = np.cos(PI / 4) + np.sin(PI / 4) / 0.25
    assert char_fn(free_pair, 1.0, 1.0, 0.25) == pytest.approx(expected, abs=1e-10)


def test_derivative_mode_matches_finite_difference(cos_pair):
    lam, h = 1.3 + 0.4j, 1e-5
    ev = integrate(cos_pair, lam, 0.0, 1.0, derivative=True)
    plus, minus = integrate(cos_pair, lam + h, 0.0, 1.0), integrate(cos_pair, lam - h, 0.0, 1.0)
    assert ev.dy == pytest.approx((plus.y - minus.y) / (2 * h), abs=1e-8)
    assert ev.dy1 == pytest.approx((plus.y1 - minus.y1) / (2 * h), abs=1e-8)


def test_unknown_direction(free_pair):
    with pytest.raises(InputError):
        integrate(free_pair, 1.0, direction="sideways")


def test_dirichlet_free_eigenvalues(free_pair):
    sub = eigenvalues(free_pair, 0.0, 1.0, (0.5, 5.5, -1, 1))
    assert np.allclose(sub.values, [1, 2, 3, 4, 5], atol=1e-9)
    assert all(m == 1 for *_x, m in sub.groups())


def test_constant_p_eigenvalue(unit_pair):
    sub = eigenvalues(unit_pair, 0.0, 1.0, (2.0, 3.0, -1, 1))
    assert sub.values.size == 1
    assert sub.values[0] == pytest.approx(1 + np.sqrt(2), abs=1e-8)


def test_wide_box_full_search_has_no_spurious_roots(unit_pair):
    # strip cuts land close to some roots; the count and every root must still be exact
    sub = eigenvalues(unit_pair, 0.0, 1.0, (-38.5, 38.5, -3, 3))
    ks = np.array([k for k in range(-39, 39) if k and abs(1 + np.sign(k) * np.sqrt(1 + k * k)) < 38.5])
    want = 1 + np.sign(ks) * np.sqrt(1 + ks * ks.astype(float))
    assert sub.values.size == want.size
    assert np.allclose(np.sort(sub.values.real), np.sort(want), atol=1e-9)


def test_cosine_boundary_zeros(free_pair):
    sub = eigenvalues(free_pair, 1.0, 0.0, (0.0, 3.0, -1, 1))
    assert np.allclose(sub.values, [0.5, 1.5, 2.5], atol=1e-9)


def test_hinted_search_agrees_with_full_search(cos_pair):
    box = (-6.5, 6.5, -2, 2)
    full = eigenvalues(cos_pair, 0.0, 1.0, box)
    ks = np.array([k for k in range(-6, 7) if k])
    hinted = eigenvalues(cos_pair, 0.0, 1.0, box, hint_asymptotics=ks.astype(complex))
    assert np.allclose(full.values, hinted.values, atol=1e-10)


def test_find_zeros_reports_multiplicity():
    def f(z):
        return (z - 1) ** 2 * (z + 2), 2 * (z - 1) * (z + 2) + (z - 1) ** 2

    roots = find_zeros(f, (-3, 3, -1, 1), cell_width=0.7)
    assert [m for _, m in roots] == [1, 2]
    assert roots[0][0] == pytest.approx(-2)
    assert roots[1][0] == pytest.approx(1, abs=1e-6)


def test_chain_matches_glued_pair_for_continuous_p():
    left = CoefficientPair.from_functions(lambda x: 0.2 * x, lambda x: np.sin(x))
    right = CoefficientPair.from_functions(lambda x: 0.2 * x, 0.4, interval=(PI, 2 * PI))
    lam = np.array([0.3, 1.7 + 0.2j, 3.1])
    a = integrate(Chain((left, right)), lam, 0.0, 1.0, derivative=True)
    b = integrate(glue(left, right), lam, 0.0, 1.0, derivative=True)
    assert np.allclose(a.y, b.y, atol=1e-9)
    assert np.allclose(a.dy, b.dy, atol=1e-9)
    # the glued pair carries sigma shifted by -0.4 on the right, so compare y'
    assert np.allclose(a.y1 + 0.4 * a.y, b.y1, atol=1e-9)
    back = integrate(Chain((left, right)), lam, a.y, a.y1, "backward")
    assert np.allclose(back.y, 0, atol=1e-9) and np.allclose(back.y1, 1, atol=1e-9)


def test_chain_rejects_gaps():
    with pytest.raises(InputError):
        Chain((CoefficientPair.constant(), CoefficientPair.constant(interval=(4.0, 5.0))))


def test_subspectrum_adjacency_and_groups():
    with pytest.raises(InputError):
        Subspectrum([1, 2, 1])
    sub = Subspectrum([1, 1, 2, 3, 3, 3], 1.25)
    assert sub.groups() == [(0, 1, 2), (2, 2, 1), (3, 3, 3)]
    assert sub.omega0_mod1 == pytest.approx(0.25)
    back = Subspectrum.from_json(sub.to_json())
    assert np.array_equal(back.values, sub.values) and back.omega0_mod1 == sub.omega0_mod1


def test_reduce_mod1_keeps_imaginary_part():
    assert reduce_mod1(-0.25 + 0.5j) == pytest.approx(0.75 + 0.5j)


# -- properties -----------------------------------------------------------------

_coef = st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=3)


def _random_pair(a, b, step):
    jumps = [(step[0], complex(step[1], step[2]))] if step is not None else []
    return CoefficientPair.from_functions(
        lambda x: a[0] + a[1] * np.cos(x) + 1j * a[2] * np.sin(2 * x),
        lambda x: b[0] * x + b[1] * np.cos(3 * x) + 1j * b[2],
        size=129,
        jumps=jumps,
    )


@given(
    a=_coef,
    b=_coef,
    step=st.one_of(st.none(), st.tuples(st.floats(0.3, 2.8), st.floats(-1, 1), st.floats(-1, 1))),
    lam=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False).filter(lambda z: abs(z.imag) <= 3),
)
def test_wronskian_identity(a, b, step, lam):
    assert abs(wronskian(_random_pair(a, b, step), lam) - 1) < 1e-8


@given(a=_coef, b=_coef, center=st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_boundary_values_are_entire(a, b, center):
    cp = _random_pair(a, b, None)
    nodes = 48
    ring = center + 1.0 * np.exp(2j * np.pi * np.arange(nodes) / nodes)
    inner = center + 0.3 * np.exp(1j * np.array([0.1, 1.9, 4.0]))
    vals = boundary_S(cp, ring).y
    interp = [np.mean(vals * (ring - center) / (ring - z)) for z in inner]
    assert np.allclose(interp, boundary_S(cp, inner).y, atol=1e-6)


def test_eigenvalue_asymptotics(cos_pair):
    ks = np.arange(1, 31)
    sub = eigenvalues(cos_pair, 0.0, 1.0, (0.5, 30.5, -1, 1), hint_asymptotics=ks.astype(complex))
    tail = np.abs(sub.values - ks - cos_pair.mean_p())
    assert tail[-1] < 1e-2
    assert np.all(np.diff(tail[5::5]) < 0)


@given(h=st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_dirichlet_eigenvalues_ignore_sigma_constant(h):
    cp = CoefficientPair.from_functions(lambda x: 0.3 * np.cos(x), lambda x: 0.2 * np.sin(x), size=129)
    lam = np.array([1.2, 2.5 + 0.3j])
    assert np.allclose(boundary_S(cp.with_sigma_shift(h), lam).y, boundary_S(cp, lam).y, atol=1e-12)


def test_as_expr_rejects_strings():
    with pytest.raises(TypeError):
        entire.as_expr("x")
