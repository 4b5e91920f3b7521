from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pencilspec.coefficients import CoefficientPair
from pencilspec.errors import ConditionError, InputError, NumericalError
from pencilspec.forward import Subspectrum, boundary_S
from pencilspec.halfinverse import (
    BoundaryFunctions,
    HalfProblem,
    composite_spectrum,
    default_indices,
    estimate_omega0_mod1,
    phi_at_midpoint,
    solve_half,
    verify,
)
from pencilspec.recovery import RecoveryConfig

PI = np.pi
RIGHT = (PI, 2 * PI)


@pytest.fixture(scope="module")
def free_right():
    return CoefficientPair.from_functions(0.0, 0.0, interval=RIGHT)


def _mod1_distance(a, b):
    d = (a - b).real
    return abs(d - round(d)) + abs((a - b).imag)


# -- phi -----------------------------------------------------------------------------

def test_phi_free_half(free_right):
    phi, phi1 = phi_at_midpoint(free_right, np.array([1.0, 0.5]))
    assert phi == pytest.approx([0.0, -2.0], abs=1e-12)
    assert phi1 == pytest.approx([-1.0, 0.0], abs=1e-12)


@pytest.mark.parametrize("lam", [0.7, 3.2 + 0.4j, -2.5])
def test_phi_constant_p_closed_form(lam):
    right = CoefficientPair.from_functions(1.0, 0.0, interval=RIGHT)
    rho = np.sqrt(lam * lam - 2 * lam + 0j)
    phi, phi1 = phi_at_midpoint(right, lam)
    assert phi == pytest.approx(-np.sin(PI * rho) / rho, rel=1e-10)
    assert phi1 == pytest.approx(np.cos(PI * rho), rel=1e-10, abs=1e-12)


def test_boundary_functions_are_registered_only_inside_context(free_right):
    with BoundaryFunctions(free_right) as (f1, f2):
        assert f1(0.5) == pytest.approx(2.0)
        assert f2(1.0) == pytest.approx(-1.0)
    with pytest.raises(InputError):
        f1(0.5)


# -- omega0 mod 1 --------------------------------------------------------------------

def _labels(K):
    return np.array([k for k in range(-K, K + 1) if k])


def test_omega0_free_spectrum():
    ks = _labels(40)
    assert estimate_omega0_mod1(Subspectrum(ks / 2), 0.0) == pytest.approx(0.0, abs=1e-14)


def test_omega0_constant_p_everywhere():
    ks = _labels(40)
    mu = 1 + np.sign(ks) * np.sqrt(1 + ks**2 / 4)
    assert _mod1_distance(estimate_omega0_mod1(Subspectrum(mu), 1.0), 0.0) < 1e-12


def test_omega0_constant_p_on_left_only(free_right):
    left = CoefficientPair.from_functions(1.0, 0.0)
    sub = composite_spectrum(left, free_right, 40)
    assert _mod1_distance(estimate_omega0_mod1(sub, 0.0), 0.0) < 1e-2


def test_omega0_needs_enough_tail():
    with pytest.raises(InputError):
        estimate_omega0_mod1(Subspectrum(_labels(10) / 2), 0.0)


def test_omega0_rejects_scattered_tail():
    ks = _labels(40)
    noise = 0.2 * np.cos(7.3 * ks)
    with pytest.raises(NumericalError):
        estimate_omega0_mod1(Subspectrum(ks / 2 + noise), 0.0)


def test_default_indices():
    assert list(default_indices(4)) == [-2, -1, 1, 2]
    with pytest.raises(InputError):
        default_indices(3)


# -- composite spectrum --------------------------------------------------------------

def test_matching_relation_holds_on_composite_spectrum(cos_pair, free_right):
    right = CoefficientPair.from_functions(lambda x: 0.2 * np.sin(x), lambda x: 0.1 * np.cos(x), interval=RIGHT)
    sub = composite_spectrum(cos_pair, right, 24)
    phi, phi1 = phi_at_midpoint(right, sub.values)
    ev = boundary_S(cos_pair, sub.values)
    # sigma is continuous at pi, so the left quasi-derivative is shifted to the right gauge
    s1 = ev.y1 + (cos_pair.sigma(PI) - right.sigma(PI)) * ev.y
    assert np.max(np.abs(phi1 * ev.y - s1 * phi)) < 1e-7


def test_right_sigma_constant_does_not_move_spectrum(cos_pair):
    right = CoefficientPair.from_functions(0.3, lambda x: 0.2 * np.sin(x), interval=RIGHT)
    a = composite_spectrum(cos_pair, right, 20)
    b = composite_spectrum(cos_pair, right.with_sigma_shift(0.7 - 0.2j), 20)
    assert np.allclose(a.values, b.values, atol=1e-9)


@settings(max_examples=4)
@given(st.tuples(st.floats(-0.4, 0.4), st.floats(-0.4, 0.4)).filter(lambda c: abs(c[0] - c[1]) > 0.05))
def test_distinct_left_halves_give_distinct_spectra(coeffs):
    right = CoefficientPair.from_functions(0.0, 0.0, interval=RIGHT)
    spectra = [
        composite_spectrum(CoefficientPair.from_functions(lambda x, c=c: c * np.cos(2 * x), 0.0), right, 20).values
        for c in coeffs
    ]
    assert np.max(np.abs(spectra[0] - spectra[1])) > 1e-6


# -- solver --------------------------------------------------------------------------

def test_half_problem_json_round_trip(free_right):
    hp = HalfProblem(free_right, Subspectrum(_labels(4) / 2))
    back = HalfProblem.from_json(json.loads(json.dumps(hp.to_json())))
    assert back.known_mean == hp.known_mean
    assert np.array_equal(back.spectrum.values, hp.spectrum.values)
    with pytest.raises(InputError):
        HalfProblem.from_json({"spectrum": {}})


def test_half_problem_needs_right_half(free_pair):
    with pytest.raises(InputError):
        HalfProblem(free_pair, Subspectrum([1.0]))


def test_condition_check_rejects_common_zero(free_right):
    # phi(pi, .) and phi^[1](pi, .) never vanish together; a repeated late value violates (A)
    vals = list(_labels(20) / 2) + [10.5, 10.5]
    with pytest.raises(ConditionError):
        solve_half(HalfProblem(free_right, Subspectrum(np.sort(vals))), T=8)


def test_free_round_trip(free_pair, free_right):
    T = 32
    sub = composite_spectrum(free_pair, free_right, 2 * T + 2)
    res = solve_half(HalfProblem(free_right, sub), RecoveryConfig(basis_dim=6), T, return_result=True)
    x = np.linspace(0, PI, 129)
    assert np.max(np.abs(res.pair.p(x))) < 5e-3
    assert np.max(np.abs(res.pair.sigma(x))) < 5e-3
    assert verify(res.pair, HalfProblem(free_right, sub)) < 1e-6


def test_step_sigma_round_trip(free_right):
    T = 32
    left = CoefficientPair.from_functions(0.0, 0.0, jumps=[(PI / 2, 0.5)])
    sub = composite_spectrum(left, free_right, 2 * T + 2)
    cfg = RecoveryConfig(basis_dim=6, steps=(1.4,), fit_step_locations=True)
    # an interior step limits the triple accuracy, so the shift check is looser
    pair = solve_half(HalfProblem(free_right, sub), cfg, T, shift_tol=1e-2)
    (loc, height), = pair.jumps
    assert loc == pytest.approx(PI / 2, abs=5e-2)
    assert height == pytest.approx(0.5, abs=5e-2)
