from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pencilspec import entire
from pencilspec.coefficients import CoefficientPair
from pencilspec.conditions import (
    check_A,
    check_all,
    check_S,
    completeness_proxy,
    gram_diagnostic,
    gram_matrix,
    moment_proxy,
)
from pencilspec.forward import Subspectrum
from pencilspec.halfinverse import BoundaryFunctions

PI = np.pi
SIN = entire.sin(PI)


def _half_density(T):
    return Subspectrum(np.arange(-2 * T, 2 * T + 1) / 2)


# -- (S) -----------------------------------------------------------------------------

def test_S_holds_when_f2_never_vanishes():
    ok, smin = check_S(Subspectrum([0.5, 1.0, 2.0 + 1j]), 0.0, 1.0)
    assert ok and smin == pytest.approx(1.0)


def test_S_fails_on_common_zero():
    ok, smin = check_S(Subspectrum([2.0]), SIN, SIN)
    assert not ok and smin < 1e-12


def test_S_holds_for_sine_cosine_pair():
    ok, _ = check_S(Subspectrum(np.arange(-5, 6) / 2), SIN, entire.cos(PI))
    assert ok


def test_S_holds_for_half_interval_pair():
    right = CoefficientPair.from_functions(0.0, 0.0, interval=(PI, 2 * PI))
    mu = Subspectrum(np.array([k / 2 for k in range(-12, 13) if k]))
    with BoundaryFunctions(right) as (f1, f2):
        ok, smin = check_S(mu, f1, f2)
    assert ok and smin > 0.1


@given(
    points=st.lists(st.integers(-8, 8), min_size=1, max_size=8, unique=True),
    offset=st.floats(0.05, 0.45),
)
def test_S_fails_exactly_on_engineered_common_zeros(points, offset):
    # f1 = sin(pi lam) and f2 = sin(pi lam / 2) vanish together only at even integers
    f1, f2 = SIN, entire.sin(PI / 2)
    lam = np.array([p + (0.0 if p % 2 == 0 else offset) for p in points], float)
    ok, _ = check_S(Subspectrum(np.sort(lam)), f1, f2)
    assert ok == (not any(p % 2 == 0 for p in points))


# -- (A) -----------------------------------------------------------------------------

def test_A_shifted_integers():
    ok, info = check_A(Subspectrum(np.arange(1, 51) + 0.1))
    assert ok and info["n0"] == 1


def test_A_initial_double_value():
    ok, info = check_A(Subspectrum([1.0, 1.0] + list(range(2, 20))))
    assert ok and info["n0"] == 3


def test_A_growing_imaginary_parts():
    k = np.arange(1, 21)
    ok, info = check_A(Subspectrum(k + 1j * k))
    assert not ok and info["max_abs_im"] == 20


def test_A_late_repetition_fails():
    vals = list(range(1, 20)) + [20.0, 20.0]
    ok, _ = check_A(Subspectrum(vals), n0_search=10)
    assert not ok


# -- Gram sections -------------------------------------------------------------------

@pytest.mark.parametrize("T", [4, 8, 16])
def test_half_density_family_is_orthogonal(T):
    smin, cond = gram_diagnostic(_half_density(T))
    assert cond == pytest.approx(1.0, abs=1e-10)
    assert smin == pytest.approx(1.0, abs=1e-10)


def test_double_value_adds_a_derivative_row():
    h = 2 * PI
    G = gram_matrix(Subspectrum([1.5, 1.5]), h)
    want = np.array([[2 * h, 0.0], [0.0, 2 * h**3 / 3]])
    assert np.allclose(G, want, rtol=1e-12, atol=1e-10)
    smin, cond = gram_diagnostic(Subspectrum([1.5, 1.5]))
    assert smin == pytest.approx(1.0) and cond == pytest.approx(1.0)


def test_deleted_points_break_completeness_not_conditioning():
    for T in (8, 16):
        full = _half_density(T)
        half = Subspectrum(full.values[::2])
        assert completeness_proxy(full, T=T) == pytest.approx(1.0, abs=1e-8)
        assert completeness_proxy(half, T=T) < 1e-8
        assert gram_diagnostic(half)[0] == pytest.approx(1.0, abs=1e-10)


lam_strategy = st.lists(
    st.builds(complex, st.floats(-6, 6), st.floats(-1, 1)), min_size=1, max_size=8, unique=True
)


@given(lam_strategy)
def test_gram_is_hermitian_psd(lams):
    G = gram_matrix(Subspectrum(np.array(lams)))
    assert np.allclose(G, G.conj().T, atol=1e-12 * np.max(np.abs(G)))
    assert np.min(np.linalg.eigvalsh(0.5 * (G + G.conj().T))) >= -1e-10 * np.linalg.norm(G, 2)


@given(st.lists(st.floats(-6, 6), min_size=1, max_size=8, unique=True))
def test_real_family_gives_real_gram(lams):
    G = gram_matrix(Subspectrum(np.array(lams)))
    assert np.all(np.abs(G.imag) <= 1e-12 * np.max(np.abs(G)))


@given(lam_strategy)
def test_leading_sections_do_not_raise_sigma_min(lams):
    prev = np.inf
    for n in range(1, len(lams) + 1):
        smin, _ = gram_diagnostic(Subspectrum(np.array(lams[:n])))
        assert smin <= prev + 1e-10
        prev = smin


# -- reports -------------------------------------------------------------------------

def test_check_all_report_round_trips_through_json():
    rep = check_all(_half_density(4), 0.0, 1.0)
    assert rep.S_ok and rep.A_ok and rep.gram_ok
    assert rep.label == "finite-section proxy"
    back = json.loads(json.dumps(rep.to_json()))
    assert back["rows"] == 17


def test_check_all_flags_singular_section():
    rep = check_all(Subspectrum([1.0, 1.0 + 1e-12]), 0.0, 1.0)
    assert not rep.gram_ok and rep.notes


def test_moment_proxy_reports_rank():
    ks = np.array([k for k in range(-10, 11) if k], float)
    rep = moment_proxy(Subspectrum(ks), 0.0, 1.0, 8)
    assert rep.rank_fraction > 0.8
