import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ztescape.errors import ParameterError
from ztescape.model import (FourierTable, PhasePoint, derive_well, force, fourier_coeffs_harmonic,
                            harmonic_energy, harmonic_orbit, potential, to_action_angle,
                            well_from_barrier)

positive = st.floats(min_value=0.1, max_value=10.0)


def test_unit_well():
    w = derive_well(1, 1, 1, 1)
    assert w.x_s == 2.0
    assert w.eps_s == pytest.approx(2.0 / 3.0)
    assert w.eps0 == 0.5
    assert w.y_s == pytest.approx(4.0 / 3.0)


def test_barrier_shorthand():
    w = well_from_barrier(4.0)
    assert w.lam == pytest.approx(math.sqrt(1.0 / 3.0))
    assert w.y_s == pytest.approx(4.0)
    assert potential(w.x_s, w) == pytest.approx(w.eps_s)
    assert force(w.x_s, w) == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_rejects_nonpositive(bad):
    with pytest.raises(ParameterError):
        derive_well(bad, 1, 1, 1)
    with pytest.raises(ParameterError):
        derive_well(1, 1, bad, 1)


@settings(max_examples=50, deadline=None)
@given(positive, positive, positive, positive)
def test_barrier_is_a_stationary_maximum(m, w0, lam, hbar):
    w = derive_well(m, w0, lam, hbar)
    assert abs(force(w.x_s, w)) <= 1e-9 * m * w0**2 * w.x_s
    assert potential(w.x_s, w) == pytest.approx(w.eps_s, rel=1e-12)
    assert potential(0.99 * w.x_s, w) < w.eps_s


@settings(max_examples=50, deadline=None)
@given(st.floats(2.0, 40.0), positive, positive, positive)
def test_well_from_barrier_roundtrip(ys, m, w0, hbar):
    assert well_from_barrier(ys, m, w0, hbar).y_s == pytest.approx(ys, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 20))
def test_harmonic_orbit_conserves_energy_and_composes(x, p, t):
    w = derive_well(1.3, 0.7, 1.0, 1.0)
    pt = PhasePoint(x, p)
    a = harmonic_orbit(harmonic_orbit(pt, t / 2, w), t / 2, w)
    b = harmonic_orbit(pt, t, w)
    assert harmonic_energy(b, w) == pytest.approx(harmonic_energy(pt, w), rel=1e-12, abs=1e-14)
    assert a.x == pytest.approx(b.x, abs=1e-12) and a.p == pytest.approx(b.p, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.01, 5))
def test_angle_advances_at_omega0(x, p, dt):
    w = derive_well(1.0, 1.3, 1.0, 1.0)
    pt = PhasePoint(x, p)
    if harmonic_energy(pt, w) < 1e-6:
        return
    th0, j0 = to_action_angle(pt, w)
    th1, j1 = to_action_angle(harmonic_orbit(pt, dt, w), w)
    assert j1 == pytest.approx(j0, rel=1e-10)
    diff = (th1 - th0 - w.omega0 * dt) % (2 * math.pi)
    assert min(diff, 2 * math.pi - diff) < 1e-8


def test_action_angle_origin_and_range():
    w = derive_well(1, 1, 1, 1)
    assert to_action_angle(PhasePoint(0.0, 0.0), w) == (0.0, 0.0)
    th, j = to_action_angle(PhasePoint(-1.0, -0.0), w)
    assert 0.0 <= th < 2 * math.pi


def test_fourier_table_reconstructs_orbit():
    w = derive_well(1.0, 1.0, 1.0, 1.0)
    j = 0.8
    table = fourier_coeffs_harmonic(j, w)
    theta = np.linspace(0, 2 * np.pi, 9)
    amp = math.sqrt(2 * j / (w.mass * w.omega0))
    np.testing.assert_allclose(table.position(theta), amp * np.cos(theta), atol=1e-14)
    assert table[-1] == table[1].conjugate()
    assert table[3] == 0


def test_fourier_table_edge_cases():
    w = derive_well(1, 1, 1, 1)
    assert fourier_coeffs_harmonic(0.0, w).orders() == []
    with pytest.raises(ParameterError):
        fourier_coeffs_harmonic(-1.0, w)
    with pytest.raises(ParameterError):
        FourierTable({-1: 1.0})
