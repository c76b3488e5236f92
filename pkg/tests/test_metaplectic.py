from __future__ import annotations

import math

import numpy as np
import pytest

from conftest import random_gaussian_state, random_hyperbolic
from qcat.classical import FlowCoefficients, QuadraticHamiltonian, Sl2IntMatrix, hamiltonian_from_matrix, spectral_data
from qcat.errors import MismatchedHError, NonPositiveHError, ZeroACoefficientError
from qcat.metaplectic import (
    GaussianState,
    PlaneTranslation,
    compose_translation_phase,
    gaussian_eval,
    gaussian_overlap,
    h_fourier_gaussian,
    propagate_gaussian,
    propagate_gaussian_flow,
    propagate_n,
    schrodinger_residual,
    translate,
    wavepacket,
)
from qcat.quadrature import overlap_quadrature, tanh_sinh


def quantum_translation_pointwise(v: PlaneTranslation, h: float, u, x):
    """Reference operator: u -> exp(-i pi a b/h) exp(2 i pi b x/h) u(x - a)."""
    return (
        np.exp(-1j * math.pi * v.a * v.b / h)
        * np.exp(2j * math.pi * v.b * np.asarray(x) / h)
        * u(np.asarray(x) - v.a)
    )


def test_wavepacket_normalization_oracle():
    # The unit-norm constant at h = 1 comes from the Gaussian integral
    # int exp(-2 pi x^2) dx = 1/sqrt(2), evaluated here by quadrature.
    integral = tanh_sinh(lambda x: np.exp(-2.0 * math.pi * x * x), -6.0, 6.0, tol=1e-13)
    c1 = 1.0 / math.sqrt(integral.real)
    assert wavepacket(0.0, 0.0, 1.0).amplitude == pytest.approx(c1, abs=1e-12)
    assert c1 == pytest.approx(2.0 ** 0.25, abs=1e-12)
    assert wavepacket(0.0, 0.0, 0.25).amplitude == pytest.approx(8.0 ** 0.25, abs=1e-12)
    # C_h = C_1 h^(-1/4) scaling and unit L2 norm for several (q, p, h).
    for q, p, h in [(0.0, 0.0, 1.0), (0.3, -0.7, 0.125), (1.4, 2.2, 1.0 / 64.0)]:
        g = wavepacket(q, p, h)
        assert g.amplitude == pytest.approx(2.0 ** 0.25 * h ** -0.25, rel=1e-14)
        assert abs(g.norm - 1.0) < 1e-12
    with pytest.raises(NonPositiveHError):
        wavepacket(0.0, 0.0, 0.0)


def test_gaussian_eval_examples():
    g = wavepacket(0.0, 0.0, 1.0)
    assert gaussian_eval(g, 0.0) == pytest.approx(2.0 ** 0.25, abs=1e-14)
    assert gaussian_eval(g, 1.0) == pytest.approx(2.0 ** 0.25 * math.exp(-math.pi), abs=1e-14)
    g_half = wavepacket(0.0, 0.5, 1.0)
    assert gaussian_eval(g_half, 1.0) == pytest.approx(
        -(2.0 ** 0.25) * math.exp(-math.pi), abs=1e-14
    )


def test_translate_examples_and_pointwise_agreement(rng):
    h = 0.5
    g = wavepacket(0.0, 0.0, h)
    assert translate(g, PlaneTranslation(0.0, 0.0)) == g
    shifted = translate(wavepacket(0.0, 0.0, 1.0), PlaneTranslation(1.0, 0.0))
    assert (shifted.q, shifted.p) == (1.0, 0.0)
    assert shifted.amplitude == pytest.approx(wavepacket(0.0, 0.0, 1.0).amplitude)
    # (1,1) at h = 1/2: overall phase a unit complex number; verified pointwise below.
    diag = translate(g, PlaneTranslation(1.0, 1.0))
    assert (diag.q, diag.p) == (1.0, 1.0)
    xs = np.linspace(-3.0, 3.0, 100)
    for _ in range(12):
        state = random_gaussian_state(rng, h)
        v = PlaneTranslation(float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2)))
        got = gaussian_eval(translate(state, v), xs)
        want = quantum_translation_pointwise(v, h, lambda x: gaussian_eval(state, x), xs)
        assert np.max(np.abs(got - want)) < 1e-12


def test_composition_phase_law(rng):
    h = 0.5
    v1, v2 = PlaneTranslation(1.0, 0.0), PlaneTranslation(0.0, 1.0)
    assert compose_translation_phase(v1, v2, h) == pytest.approx(1.0)
    assert compose_translation_phase(v1, v1, h) == pytest.approx(1.0)
    # Even 1/h: integer translations commute.
    for n_even in (2, 4, 16):
        assert compose_translation_phase(v1, v2, 1.0 / n_even) == pytest.approx(1.0, abs=1e-12)
    # Operational form: T_v1 T_v2 g = phase * T_(v1+v2) g pointwise.
    xs = np.linspace(-2.0, 2.0, 50)
    for _ in range(8):
        g = random_gaussian_state(rng, h)
        w1 = PlaneTranslation(float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2)))
        w2 = PlaneTranslation(float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2)))
        lhs = gaussian_eval(translate(translate(g, w2), w1), xs)
        phase = compose_translation_phase(w1, w2, h)
        rhs = phase * gaussian_eval(
            translate(g, PlaneTranslation(w1.a + w2.a, w1.b + w2.b)), xs
        )
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_commutation_of_unit_translations():
    # T_(1,0) T_(0,1) = e^{2 i pi / h} T_(0,1) T_(1,0)
    h = 0.4
    g = wavepacket(0.1, -0.2, h)
    xs = np.linspace(-2.0, 2.0, 60)
    lhs = gaussian_eval(translate(translate(g, PlaneTranslation(0.0, 1.0)), PlaneTranslation(1.0, 0.0)), xs)
    rhs = np.exp(2j * math.pi / h) * gaussian_eval(
        translate(translate(g, PlaneTranslation(1.0, 0.0)), PlaneTranslation(0.0, 1.0)), xs
    )
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_gaussian_overlap_examples(rng):
    h = 0.25
    g0 = wavepacket(0.0, 0.0, h)
    assert gaussian_overlap(g0, g0) == pytest.approx(1.0, abs=1e-13)
    # |<Phi_00, Phi_qp>| = exp(-pi (q^2+p^2) / (2h)); cross-checked by quadrature.
    g1 = wavepacket(0.5, 0.0, h)
    val = gaussian_overlap(g0, g1)
    assert abs(val) == pytest.approx(math.exp(-math.pi / 2.0), abs=1e-12)
    assert abs(val - overlap_quadrature(g0, g1, h)) < 1e-11
    for _ in range(5):
        g = random_gaussian_state(rng, h)
        self_ov = gaussian_overlap(g, g)
        assert self_ov.imag == pytest.approx(0.0, abs=1e-12)
        assert self_ov.real > 0
    with pytest.raises(MismatchedHError):
        gaussian_overlap(wavepacket(0, 0, 0.5), wavepacket(0, 0, 0.25))


def test_fourier_gaussian():
    h = 0.125
    g = wavepacket(0.0, 0.0, h)
    fg = h_fourier_gaussian(g)
    assert fg.theta == pytest.approx(1j)
    assert fg.amplitude == pytest.approx(g.amplitude)
    # Unitarity for random shapes.
    rng = np.random.default_rng(5)
    for _ in range(8):
        s = random_gaussian_state(rng, h)
        assert h_fourier_gaussian(s).norm == pytest.approx(s.norm, rel=1e-12)
    # Double application is parity with unit phase +1 in this convention.
    s = wavepacket(0.3, -0.2, h)
    xs = np.linspace(-1.5, 1.5, 40)
    assert np.max(np.abs(gaussian_eval(h_fourier_gaussian(h_fourier_gaussian(s)), xs)
                         - gaussian_eval(s, -xs))) < 1e-12
    # Exchange: the transform of Phi_(q,0) is centered at xi = 0 with
    # momentum -q, i.e. carries the phase e^{-2 i pi q xi / h}; against quadrature.
    gq = wavepacket(0.4, 0.0, h)
    fgq = h_fourier_gaussian(gq)
    assert (fgq.q, fgq.p) == (0.0, -0.4)
    for xi in (-0.3, 0.1, 0.45):
        direct = tanh_sinh(
            lambda x: np.exp(-2j * math.pi * x * xi / h) * gaussian_eval(gq, x) / math.sqrt(h),
            0.4 - 10 * math.sqrt(h), 0.4 + 10 * math.sqrt(h), tol=1e-11,
        )
        assert abs(direct - gaussian_eval(fgq, xi)) < 1e-9


def test_propagate_identity_and_dilation(cat):
    h = 1.0 / 8.0
    g = wavepacket(0.0, 0.0, h)
    assert propagate_gaussian(Sl2IntMatrix(1, 0, 0, 1), g) == g
    sd = spectral_data(cat)
    out = propagate_gaussian_flow(QuadraticHamiltonian(0.0, 0.0, math.log(sd.lam)), 1.0, g)
    assert out.theta == pytest.approx(1j * sd.lam ** -2, rel=1e-12)
    assert out.amplitude == pytest.approx(g.amplitude * sd.lam ** -0.5, rel=1e-12)


def test_propagate_matches_shape_recursion(cat):
    # Theta' = (c + d Theta)/(a + b Theta), derived by completing the square
    # in the kernel; also pinned against the quadrature oracle in test_quadrature.
    h = 1.0 / 16.0
    g = wavepacket(0.0, 0.0, h)
    out = propagate_gaussian(cat, g)
    assert out.theta == pytest.approx((1.0 + 1.0j) / (2.0 + 1.0j), abs=1e-14)
    # Center moves classically and Im Theta stays positive (Gaussian-level Egorov).
    g2 = wavepacket(0.3, -0.4, h)
    out2 = propagate_gaussian(cat, g2)
    assert out2.q == pytest.approx(2 * 0.3 + 1 * -0.4, abs=1e-14)
    assert out2.p == pytest.approx(1 * 0.3 + 1 * -0.4, abs=1e-14)
    assert complex(out2.theta).imag > 0


def test_propagate_unitarity_random(rng):
    for _ in range(50):
        m = random_hyperbolic(rng)
        g = random_gaussian_state(rng, 0.2)
        out = propagate_gaussian(m, g)
        assert abs(out.norm - g.norm) < 1e-10


def test_group_law_up_to_phase(rng):
    h = 0.25
    for _ in range(10):
        m1 = random_hyperbolic(rng)
        m2 = random_hyperbolic(rng)
        g = random_gaussian_state(rng, h)
        two_step = propagate_gaussian(m1, propagate_gaussian(m2, g))
        one_step = propagate_gaussian(m1 @ m2, g)
        ov = gaussian_overlap(two_step, one_step)
        assert abs(abs(ov) - g.norm ** 2) < 1e-8


def test_equivariance_pointwise(rng):
    h = 1.0 / 32.0
    xs = np.linspace(-2.0, 2.0, 100)
    for _ in range(20):
        m = random_hyperbolic(rng)
        g = random_gaussian_state(rng, h)
        v = PlaneTranslation(float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)))
        mv = PlaneTranslation(m.a * v.a + m.b * v.b, m.c * v.a + m.d * v.b)
        lhs = gaussian_eval(propagate_gaussian(m, translate(g, v)), xs)
        rhs = gaussian_eval(translate(propagate_gaussian(m, g), mv), xs)
        assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_zero_a_coefficient_error():
    rotation = FlowCoefficients(t=1.0, a=0.0, b=-1.0, c=1.0, d=0.0)
    with pytest.raises(ZeroACoefficientError):
        propagate_gaussian(rotation, wavepacket(0.0, 0.0, 0.5))


def test_propagate_n_matches_repeated_application(cat):
    g = wavepacket(0.2, 0.7, 1.0 / 16.0)
    out3 = propagate_n(cat, g, 3)
    step = propagate_gaussian(cat, propagate_gaussian(cat, propagate_gaussian(cat, g)))
    assert out3.theta == pytest.approx(step.theta)
    assert out3.amplitude == pytest.approx(step.amplitude)


def _plane_wave_solution(ham, t, x, xi, h):
    from qcat.classical import flow_coefficients

    fc = flow_coefficients(ham, t)
    hb = h / (2.0 * math.pi)
    s = (fc.c * x * x + 2.0 * x * xi - fc.b * xi * xi) / (2.0 * fc.a)
    return fc.a ** -0.5 * np.exp(1j * s / hb)


def test_schrodinger_residual(cat):
    ham = hamiltonian_from_matrix(cat)
    h = 1.0 / 32.0
    for t in (0.1, 0.5, 1.0):
        for x in (-1.0, 0.0, 1.0):
            assert schrodinger_residual(ham, t, x, 0.3, h) < 1e-7
    # Dilation-like case reduces to the scaling solution.
    free = QuadraticHamiltonian(0.0, 0.0, 0.7)
    for t in (0.2, 1.0):
        assert schrodinger_residual(free, t, 0.5, 0.3, h) < 1e-9
    # t = 0: the initial data is the plane wave exactly.
    assert abs(_plane_wave_solution(ham, 0.0, 0.8, 0.3, h)
               - np.exp(2j * math.pi * 0.8 * 0.3 / h)) < 1e-14


def test_schrodinger_residual_vs_finite_differences(cat):
    # Independent check: build i*hbar*du/dt - H u from the explicit solution
    # with finite differences in t and x.
    ham = hamiltonian_from_matrix(cat)
    h = 1.0 / 16.0
    hb = h / (2.0 * math.pi)
    t, x, xi = 0.6, 0.4, 0.3
    dt, dx = 1e-6, 1e-5

    def u(tt, xx):
        return _plane_wave_solution(ham, tt, xx, xi, h)

    du_dt = (u(t + dt, x) - u(t - dt, x)) / (2.0 * dt)
    u_x = (u(t, x + dx) - u(t, x - dx)) / (2.0 * dx)
    u_xx = (u(t, x + dx) - 2.0 * u(t, x) + u(t, x - dx)) / dx ** 2
    h_u = (
        0.5 * ham.alpha * x * x * u(t, x)
        - 1j * hb * ham.gamma * (x * u_x + 0.5 * u(t, x))
        - 0.5 * hb * hb * ham.beta * u_xx
    )
    residual_fd = abs(1j * hb * du_dt - h_u)
    assert abs(residual_fd - schrodinger_residual(ham, t, x, xi, h)) < 1e-5
