"""Quantization on the line: exact complex-Gaussian states, quantum
translations, and the propagator of quadratic Hamiltonians acting on them.

A state is x |-> amplitude * exp(i*pi*Theta*(x-q)^2/h) * exp(2*i*pi*p*(x-q)/h)
with Im(Theta) > 0.  This family is closed under quantum translations, the
h-scaled Fourier transform and the propagator of any quadratic Hamiltonian,
so every operation below is exact up to floating point.

Phase handling: oscillatory phases are reduced mod one full turn in 80-bit
extended precision before calling trig functions (``cis_turns``), and phases
of the form (integer)/h with 1/h = N even reduce to exactly 1 and are dropped
in integer arithmetic where it matters (see :mod:`qcat.torus`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .classical import FlowCoefficients, QuadraticHamiltonian, Sl2IntMatrix, flow_coefficients, hamiltonian_from_matrix
from .errors import MismatchedHError, NonPositiveHError, ZeroACoefficientError

__all__ = [
    "GaussianState",
    "PlaneTranslation",
    "cis_turns",
    "wavepacket",
    "gaussian_eval",
    "translate",
    "compose_translation_phase",
    "gaussian_overlap",
    "h_fourier_gaussian",
    "propagate_gaussian",
    "propagate_gaussian_flow",
    "propagate_n",
    "metaplectic_shape_orbit",
    "schrodinger_residual",
]

_TWO_PI = 2.0 * math.pi


def cis_turns(turns) -> np.ndarray | complex:
    """exp(2*pi*i*turns), with the argument reduced mod 1 in extended precision.

    ``turns`` counts full revolutions.  Inputs are promoted to numpy's 80-bit
    long double before the subtraction of the integer part, which keeps the
    reduced fraction accurate even for arguments of order 1e12.
    """
    t = np.asarray(turns, dtype=np.longdouble)
    frac = np.asarray(t - np.floor(t), dtype=np.float64)
    out = np.exp(1j * _TWO_PI * frac)
    if np.ndim(turns) == 0:
        return complex(out)
    return out


@dataclass(frozen=True)
class GaussianState:
    """Complex Gaussian wave function on the line.

    amplitude : complex prefactor (global phase is meaningful and kept)
    theta     : complex shape parameter, Im(theta) > 0
    q, p      : phase-space center
    h         : quantization parameter, > 0
    """

    amplitude: complex
    theta: complex
    q: float
    p: float
    h: float

    def __post_init__(self) -> None:
        if self.h <= 0.0:
            raise NonPositiveHError(f"h must be positive, got {self.h}")
        if complex(self.theta).imag <= 0.0:
            raise ValueError(f"Im(theta) must be positive, got {self.theta}")

    @property
    def norm(self) -> float:
        """L2 norm in closed form: |amplitude| * (h / (2 Im theta))^(1/4)."""
        return abs(self.amplitude) * (self.h / (2.0 * complex(self.theta).imag)) ** 0.25

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm - 1.0) < 1e-12


@dataclass(frozen=True)
class PlaneTranslation:
    """Phase-space translation vector (a, b)."""

    a: float
    b: float


def wavepacket(q: float, p: float, h: float) -> GaussianState:
    """Unit-norm coherent state centered at (q, p): theta = i, amplitude (2/h)^(1/4)."""
    if h <= 0.0:
        raise NonPositiveHError(f"h must be positive, got {h}")
    return GaussianState(amplitude=complex((2.0 / h) ** 0.25), theta=1j, q=q, p=p, h=h)


def gaussian_eval(g: GaussianState, x) -> np.ndarray | complex:
    """Pointwise value of the state at x (scalar or array)."""
    dx = np.asarray(x, dtype=np.longdouble) - np.longdouble(g.q)
    th = complex(g.theta)
    turns = (np.longdouble(th.real) * dx * dx + 2.0 * np.longdouble(g.p) * dx) / (
        2.0 * np.longdouble(g.h)
    )
    damp = np.exp(-math.pi * th.imag * np.asarray(dx * dx, dtype=np.float64) / g.h)
    out = g.amplitude * damp * cis_turns(turns)
    if np.ndim(x) == 0:
        return complex(out)
    return out


def translate(g: GaussianState, v: PlaneTranslation) -> GaussianState:
    """Quantum translation T_(a,b) g, exactly, as a new Gaussian state.

    T_(a,b) u(x) = exp(-i*pi*a*b/h) exp(2*i*pi*b*x/h) u(x - a); recentering the
    result at (q+a, p+b) multiplies the amplitude by
    exp(+i*pi*a*b/h) * exp(2*i*pi*b*q/h).
    """
    phase = cis_turns((v.a * v.b / 2.0 + v.b * g.q) / g.h)
    return replace(g, amplitude=g.amplitude * phase, q=g.q + v.a, p=g.p + v.b)


def compose_translation_phase(v1: PlaneTranslation, v2: PlaneTranslation, h: float) -> complex:
    """Cocycle phase in T_v1 T_v2 = exp(-i*pi*det(v1, v2)/h) T_(v1+v2)."""
    if h <= 0.0:
        raise NonPositiveHError(f"h must be positive, got {h}")
    det = v1.a * v2.b - v1.b * v2.a
    return complex(cis_turns(-det / (2.0 * h)))


def _overlap_from_centers(theta1, amp1, y1, w1, theta2: complex, amp2: complex,
                          y2: float, w2: float, h: float):
    """<g1, g2> = int g1 conj(g2) dx for Gaussians with the given data.

    Vectorized over the first state's center (y1, w1) and amplitude arrays.
    The integral is done by completing the square; the oscillatory part of the
    exponent goes through :func:`cis_turns`.
    """
    th1 = np.asarray(theta1, dtype=complex)
    d = th1 - np.conj(theta2)
    a2 = -1j * math.pi * d / h  # Re(a2) > 0 since Im(theta1) + Im(theta2) > 0
    z = np.conj(theta2) * y2 - th1 * np.asarray(y1) + np.asarray(w1) - w2
    e = (1j * math.pi / h) * (
        -z * z / d
        + th1 * np.asarray(y1) ** 2
        - np.conj(theta2) * y2 * y2
        - 2.0 * np.asarray(w1) * np.asarray(y1)
        + 2.0 * w2 * y2
    )
    pref = np.asarray(amp1) * np.conj(amp2) * np.sqrt(math.pi / a2)
    return pref * np.exp(e.real) * cis_turns(e.imag / _TWO_PI)


def gaussian_overlap(g1: GaussianState, g2: GaussianState) -> complex:
    """L2 inner product <g1, g2> (antilinear in g2) in closed form."""
    if g1.h != g2.h:
        raise MismatchedHError(f"states have h={g1.h} and h={g2.h}")
    val = _overlap_from_centers(
        g1.theta, g1.amplitude, g1.q, g1.p, complex(g2.theta), complex(g2.amplitude), g2.q, g2.p, g1.h
    )
    return complex(val)


def h_fourier_gaussian(g: GaussianState) -> GaussianState:
    """Unitary h-scaled Fourier transform h^(-1/2) int exp(-2*i*pi*x*xi/h) g(x) dx.

    Exact on Gaussians: theta -> -1/theta, (q, p) -> (p, -q), amplitude
    multiplied by (-i*theta)^(-1/2) exp(-2*i*pi*q*p/h).  Unitary, and the
    centered theta = i packet is a fixed point.
    """
    th = complex(g.theta)
    amp = g.amplitude / np.sqrt(-1j * th) * cis_turns(-g.q * g.p / g.h)
    return GaussianState(amplitude=complex(amp), theta=-1.0 / th, q=g.p, p=-g.q, h=g.h)


def _branch_sqrt_inv(h: QuadraticHamiltonian, t: float, theta: complex) -> complex:
    """(a_t + b_t*theta)^(-1/2) with the branch continued from 1 at t = 0.

    The path w(s) = a_s + b_s*theta never vanishes (Im theta > 0), so the
    argument can be unwound by sampling; the step count is doubled until the
    largest per-step rotation is below pi/2.
    """
    steps = 16
    while True:
        s = np.linspace(0.0, t, steps + 1)
        w = np.empty(steps + 1, dtype=complex)
        for i, si in enumerate(s):
            fc = flow_coefficients(h, float(si))
            w[i] = fc.a + fc.b * theta
        dargs = np.angle(w[1:] / w[:-1])
        if np.max(np.abs(dargs)) < 0.5 * math.pi or steps >= 4096:
            break
        steps *= 2
    total_arg = float(np.sum(dargs))
    wt = w[-1]
    return complex(np.exp(-0.5 * (math.log(abs(wt)) + 1j * total_arg)))


def _propagate_core(a: float, b: float, c: float, d: float, g: GaussianState,
                    sqrt_inv_w: complex) -> GaussianState:
    th = complex(g.theta)
    q2 = a * g.q + b * g.p
    p2 = c * g.q + d * g.p
    th2 = (c + d * th) / (a + b * th)
    amp2 = g.amplitude * sqrt_inv_w * cis_turns((q2 * p2 - g.q * g.p) / (2.0 * g.h))
    return GaussianState(amplitude=complex(amp2), theta=th2, q=q2, p=p2, h=g.h)


def propagate_gaussian_flow(h: QuadraticHamiltonian, t: float, g: GaussianState) -> GaussianState:
    """Propagate ``g`` through the flow exp(t*m) of a quadratic Hamiltonian.

    Center moves classically, theta by the Moebius update
    theta' = (c + d*theta)/(a + b*theta), and the amplitude picks up
    (a + b*theta)^(-1/2) with the branch tracked continuously from t = 0,
    times the recentering phase exp(i*pi*(q'p' - qp)/h).

    Raises:
        ZeroACoefficientError: if the endpoint has a = 0 (the kernel formula
            degenerates there; use :func:`h_fourier_gaussian` instead).
    """
    fc = flow_coefficients(h, t)
    if fc.a == 0.0:
        raise ZeroACoefficientError("flow endpoint has a = 0")
    return _propagate_core(fc.a, fc.b, fc.c, fc.d, g, _branch_sqrt_inv(h, t, complex(g.theta)))


def propagate_gaussian(m, g: GaussianState) -> GaussianState:
    """Apply the quantized linear map of ``m`` to the Gaussian state ``g``.

    ``m`` may be an :class:`Sl2IntMatrix` (identity, or hyperbolic with
    trace > 2, in which case the metaplectic branch is fixed by the
    continuous Hamiltonian flow reaching ``m`` at time 1) or a
    :class:`FlowCoefficients` snapshot, for which the principal branch is
    used and requires Re(a + b*theta) > 0.
    """
    if isinstance(m, Sl2IntMatrix):
        if m.is_identity:
            return g
        ham = hamiltonian_from_matrix(m)  # raises for non-hyperbolic input
        if m.a == 0:
            raise ZeroACoefficientError("matrix has a = 0")
        sqi = _branch_sqrt_inv(ham, 1.0, complex(g.theta))
        return _propagate_core(float(m.a), float(m.b), float(m.c), float(m.d), g, sqi)
    if isinstance(m, FlowCoefficients):
        if m.a == 0.0:
            raise ZeroACoefficientError("flow coefficients have a = 0")
        w = m.a + m.b * complex(g.theta)
        if w.real <= 0.0:
            raise ValueError(
                "principal branch undefined for Re(a + b*theta) <= 0; "
                "propagate through propagate_gaussian_flow instead"
            )
        return _propagate_core(m.a, m.b, m.c, m.d, g, complex(1.0 / np.sqrt(w)))
    raise TypeError(f"unsupported propagator input {type(m)!r}")


def propagate_n(m: Sl2IntMatrix, g: GaussianState, n: int) -> GaussianState:
    """n-fold application of the quantized map (n >= 0)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0 or m.is_identity:
        return g
    ham = hamiltonian_from_matrix(m)
    if m.a == 0:
        raise ZeroACoefficientError("matrix has a = 0")
    out = g
    for _ in range(n):
        sqi = _branch_sqrt_inv(ham, 1.0, complex(out.theta))
        out = _propagate_core(float(m.a), float(m.b), float(m.c), float(m.d), out, sqi)
    return out


def metaplectic_shape_orbit(m: Sl2IntMatrix, n: int, h: float) -> GaussianState:
    """The n-step propagated centered unit packet; its amplitude carries the
    accumulated metaplectic branch phase and its theta the exact shape."""
    return propagate_n(m, wavepacket(0.0, 0.0, h), n)


def schrodinger_residual(h: QuadraticHamiltonian, t: float, x: float, xi: float, hbar_param: float) -> float:
    """|i*hbar*du/dt - H_hat u| for the explicit plane-wave solution.

    u(t, x) = a_t^(-1/2) exp(i S(t,x)/hbar) with
    S = (c_t x^2 + 2 x xi - b_t xi^2)/(2 a_t) and hbar = h/(2 pi).  All
    derivatives are evaluated from the closed forms, so the residual is zero
    up to rounding exactly when (a_t, b_t, c_t, d_t) solve the flow equations.
    """
    if hbar_param <= 0.0:
        raise NonPositiveHError(f"h must be positive, got {hbar_param}")
    fc = flow_coefficients(h, t)
    a, b, c = fc.a, fc.b, fc.c
    if a <= 0.0:
        raise ZeroACoefficientError(f"a_t must stay positive on the tested interval, got {a}")
    hb = hbar_param / _TWO_PI
    al, be, ga = h.alpha, h.beta, h.gamma
    # Flow derivatives from the generator ODEs.
    da = ga * a + be * c
    db = ga * fc.b + be * fc.d
    dc = -al * a - ga * c
    s_x = (c * x + xi) / a
    s_xx = c / a
    s_t = (dc * x * x - db * xi * xi) / (2.0 * a) - da * (c * x * x + 2.0 * x * xi - b * xi * xi) / (
        2.0 * a * a
    )
    # i*hbar*du/dt - H u = [-i*hbar*da/(2a) - S_t - al*x^2/2 - ga*x*S_x
    #                       - be/2*S_x^2 + i*hbar*(ga/2 + be/2*S_xx)] * u
    bracket = (
        -1j * hb * da / (2.0 * a)
        - s_t
        - 0.5 * al * x * x
        - ga * x * s_x
        - 0.5 * be * s_x * s_x
        + 1j * hb * (0.5 * ga + 0.5 * be * s_xx)
    )
    return abs(bracket) * a ** -0.5
