"""The N-dimensional torus Hilbert space at h = 1/N (N even).

A Schwartz-class state g is projected to the torus by averaging over the
quantum translation lattice; the Hermitian pairing of two such projections is
the doubly infinite lattice sum

    <S(g), S(f)> = sum_{k in Z^2} <T_k g, f>_{L2},

every term of which is a closed-form Gaussian overlap.  Truncation radii are
certified: the overlap modulus is a Gaussian function of the translated
center, its quadratic decay form is computed exactly, and the discarded
shells are bounded by an explicit error-function tail.

Because N is even all half-integer cocycle phases exp(-i*pi*k1*k2*N) are
exactly 1 and are dropped in integer arithmetic rather than evaluated in
floating point.

For N-point work there is an equivalent exact route (Poisson summation):
S(g) is determined by the N samples of the 1-periodization of g on the grid
r/N, the pairing is the discrete inner product (1/N) sum_r v_r conj(w_r),
and the Fourier coefficients are the inverse DFT of those samples.  The two
routes are cross-validated in the test suite; the grid route powers the
propagator matrix and Husimi evaluations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classical import Sl2IntMatrix, TorusPoint
from .errors import (
    NotPerfectSquareError,
    NumericalToleranceError,
    OddNError,
    TruncationOverflowError,
)
from .metaplectic import GaussianState, cis_turns, gaussian_eval, propagate_n, wavepacket

__all__ = [
    "TorusState",
    "LatticeTruncation",
    "HusimiGrid",
    "even_n_from_h",
    "periodized_samples",
    "torus_coefficients",
    "pair_from_coefficients",
    "pair_symmetrized",
    "pair_symmetrized_detailed",
    "comb_state",
    "build_propagator_matrix",
    "matrix_element_exact",
    "state_pairing",
    "husimi",
    "wavepacket_lattice",
]

_DEFAULT_TAIL = 1e-13
_MAX_TERMS = 5_000_000


@dataclass(frozen=True, eq=False)
class TorusState:
    """Element of the torus space as N Fourier coefficients d_0..d_{N-1}.

    The coefficients are exactly N-periodic by construction (index mod N).
    """

    N: int
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        if self.N <= 0 or self.N % 2 != 0:
            raise OddNError(f"N must be a positive even integer, got {self.N}")
        if self.coeffs.shape != (self.N,):
            raise ValueError(f"expected {self.N} coefficients, got {self.coeffs.shape}")

    def coeff(self, n: int) -> complex:
        return complex(self.coeffs[n % self.N])

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))


@dataclass(frozen=True)
class LatticeTruncation:
    """Radius actually summed and a rigorous bound on the discarded mass."""

    radius: int
    certified_tail: float


@dataclass(frozen=True, eq=False)
class HusimiGrid:
    """Phase-space density (1/h)|D(Phi_{q,p})|^2 sampled on an R x R grid.

    values[i, j] is the density at (q, p) = (i/R, j/R).
    """

    resolution: int
    values: np.ndarray
    h: float

    @property
    def riemann_mass(self) -> float:
        return float(np.sum(self.values)) / self.resolution ** 2


def even_n_from_h(h: float) -> int:
    """The even integer N with h = 1/N, validating both properties."""
    if h <= 0.0:
        raise OddNError(f"h must be positive with 1/h an even integer, got {h}")
    n = round(1.0 / h)
    if n <= 0 or abs(n * h - 1.0) > 1e-9 or n % 2 != 0:
        raise OddNError(f"1/h must be an even integer, got 1/h = {1.0 / h}")
    return n


def periodized_samples(g: GaussianState, N: int, tail: float = 1e-16) -> np.ndarray:
    """v_r = sum_m g(r/N + m) for r = 0..N-1, truncated below ``tail``."""
    im = complex(g.theta).imag
    half = math.sqrt(g.h * math.log(max(abs(g.amplitude), 1.0) / tail) / (math.pi * im)) + 1.0
    m_lo = math.floor(g.q - half) - 1
    m_hi = math.ceil(g.q + half) + 1
    r = np.arange(N) / N
    x = r[None, :] + np.arange(m_lo, m_hi + 1)[:, None]
    return np.sum(gaussian_eval(g, x), axis=0)


def torus_coefficients(g: GaussianState) -> TorusState:
    """Fourier data of the symmetrized state.

    d_n = (1/N) sum_{j in Z} g(j/N) exp(2*i*pi*n*j/N): the lattice sum of
    Gaussian samples against plane waves, N-periodic in n by construction.
    """
    N = even_n_from_h(g.h)
    return TorusState(N=N, coeffs=np.fft.ifft(periodized_samples(g, N)))


def pair_from_coefficients(s1: TorusState, s2: TorusState) -> complex:
    """Finite Parseval form of the Hermitian pairing: sum_n d_n conj(e_n)."""
    if s1.N != s2.N:
        raise OddNError(f"states live on different tori: N={s1.N} vs N={s2.N}")
    return complex(np.sum(s1.coeffs * np.conj(s2.coeffs)))


def _exponent_coefficients(g: GaussianState, test: GaussianState):
    """Complex coefficients of the overlap exponent as a polynomial in the
    translated center (y, w) of ``g``:

        <g@(y,w), test> = pref * exp(E(y, w)),
        E = E_yy y^2 + E_ww w^2 + E_yw y w + E_y y + E_w w + E_c.
    """
    h = g.h
    th1 = complex(g.theta)
    th2c = np.conj(complex(test.theta))
    d = th1 - th2c
    z0 = th2c * test.q - test.p
    s = 1j * math.pi / h
    e_yy = s * (th1 - th1 * th1 / d)
    e_ww = s * (-1.0 / d)
    e_yw = s * (2.0 * th1 / d - 2.0)
    e_y = s * (2.0 * th1 * z0 / d)
    e_w = s * (-2.0 * z0 / d)
    e_c = s * (-z0 * z0 / d - th2c * test.q ** 2 + 2.0 * test.p * test.q)
    a2 = -s * d
    pref = g.amplitude * np.conj(test.amplitude) * np.sqrt(math.pi / a2)
    return (e_yy, e_ww, e_yw, e_y, e_w, e_c), complex(pref)


def overlap_decay_form(coeffs) -> tuple[np.ndarray, np.ndarray, float, float]:
    """Maximizer, Hessian data and peak value of Re E over the (y, w) plane."""
    e_yy, e_ww, e_yw, e_y, e_w, e_c = coeffs
    hess = np.array([[2.0 * e_yy.real, e_yw.real], [e_yw.real, 2.0 * e_ww.real]])
    eigs = np.linalg.eigvalsh(hess)
    if eigs[1] >= 0.0:
        raise NumericalToleranceError("overlap decay form is not negative definite")
    mu = -eigs[1]
    center = np.linalg.solve(hess, -np.array([e_y.real, e_w.real]))
    e_star = (
        e_yy.real * center[0] ** 2
        + e_ww.real * center[1] ** 2
        + e_yw.real * center[0] * center[1]
        + e_y.real * center[0]
        + e_w.real * center[1]
        + e_c.real
    )
    return center, hess, mu, e_star


def shell_tail_bound(k: float, mu: float) -> float:
    """Upper bound on sum_{s > k} 8 s exp(-mu s^2 / 2) via integral comparison."""
    v = max(k, 0.0)
    return 8.0 * (
        math.exp(-0.5 * mu * v * v) / mu
        + math.sqrt(0.5 * math.pi / mu) * math.erfc(v * math.sqrt(0.5 * mu))
    )


def pair_symmetrized_detailed(
    g: GaussianState,
    test: GaussianState,
    tail_target: float = _DEFAULT_TAIL,
    max_terms: int = _MAX_TERMS,
) -> tuple[complex, LatticeTruncation]:
    """Hermitian torus pairing of the two symmetrized states, with its
    certified truncation data.

    Raises:
        MismatchedHError / OddNError: via validation of the shared h = 1/N.
        TruncationOverflowError: if the certified radius needs more than
            ``max_terms`` lattice terms.
    """
    if g.h != test.h:
        from .errors import MismatchedHError

        raise MismatchedHError(f"states have h={g.h} and h={test.h}")
    n_even = even_n_from_h(g.h)
    coeffs, pref = _exponent_coefficients(g, test)
    center, _, mu, e_star = overlap_decay_form(coeffs)
    scale = max(g.norm * test.norm, 1e-300)
    peak = abs(pref) * math.exp(min(e_star, 700.0))
    target = tail_target * scale

    radius = 1
    while peak * shell_tail_bound(radius, mu) > target:
        radius += 1
    if (2 * radius + 1) ** 2 > max_terms:
        raise TruncationOverflowError(
            f"certified radius {radius} needs more than {max_terms} lattice terms"
        )
    certified = peak * shell_tail_bound(radius, mu)

    k1 = np.arange(round(center[0] - g.q) - radius, round(center[0] - g.q) + radius + 1)
    k2 = np.arange(round(center[1] - g.p) - radius, round(center[1] - g.p) + radius + 1)
    kk1, kk2 = np.meshgrid(k1, k2, indexing="ij")
    y = g.q + kk1
    w = g.p + kk2
    e_yy, e_ww, e_yw, e_y, e_w, e_c = coeffs
    expo = e_yy * y * y + e_ww * w * w + e_yw * y * w + e_y * y + e_w * w + e_c
    # Translation phase of T_(k1,k2) g: exp(i*pi*k1*k2*N) * exp(2*i*pi*k2*q*N);
    # the first factor is exactly 1 because N is even.
    phase = cis_turns(kk2 * (n_even * g.q))
    terms = pref * phase * np.exp(expo.real) * cis_turns(expo.imag / (2.0 * math.pi))
    value = complex(np.sum(terms))
    return value, LatticeTruncation(radius=radius, certified_tail=float(certified))


def pair_symmetrized(g: GaussianState, test: GaussianState, **kwargs) -> complex:
    """sum_{k in Z^2} <T_k g, test>: the Hermitian pairing on the torus."""
    value, _ = pair_symmetrized_detailed(g, test, **kwargs)
    return value


def comb_state(N: int, k: int, width_factor: float = 20.0) -> GaussianState:
    """Unit-norm near-delta Gaussian at (k/N, 0).

    Symmetrizing these reproduces the Fourier-comb basis of the torus space:
    the periodized samples are supported on the single grid point r = k to
    machine precision, so the coefficient vectors are flat-modulus DFT
    columns and the family's Gram matrix is perfectly conditioned.
    """
    if N <= 0 or N % 2 != 0:
        raise OddNError(f"N must be a positive even integer, got {N}")
    h = 1.0 / N
    tau = width_factor * N
    return GaussianState(
        amplitude=complex((2.0 * tau / h) ** 0.25), theta=1j * tau, q=k / N, p=0.0, h=h
    )


def build_propagator_matrix(m: Sl2IntMatrix, N: int, validate: bool = True) -> np.ndarray:
    """The induced N x N unitary in the Fourier-coefficient representation.

    Columns are solved from the comb family: if D holds the coefficients of
    the basis states and D' those of their propagated images, the matrix is
    U = D' D^(-1), i.e. the unique linear map with U d(g) = d(U g) on the
    family's span (which is everything).

    Raises:
        OddNError, ZeroACoefficientError (for a = 0), and
        NumericalToleranceError if ``validate`` and the unitarity defect
        exceeds 1e-9.
    """
    if N <= 0 or N % 2 != 0:
        raise OddNError(f"N must be a positive even integer, got {N}")
    basis = np.empty((N, N), dtype=complex)
    image = np.empty((N, N), dtype=complex)
    for k in range(N):
        e_k = comb_state(N, k)
        basis[:, k] = torus_coefficients(e_k).coeffs
        image[:, k] = torus_coefficients(propagate_n(m, e_k, 1)).coeffs
    u = image @ np.linalg.inv(basis)
    if validate:
        defect = float(np.max(np.abs(u.conj().T @ u - np.eye(N))))
        if defect > 1e-9:
            raise NumericalToleranceError(f"unitarity defect {defect:.3e} exceeds 1e-9")
    return u


def matrix_element_exact(
    m: Sl2IntMatrix,
    n: int,
    src: TorusPoint,
    dst: TorusPoint,
    N: int,
    max_terms: int = _MAX_TERMS,
) -> complex:
    """<U^n S(Phi_src), S(Phi_dst)> by exact propagation plus the lattice sum.

    The source packet is propagated n steps in closed form (its covariance
    grows like h lambda^(2n)); the truncation radius of the pairing then
    scales itself off that covariance through the certified decay form.
    """
    if N <= 0 or N % 2 != 0:
        raise OddNError(f"N must be a positive even integer, got {N}")
    h = 1.0 / N
    g = propagate_n(m, wavepacket(src.q, src.p, h), n)
    return pair_symmetrized(g, wavepacket(dst.q, dst.p, h), max_terms=max_terms)


def state_pairing(g: GaussianState, chunk: int = 1024):
    """Vectorized (q, p) |-> <S(g), S(Phi_{q,p})> built on the N-grid route.

    Returns a callable accepting equal-shape arrays of torus coordinates.
    Equality with :func:`pair_symmetrized` is exact (Poisson summation) and
    is verified in the test suite.
    """
    N = even_n_from_h(g.h)
    h = g.h
    vg = periodized_samples(g, N)
    r = np.arange(N) / N
    m_half = math.ceil(math.sqrt(h * 40.0 / math.pi)) + 2
    c_h = (2.0 / h) ** 0.25

    def pairing(q, p):
        qf = np.asarray(q, dtype=float).ravel()
        pf = np.asarray(p, dtype=float).ravel()
        out = np.empty(qf.shape, dtype=complex)
        for lo in range(0, qf.size, chunk):
            hi = min(lo + chunk, qf.size)
            qc = qf[lo:hi, None]
            pc = pf[lo:hi, None]
            w = np.zeros((hi - lo, N), dtype=complex)
            for mm in range(-m_half, m_half + 1):
                dx = (r[None, :] + mm) - qc
                w += np.exp(-math.pi * dx * dx / h) * cis_turns(pc * dx / h)
            out[lo:hi] = (1.0 / N) * (vg[None, :] * np.conj(c_h * w)).sum(axis=1)
        return out.reshape(np.shape(q))

    return pairing


def husimi(pairing, N: int, resolution: int) -> HusimiGrid:
    """Sample the density (1/h)|pairing(q, p)|^2 on the uniform R x R grid."""
    if resolution < 8:
        raise ValueError(f"resolution must be at least 8, got {resolution}")
    qs = np.arange(resolution) / resolution
    qq, pp = np.meshgrid(qs, qs, indexing="ij")
    vals = np.asarray(pairing(qq, pp), dtype=complex)
    dens = N * np.abs(vals) ** 2
    return HusimiGrid(resolution=resolution, values=dens, h=1.0 / N)


def wavepacket_lattice(N: int) -> list[TorusPoint]:
    """The sqrt(N) x sqrt(N) analysis grid {(j/K, l/K)}, K = sqrt(N).

    This family is used as a frame; no orthonormality is assumed (the Gram
    conditioning is reported by the harness instead).
    """
    k = math.isqrt(N)
    if k * k != N:
        raise NotPerfectSquareError(f"N must be a perfect square, got {N}")
    return [TorusPoint(j / k, l / k) for j in range(k) for l in range(k)]
