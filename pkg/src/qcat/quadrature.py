"""Adaptive tanh-sinh quadrature and the propagator-kernel oracle.

The oracle exists to certify closed forms elsewhere in the package; nothing in
the production paths calls it.  It evaluates the quantized-map integral

    [U f](x) = a^(-1/2) int exp(2*pi*i*S(x, xi)/h) fhat(xi) dxi,
    S(x, xi) = (c x^2 + 2 x xi - b xi^2) / (2 a),

with fhat the 1/h-normalized plane-wave decomposition
fhat(xi) = (1/h) int exp(-2*i*pi*y*xi/h) f(y) dy, itself computed by
quadrature so the oracle shares no code with the closed-form Gaussian algebra.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .classical import FlowCoefficients, Sl2IntMatrix
from .errors import QuadratureNonConvergenceError, ZeroACoefficientError
from .metaplectic import GaussianState, gaussian_eval

__all__ = [
    "tanh_sinh",
    "tanh_sinh_nodes",
    "gaussian_window",
    "kernel_quadrature_oracle",
    "overlap_quadrature",
]

_T_MAX = 3.9  # |t| beyond this the tanh-sinh weight is below 1e-17


def tanh_sinh_nodes(level: int) -> tuple[np.ndarray, np.ndarray]:
    """Abscissae and weights of the tanh-sinh rule on (-1, 1) at step 2^-level."""
    step = 0.5 ** level
    k = np.arange(-int(_T_MAX / step), int(_T_MAX / step) + 1)
    t = k * step
    sh = np.sinh(t)
    x = np.tanh(0.5 * math.pi * sh)
    w = step * 0.5 * math.pi * np.cosh(t) / np.cosh(0.5 * math.pi * sh) ** 2
    return x, w


def tanh_sinh(f: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
              tol: float = 1e-9, max_level: int = 11) -> complex:
    """Integrate a (vectorized) complex function over [lo, hi].

    Levels are refined until two successive estimates differ by less than
    ``tol`` times max(1, |estimate|).

    Raises:
        QuadratureNonConvergenceError: if the tolerance is unreachable at the
            maximum refinement level.
    """
    mid = 0.5 * (hi + lo)
    rad = 0.5 * (hi - lo)
    prev = None
    agreements = 0
    for level in range(4, max_level + 1):
        x, w = tanh_sinh_nodes(level)
        est = complex(rad * np.sum(w * f(mid + rad * x)))
        if prev is not None and abs(est - prev) < tol * max(1.0, abs(est)):
            # two consecutive agreements guard against oscillatory aliasing
            agreements += 1
            if agreements >= 2:
                return est
        else:
            agreements = 0
        prev = est
    raise QuadratureNonConvergenceError(
        f"tanh-sinh did not converge to {tol} within {max_level} levels"
    )


def gaussian_window(g: GaussianState, tail: float = 1e-14) -> tuple[float, float]:
    """Interval outside which |g| is below ``tail`` times its peak."""
    im = complex(g.theta).imag
    half = math.sqrt(g.h * math.log(1.0 / tail) / (math.pi * im))
    return (g.q - half, g.q + half)


def _window_of(f, h: float, window: tuple[float, float] | None) -> tuple[float, float]:
    if isinstance(f, GaussianState):
        return gaussian_window(f)
    if window is None:
        raise ValueError("an explicit window is required for a plain callable")
    return window


def _as_callable(f):
    if isinstance(f, GaussianState):
        return lambda x: gaussian_eval(f, x)
    return f


def kernel_quadrature_oracle(m, f, x: float, h: float,
                             window: tuple[float, float] | None = None,
                             tol: float = 1e-9, max_level: int = 11) -> complex:
    """Value at ``x`` of the propagated function, by double quadrature.

    ``m`` is an :class:`Sl2IntMatrix` or :class:`FlowCoefficients` with a > 0
    (the principal real branch of a^(-1/2) is used, which is the branch the
    closed forms track for such matrices).  ``f`` is a GaussianState or a
    vectorized callable with super-exponential decay, in which case a position
    ``window`` containing its support must be given.

    Raises:
        ZeroACoefficientError: if a = 0.
        QuadratureNonConvergenceError: from the underlying integrator.
    """
    if isinstance(m, Sl2IntMatrix):
        a, b, c = float(m.a), float(m.b), float(m.c)
    elif isinstance(m, FlowCoefficients):
        a, b, c = m.a, m.b, m.c
    else:
        raise TypeError(f"unsupported propagator input {type(m)!r}")
    if a == 0.0:
        raise ZeroACoefficientError("kernel formula degenerates at a = 0")

    y_lo, y_hi = _window_of(f, h, window)
    func = _as_callable(f)
    # Frequency window: for a Gaussian input the exact transform envelope is
    # available; otherwise fall back to a generous uncertainty-scale estimate.
    if isinstance(f, GaussianState):
        from .metaplectic import h_fourier_gaussian

        flo, fhi = gaussian_window(h_fourier_gaussian(f))
        xi_half = max(abs(flo), abs(fhi)) + math.sqrt(h)
    else:
        sigma = max(0.25 * (y_hi - y_lo), math.sqrt(h))
        xi_half = 10.0 * h / sigma + 10.0 * sigma
    prev = None
    agreements = 0
    for level in range(4, max_level + 1):
        xs, ws = tanh_sinh_nodes(level)
        y = 0.5 * (y_hi + y_lo) + 0.5 * (y_hi - y_lo) * xs
        wy = 0.5 * (y_hi - y_lo) * ws
        xi = xi_half * xs
        wxi = xi_half * ws
        # fhat(xi_j) = (1/h) sum_i wy_i exp(-2*i*pi*y_i*xi_j/h) f(y_i)
        phase = np.exp(-2j * math.pi * np.outer(y, xi) / h)
        fhat = (wy * func(y)) @ phase / h
        s = (c * x * x + 2.0 * x * xi - b * xi * xi) / (2.0 * a)
        est = complex(a ** -0.5 * np.sum(wxi * np.exp(2j * math.pi * s / h) * fhat))
        if prev is not None and abs(est - prev) < tol * max(1.0, abs(est)):
            agreements += 1
            if agreements >= 2:
                return est
        else:
            agreements = 0
        prev = est
    raise QuadratureNonConvergenceError(
        f"kernel oracle did not converge to {tol} within {max_level} levels"
    )


def overlap_quadrature(f, g, h: float, window: tuple[float, float] | None = None,
                       tol: float = 1e-10) -> complex:
    """int f(x) conj(g(x)) dx by tanh-sinh, for cross-checking closed forms."""
    if window is None:
        lo1, hi1 = _window_of(f, h, None)
        lo2, hi2 = _window_of(g, h, None)
        # The product decays at least as fast as the narrower factor.
        window = (max(lo1, lo2) - 1.0, min(hi1, hi2) + 1.0)
        if window[0] >= window[1]:
            window = (min(lo1, lo2), max(hi1, hi2))
    ff, gg = _as_callable(f), _as_callable(g)
    return tanh_sinh(lambda x: ff(x) * np.conj(gg(x)), window[0], window[1], tol=tol)
