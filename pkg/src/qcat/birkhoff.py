"""The parabolic skew product encoding the interference phases, damped
Birkhoff sums of its orbits, and the assembled matrix-element prediction.

The skew product at parameter N is

    T(x, y) = (x + alpha, y + N x + beta) mod 1,   alpha = tan(theta),

with beta = alpha N / 2, so the m-th iterate is exactly
(x + m alpha, y + (m^2/2) N alpha + m N x).  The phase e^{2 i pi y_m} then
reproduces e^{i pi tan m^2 / h} e^{2 i pi m s / h}, which is what makes the
band sums along the unstable line Birkhoff sums of this map.

Predicted matrix element (time n, h = 1/N, source (a,b), target (q0,p0)):

    RHS = D * P * sqrt(2/cos(theta)) * Lam^(-1/2) * lam^(-n/2)
            * sum_k chi(k/lam^n) f(T^k(s', 0)),

where f is the interference observable, chi(u) = exp(-gamma0 u^2 / h) with
gamma0 = pi*beta the damping derived from the transverse
Gaussian analysis (beta from the exact shape recursion; 1/cos^2 for
symmetric matrices), s' = b' - tan a' for the reduced image (a', b') of
M^n (a, b), Lam = 1 - i tan + beta_c lam^(-2n), and P collects the explicit
configuration phases (metaplectic branch, packet recentering, lift
reduction and target anchoring).  D is a single complex constant fitted once
on a reference batch and frozen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .classical import Sl2IntMatrix, TorusPoint, ehrenfest_time, spectral_data
from .errors import ThresholdViolationError
from .lagrangian import circle_distance, damping_coefficient
from .metaplectic import cis_turns, metaplectic_shape_orbit
from .tables import ResultTable
from .torus import matrix_element_exact

__all__ = [
    "SkewMap",
    "InterferenceObservable",
    "skew_apply",
    "skew_iterate",
    "damped_birkhoff_sum",
    "gaussian_damping",
    "theorem_rhs",
    "fit_theorem_constant",
    "theorem_error_table",
    "THEOREM_COLUMNS",
]


def _exact_frac(mult: int, value: float) -> float:
    """Fractional part of mult*value computed exactly (value is a binary
    rational; the product is reduced mod 1 with integer arithmetic)."""
    f = Fraction(mult) * Fraction(value)
    return float(f - (f.numerator // f.denominator))


@dataclass(frozen=True)
class SkewMap:
    """(x, y) -> (x + alpha, y + N x + beta) on T^2 with beta = alpha*N/2."""

    alpha: float
    N: int

    def __post_init__(self) -> None:
        if self.N % 2 != 0:
            raise ValueError("N must be even so that beta = alpha*N/2 uses an integer N/2")

    @property
    def beta_param(self) -> float:
        return self.alpha * self.N / 2.0


def skew_apply(t_map: SkewMap, pt: tuple[float, float]) -> tuple[float, float]:
    x, y = pt
    return ((x + t_map.alpha) % 1.0, (y + t_map.N * x + t_map.beta_param) % 1.0)


def skew_iterate(t_map: SkewMap, pt: tuple[float, float], m: int) -> tuple[float, float]:
    """Closed-form m-th iterate (m of either sign).

    The fractional parts of m*alpha, (m^2/2)*N*alpha and m*N*x are computed
    with exact rational arithmetic, so the mod-1 error stays at one rounding
    even for m ~ 1e4.
    """
    x, y = pt
    xm = (x + _exact_frac(m, t_map.alpha)) % 1.0
    ym = (y + _exact_frac(m * m * (t_map.N // 2), t_map.alpha) + _exact_frac(m * t_map.N, x)) % 1.0
    return (xm, ym)


@dataclass(frozen=True)
class InterferenceObservable:
    """Observable on the skew torus whose Birkhoff sums match the band sums.

    f(x, y) = F0(d(x, s0)/sqrt(h)) * exp(2 i pi q0 d(x, s0) / h) * exp(2 i pi y)

    with d the signed circle distance, s0 = p0 - q0 tan(theta), and profile
    F0(u) = exp(-pi cos^2 (1 + i tan) u^2).  ``beta_coeff`` optionally
    carries the general damping coefficient (nonsymmetric matrices); the
    default is the symmetric value 1/cos^2(theta).
    """

    q0: float
    p0: float
    theta: float
    h: float
    beta_coeff: complex | None = None

    @property
    def s0(self) -> float:
        return self.p0 - math.tan(self.theta) * self.q0

    @property
    def gamma0(self) -> complex:
        """Damping exponent scale pi * beta; Re(gamma0) > 0 always."""
        if self.beta_coeff is not None:
            return math.pi * complex(self.beta_coeff)
        return complex(math.pi / math.cos(self.theta) ** 2)

    def profile(self, u):
        t = math.tan(self.theta)
        c2 = math.cos(self.theta) ** 2
        uu = np.asarray(u, dtype=float)
        return np.exp(-math.pi * c2 * complex(1.0, t) * uu * uu)

    def eval(self, x, y):
        n_inv = 1.0 / self.h
        d = circle_distance(x, self.s0)
        return (
            self.profile(np.asarray(d) / math.sqrt(self.h))
            * cis_turns(self.q0 * np.asarray(d) * n_inv)
            * cis_turns(y)
        )


def gaussian_damping(obs: InterferenceObservable):
    """chi_h(u) = exp(-gamma0 u^2 / h), the derived damping window."""
    g0 = obs.gamma0
    h = obs.h

    def chi(u):
        uu = np.asarray(u, dtype=float)
        return np.exp(-g0 * uu * uu / h)

    return chi


def _support_half_width(chi, m_time: float, cutoff: float = 1e-14, consecutive: int = 8) -> int:
    """Smallest K with |chi(k/m)| < cutoff for the ``consecutive`` k beyond K."""
    k = 0
    below = 0
    while below < consecutive:
        k += 1
        if abs(complex(np.asarray(chi(k / m_time), dtype=complex))) < cutoff:
            below += 1
        else:
            below = 0
        if k > 50_000_000:
            raise ValueError("damping window does not decay")
    return k - consecutive


def damped_birkhoff_sum(t_map: SkewMap, f, chi, pt: tuple[float, float], m_time: float) -> complex:
    """S^chi_m(f)(pt) = sum_k chi(k/m) f(T^k pt), truncated where |chi| < 1e-14.

    ``m_time`` may be non-integer (the damping argument k/m is evaluated at
    real arguments while k stays integer).  Terms are summed in ascending k.
    """
    if m_time <= 0:
        raise ValueError("m_time must be positive")
    k_max = _support_half_width(chi, m_time)
    k = np.arange(-k_max, k_max + 1)
    x, y = pt
    alpha_l = np.longdouble(t_map.alpha)
    k_l = np.asarray(k, dtype=np.longdouble)
    xs = np.asarray(x + np.asarray(k_l * alpha_l, dtype=np.float64), dtype=float)
    y_turns = y + k_l * k_l * (t_map.N // 2) * alpha_l + k_l * t_map.N * np.longdouble(x)
    feval = f.eval if isinstance(f, InterferenceObservable) else f
    # e^{2 i pi y_k} is supplied through the y argument in turns.
    vals = np.asarray(chi(k / m_time), dtype=complex) * np.asarray(
        feval(xs, np.asarray(y_turns - np.floor(y_turns), dtype=float)), dtype=complex
    )
    return complex(np.sum(vals))


def _threshold(h: float, lam: float) -> float:
    return abs(math.log(h)) / (3.0 * math.log(lam))


def theorem_rhs(
    m: Sl2IntMatrix,
    n: int,
    h: float,
    src: TorusPoint,
    dst: TorusPoint,
    scale_constant: complex = 1.0 + 0.0j,
    allow_below_threshold: bool = False,
) -> complex:
    """Predicted matrix element (D/sqrt(lam^n)) S^chi(f)(s', 0), fully phased.

    See the module docstring for the assembled formula.  ``scale_constant``
    is the fitted D.

    Raises:
        ThresholdViolationError: for n below |log h|/(3 log lam) unless the
            caller opts in (exploratory plots).
    """
    sd = spectral_data(m)
    if n + 1e-12 < _threshold(h, sd.lam) and not allow_below_threshold:
        raise ThresholdViolationError(
            f"n={n} below validity threshold {_threshold(h, sd.lam):.3f}"
        )
    n_even = round(1.0 / h)
    t = math.tan(sd.theta)
    lam = sd.lam
    a, b = src.q, src.p
    q0, p0 = dst.q, dst.p

    big_a, big_b = m.power(n).apply(a, b)
    # Reduce the lifted image by the integer vector closest to the target
    # column q0: the damping window of the sum is then centered within half a
    # lattice step of k = 0, which is where chi(k/M) puts it.
    j1 = round(big_a - q0)
    j2 = math.floor(big_b)
    a_prime = big_a - j1
    b_prime = big_b - j2
    s_real = big_b - t * big_a
    s_red = b_prime - t * a_prime

    beta_c = damping_coefficient(m)
    lam_c = 1.0 - 1j * t + beta_c * lam ** (-2.0 * n)

    shape = metaplectic_shape_orbit(m, n, h)
    phi_n = complex(shape.amplitude / abs(shape.amplitude))

    phases = (
        phi_n
        * cis_turns(-a * b * n_even / 2.0)
        * cis_turns(n_even * (t * big_a * big_a - big_a * big_b) / 2.0)
        * cis_turns(n_even * t * q0 * q0 / 2.0)
        * cis_turns(n_even * q0 * (p0 - t * q0))
        * cis_turns(n_even * t * j1 * j1 / 2.0)
        * cis_turns(n_even * j1 * s_real)
    )
    amp = math.sqrt(2.0 / math.cos(sd.theta)) * lam ** (-0.5 * n) / np.sqrt(lam_c)

    obs = InterferenceObservable(q0=q0, p0=p0, theta=sd.theta, h=h, beta_coeff=beta_c)
    t_map = SkewMap(alpha=t, N=n_even)
    s_sum = damped_birkhoff_sum(t_map, obs, gaussian_damping(obs), (s_red, 0.0), lam ** n)
    return complex(scale_constant * phases * amp * s_sum)


def fit_theorem_constant(
    m: Sl2IntMatrix,
    n_ref: int = 64,
    n_pairs: int = 8,
    seed: int = 20240901,
) -> complex:
    """Complex least-squares fit of D on the reference batch
    (N = n_ref, n = ceil(1.5 t_E), ``n_pairs`` seeded point pairs).

    Fitted once and then frozen for every other configuration.
    """
    h = 1.0 / n_ref
    sd = spectral_data(m)
    n_time = math.ceil(1.5 * ehrenfest_time(h, sd.lam))
    rng = np.random.default_rng(seed)
    num = 0.0 + 0.0j
    den = 0.0
    for _ in range(n_pairs):
        src = TorusPoint(float(rng.uniform()), float(rng.uniform()))
        dst = TorusPoint(float(rng.uniform()), float(rng.uniform()))
        lhs = matrix_element_exact(m, n_time, src, dst, n_ref)
        rhs0 = theorem_rhs(m, n_time, h, src, dst)
        num += lhs * np.conj(rhs0)
        den += abs(rhs0) ** 2
    return complex(num / den)


THEOREM_COLUMNS = (
    "N",
    "n",
    "n_over_te",
    "src_q",
    "src_p",
    "dst_q",
    "dst_p",
    "lhs_re",
    "lhs_im",
    "rhs_re",
    "rhs_im",
    "lhs_abs",
    "rhs_abs",
    "residual",
    "bound",
    "ratio",
    "below_threshold",
)


def theorem_error_table(
    m: Sl2IntMatrix,
    n_values: list[int],
    n_times: dict[int, list[int]],
    pairs: list[tuple[TorusPoint, TorusPoint]],
    scale_constant: complex,
) -> ResultTable:
    """Rows of exact vs predicted matrix elements with the remainder bound.

    ``n_times`` maps each N to its list of times n.  Rows below the validity
    threshold are flagged and kept.  ``bound`` is sqrt(h) lam^(-n/2).
    """
    sd = spectral_data(m)
    rows = []
    for n_dim in sorted(n_values):
        h = 1.0 / n_dim
        te = ehrenfest_time(h, sd.lam)
        for n_time in sorted(n_times[n_dim]):
            for src, dst in pairs:
                below = n_time + 1e-12 < _threshold(h, sd.lam)
                lhs = matrix_element_exact(m, n_time, src, dst, n_dim)
                rhs = theorem_rhs(
                    m, n_time, h, src, dst, scale_constant, allow_below_threshold=True
                )
                bound = math.sqrt(h) * sd.lam ** (-0.5 * n_time)
                residual = abs(lhs - rhs)
                rows.append(
                    (
                        n_dim,
                        n_time,
                        n_time / te,
                        src.q,
                        src.p,
                        dst.q,
                        dst.p,
                        lhs.real,
                        lhs.imag,
                        rhs.real,
                        rhs.imag,
                        abs(lhs),
                        abs(rhs),
                        residual,
                        bound,
                        residual / bound,
                        below,
                    )
                )
    rows.sort(key=lambda r: (r[0], r[1]))  # stable: pair order preserved within a cell
    return ResultTable(schema="theorem", columns=THEOREM_COLUMNS, rows=rows)
