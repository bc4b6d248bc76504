"""Circle and Dirichlet-interval heat kernels with certified truncation.

Both kernels have two representations: the eigenfunction (spectral) series
and the Poisson-summed Gaussian image series.  Each routine picks the number
of terms so that an explicit tail bound is below ``tol``:

* spectral, decay rate ``a``: ``sum_{k>K} e^{-k^2 a} <= e^{-(K+1)^2 a} / (1 - e^{-2(K+1) a})``
* images with period ``P`` and reduced offset ``|d| <= P/2``:
  ``sum_{|m|>M} G(d + mP) <= erfc((M - 1/2) P / (2 sqrt t)) / P``
  (integral comparison of a decreasing Gaussian).

Complex times ``tau = eps + i t`` use the same bounds with ``|e^{-k^2 tau}| =
e^{-k^2 eps}`` and, for images, the effective variance ``|tau|^2 / eps``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import CapacityError, DomainError, PrecisionWarning

MAX_TERMS = 1_000_000
_EPS = np.finfo(float).eps


class Method(str, enum.Enum):
    SPECTRAL = "spectral"
    IMAGES = "images"
    AUTO = "auto"


@dataclass(frozen=True)
class EvalOptions:
    """Absolute truncation tolerance and series choice.

    ``AUTO`` uses images when the scaled time ``t (pi/L)^2`` is below 1
    (circle: ``t < 1``) and the spectral series otherwise.
    """

    tol: float = 1e-12
    method: Method = Method.AUTO

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        object.__setattr__(self, "method", Method(self.method))


DEFAULT = EvalOptions()


@dataclass(frozen=True)
class ComplexTime:
    """``tau = re + i*im``; ``re`` is the dissipative regularizer."""

    re: float
    im: float

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)


def _as_complex_time(tau) -> complex:
    if isinstance(tau, ComplexTime):
        return tau.value
    return complex(tau)


def spectral_terms(rate: float, prefactor: float, tol: float) -> int:
    """Smallest ``K`` with ``prefactor * sum_{k>K} e^{-k^2 rate} <= tol``."""
    target = tol / prefactor
    if target >= 1.0:
        return 0
    K = max(int(math.sqrt(-math.log(target) / rate)) - 2, 0)
    while True:
        head = (K + 1) ** 2 * rate
        gap = 2 * (K + 1) * rate
        bound = math.exp(-head) / -math.expm1(-gap) if gap < 700 else math.exp(-head)
        if bound <= target:
            return K
        K += 1
        if K > MAX_TERMS:
            raise CapacityError(f"spectral series needs more than {MAX_TERMS} terms")


def spectral_tail(rate: float, prefactor: float, K: int) -> float:
    gap = 2 * (K + 1) * rate
    return prefactor * math.exp(-(K + 1) ** 2 * rate) / -math.expm1(-gap)


def image_terms(t: float, period: float, tol: float, scale: float = 1.0) -> int:
    """Smallest ``M >= 1`` with ``scale * erfc((M - 1/2) P / (2 sqrt t)) / P <= tol``."""
    M = 1
    root = 2.0 * math.sqrt(t)
    while scale * math.erfc((M - 0.5) * period / root) / period > tol:
        M += 1
        if M > MAX_TERMS:
            raise CapacityError(f"image series needs more than {MAX_TERMS} terms")
    return M


def image_tail(t: float, period: float, M: int, scale: float = 1.0) -> float:
    return scale * math.erfc((M - 0.5) * period / (2.0 * math.sqrt(t))) / period


def _reduce(d, period):
    d = np.asarray(d, dtype=float)
    return d - period * np.round(d / period)


def _warn_precision(tol: float, magnitude: float) -> None:
    if tol < 8 * _EPS * magnitude:
        warnings.warn(
            f"tol={tol:g} is below double-precision resolution (~{8 * _EPS * magnitude:.1e}) "
            "for this kernel; result accuracy is limited by rounding",
            PrecisionWarning,
            stacklevel=3,
        )


def _scalar_or_array(value, *inputs):
    if all(np.ndim(v) == 0 for v in inputs):
        return value.item() if isinstance(value, np.ndarray) else value
    return value


def _pick(method: Method, scaled_time: float) -> Method:
    if method is Method.AUTO:
        return Method.IMAGES if scaled_time < 1.0 else Method.SPECTRAL
    return method


def circle_kernel(t: float, theta1, theta2, opts: EvalOptions = DEFAULT, backend=None):
    """Heat kernel of standard Brownian motion on the unit circle (generator d^2/dtheta^2)."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    _warn_precision(opts.tol, 1 / (2 * math.pi) + 1 / math.sqrt(4 * math.pi * t))
    return _circle(t, theta1, theta2, opts, backend)


def _circle(t, theta1, theta2, opts, backend=None):
    kern = backend or _backend.kernels
    tol = opts.tol
    d = _reduce(np.subtract(theta2, theta1), 2 * math.pi)
    if _pick(opts.method, t) is Method.IMAGES:
        M = image_terms(t, 2 * math.pi, tol)
        out = kern.wrapped_gaussian(d, t, 2 * math.pi, M)
    else:
        K = spectral_terms(t, 1 / math.pi, tol)
        out = kern.cosine_series(d, t, 2 * math.pi, K)
    return _scalar_or_array(np.asarray(out), theta1, theta2)


def _check_interval(L, *thetas):
    slack = 1e-12 * L
    for th in thetas:
        arr = np.asarray(th)
        if np.any(arr < -slack) or np.any(arr > L + slack):
            raise DomainError(f"interval coordinate outside [0, {L}]")


def dirichlet_kernel(t: float, L: float, theta1, theta2, opts: EvalOptions = DEFAULT, backend=None):
    """Heat kernel on ``[0, L]`` killed at both ends."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if not L > 0:
        raise DomainError(f"L must be positive, got {L}")
    _check_interval(L, theta1, theta2)
    _warn_precision(opts.tol, 2 / L + 2 / math.sqrt(4 * math.pi * t))
    return _dirichlet(t, L, theta1, theta2, opts, backend)


def _dirichlet(t, L, theta1, theta2, opts, backend=None):
    kern = backend or _backend.kernels
    tol = opts.tol
    a = np.clip(np.asarray(theta1, dtype=float), 0.0, L)
    b = np.clip(np.asarray(theta2, dtype=float), 0.0, L)
    rate = t * (math.pi / L) ** 2
    if _pick(opts.method, rate) is Method.IMAGES:
        # Two wrapped sums, each allotted half the tolerance.
        M = image_terms(t, 2 * L, tol / 2)
        out = kern.wrapped_gaussian(_reduce(a - b, 2 * L), t, 2 * L, M) - kern.wrapped_gaussian(
            _reduce(a + b, 2 * L), t, 2 * L, M
        )
    else:
        K = spectral_terms(rate, 2 / L, tol)
        out = kern.sine_series(a, b, t, L, K)
    out = np.asarray(out, dtype=float)
    boundary = (a == 0.0) | (a == L) | (b == 0.0) | (b == L)
    out = np.where(boundary, 0.0, out)
    return _scalar_or_array(out, theta1, theta2)


# Complex time: shared numpy code for both backends.


def _complex_wrapped_gaussian(d, tau: complex, period: float, M: int):
    out = np.zeros(np.shape(d), dtype=complex)
    for m in sorted(range(-M, M + 1), key=abs, reverse=True):
        z = d + m * period
        out += np.exp(-z * z / (4 * tau))
    return out / np.sqrt(4 * np.pi * tau)


def _complex_cosine_series(d, tau: complex, period: float, K: int):
    omega = 2 * math.pi / period
    out = np.zeros(np.shape(d), dtype=complex)
    for k in range(K, 0, -1):
        out += np.exp(-((omega * k) ** 2) * tau) * np.cos(omega * k * d)
    return (1 + 2 * out) / period


def _complex_sine_series(a, b, tau: complex, L: float, K: int):
    s = math.pi / L
    out = np.zeros(np.broadcast(a, b).shape, dtype=complex)
    for k in range(K, 0, -1):
        out += np.exp(-((s * k) ** 2) * tau) * np.sin(s * k * a) * np.sin(s * k * b)
    return (2 / L) * out


def _complex_plan(tau: complex, period: float, rate_scale: float, prefactor: float, tol: float, method: Method):
    """Choose the cheaper certified representation for complex time."""
    eps = tau.real
    t_eff = abs(tau) ** 2 / eps
    scale = math.sqrt(t_eff / abs(tau))
    K = spectral_terms(eps * rate_scale, prefactor, tol)
    M = image_terms(t_eff, period, tol, scale)
    if method is Method.AUTO:
        method = Method.IMAGES if 2 * M + 1 < K else Method.SPECTRAL
    return method, K, M


def circle_kernel_complex(tau, theta1, theta2, opts: EvalOptions = DEFAULT):
    """Circle kernel at complex time ``tau`` with ``Re tau > 0``."""
    tau = _as_complex_time(tau)
    if not tau.real > 0:
        raise DomainError(f"Re(tau) must be positive for an absolutely convergent series, got {tau}")
    d = _reduce(np.subtract(theta2, theta1), 2 * math.pi)
    method, K, M = _complex_plan(tau, 2 * math.pi, 1.0, 1 / math.pi, opts.tol, opts.method)
    if method is Method.IMAGES:
        out = _complex_wrapped_gaussian(d, tau, 2 * math.pi, M)
    else:
        out = _complex_cosine_series(d, tau, 2 * math.pi, K)
    return _scalar_or_array(np.asarray(out), theta1, theta2)


def dirichlet_kernel_complex(tau, L: float, theta1, theta2, opts: EvalOptions = DEFAULT):
    """Dirichlet interval kernel at complex time ``tau`` with ``Re tau > 0``."""
    tau = _as_complex_time(tau)
    if not tau.real > 0:
        raise DomainError(f"Re(tau) must be positive for an absolutely convergent series, got {tau}")
    if not L > 0:
        raise DomainError(f"L must be positive, got {L}")
    _check_interval(L, theta1, theta2)
    a = np.clip(np.asarray(theta1, dtype=float), 0.0, L)
    b = np.clip(np.asarray(theta2, dtype=float), 0.0, L)
    method, K, M = _complex_plan(tau, 2 * L, (math.pi / L) ** 2, 2 / L, opts.tol / 2, opts.method)
    if method is Method.IMAGES:
        out = _complex_wrapped_gaussian(_reduce(a - b, 2 * L), tau, 2 * L, M) - _complex_wrapped_gaussian(
            _reduce(a + b, 2 * L), tau, 2 * L, M
        )
    else:
        out = _complex_sine_series(a, b, tau, L, K)
    boundary = (a == 0.0) | (a == L) | (b == 0.0) | (b == L)
    out = np.where(boundary, 0.0, out)
    return _scalar_or_array(np.asarray(out), theta1, theta2)
