"""N-scaled Hermite polynomials and their large-order asymptotics.

The polynomials are orthogonal with respect to ``exp(-N x**2 / 2)``::

    h_k(x) = (-1)**k exp(N x**2/2) d^k/dx^k exp(-N x**2/2) = N**k x**k + ...

Orders of a few hundred overflow double precision, so every evaluation is
carried as a mantissa with a separate natural-log scale and reported as a
:class:`ScaledValue`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from guespec.airy import airy_ai

# |x - y| below this (times max(1, |x|)) switches to the confluent formula
CONFLUENCE_RTOL = 1e-6

_RESCALE_ABOVE = 1e100


@dataclass(frozen=True)
class ScaledValue:
    """A real number stored as ``sign * exp(log_magnitude)``."""

    sign: int
    log_magnitude: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")
        if self.sign == 0 and self.log_magnitude != -math.inf:
            object.__setattr__(self, "log_magnitude", -math.inf)

    @classmethod
    def from_float(cls, value: float) -> "ScaledValue":
        if not math.isfinite(value):
            raise ValueError("value must be finite")
        if value == 0.0:
            return cls(0, -math.inf)
        return cls(1 if value > 0 else -1, math.log(abs(value)))

    @property
    def value(self) -> float:
        """Plain float; overflows to +-inf when not representable."""
        if self.sign == 0:
            return 0.0
        try:
            return self.sign * math.exp(self.log_magnitude)
        except OverflowError:
            return self.sign * math.inf

    def __mul__(self, other: "ScaledValue") -> "ScaledValue":
        return ScaledValue(self.sign * other.sign, self.log_magnitude + other.log_magnitude)

    def __neg__(self) -> "ScaledValue":
        return ScaledValue(-self.sign, self.log_magnitude)

    def scale(self, log_factor: float) -> "ScaledValue":
        """Multiply by ``exp(log_factor)``."""
        return ScaledValue(self.sign, self.log_magnitude + log_factor)

    def ratio(self, other: "ScaledValue") -> float:
        """``self / other`` as a float, safe when both are huge."""
        if other.sign == 0:
            raise ZeroDivisionError("division by a zero ScaledValue")
        if self.sign == 0:
            return 0.0
        return self.sign * other.sign * math.exp(self.log_magnitude - other.log_magnitude)


@dataclass(frozen=True)
class HermiteBasis:
    """Orthonormal Hermite system for the weight ``exp(-N x**2 / 2)``.

    Parameters
    ----------
    weight_scale : int
        The matrix size ``N`` entering the weight.
    max_order : int
        Highest polynomial order callers may request.
    """

    weight_scale: int
    max_order: int

    def __post_init__(self):
        if int(self.weight_scale) != self.weight_scale or self.weight_scale < 1:
            raise ValueError("weight_scale must be a positive integer")
        if int(self.max_order) != self.max_order or self.max_order < 0:
            raise ValueError("max_order must be a non-negative integer")

    def log_norm(self, k: int) -> float:
        """Natural log of ``sqrt(k! N**k sqrt(2 pi / N))``, the factor between h_k and its orthonormal version."""
        n = self.weight_scale
        return 0.5 * (math.lgamma(k + 1) + k * math.log(n) + 0.5 * math.log(2 * math.pi / n))


def orthonormal_table(x, k_max: int, n: int, weighted: bool = False):
    """Orthonormal Hermite values of orders 0..k_max at every point of ``x``.

    Parameters
    ----------
    x : array_like
        Real evaluation points.
    k_max : int
        Highest order.
    n : int
        Weight scale ``N``.
    weighted : bool
        If true, include the factor ``exp(-N x**2 / 4)`` so that the rows are
        the orthonormal Hermite *functions*.

    Returns
    -------
    mantissa, log_scale : ndarray
        Arrays of shape ``(k_max + 1,) + x.shape``; the value of order ``k`` is
        ``mantissa[k] * exp(log_scale[k])``.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("evaluation points must be finite")
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    shape = x.shape
    x = x.ravel()
    mant = np.empty((k_max + 1,) + x.shape)
    logs = np.empty((k_max + 1,) + x.shape)
    prev = np.zeros(x.shape)
    cur = np.full(x.shape, (n / (2 * math.pi)) ** 0.25)
    scale = -n * x**2 / 4 if weighted else np.zeros(x.shape)
    mant[0] = cur
    logs[0] = scale
    for k in range(k_max):
        nxt = (x * cur - math.sqrt(k / n) * prev) / math.sqrt((k + 1) / n)
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE_ABOVE
        if big.any():
            factor = np.abs(cur[big])
            cur[big] /= factor
            prev[big] /= factor
            scale = scale.copy()
            scale[big] += np.log(factor)
        mant[k + 1] = cur
        logs[k + 1] = scale
    return mant.reshape((k_max + 1,) + shape), logs.reshape((k_max + 1,) + shape)


def hermite_functions(x, orders: Sequence[int], n: int) -> np.ndarray:
    """Orthonormal Hermite functions ``exp(-N x**2/4) h~_k(x)`` as plain floats.

    These are bounded by roughly ``N**(1/4)`` on the real line, so
    exponentiating the scaled representation is safe (far tails underflow to 0).
    """
    orders = list(orders)
    mant, logs = orthonormal_table(x, max(orders), n, weighted=True)
    with np.errstate(under="ignore"):
        return np.stack([mant[k] * np.exp(logs[k]) for k in orders])


def _to_scaled(m: float, log_scale: float) -> ScaledValue:
    if m == 0.0:
        return ScaledValue(0, -math.inf)
    return ScaledValue(1 if m > 0 else -1, math.log(abs(m)) + log_scale)


def _check_x(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    return x


def eval_orthonormal_sequence(x: float, k_max: int, basis: HermiteBasis) -> list[ScaledValue]:
    """Orthonormal polynomials ``h~_0(x) .. h~_{k_max}(x)`` by the three-term recurrence."""
    x = _check_x(x)
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    if k_max > basis.max_order:
        raise ValueError("k_max exceeds basis.max_order")
    mant, logs = orthonormal_table(np.array(x), k_max, basis.weight_scale)
    return [_to_scaled(float(m), float(s)) for m, s in zip(mant, logs)]


def _orthonormal(x: float, k: int, basis: HermiteBasis) -> ScaledValue:
    if k < 0:
        return ScaledValue(0, -math.inf)
    return eval_orthonormal_sequence(x, k, basis)[k]


def hermite_value(x: float, k: int, basis: HermiteBasis) -> ScaledValue:
    """The un-normalized polynomial ``h_k(x)`` (leading coefficient ``N**k``)."""
    if not 0 <= k <= basis.max_order:
        raise ValueError("order out of range")
    return _orthonormal(x, k, basis).scale(basis.log_norm(k))


def monic_hermite(x: float, k: int, basis: HermiteBasis) -> ScaledValue:
    """``h_k(x) / N**k``, the monic Hermite polynomial."""
    return hermite_value(x, k, basis).scale(-k * math.log(basis.weight_scale))


def hermite_derivative(x: float, k: int, basis: HermiteBasis) -> ScaledValue:
    """``h_k'(x) = N k h_{k-1}(x)``."""
    if not 0 <= k <= basis.max_order:
        raise ValueError("order out of range")
    x = _check_x(x)
    if k == 0:
        return ScaledValue(0, -math.inf)
    return hermite_value(x, k - 1, basis).scale(math.log(basis.weight_scale * k))


def christoffel_darboux(x: float, y: float, n: int, basis: HermiteBasis) -> float:
    """``sum_{k<n} h~_k(x) h~_k(y)`` via the two-term Christoffel-Darboux ratio.

    Near the diagonal the confluent form is used at the midpoint.
    """
    x, y = _check_x(x), _check_x(y)
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > basis.max_order:
        raise ValueError("n exceeds basis.max_order")
    N = basis.weight_scale
    if abs(x - y) < CONFLUENCE_RTOL * max(1.0, abs(x)):
        mid = 0.5 * (x + y)
        seq = eval_orthonormal_sequence(mid, n, basis)
        first = (seq[n - 1] * seq[n - 1]).value * n
        second = (seq[n - 2] * seq[n]).value * math.sqrt(n * (n - 1)) if n >= 2 else 0.0
        return first - second
    sx = eval_orthonormal_sequence(x, n, basis)
    sy = eval_orthonormal_sequence(y, n, basis)
    num = (sy[n - 1] * sx[n]).value - (sx[n - 1] * sy[n]).value
    return math.sqrt(n / N) * num / (x - y)


def plancherel_rotach_bulk(x: float, N: int, n: int = 0) -> ScaledValue:
    """Leading oscillatory asymptotics of ``h_{N+n}(x)`` for ``|x| < 2``."""
    x = _check_x(x)
    if abs(x) >= 2:
        raise ValueError("bulk regime requires |x| < 2")
    if abs(n) > N / 10:
        raise ValueError("shift n must satisfy |n| <= N/10")
    phi = math.acos(x / 2)
    osc = math.cos((n + 0.5) * phi - math.pi / 4 + N * (phi - 0.5 * math.sin(2 * phi)))
    log_env = (N + n) * math.log(N) + 0.5 * math.log(2 / math.sin(phi)) + 0.5 * N * math.cos(2 * phi)
    return ScaledValue.from_float(osc).scale(log_env)


def plancherel_rotach_outside(x: float, N: int, n: int = 0) -> ScaledValue:
    """Leading exponential asymptotics of ``h_{N+n}(x)`` for ``|x| > 2``.

    With ``x = 2 cosh(phi)``::

        h_{N+n}(x) ~ N**(N+n) exp(N x**2/4 - N/2) (2 sinh phi)**(-1/2)
                     * exp((n + 1/2) phi - (N/2)(sinh 2phi - 2phi))
    """
    x = _check_x(x)
    if abs(x) <= 2:
        raise ValueError("outside regime requires |x| > 2")
    if abs(n) > N / 10:
        raise ValueError("shift n must satisfy |n| <= N/10")
    sign = 1
    if x < 0:
        x = -x
        sign = -1 if (N + n) % 2 else 1
    phi = math.acosh(x / 2)
    log_mag = (
        (N + n) * math.log(N)
        + N * x * x / 4
        - N / 2
        - 0.5 * math.log(2 * math.sinh(phi))
        + (n + 0.5) * phi
        - 0.5 * N * (math.sinh(2 * phi) - 2 * phi)
    )
    return ScaledValue(sign, log_mag)


def plancherel_rotach_edge(xi: float, N: int, n: int = 0) -> ScaledValue:
    """Airy-regime asymptotics of ``h_{N+n}(2 - xi N**(-2/3))``.

    ``h_{N+n} ~ sqrt(2 pi) N**(1/6) N**(N+n) exp(N/2 - N**(1/3) xi) Ai(-xi)``.
    """
    xi = _check_x(xi)
    if abs(xi) > 0.25 * N ** (2 / 3):
        raise ValueError("xi too large for the edge regime")
    ai = airy_ai(-xi).ai
    log_env = (
        0.5 * math.log(2 * math.pi)
        + math.log(N) / 6
        + (N + n) * math.log(N)
        + N / 2
        - N ** (1 / 3) * xi
    )
    return ScaledValue.from_float(ai).scale(log_env)
