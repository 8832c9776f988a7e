"""Airy function Ai, its derivative, and the soft-edge kernel.

Inside ``|xi| <= SERIES_CUTOFF`` the Maclaurin series is summed in extended
precision (the two power series grow like ``exp(2/3 |xi|**1.5)`` and cancel);
outside, the standard large-argument expansions are summed to their smallest
term in double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

SERIES_CUTOFF = 8.0
# kernel arguments closer than this use the diagonal formula at the midpoint
KERNEL_CONFLUENCE = 1e-7


@dataclass(frozen=True)
class AiryValues:
    ai: float
    ai_prime: float
    at: float

    @property
    def ai_second(self) -> float:
        """Second derivative from the Airy equation ``Ai'' = xi Ai``."""
        return self.at * self.ai


def _series(xi: float) -> tuple[float, float]:
    # digits cancelled by the two growing series, plus a working margin
    dps = 25 + int(abs(xi) ** 1.5 * 2 / 3 / math.log(10)) + 1
    with mpmath.workdps(dps):
        x = mpmath.mpf(xi)
        x3 = x**3
        c1 = 1 / (mpmath.cbrt(9) * mpmath.gamma(mpmath.mpf(2) / 3))
        c2 = 1 / (mpmath.cbrt(3) * mpmath.gamma(mpmath.mpf(1) / 3))
        tol = mpmath.mpf(10) ** (-dps)
        # f = sum a_k x^{3k}, g = sum b_k x^{3k+1}, differentiated termwise
        a = b = mpmath.mpf(1)
        f, g = mpmath.mpf(1), x
        fp, gp = mpmath.mpf(0), mpmath.mpf(1)
        power_prev = mpmath.mpf(1)
        k = 1
        while True:
            a /= (3 * k - 1) * (3 * k)
            b /= (3 * k) * (3 * k + 1)
            power = power_prev * x3
            terms = (a * power, 3 * k * a * x * x * power_prev, b * power * x, (3 * k + 1) * b * power)
            f += terms[0]
            fp += terms[1]
            g += terms[2]
            gp += terms[3]
            if k > 3 and max(abs(t) for t in terms) < tol:
                break
            power_prev = power
            k += 1
        ai = c1 * f - c2 * g
        aip = c1 * fp - c2 * gp
        return float(ai), float(aip)


def _asymptotic_coefficients(count: int) -> tuple[list[float], list[float]]:
    u = [1.0]
    for k in range(1, count):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
    v = [1.0] + [-(6 * k + 1) / (6 * k - 1) * u[k] for k in range(1, count)]
    return u, v


_U, _V = _asymptotic_coefficients(60)


def _sum_to_smallest(coeffs, z: float, alternate: bool) -> float:
    total = 0.0
    last = math.inf
    sign = 1.0
    for k, c in enumerate(coeffs):
        term = c / z**k
        if abs(term) > last:
            break
        total += sign * term
        last = abs(term)
        if abs(term) < 1e-17 * abs(total):
            break
        if alternate:
            sign = -sign
    return total


def _asymptotic(xi: float) -> tuple[float, float]:
    x = abs(xi)
    zeta = 2.0 / 3.0 * x**1.5
    root_pi = math.sqrt(math.pi)
    if xi > 0:
        decay = math.exp(-zeta)
        su = _sum_to_smallest(_U, zeta, alternate=True)
        sv = _sum_to_smallest(_V, zeta, alternate=True)
        ai = decay / (2 * root_pi * x**0.25) * su
        aip = -(x**0.25) * decay / (2 * root_pi) * sv
        return ai, aip
    theta = zeta - math.pi / 4
    z2 = zeta * zeta
    u_even = _sum_to_smallest(_U[0::2], z2, alternate=True)
    u_odd = _sum_to_smallest(_U[1::2], z2, alternate=True) / zeta
    v_even = _sum_to_smallest(_V[0::2], z2, alternate=True)
    v_odd = _sum_to_smallest(_V[1::2], z2, alternate=True) / zeta
    ai = (math.cos(theta) * u_even + math.sin(theta) * u_odd) / (root_pi * x**0.25)
    aip = x**0.25 / root_pi * (math.sin(theta) * v_even - math.cos(theta) * v_odd)
    return ai, aip


def airy_ai(xi: float) -> AiryValues:
    """Ai and Ai' at a real point.

    Parameters
    ----------
    xi : float
        Evaluation point.

    Returns
    -------
    AiryValues
        ``ai``, ``ai_prime`` and the point itself.
    """
    xi = float(xi)
    if not math.isfinite(xi):
        raise ValueError("xi must be finite")
    if abs(xi) <= SERIES_CUTOFF:
        ai, aip = _series(xi)
    else:
        ai, aip = _asymptotic(xi)
    return AiryValues(ai, aip, xi)


def airy_arrays(xi) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise Ai and Ai' over an array of points."""
    xi = np.asarray(xi, dtype=float)
    ai = np.empty(xi.shape)
    aip = np.empty(xi.shape)
    for idx, value in np.ndenumerate(xi):
        r = airy_ai(value)
        ai[idx], aip[idx] = r.ai, r.ai_prime
    return ai, aip


def edge_density(xi: float) -> float:
    """``Ai'(xi)**2 - xi Ai(xi)**2``, the soft-edge one-point function."""
    r = airy_ai(xi)
    return max(r.ai_prime**2 - xi * r.ai**2, 0.0)


def airy_kernel(xi1: float, xi2: float) -> float:
    """``[Ai(a) Ai'(b) - Ai(b) Ai'(a)] / (a - b)``, with the diagonal limit near a = b."""
    a, b = float(xi1), float(xi2)
    if abs(a - b) < KERNEL_CONFLUENCE * max(1.0, abs(a)):
        # the diagonal value has derivative -Ai^2, so the midpoint is second-order accurate
        return edge_density(0.5 * (a + b))
    ra, rb = airy_ai(a), airy_ai(b)
    return (ra.ai * rb.ai_prime - rb.ai * ra.ai_prime) / (a - b)
