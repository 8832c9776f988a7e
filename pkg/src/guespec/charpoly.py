"""Averages of characteristic polynomials ``Z(mu) = det(mu - H)`` and their ratios.

Polynomials are monic and orthogonal for ``exp(-W x**2 / 2)``; ``W`` defaults
to the matrix size ``N``. Internally the orthonormal versions are used and
converted explicitly.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import numpy as np

from guespec.hermite import HermiteBasis, orthonormal_table
from guespec.quadrature import gauss_legendre

CONFLUENCE_RTOL = 1e-6
# below this |Im nu| the Cauchy transform is flagged as reduced accuracy
CAUCHY_ACCURATE_IM = 0.05


class AccuracyWarning(UserWarning):
    """Result computed outside the regime with a guaranteed accuracy."""


@dataclass(frozen=True)
class RatioKernelResult:
    value: complex
    scale_r: float


def _orthonormal_complex(z: complex, k_max: int, n: int):
    """Orthonormal Hermite values at a complex point as (mantissa, log-scale) lists."""
    mant = [complex((n / (2 * math.pi)) ** 0.25)]
    logs = [0.0]
    prev, cur, scale = 0j, mant[0], 0.0
    for k in range(k_max):
        nxt = (z * cur - math.sqrt(k / n) * prev) / math.sqrt((k + 1) / n)
        prev, cur = cur, nxt
        size = abs(cur)
        if size > 1e100:
            prev /= size
            cur /= size
            scale += math.log(size)
        mant.append(cur)
        logs.append(scale)
    return mant, logs


def _log_monic_factor(k: int, w: int) -> float:
    return HermiteBasis(w, max(k, 0)).log_norm(k) - k * math.log(w)


def monic_sequence(mu: complex, k_max: int, weight_scale: int) -> list[complex]:
    """Monic Hermite values ``pi_0(mu) .. pi_{k_max}(mu)`` as complex numbers."""
    mant, logs = _orthonormal_complex(complex(mu), k_max, weight_scale)
    out = []
    for k, (m, s) in enumerate(zip(mant, logs)):
        mag = s + _log_monic_factor(k, weight_scale)
        out.append(m * math.exp(mag) if mag < 700 else m * math.inf)
    return out


def _weight(N: int, weight_scale: int | None) -> int:
    if N < 1:
        raise ValueError("N must be at least 1")
    w = N if weight_scale is None else weight_scale
    if w < 1:
        raise ValueError("weight scale must be positive")
    return w


def _maybe_real(z: complex, mu_values) -> complex | float:
    if all(isinstance(m, (int, float)) for m in mu_values):
        return float(z.real)
    return z


def expected_charpoly(mu, N: int, weight_scale: int | None = None):
    """``E[det(mu - H)]``, the monic Hermite polynomial of degree N."""
    w = _weight(N, weight_scale)
    return _maybe_real(monic_sequence(mu, N, w)[N], [mu])


def second_moment(mu, N: int, weight_scale: int | None = None):
    """``E[det(mu - H)**2] = pi_{N+1}' pi_N - pi_N' pi_{N+1}`` with ``pi_k' = k pi_{k-1}``."""
    w = _weight(N, weight_scale)
    p = monic_sequence(mu, N + 1, w)
    value = (N + 1) * p[N] ** 2 - N * p[N - 1] * p[N + 1]
    return _maybe_real(value, [mu])


def pair_correlation(mu1, mu2, N: int, weight_scale: int | None = None):
    """``E[det(mu1 - H) det(mu2 - H)]`` normalized to leading term ``mu1**N mu2**N``."""
    w = _weight(N, weight_scale)
    if abs(mu1 - mu2) < CONFLUENCE_RTOL * max(1.0, abs(mu1)):
        return second_moment(0.5 * (mu1 + mu2), N, w)
    p1 = monic_sequence(mu1, N + 1, w)
    p2 = monic_sequence(mu2, N + 1, w)
    value = (p1[N + 1] * p2[N] - p1[N] * p2[N + 1]) / (mu1 - mu2)
    return _maybe_real(value, [mu1, mu2])


def _cauchy_rule(nu: complex, n: int):
    """Composite Gauss-Legendre nodes on the effective support, graded toward Re(nu)."""
    half = math.sqrt(200.0 / n)
    width = min(half / 8, 2.0 / n)
    edges = set(np.linspace(-half, half, int(math.ceil(2 * half / width)) + 1).tolist())
    a, b = nu.real, abs(nu.imag)
    step = b
    if -half < a < half:
        edges.add(a)
        while step < 2 * half:
            for p in (a - step, a + step):
                if -half < p < half:
                    edges.add(p)
            step *= 2
    edges = np.array(sorted(edges))
    edges = edges[np.concatenate(([True], np.diff(edges) > 1e-15))]
    base = gauss_legendre(16)
    mids = 0.5 * (edges[1:] + edges[:-1])
    halfw = 0.5 * np.diff(edges)
    nodes = (mids[:, None] + halfw[:, None] * base.nodes[None, :]).ravel()
    weights = (halfw[:, None] * base.weights[None, :]).ravel()
    return nodes, weights


def cauchy_transforms_orthonormal(nu: complex, orders, n: int) -> dict[int, complex]:
    """``(1/2 pi i) integral exp(-n l**2/2) h~_k(l) / (nu - l) dl`` for several orders."""
    nu = complex(nu)
    if nu.imag == 0:
        raise ValueError("Cauchy transform needs Im(nu) != 0")
    orders = list(orders)
    nodes, weights = _cauchy_rule(nu, n)
    mant, logs = orthonormal_table(nodes, max(orders), n)
    pole = weights / (nu - nodes)
    out = {}
    with np.errstate(under="ignore"):
        for k in orders:
            integrand = mant[k] * np.exp(logs[k] - 0.5 * n * nodes**2)
            out[k] = complex(np.sum(pole * integrand)) / (2j * math.pi)
    return out


def cauchy_transform(nu, k: int, N: int, warn: bool = True) -> complex:
    """Monic Cauchy transform ``f_k(nu) = (1/2 pi i) integral exp(-N l**2/2) pi_k(l)/(nu - l) dl``.

    Evaluated by real-axis quadrature; the pole at ``nu`` is resolved by
    panels graded geometrically toward ``Re(nu)`` on the scale ``|Im(nu)|``.
    """
    nu = complex(nu)
    if nu.imag == 0:
        raise ValueError("Cauchy transform needs Im(nu) != 0")
    if k < 0 or k > N + 2:
        raise ValueError("order must satisfy 0 <= k <= N + 2")
    if warn and abs(nu.imag) < CAUCHY_ACCURATE_IM:
        warnings.warn(f"|Im nu| = {abs(nu.imag):g} below {CAUCHY_ACCURATE_IM}", AccuracyWarning, stacklevel=2)
    value = cauchy_transforms_orthonormal(nu, [k], N)[k]
    return value * math.exp(_log_monic_factor(k, N))


def ratio_kernel(mu, nu, N: int) -> RatioKernelResult:
    """``E[det(mu - H) / det(nu - H)]`` for real or complex ``mu`` and non-real ``nu``.

    Written with orthonormal polynomials the normalization ``K(nu, nu) = 1``
    fixes the prefactor to ``-2 pi i`` independently of N (the Casoratian of
    the polynomial and Cauchy-transform sequences is constant in ``nu``)::

        K_N(mu, nu) = -2 pi i [h~_{N-1}(mu) f~_N(nu) - h~_N(mu) f~_{N-1}(nu)]
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    nu = complex(nu)
    if nu.imag == 0:
        raise ValueError("ratio kernel needs Im(nu) != 0")
    f = cauchy_transforms_orthonormal(nu, [N - 1, N], N)
    mant, logs = _orthonormal_complex(complex(mu), N, N)
    h_prev = mant[N - 1] * math.exp(logs[N - 1])
    h_cur = mant[N] * math.exp(logs[N])
    value = -2j * math.pi * (h_prev * f[N] - h_cur * f[N - 1])
    scale_r = N * (complex(mu).real - nu.real) / math.pi
    return RatioKernelResult(value, scale_r)


def scaled_ratio_kernel(r: float, half_plane: int) -> complex:
    """Bulk limit of the ratio kernel: ``exp(-i pi r)`` above the axis, ``exp(+i pi r)`` below."""
    if half_plane not in (1, -1):
        raise ValueError("half_plane must be +1 or -1")
    return cmath.exp(-1j * math.pi * r * half_plane)


def scaled_four_point(zeta1, zeta2, kappa1, kappa2, threshold: float = 1e-9) -> complex:
    """Bulk limit of ``E[Z(mu1) Z(mu2) / (Z(nu1) Z(nu2))]`` with Im nu1 > 0 > Im nu2.

    Arguments are unfolded coordinates (``N mu / pi`` at the origin); the
    ``kappa`` may carry their imaginary parts. The value is::

        exp(i pi (k1 - k2)) / ((z1 - z2)(k1 - k2))
          * [exp(i pi (z1 - z2)) (z1 - k1)(z2 - k2) - exp(-i pi (z1 - z2)) (z1 - k2)(z2 - k1)]

    which reduces to the two-point limits when a numerator and a denominator
    argument coincide.
    """
    z1, z2, k1, k2 = (complex(v) for v in (zeta1, zeta2, kappa1, kappa2))
    pts = [z1, z2, k1, k2]
    for i, p in enumerate(pts):
        if sum(abs(p - q) < threshold for q in pts) >= 3:
            raise ValueError("three or more coinciding arguments")
    if abs(k1 - k2) < threshold:
        raise ValueError("kappa1 = kappa2 is a pole of the limiting ratio")
    front = cmath.exp(1j * math.pi * (k1 - k2))
    if abs(z1 - z2) < threshold:
        z = 0.5 * (z1 + z2)
        return front * (2j * math.pi * (z - k1) * (z - k2) / (k1 - k2) + 1)
    a = z1 - z2
    bracket = cmath.exp(1j * math.pi * a) * (z1 - k1) * (z2 - k2) - cmath.exp(-1j * math.pi * a) * (z1 - k2) * (z2 - k1)
    return front * bracket / (a * (k1 - k2))
