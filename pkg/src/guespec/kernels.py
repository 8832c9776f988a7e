"""Finite-N GUE kernel, correlation functions, and bulk/edge statistics.

Everything here uses the weight ``exp(-N x**2 / 2)`` (semicircle on [-2, 2])
and the trace normalization ``integral K_N(x, x) dx = N``.  Bulk statistics are
unfolded at the origin, where the mean spacing is ``pi / N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from guespec.airy import airy_kernel, edge_density
from guespec.hermite import CONFLUENCE_RTOL, HermiteBasis, hermite_functions
from guespec.quadrature import FredholmOperator, composite_legendre, fredholm_det, gauss_legendre

EULER_GAMMA = 0.57721566490153286061


@dataclass(frozen=True)
class FiniteNKernel:
    """Christoffel-Darboux kernel ``K_N(x, y) = sum_{j<N} phi_j(x) phi_j(y)``.

    ``phi_j`` are the orthonormal Hermite functions for the weight
    ``exp(-N x**2 / 2)``.
    """

    size: int
    basis: HermiteBasis = field(init=False)

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ValueError("kernel size must be a positive integer")
        object.__setattr__(self, "basis", HermiteBasis(self.size, self.size + 1))

    def functions(self, x, orders: Sequence[int]) -> dict[int, np.ndarray]:
        wanted = [k for k in orders if k >= 0]
        values = hermite_functions(x, wanted, self.size)
        out = {k: v for k, v in zip(wanted, values)}
        for k in orders:
            if k < 0:
                out[k] = np.zeros(np.shape(x))
        return out

    def diagonal(self, x, route: str = "darboux"):
        """``K_N(x, x)`` by one of three equivalent formulas.

        ``route`` is ``"darboux"`` (orders N-2..N), ``"shifted"`` (orders
        N-1..N+1, the h_N**2 - h_{N-1} h_{N+1} form) or ``"sum"`` (direct).
        """
        n = self.size
        x = np.asarray(x, dtype=float)
        if route == "darboux":
            f = self.functions(x, [n - 2, n - 1, n])
            return n * f[n - 1] ** 2 - math.sqrt(n * (n - 1)) * f[n - 2] * f[n]
        if route == "shifted":
            f = self.functions(x, [n - 1, n, n + 1])
            return n * f[n] ** 2 - math.sqrt(n * (n + 1)) * f[n - 1] * f[n + 1]
        if route == "sum":
            f = hermite_functions(x, range(n), n)
            return np.sum(f**2, axis=0)
        raise ValueError(f"unknown route {route!r}")

    def matrix(self, x, y) -> np.ndarray:
        """Vectorized ``K_N(x, y)`` over broadcast arrays."""
        n = self.size
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        fx = self.functions(x, [n - 1, n])
        fy = self.functions(y, [n - 1, n])
        diff = x - y
        close = np.abs(diff) < CONFLUENCE_RTOL * np.maximum(1.0, np.abs(x))
        safe = np.where(close, 1.0, diff)
        out = (fy[n - 1] * fx[n] - fx[n - 1] * fy[n]) / safe
        if np.any(close):
            out = np.where(close, self.diagonal(0.5 * (x + y)), out)
        return out


def kernel_eval(k: FiniteNKernel, x: float, y: float) -> float:
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("arguments must be finite")
    return float(k.matrix(x, y))


def mean_density(k: FiniteNKernel, x, normalized: bool = False):
    """One-point function ``R_1(x) = K_N(x, x)``; divided by N if ``normalized``."""
    r1 = k.diagonal(x)
    r1 = np.maximum(r1, 0.0)
    if normalized:
        r1 = r1 / k.size
    return float(r1) if np.ndim(r1) == 0 else r1


def correlation_fn(k: FiniteNKernel, points: Sequence[float]) -> float:
    """``R_n = det[K_N(x_i, x_j)]`` for n distinct points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 1 or pts.size < 1:
        raise ValueError("need at least one point")
    if pts.size > k.size:
        raise ValueError("order exceeds kernel size")
    if np.unique(pts).size != pts.size:
        raise ValueError("points must be pairwise distinct")
    mat = k.matrix(pts[:, None], pts[None, :])
    return float(np.linalg.det(mat))


def cluster_y2(k: FiniteNKernel, x: float, y: float) -> float:
    """Connected two-point function ``Y_2 = K_N(x, y)**2``."""
    return kernel_eval(k, x, y) ** 2


def integration_rule(k: FiniteNKernel, panels_per_unit: float = 4.0, m: int = 20):
    """Composite rule on ``|t| <= 2 + 10/sqrt(N)``, beyond which the weight is negligible."""
    half = 2.0 + 10.0 / math.sqrt(k.size)
    panels = max(8, int(math.ceil(2 * half * panels_per_unit * max(1.0, k.size / 8))))
    return composite_legendre(-half, half, panels, m)


def marginalization_check(k: FiniteNKernel, n: int, fixed_points: Sequence[float]) -> float:
    """``(1/(N-n)) integral R_{n+1}(fixed, t) dt``, which should reproduce ``R_n(fixed)``."""
    fixed = np.asarray(fixed_points, dtype=float)
    if fixed.size != n:
        raise ValueError("need exactly n fixed points")
    if n + 1 > k.size:
        raise ValueError("n + 1 must not exceed N")
    rule = integration_rule(k)
    t = rule.nodes
    # block determinant with the last row/column varying over t
    a = k.matrix(fixed[:, None], fixed[None, :])
    b = k.matrix(fixed[:, None], t[None, :])  # (n, T)
    c = k.diagonal(t)
    if n == 0:
        vals = c
    else:
        a_inv_b = np.linalg.solve(a, b)
        vals = np.linalg.det(a) * (c - np.einsum("it,it->t", b, a_inv_b))
    return float(np.dot(rule.weights, vals)) / (k.size - n)


def semicircle(x):
    """Wigner semicircle ``sqrt(4 - x**2) / (2 pi)`` on [-2, 2], zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2 * np.pi)
    return float(out) if out.ndim == 0 else out


def sine_kernel(r):
    """``sin(pi r) / (pi r)`` with value 1 at r = 0."""
    out = np.sinc(np.asarray(r, dtype=float))
    return float(out) if out.ndim == 0 else out


def bulk_scaling_check(k: FiniteNKernel, r: float) -> float:
    """``K_N(0, r pi / N) / K_N(0, 0)``; tends to ``sine_kernel(r)`` as N grows."""
    if k.size < 100:
        raise ValueError("bulk scaling comparison needs N >= 100")
    if abs(r) > 5:
        raise ValueError("|r| must be at most 5")
    return kernel_eval(k, 0.0, r * math.pi / k.size) / kernel_eval(k, 0.0, 0.0)


def number_variance_exact(s: float) -> float:
    """``s - 2 integral_0^s (s - r) sinc(r)**2 dr`` on the unfolded scale."""
    if s < 0:
        raise ValueError("s must be non-negative")
    if s == 0:
        return 0.0
    rule = composite_legendre(0.0, s, max(1, int(math.ceil(2 * s))), 16)
    r = rule.nodes
    return s - 2.0 * float(np.dot(rule.weights, (s - r) * np.sinc(r) ** 2))


def number_variance_asymptotic(s: float) -> float:
    """Large-s law ``(ln(2 pi s) + gamma + 1) / pi**2``."""
    if s <= 0:
        raise ValueError("s must be positive")
    return (math.log(2 * math.pi * s) + EULER_GAMMA + 1.0) / math.pi**2


def poisson_baseline(stat: str, s: float) -> float:
    """Uncorrelated-level values: number variance ``s`` or hole probability ``exp(-s)``."""
    if s < 0:
        raise ValueError("s must be non-negative")
    if stat == "number_variance":
        return float(s)
    if stat == "hole":
        return math.exp(-s)
    raise ValueError(f"unknown statistic {stat!r}")


def _sine_matrix(x, y):
    return np.sinc(x - y)


def hole_operator(kernel_choice: str, length: float, k: FiniteNKernel | None = None) -> FredholmOperator:
    if length < 0:
        raise ValueError("interval length must be non-negative")
    interval = (-0.5 * length, 0.5 * length)
    if kernel_choice == "sine":
        return FredholmOperator(_sine_matrix, interval)
    if kernel_choice == "finite-n":
        if k is None:
            raise ValueError("finite-N hole probability needs a kernel")
        return FredholmOperator(k.matrix, interval)
    raise ValueError(f"unknown kernel choice {kernel_choice!r}")


def hole_probability(kernel_choice: str, length: float, k: FiniteNKernel | None = None, tol: float = 1e-8) -> float:
    """Probability of no eigenvalue in ``(-length/2, length/2)``.

    For ``"sine"`` the length is in mean spacings; for ``"finite-n"`` it is the
    physical length and ``k`` must be supplied.
    """
    return fredholm_det(hole_operator(kernel_choice, length, k), tol=tol)


def hole_series_truncation(kernel_choice: str, length: float, order: int = 2, k: FiniteNKernel | None = None, m: int = 24) -> float:
    """Partial sum ``sum_{j<=order} (-1)**j / j! integral R_j`` of the hole-probability series."""
    if order < 0 or order > 4:
        raise ValueError("order must be between 0 and 4")
    op = hole_operator(kernel_choice, length, k)
    a, b = op.interval
    if a == b:
        return 1.0
    rule = gauss_legendre(m, a, b)
    kmat = op.kernel(rule.nodes[:, None], rule.nodes[None, :])
    total = 1.0
    for j in range(1, order + 1):
        idx = np.array(list(product(range(m), repeat=j)))
        dets = np.linalg.det(kmat[idx[:, :, None], idx[:, None, :]])
        acc = float(np.dot(np.prod(rule.weights[idx], axis=1), dets))
        total += (-1) ** j / math.factorial(j) * acc
    return total


def edge_rescaled_kernel(k: FiniteNKernel, xi1, xi2):
    """``N**(-2/3) K_N(2 + xi1 N**(-2/3), 2 + xi2 N**(-2/3))``."""
    scale = k.size ** (-2.0 / 3.0)
    return scale * k.matrix(2 + np.asarray(xi1) * scale, 2 + np.asarray(xi2) * scale)


def edge_rescaled_density(k: FiniteNKernel, xi):
    scale = k.size ** (-2.0 / 3.0)
    return scale * np.maximum(k.diagonal(2 + np.asarray(xi, dtype=float) * scale), 0.0)


def fit_single_scale(model, target) -> float:
    """Least-squares constant ``c`` minimizing ``|c * model - target|``."""
    model = np.ravel(np.asarray(model, dtype=float))
    target = np.ravel(np.asarray(target, dtype=float))
    return float(np.dot(model, target) / np.dot(model, model))


def scaled_residual(model, target, c: float) -> float:
    """Max deviation of ``c * model`` from ``target`` relative to ``max |target|``."""
    model = np.asarray(model, dtype=float)
    target = np.asarray(target, dtype=float)
    return float(np.max(np.abs(c * model - target)) / np.max(np.abs(target)))


def airy_density_curve(xi):
    return np.array([edge_density(v) for v in np.ravel(xi)]).reshape(np.shape(xi))


def airy_kernel_grid(xi1, xi2):
    xi1, xi2 = np.broadcast_arrays(np.asarray(xi1, dtype=float), np.asarray(xi2, dtype=float))
    out = np.empty(xi1.shape)
    for idx in np.ndindex(xi1.shape):
        out[idx] = airy_kernel(xi1[idx], xi2[idx])
    return out
