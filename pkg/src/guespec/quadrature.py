"""Gauss rules and Nystrom evaluation of Fredholm determinants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from guespec.hermite import orthonormal_table
from guespec.linalg import tridiagonal_ql

MAX_LEGENDRE_NODES = 512
MAX_HERMITE_NODES = 256
DEFAULT_FREDHOLM_NODES = 40
DEFAULT_FREDHOLM_TOL = 1e-8


class FredholmConvergenceError(RuntimeError):
    """Node doubling failed to stabilize the determinant before the node cap."""


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights on a finite interval or the Gaussian-weighted line.

    ``domain`` is ``(a, b)`` for a finite interval, or ``("gaussian", N)`` when
    the weights already include ``exp(-N x**2 / 2)``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-d arrays of equal length")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("weights must be strictly positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


def _legendre_and_derivative(m: int, x: np.ndarray):
    p0, p1 = np.ones_like(x), x.copy()
    for k in range(2, m + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = m * (x * p1 - p0) / (x * x - 1)
    return p1, dp


def gauss_legendre(m: int, a: float = -1.0, b: float = 1.0) -> QuadratureRule:
    """m-point Gauss-Legendre rule on [a, b], nodes by Newton iteration."""
    if not 1 <= m <= MAX_LEGENDRE_NODES:
        raise ValueError(f"node count must be in [1, {MAX_LEGENDRE_NODES}]")
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise ValueError("need a finite interval with a < b")
    if m == 1:
        return QuadratureRule(np.array([0.5 * (a + b)]), np.array([b - a]), (a, b))
    i = np.arange(1, m + 1)
    x = np.cos(np.pi * (i - 0.25) / (m + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(m, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    p, dp = _legendre_and_derivative(m, x)
    w = 2.0 / ((1 - x * x) * dp * dp)
    x = x[::-1]
    w = w[::-1]
    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    half = 0.5 * (b - a)
    return QuadratureRule(0.5 * (a + b) + half * x, half * w, (a, b))


def composite_legendre(a: float, b: float, panels: int, m: int = 16) -> QuadratureRule:
    """Gauss-Legendre on ``panels`` equal sub-intervals of [a, b]."""
    edges = np.linspace(a, b, panels + 1)
    base = gauss_legendre(m)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mids[:, None] + half[:, None] * base.nodes[None, :]).ravel()
    weights = (half[:, None] * base.weights[None, :]).ravel()
    return QuadratureRule(nodes, weights, (a, b))


def gauss_hermite_scaled(m: int, N: int) -> QuadratureRule:
    """m-point rule for integrals against ``exp(-N x**2 / 2)`` over the real line.

    Nodes are eigenvalues of the Jacobi matrix of the orthonormal Hermite
    recurrence; weights are the reciprocal Christoffel function
    ``1 / sum_{k<m} h~_k(x)**2`` evaluated in log-scaled form.
    """
    if not 1 <= m <= MAX_HERMITE_NODES:
        raise ValueError(f"node count must be in [1, {MAX_HERMITE_NODES}]")
    if N < 1:
        raise ValueError("weight scale must be positive")
    off = np.sqrt(np.arange(1, m) / N)
    x = tridiagonal_ql(np.zeros(m), off)
    x = 0.5 * (x - x[::-1])
    mant, logs = orthonormal_table(x, m - 1, N)
    # log sum_k (mant_k e^{s_k})^2, stabilized per node
    log_sq = 2 * (np.log(np.abs(mant) + 1e-300) + logs)
    top = np.max(log_sq, axis=0)
    log_christoffel = top + np.log(np.sum(np.exp(log_sq - top), axis=0))
    w = np.exp(-log_christoffel)
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w, ("gaussian", N))


@dataclass
class FredholmOperator:
    """An integral kernel restricted to a finite interval.

    ``kernel(x, y)`` must accept broadcastable arrays and return the kernel
    matrix. ``nodes`` is the starting Gauss-Legendre node count.
    """

    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray]
    interval: tuple[float, float]
    nodes: int = DEFAULT_FREDHOLM_NODES
    last_nodes: int = field(default=0, init=False)

    def __post_init__(self):
        a, b = self.interval
        if not a <= b:
            raise ValueError("interval must satisfy a <= b")


def fredholm_det_fixed(op: FredholmOperator, m: int) -> float:
    """``det(I - sqrt(w) K sqrt(w))`` on an m-point Gauss-Legendre rule."""
    a, b = op.interval
    if a == b:
        return 1.0
    rule = gauss_legendre(m, a, b)
    root_w = np.sqrt(rule.weights)
    k = op.kernel(rule.nodes[:, None], rule.nodes[None, :])
    mat = np.eye(m) - root_w[:, None] * k * root_w[None, :]
    sign, logdet = np.linalg.slogdet(mat)
    return float(sign * math.exp(logdet))


def fredholm_det(
    op: FredholmOperator,
    tol: float = DEFAULT_FREDHOLM_TOL,
    max_nodes: int = MAX_LEGENDRE_NODES,
) -> float:
    """Fredholm determinant with node doubling until successive values agree to ``tol``.

    Raises
    ------
    FredholmConvergenceError
        If the node cap is reached without agreement.
    """
    a, b = op.interval
    if a == b:
        op.last_nodes = 0
        return 1.0
    m = op.nodes
    current = fredholm_det_fixed(op, m)
    while 2 * m <= max_nodes:
        refined = fredholm_det_fixed(op, 2 * m)
        if abs(refined - current) <= tol:
            op.last_nodes = 2 * m
            return refined
        m *= 2
        current = refined
    raise FredholmConvergenceError(
        f"determinant not stable to {tol:g} with {m} nodes (last change {abs(refined - current):.3g})"
    )
