"""GUE sampling, Ornstein-Uhlenbeck relaxation and Monte Carlo estimators.

Matrices follow the weight ``exp(-N Tr H**2 / 2)``: diagonal entries have
variance ``1/N`` and the real and imaginary parts of off-diagonal entries have
variance ``1/(2N)`` each.

Batch estimators work on the real tridiagonal form of each sample.  By unitary
invariance the Householder reduction of a GUE matrix has independent entries,
``d_i ~ Normal(0, 1/N)`` and ``e_i**2 ~ Gamma(N - i, scale=1/N)``, so large
batches are drawn in that form directly (``method="tridiagonal"``); the dense
route (``method="dense"``) samples full matrices and reduces them.  Samples are
grouped in fixed-size chunks, each with its own random stream derived from
``(seed, chunk)``, so results do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from guespec.linalg import eigh, householder_tridiagonalize, log_charpoly, resolvent_trace, sturm_count, tridiagonal_eigvalsh

THREADS_ENV = "GUESPEC_THREADS"
CHUNK_SIZE = 4096
# auto method uses dense sampling up to this size
DENSE_AUTO_MAX = 32
DUMP_MAGIC = b"GUESPEC1"

# stream tags keep single-matrix, batch and OU randomness disjoint
_STREAM_MATRIX = 1
_STREAM_BATCH = 2
_STREAM_UNIFORM = 3


@dataclass(frozen=True)
class HermitianMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError("expected a non-empty square matrix")
        if not np.array_equal(a, a.conj().T):
            raise ValueError("matrix is not exactly Hermitian")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SpectrumSample:
    eigenvalues: np.ndarray
    source_seed: int | None = None


@dataclass(frozen=True)
class OUState:
    matrix: HermitianMatrix
    time: float = 0.0

    @property
    def diffusion(self) -> float:
        """Noise strength ``1/N``; stationary variances are ``D`` and ``D/2``."""
        return 1.0 / self.matrix.size


def worker_count() -> int:
    """Thread cap from ``GUESPEC_THREADS``, defaulting to the CPU count."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return max(1, os.cpu_count() or 1)
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *stream])))


def _check_size(N: int) -> None:
    if int(N) != N or N < 1:
        raise ValueError("matrix size must be a positive integer")


def gue_entries(rng: np.random.Generator, N: int, count: int | None = None) -> np.ndarray:
    """Exactly Hermitian GUE matrices, shape ``(N, N)`` or ``(count, N, N)``."""
    shape = () if count is None else (count,)
    diag = rng.normal(0.0, math.sqrt(1.0 / N), shape + (N,))
    sd = math.sqrt(0.5 / N)
    upper = rng.normal(0.0, sd, shape + (N, N)) + 1j * rng.normal(0.0, sd, shape + (N, N))
    upper = np.triu(upper, k=1)
    out = upper + np.conj(np.swapaxes(upper, -1, -2))
    idx = np.arange(N)
    out[..., idx, idx] = diag
    return out


def sample_gue(N: int, seed: int, index: int = 0) -> HermitianMatrix:
    """The ``index``-th GUE matrix of the stream labelled by ``seed``."""
    _check_size(N)
    return HermitianMatrix(gue_entries(make_rng(seed, _STREAM_MATRIX, index), N))


def eigenvalues(H: HermitianMatrix, source_seed: int | None = None) -> SpectrumSample:
    """Ascending spectrum by Householder reduction and implicit QL."""
    w = eigh(H.entries, compute_vectors=False)
    return SpectrumSample(np.asarray(w, dtype=float), source_seed)


def _ou_update(entries: np.ndarray, dt: float, rng: np.random.Generator | None, N: int) -> np.ndarray:
    decay = math.exp(-dt)
    out = decay * entries
    if rng is None:
        return out
    keep = -math.expm1(-2 * dt)
    noise = gue_entries(rng, N, None if entries.ndim == 2 else entries.shape[0])
    return out + math.sqrt(keep) * noise


def ou_step(state: OUState, dt: float, rng: np.random.Generator, noise: bool = True) -> OUState:
    """Exact OU transition over ``dt``: ``x -> exp(-dt) x + sqrt(var (1 - exp(-2 dt))) z``.

    ``var`` is the stationary GUE variance of each real coordinate, so the
    flow relaxes any start to the GUE law. ``noise=False`` gives the drift only.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = state.matrix.size
    entries = _ou_update(state.matrix.entries, dt, rng if noise else None, n)
    return OUState(HermitianMatrix(entries), state.time + dt)


def iter_ou_paths(start: np.ndarray, times: Sequence[float], paths: int, seed: int) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(t, batch)`` for OU trajectories from one start at increasing ``times``.

    ``batch`` has shape ``(paths, N, N)`` and is reused between steps.
    """
    start = HermitianMatrix(start).entries
    n = start.shape[0]
    rng = make_rng(seed, _STREAM_MATRIX, 2**32 - 1)
    cur = np.broadcast_to(start, (paths, n, n)).copy()
    t_prev = 0.0
    for t in times:
        if t < t_prev:
            raise ValueError("times must be non-decreasing and non-negative")
        if t > t_prev:
            cur = _ou_update(cur, t - t_prev, rng, n)
        yield t, cur
        t_prev = t


def ou_paths(start: np.ndarray, times: Sequence[float], paths: int, seed: int) -> np.ndarray:
    """Array form of :func:`iter_ou_paths`, shape ``(len(times), paths, N, N)``."""
    return np.array([batch.copy() for _, batch in iter_ou_paths(start, times, paths, seed)])


def _resolve_method(N: int, method: str) -> str:
    if method == "auto":
        return "dense" if N <= DENSE_AUTO_MAX else "tridiagonal"
    if method not in ("dense", "tridiagonal"):
        raise ValueError(f"unknown sampling method {method!r}")
    return method


def _chunk_tridiagonal(N: int, count: int, seed: int, chunk: int, method: str):
    rng = make_rng(seed, _STREAM_BATCH, 0 if method == "dense" else 1, chunk)
    if method == "dense":
        d, e = householder_tridiagonalize(gue_entries(rng, N, count))
        return d, e * e
    d = rng.normal(0.0, math.sqrt(1.0 / N), (count, N))
    shapes = np.arange(N - 1, 0, -1, dtype=float)
    e2 = rng.gamma(shapes, 1.0 / N, (count, N - 1))
    return d, e2


def _chunks(samples: int) -> list[tuple[int, int]]:
    if samples < 1:
        raise ValueError("samples must be at least 1")
    return [(c, min(CHUNK_SIZE, samples - c * CHUNK_SIZE)) for c in range(math.ceil(samples / CHUNK_SIZE))]


def map_chunks(N: int, samples: int, seed: int, stat: Callable, method: str = "auto") -> list:
    """Apply ``stat(d, e2)`` to each chunk of tridiagonal samples, results in chunk order."""
    _check_size(N)
    method = _resolve_method(N, method)
    jobs = _chunks(samples)

    def run(job):
        chunk, count = job
        return stat(*_chunk_tridiagonal(N, count, seed, chunk, method))

    workers = min(worker_count(), len(jobs))
    if workers == 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, jobs))


def tridiagonal_batches(N: int, samples: int, seed: int, method: str = "auto") -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(d, e2)`` chunks of the sample stream in order."""
    _check_size(N)
    method = _resolve_method(N, method)
    for chunk, count in _chunks(samples):
        yield _chunk_tridiagonal(N, count, seed, chunk, method)


def sample_spectra(N: int, samples: int, seed: int, method: str = "auto") -> np.ndarray:
    """Sorted spectra of ``samples`` GUE matrices, shape ``(samples, N)``."""
    return np.concatenate(map_chunks(N, samples, seed, tridiagonal_eigvalsh, method))


@dataclass(frozen=True)
class DensityHistogram:
    """Eigenvalue histogram normalized by ``N * samples`` (so it estimates ``R_1 / N``)."""

    edges: np.ndarray
    density: np.ndarray
    stderr: np.ndarray
    samples: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * np.diff(self.edges)))


def mc_density(N: int, samples: int, bins: int, value_range: tuple[float, float], seed: int, method: str = "auto") -> DensityHistogram:
    """Histogram of all eigenvalues, bin counts from Sturm sequences."""
    if bins < 1:
        raise ValueError("bins must be at least 1")
    lo, hi = value_range
    if not lo < hi:
        raise ValueError("range must satisfy lo < hi")
    edges = np.linspace(lo, hi, bins + 1)

    def stat(d, e2):
        counts = np.diff(sturm_count(d, e2, edges), axis=1).astype(float)
        return counts.sum(axis=0), (counts**2).sum(axis=0)

    parts = map_chunks(N, samples, seed, stat, method)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    width = np.diff(edges)
    mean = s1 / samples
    var = np.maximum(s2 / samples - mean**2, 0.0)
    stderr = np.sqrt(var / samples) / (N * width) if samples > 1 else np.full(bins, np.inf)
    return DensityHistogram(edges, mean / (N * width), stderr, samples)


@dataclass(frozen=True)
class CountingStats:
    """Eigenvalue-count statistics in a centred window of ``s`` mean spacings."""

    mean: float
    mean_stderr: float
    variance: float
    variance_stderr: float
    gap_fraction: float
    gap_stderr: float
    samples: int


def counting_stats(counts: np.ndarray) -> CountingStats:
    c = np.asarray(counts, dtype=float)
    m = c.size
    mean = float(c.mean())
    centred = c - mean
    m2 = float(np.mean(centred**2))
    m4 = float(np.mean(centred**4))
    variance = m2 * m / (m - 1) if m > 1 else 0.0
    gap = float(np.mean(c == 0))
    return CountingStats(
        mean,
        math.sqrt(m2 / m),
        variance,
        math.sqrt(max(m4 - m2 * m2, 0.0) / m),
        gap,
        math.sqrt(gap * (1 - gap) / m),
        m,
    )


def window_counts(N: int, samples: int, s, seed: int, method: str = "auto") -> np.ndarray:
    """Per-sample number of eigenvalues in ``(-s pi/(2N), s pi/(2N))``.

    ``s`` may be a sequence, giving shape ``(samples, len(s))`` from shared samples.
    """
    lengths = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(lengths < 0):
        raise ValueError("window length must be non-negative")
    half = 0.5 * lengths * math.pi / N

    def stat(d, e2):
        return sturm_count(d, e2, half) - sturm_count(d, e2, -half)

    counts = np.concatenate(map_chunks(N, samples, seed, stat, method))
    return counts if np.ndim(s) else counts[:, 0]


def mc_counting(N: int, samples: int, s: float, seed: int, method: str = "auto") -> CountingStats:
    """Mean count, count variance and empty-window fraction for a bulk window of ``s`` spacings."""
    return counting_stats(window_counts(N, samples, s, seed, method))


def poisson_counting(s: float, samples: int, seed: int, points: int = 1000) -> CountingStats:
    """Same statistics for ``points`` independent uniform points at unit mean spacing."""
    if s < 0 or s > points:
        raise ValueError("window must fit inside the simulated stretch")
    rng = make_rng(seed, _STREAM_UNIFORM)
    counts = np.empty(samples)
    done = 0
    while done < samples:
        take = min(CHUNK_SIZE, samples - done)
        u = rng.uniform(0.0, points, (take, points))
        counts[done : done + take] = np.sum(np.abs(u - 0.5 * points) < 0.5 * s, axis=1)
        done += take
    return counting_stats(counts)


@dataclass(frozen=True)
class MomentEstimate:
    value: complex
    stderr_real: float
    stderr_imag: float
    samples: int
    overflow: bool

    @property
    def stderr(self) -> float:
        return math.hypot(self.stderr_real, self.stderr_imag)


def mc_charpoly(
    N: int,
    samples: int,
    numerators: Sequence[complex],
    denominators: Sequence[complex] = (),
    seed: int = 0,
    method: str = "auto",
) -> MomentEstimate:
    """Monte Carlo mean of ``prod_i Z(mu_i) / prod_j Z(nu_j)``, ``Z(x) = det(x - H)``.

    Each sample is formed in the log domain. ``overflow`` is set when the
    relative standard error exceeds 50% (heavy-tailed ratios).
    """
    for nu in denominators:
        if abs(complex(nu).imag) < 0.1 / N:
            raise ValueError("denominator points need |Im nu| >= 0.1/N")

    all_real = all(complex(p).imag == 0 for p in (*numerators, *denominators))

    def stat(d, e2):
        logs = np.zeros(d.shape[0], dtype=complex)
        for mu in numerators:
            logs += log_charpoly(d, e2, mu)
        for nu in denominators:
            logs -= log_charpoly(d, e2, nu)
        with np.errstate(over="ignore"):
            v = np.exp(logs)
        if all_real:
            # the log-domain phase leaves rounding residue in the imaginary part
            v = v.real.astype(complex)
        return v.sum(), (v.real**2).sum(), (v.imag**2).sum()

    parts = map_chunks(N, samples, seed, stat, method)
    total = sum(p[0] for p in parts)
    sq_re = sum(p[1] for p in parts)
    sq_im = sum(p[2] for p in parts)
    mean = complex(total) / samples
    var_re = max(sq_re / samples - mean.real**2, 0.0)
    var_im = max(sq_im / samples - mean.imag**2, 0.0)
    scale = samples / (samples - 1) / samples if samples > 1 else math.inf
    se_re = math.sqrt(var_re * scale)
    se_im = math.sqrt(var_im * scale)
    rel = math.hypot(se_re, se_im) / abs(mean) if abs(mean) > 0 else math.inf
    overflow = not (math.isfinite(rel) and rel <= 0.5)
    return MomentEstimate(mean, se_re, se_im, samples, overflow)


def mc_resolvent_density(N: int, samples: int, x: float, eps: float, seed: int, method: str = "auto") -> tuple[float, float]:
    """``(1/(pi N)) Im Tr (nu - H)**-1`` at ``nu = x - i eps``, with its standard error.

    A Lorentzian-smoothed estimate of the normalized density ``R_1(x)/N``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    nu = complex(x, -eps)

    def stat(d, e2):
        v = resolvent_trace(d, e2, nu).imag / (math.pi * N)
        return v.sum(), (v * v).sum()

    parts = map_chunks(N, samples, seed, stat, method)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / samples
    var = max(s2 / samples - mean * mean, 0.0)
    return float(mean), math.sqrt(var / max(samples - 1, 1))


def write_eigenvalue_dump(path, spectra: np.ndarray, fmt: str = "csv") -> None:
    """Write spectra (one row per sample) as CSV with a header, or in binary form.

    The binary layout is the 8-byte magic ``GUESPEC1``, little-endian ``u32 N``
    and ``u32 count``, then ``count * N`` little-endian float64 values row-major.
    """
    spectra = np.atleast_2d(np.asarray(spectra, dtype=float))
    count, n = spectra.shape
    path = Path(path)
    if fmt == "csv":
        lines = [",".join(f"lambda_{i + 1}" for i in range(n))]
        lines += [",".join(repr(float(v)) for v in row) for row in spectra]
        path.write_text("\n".join(lines) + "\n")
    elif fmt == "binary":
        header = DUMP_MAGIC + struct.pack("<II", n, count)
        path.write_bytes(header + spectra.astype("<f8").tobytes(order="C"))
    else:
        raise ValueError(f"unknown dump format {fmt!r}")


def read_eigenvalue_dump(path) -> np.ndarray:
    """Read either dump format back into a ``(count, N)`` array."""
    path = Path(path)
    raw = path.read_bytes()
    if raw[:8] == DUMP_MAGIC:
        n, count = struct.unpack("<II", raw[8:16])
        body = raw[16:]
        if len(body) != 8 * n * count:
            raise ValueError("binary dump length does not match its header")
        return np.frombuffer(body, dtype="<f8").reshape(count, n).astype(float)
    lines = [ln for ln in raw.decode().splitlines() if ln and not ln.startswith("#")]
    return np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
