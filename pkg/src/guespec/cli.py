"""Command-line front end.

Every command writes a ``# {json config}`` line followed by a CSV table, or a
single JSON document with ``--format json``.  Floats are written with ``repr``
so identical inputs give byte-identical files.

Exit codes: 0 success, 2 usage or parameter error, 3 numerical non-convergence,
4 file I/O failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from typing import Sequence

import numpy as np

from guespec import charpoly, ensemble, kernels
from guespec.linalg import EigenConvergenceError
from guespec.quadrature import FredholmConvergenceError

EXIT_USAGE = 2
EXIT_NONCONVERGENCE = 3
EXIT_IO = 4

DEFAULT_SEED = 0
DEFAULT_SAMPLES = 10000
DEFAULT_MC_N = 400
DEFAULT_OU_PATHS = 2000


class UsageError(Exception):
    pass


def parse_grid(text: str) -> tuple[float, float, float]:
    """Parse ``start:stop:step``; ``start == stop`` gives a single point."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be start:stop:step, got {text!r}")
    try:
        a, b, h = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid values must be numbers, got {text!r}") from None
    if not all(math.isfinite(v) for v in (a, b, h)):
        raise argparse.ArgumentTypeError("grid values must be finite")
    if h <= 0 or a > b:
        raise argparse.ArgumentTypeError("grid needs step > 0 and start <= stop")
    return a, b, h


def grid_points(grid: tuple[float, float, float]) -> list[float]:
    a, b, h = grid
    count = int(math.floor((b - a) / h + 1e-9)) + 1
    return [a + i * h for i in range(count)]


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _complex_list(text: str) -> list[complex]:
    try:
        return [complex(v.replace(" ", "")) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated complex numbers like 0.1+0.2j, got {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("value must be at least 1")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="guespec", description="GUE kernels, scaling limits and Monte Carlo checks.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help="random seed (default 0)")
    common.add_argument("--output", "-o", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format (default csv)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", parents=[common], help="finite-N mean density vs semicircle")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--grid", type=parse_grid, required=True)

    p = sub.add_parser("edge", parents=[common], help="soft-edge rescaled density vs Airy law")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--xi", type=parse_grid, required=True)

    p = sub.add_parser("kernel", parents=[common], help="bulk-scaled kernel vs sine kernel")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--r", type=parse_grid, required=True)

    p = sub.add_parser("numvar", parents=[common], help="number variance")
    p.add_argument("--s", type=parse_grid, required=True)
    p.add_argument("--mc", action="store_true", help="add Monte Carlo columns")
    p.add_argument("--n", type=_positive_int, default=DEFAULT_MC_N)
    p.add_argument("--samples", type=_positive_int, default=DEFAULT_SAMPLES)

    p = sub.add_parser("hole", parents=[common], help="hole probability")
    p.add_argument("--s", type=parse_grid, required=True)
    p.add_argument("--kernel", choices=("sine", "finite-n"), default="sine")
    p.add_argument("--series", action="store_true", help="add the two-term series truncation column")
    p.add_argument("--mc", action="store_true", help="add Monte Carlo columns")
    p.add_argument("--n", type=_positive_int, default=DEFAULT_MC_N)
    p.add_argument("--samples", type=_positive_int, default=DEFAULT_SAMPLES)

    p = sub.add_parser("charpoly", parents=[common], help="characteristic-polynomial averages")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--mu", type=_float_list, required=True, help="comma-separated real points")
    p.add_argument("--nu", type=_complex_list, default=[], help="comma-separated non-real points, e.g. 0.1+0.2j")
    p.add_argument("--mc-samples", type=int, default=0, help="Monte Carlo samples (0 disables)")

    p = sub.add_parser("sample", parents=[common], help="eigenvalue dump of GUE samples")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--count", type=_positive_int, required=True)
    p.add_argument("--dump-format", choices=("csv", "binary"), default="csv")

    p = sub.add_parser("ou", parents=[common], help="OU relaxation toward GUE")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--t-max", type=float, required=True)
    p.add_argument("--steps", type=_positive_int, required=True)
    p.add_argument("--samples", type=_positive_int, default=DEFAULT_OU_PATHS, help="number of paths")
    return parser


def _config(args: argparse.Namespace) -> dict:
    config = {}
    for key, value in sorted(vars(args).items()):
        if key == "output":
            continue
        if isinstance(value, list):
            value = [repr(v) if isinstance(v, complex) else v for v in value]
        config[key] = value
    return config


def _cell(value):
    if isinstance(value, str):
        return value
    return repr(float(value))


def _json_cell(value):
    if isinstance(value, str):
        return value
    value = float(value)
    return value if math.isfinite(value) else None


def render(config: dict, columns: Sequence[str], rows: Sequence[Sequence], fmt: str) -> str:
    if fmt == "json":
        doc = {"config": config, "columns": list(columns), "rows": [[_json_cell(v) for v in row] for row in rows]}
        return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"
    out = io.StringIO()
    out.write("# " + json.dumps(config, sort_keys=True) + "\n")
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(_cell(v) for v in row) + "\n")
    return out.getvalue()


def cmd_density(args):
    k = kernels.FiniteNKernel(args.n)
    xs = grid_points(args.grid)
    dens = kernels.mean_density(k, np.array(xs), normalized=True)
    return ["x", "finite_n_density", "semicircle"], [(x, d, kernels.semicircle(x)) for x, d in zip(xs, np.atleast_1d(dens))]


def cmd_edge(args):
    k = kernels.FiniteNKernel(args.n)
    xs = np.array(grid_points(args.xi))
    finite = kernels.edge_rescaled_density(k, xs)
    airy = kernels.airy_density_curve(xs)
    scale = kernels.fit_single_scale(airy, finite) if np.any(airy > 0) else math.nan
    return ["xi", "rescaled_finite_n", "airy_edge_density", "fitted_scale"], [(x, f, a, scale) for x, f, a in zip(xs, finite, airy)]


def cmd_kernel(args):
    k = kernels.FiniteNKernel(args.n)
    rs = grid_points(args.r)
    return ["r", "bulk_scaled_kernel", "sine_kernel"], [(r, kernels.bulk_scaling_check(k, r), kernels.sine_kernel(r)) for r in rs]


def _mc_counts(args, lengths):
    counts = ensemble.window_counts(args.n, args.samples, lengths, args.seed)
    return [ensemble.counting_stats(counts[:, j]) for j in range(len(lengths))]


def cmd_numvar(args):
    ss = grid_points(args.s)
    columns = ["s", "exact", "asymptotic", "poisson"]
    stats = _mc_counts(args, ss) if args.mc else None
    if args.mc:
        columns += ["mc", "mc_stderr"]
    rows = []
    for j, s in enumerate(ss):
        row = [s, kernels.number_variance_exact(s), kernels.number_variance_asymptotic(s) if s > 0 else math.nan, kernels.poisson_baseline("number_variance", s)]
        if stats:
            row += [stats[j].variance, stats[j].variance_stderr]
        rows.append(row)
    return columns, rows


def cmd_hole(args):
    ss = grid_points(args.s)
    columns = ["s", "fredholm"]
    if args.series:
        columns.append("series_trunc")
    stats = _mc_counts(args, ss) if args.mc else None
    if args.mc:
        columns += ["mc", "mc_stderr"]
    columns.append("poisson")
    k = kernels.FiniteNKernel(args.n) if args.kernel == "finite-n" else None
    rows = []
    for j, s in enumerate(ss):
        length = s if k is None else s * math.pi / args.n
        row = [s, kernels.hole_probability(args.kernel, length, k)]
        if args.series:
            row.append(kernels.hole_series_truncation(args.kernel, length, 2, k))
        if stats:
            row += [stats[j].gap_fraction, stats[j].gap_stderr]
        row.append(kernels.poisson_baseline("hole", s))
        rows.append(row)
    return columns, rows


def cmd_charpoly(args):
    n = args.n
    columns = ["quantity", "mu", "nu_re", "nu_im", "analytic_re", "analytic_im"]
    mc = args.mc_samples > 0
    if args.mc_samples < 0:
        raise UsageError("--mc-samples must be non-negative")
    if mc:
        columns += ["mc_re", "mc_im", "mc_stderr"]
    rows = []

    def add(name, mu, nu, value, nums, dens):
        value = complex(value)
        row = [name, mu, nu.real if nu is not None else math.nan, nu.imag if nu is not None else math.nan, value.real, value.imag]
        if mc:
            est = ensemble.mc_charpoly(n, args.mc_samples, nums, dens, args.seed)
            row += [est.value.real, est.value.imag, est.stderr]
        rows.append(row)

    for mu in args.mu:
        add("mean", mu, None, charpoly.expected_charpoly(mu, n), [mu], [])
        add("second_moment", mu, None, charpoly.second_moment(mu, n), [mu, mu], [])
        for nu in args.nu:
            if nu.imag == 0:
                raise UsageError("--nu points must be non-real")
            add("ratio", mu, nu, charpoly.ratio_kernel(mu, nu, n).value, [mu], [nu])
    return columns, rows


def _ou_rows(args):
    n = args.n
    if not args.t_max > 0:
        raise UsageError("--t-max must be positive")
    times = [args.t_max * i / args.steps for i in range(args.steps + 1)]
    start = np.diag(np.linspace(5.0, -5.0, n)).astype(complex)
    upper = np.triu_indices(n, k=1)
    rows = []
    for t, batch in ensemble.iter_ou_paths(start, times, args.samples, args.seed):
        diag = batch[:, np.arange(n), np.arange(n)].real
        mean_dev = float(np.max(np.abs(diag.mean(axis=0)))) * math.sqrt(n)
        var_diag = float(np.max(np.abs(diag.var(axis=0) * n - 1)))
        if n > 1:
            off = batch[:, upper[0], upper[1]]
            var_off = float(max(np.max(np.abs(off.real.var(axis=0) * 2 * n - 1)), np.max(np.abs(off.imag.var(axis=0) * 2 * n - 1))))
        else:
            var_off = math.nan
        rows.append((t, mean_dev, var_diag, var_off))
    return ["t", "max_diag_mean_dev", "max_diag_var_dev", "max_offdiag_var_dev"], rows


def _write(path, text: str | bytes) -> None:
    if path is None:
        if isinstance(text, bytes):
            sys.stdout.buffer.write(text)
        else:
            sys.stdout.write(text)
        return
    mode = "wb" if isinstance(text, bytes) else "w"
    with open(path, mode) as fh:
        fh.write(text)


def cmd_sample(args, config):
    spectra = ensemble.sample_spectra(args.n, args.count, args.seed)
    if args.dump_format == "binary":
        if args.output is None:
            raise UsageError("binary dumps need --output")
        ensemble.write_eigenvalue_dump(args.output, spectra, "binary")
        return
    columns = [f"lambda_{i + 1}" for i in range(args.n)]
    _write(args.output, render(config, columns, spectra.tolist(), args.format))


COMMANDS = {
    "density": cmd_density,
    "edge": cmd_edge,
    "kernel": cmd_kernel,
    "numvar": cmd_numvar,
    "hole": cmd_hole,
    "charpoly": cmd_charpoly,
    "ou": _ou_rows,
}


def run(args: argparse.Namespace) -> int:
    config = _config(args)
    try:
        if args.command == "sample":
            cmd_sample(args, config)
            return 0
        columns, rows = COMMANDS[args.command](args)
        _write(args.output, render(config, columns, rows, args.format))
    except (FredholmConvergenceError, EigenConvergenceError) as exc:
        print(f"guespec: numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except OSError as exc:
        print(f"guespec: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError) as exc:
        print(f"guespec: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


# flags whose values may start with "-" (negative grids and point lists)
_SIGNED_VALUE_FLAGS = {"--grid", "--xi", "--r", "--s", "--mu", "--nu"}


def _attach_signed_values(argv: Sequence[str]) -> list[str]:
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if tok in _SIGNED_VALUE_FLAGS and nxt is not None and len(nxt) > 1 and nxt[0] == "-" and (nxt[1].isdigit() or nxt[1] == "."):
            out.append(f"{tok}={nxt}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(_attach_signed_values(argv))
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
