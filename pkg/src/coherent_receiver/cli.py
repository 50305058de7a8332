"""Command-line interface.

Tables go to stdout as CSV (or line-delimited JSON with ``--json``), numbers
printed with 12 significant digits. Exit codes: 0 success, 2 usage error,
3 numeric or optimizer failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    BinaryEnsemble,
    DetectorKind,
    DetectorModel,
    helstrom_bound,
    homodyne_error,
    kennedy_error,
)
from .errors import BudgetExceededError, ContractError, DomainError, ReceiverError
from .feedforward import (
    ChannelPlan,
    asymptotic_plan,
    branch_count,
    exact_error,
    optimize_sequence,
    ON_OFF_MAX_CHANNELS,
    PNR_MAX_BRANCHES,
)
from .montecarlo import SimConfig, simulate
from .single_channel import Strategy, error_curve

log = logging.getLogger(__name__)

EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

CURVE_COLUMNS = ["m", "receiver", "error_rate", "beta_opt", "N", "std_error", "seed"]


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return f"{float(x):.11e}"


def probability(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid prior p1={text!r}: not a number")
    if not 0.0 <= p <= 1.0:
        raise argparse.ArgumentTypeError(f"invalid prior p1={text}: must lie in [0, 1]")
    return p


def nonneg_float(text: str) -> float:
    x = float(text)
    if not x >= 0:
        raise argparse.ArgumentTypeError(f"expected a value >= 0, got {text}")
    return x


def positive_int(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return n


def float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed number list {text!r}")


def int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed integer list {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"channel counts must be >= 1, got {text!r}")
    return values


def m_grid(text: str) -> list[float]:
    """``0.25``, ``0.1,0.2,0.4`` or ``start:stop:count`` (inclusive linspace)."""
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            values = np.linspace(float(start), float(stop), int(count)).tolist()
        else:
            values = float_list(text)
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"malformed m range {text!r}")
    if not values or any(not (v >= 0 and math.isfinite(v)) for v in values):
        raise argparse.ArgumentTypeError(f"m values must be finite and >= 0: {text!r}")
    return values


def span(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed range {text!r}, expected lo:hi")
    if not (0 <= lo < hi):
        raise argparse.ArgumentTypeError(f"need 0 <= lo < hi, got {text!r}")
    return lo, hi


class TableWriter:
    def __init__(self, columns, as_json: bool, stream=None):
        self.columns = columns
        self.as_json = as_json
        self.stream = stream or sys.stdout
        if not as_json:
            self.writer = csv.writer(self.stream, lineterminator="\n")
            self.writer.writerow(columns)

    def row(self, values: dict):
        if self.as_json:
            self.stream.write(json.dumps({c: values.get(c) for c in self.columns}) + "\n")
        else:
            self.writer.writerow([fmt(values.get(c)) for c in self.columns])


def detector_from_args(args) -> DetectorModel:
    kind = DetectorKind(args.detector)
    return DetectorModel(kind, args.n_max if kind is DetectorKind.PNR else None,
                         args.efficiency, args.dark)


def add_detector_flags(p):
    p.add_argument("--detector", choices=[k.value for k in DetectorKind], default="onoff")
    p.add_argument("--n-max", type=int, default=None, help="PNR count cutoff (default: auto)")
    p.add_argument("--efficiency", type=float, default=1.0)
    p.add_argument("--dark", type=nonneg_float, default=0.0, help="mean dark counts per window")


def cmd_bounds(args) -> int:
    out = TableWriter(["m", "p1", "helstrom", "kennedy", "homodyne"], args.json)
    for m in args.m:
        e = BinaryEnsemble.from_mean_photons(m, args.p1)
        out.row({
            "m": m, "p1": args.p1,
            "helstrom": helstrom_bound(e),
            "kennedy": kennedy_error(m, args.p1),
            # homodyne is only defined here for equal priors
            "homodyne": homodyne_error(m) if args.p1 == 0.5 else None,
        })
    return 0


def cmd_sweep_beta(args) -> int:
    if args.points < 2:
        raise UsageError("--points must be >= 2")
    e = BinaryEnsemble.from_mean_photons(args.m, args.p1)
    strategy = Strategy(args.strategy)
    f = error_curve(e, strategy)
    betas = np.linspace(args.beta_range[0], args.beta_range[1], args.points)
    eps = [f(b) for b in betas]
    out = TableWriter(["beta", "error_rate"], args.json)
    for b, v in zip(betas, eps):
        out.row({"beta": float(b), "error_rate": v})
    if args.plot:
        from .plotting import plot_beta_sweep

        ref = {"homodyne": homodyne_error(args.m)} if args.p1 == 0.5 else None
        plot_beta_sweep(betas, eps, args.plot, ref)
    return 0


def _optimize_point(m, p1, n_list, homogeneous, det):
    e = BinaryEnsemble.from_mean_photons(m, p1)
    if m == 0:
        return {n: (None, min(e.p1, e.p2)) for n in n_list}
    return optimize_sequence(n_list, e, homogeneous, det)


def _within_budget(n: int, det: DetectorModel, m: float) -> bool:
    if not det.resolves_number:
        return n <= ON_OFF_MAX_CHANNELS
    probe = ChannelPlan.homogeneous([0.0] * n, det)
    e = BinaryEnsemble.from_mean_photons(m)
    return branch_count(probe, e) <= PNR_MAX_BRANCHES


def cmd_optimize(args) -> int:
    det = detector_from_args(args)
    n = args.n_channels
    cols = ["m", "p1", "N", "error_rate", "beta_opt", "std_error", "seed", "method",
            "energy_fractions", "beta_schedule"]
    if not args.mc and not all(_within_budget(n, det, m) for m in args.m):
        raise BudgetExceededError(
            f"N={n} exceeds the exact-enumeration budget; rerun with --mc to "
            "simulate the asymptotic schedule instead")
    out = TableWriter(cols, args.json)
    for m in args.m:
        e = BinaryEnsemble.from_mean_photons(m, args.p1)
        row = {"m": m, "p1": args.p1, "N": n}
        if args.mc:
            if m == 0:
                raise UsageError("--mc needs m > 0")
            plan = asymptotic_plan(n, m, det)
            rep = simulate(plan, e, SimConfig(args.trials, args.seed, args.shards))
            row.update(error_rate=rep.error_rate, std_error=rep.std_error,
                       seed=args.seed, method="montecarlo")
        elif m == 0:
            row.update(error_rate=min(e.p1, e.p2), method="exact")
            plan = None
        else:
            plan, eps = optimize_sequence([n], e, args.homogeneous, det)[n]
            row.update(error_rate=eps, method="exact")
            if n == 1:
                row["beta_opt"] = plan.beta_schedule[0]
        if plan is not None:
            for key in ("energy_fractions", "beta_schedule"):
                values = getattr(plan, key)
                row[key] = list(values) if args.json else ";".join(fmt(v) for v in values)
        out.row(row)
    return 0


def _plan_from_args(args, e: BinaryEnsemble) -> ChannelPlan:
    det = detector_from_args(args)
    if args.plan:
        try:
            data = json.loads(Path(args.plan).read_text())
        except ValueError as exc:
            raise UsageError(f"plan file {args.plan} is not valid JSON: {exc}")
        try:
            return ChannelPlan.from_dict(data)
        except (KeyError, TypeError) as exc:
            raise UsageError(f"plan file {args.plan} is missing fields: {exc}")
    n = args.n_channels
    if args.beta is None or args.beta == "asymptotic":
        if e.m <= 0:
            raise UsageError("the asymptotic schedule needs m > 0")
        plan = asymptotic_plan(n, e.m, det)
        betas = plan.beta_schedule
    else:
        betas = float_list(args.beta)
        if len(betas) == 1 and n > 1:
            betas = betas * n
        if len(betas) != n:
            raise UsageError(f"--beta gives {len(betas)} values for {n} channels")
    if args.fractions:
        fractions = float_list(args.fractions)
        if len(fractions) != n:
            raise UsageError(f"--fractions gives {len(fractions)} values for {n} channels")
    else:
        fractions = [1.0 / n] * n
    return ChannelPlan(tuple(fractions), tuple(betas), det)


def cmd_simulate(args) -> int:
    e = BinaryEnsemble.from_mean_photons(args.m, args.p1)
    plan = _plan_from_args(args, e)
    report = simulate(plan, e, SimConfig(args.trials, args.seed, args.shards))
    payload = report.to_dict()
    if args.exact:
        payload["exact_error"] = exact_error(plan, e)
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    return 0


def _curve_rows(args):
    det = detector_from_args(args)
    series: dict[str, list[dict]] = {"helstrom": [], "kennedy": []}
    if args.p1 == 0.5:
        series["homodyne"] = []
    for n in args.n_list:
        series[f"optimal_N{n}"] = []
    for m in args.m:
        e = BinaryEnsemble.from_mean_photons(m, args.p1)
        series["helstrom"].append({"m": m, "receiver": "helstrom",
                                   "error_rate": helstrom_bound(e)})
        series["kennedy"].append({"m": m, "receiver": "kennedy",
                                  "error_rate": kennedy_error(m, args.p1)})
        if "homodyne" in series:
            series["homodyne"].append({"m": m, "receiver": "homodyne",
                                       "error_rate": homodyne_error(m)})
    jobs = [(m, args.p1, args.n_list, args.homogeneous, det) for m in args.m]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_optimize_point, *zip(*jobs)))
    else:
        results = [_optimize_point(*job) for job in jobs]
    for m, res in zip(args.m, results):
        for n in args.n_list:
            plan, eps = res[n]
            beta = plan.beta_schedule[0] if (plan is not None and n == 1) else None
            series[f"optimal_N{n}"].append({"m": m, "receiver": f"optimal_N{n}",
                                            "error_rate": eps, "beta_opt": beta, "N": n})
    return series


def check_helstrom_floor(series, tol: float = 1e-12) -> None:
    floor = {row["m"]: row["error_rate"] for row in series["helstrom"]}
    for name, rows in series.items():
        for row in rows:
            if row["error_rate"] < floor[row["m"]] - tol:
                raise ReceiverError(
                    f"{name} at m={row['m']:g} falls below the Helstrom bound")


def cmd_curves(args) -> int:
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    series = _curve_rows(args)
    check_helstrom_floor(series)
    files = []
    for name, rows in series.items():
        path = out_dir / f"{name}.csv"
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CURVE_COLUMNS)
        for row in sorted(rows, key=lambda r: r["m"]):
            w.writerow([row["receiver"] if c == "receiver" else fmt(row.get(c))
                        for c in CURVE_COLUMNS])
        path.write_text(buf.getvalue())
        files.append(path.name)
    if not args.no_plot:
        from .plotting import plot_error_curves

        fig = out_dir / "error_curves.png"
        plot_error_curves({k: [(r["m"], r["error_rate"]) for r in v]
                           for k, v in series.items()}, fig)
        files.append(fig.name)
    manifest = {
        "command": "curves",
        "flags": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "m")},
        "grid": {"m": args.m},
        "tolerances": {"optimizer_ftol": 1e-9, "golden_tol": 1e-10,
                       "helstrom_floor": 1e-12},
        "version": __version__,
        "seed": None,
        "files": files,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if not args.quiet:
        for f in files:
            print(out_dir / f)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coherent-receiver",
        description="Error rates of receivers for binary coherent signals.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="Helstrom, Kennedy and homodyne error rates")
    p.add_argument("--m", type=m_grid, required=True, help="value, list or start:stop:count")
    p.add_argument("--p1", type=probability, default=0.5)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("sweep-beta", help="single-channel error against beta")
    p.add_argument("--m", type=nonneg_float, required=True)
    p.add_argument("--p1", type=probability, default=0.5)
    p.add_argument("--strategy", choices=[s.value for s in Strategy], default="pnr")
    p.add_argument("--beta-range", type=span, default=(0.0, 3.0), help="lo:hi")
    p.add_argument("--points", type=int, default=600)
    p.add_argument("--plot", help="also write a figure to this path")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sweep_beta)

    p = sub.add_parser("optimize", help="optimize an N-channel receiver")
    p.add_argument("--m", type=m_grid, required=True)
    p.add_argument("--p1", type=probability, default=0.5)
    p.add_argument("--n-channels", "-N", type=positive_int, default=1)
    p.add_argument("--homogeneous", action="store_true", help="equal energy split")
    p.add_argument("--mc", action="store_true",
                   help="simulate the asymptotic schedule instead of exact optimization")
    p.add_argument("--trials", type=positive_int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=positive_int, default=1)
    add_detector_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="Monte Carlo error estimate of a plan (JSON)")
    p.add_argument("--plan", help="JSON plan file (energy_fractions, beta_schedule, detector)")
    p.add_argument("--m", type=nonneg_float, required=True)
    p.add_argument("--p1", type=probability, default=0.5)
    p.add_argument("--n-channels", "-N", type=positive_int, default=1)
    p.add_argument("--beta", help="comma list of increments, or 'asymptotic' (default)")
    p.add_argument("--fractions", help="comma list of energy fractions")
    p.add_argument("--trials", type=positive_int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=positive_int, default=1)
    p.add_argument("--exact", action="store_true", help="also report the exact error")
    add_detector_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("curves", help="write receiver-performance series and a figure")
    p.add_argument("--m", type=m_grid, default=m_grid("0.05:1.5:30"))
    p.add_argument("--n-list", type=int_list, default=[1, 2, 3])
    p.add_argument("--p1", type=probability, default=0.5)
    p.add_argument("--homogeneous", action="store_true")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-plot", action="store_true")
    p.add_argument("--workers", type=positive_int, default=1)
    p.add_argument("--quiet", action="store_true")
    add_detector_flags(p)
    p.set_defaults(func=cmd_curves)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, DomainError, ContractError) as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceededError, ReceiverError, ArithmeticError) as exc:
        print(f"{parser.prog}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"{parser.prog}: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
