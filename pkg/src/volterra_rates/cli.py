"""Command-line front end.

Scalars are printed as JSON, sweeps and paths as CSV. Exit codes: 0 on
success, 2 on a usage or input error (message on stderr), 1 on a numerical
failure (JSON error object on stdout).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from typing import Optional, Sequence

import numpy as np

from .bonds import forward_rate_initial, zcb_price_initial
from .convexity import ConvexityQuery, convexity_adjustment
from .curves import ExponentialKernel, OUDriver, RiemannLiouvilleKernel, load_model
from .hurst import DEFAULT_LAGS, hurst_by_maturity, ingest_csv
from .products import load_schedule, payment_delay_pv, reset_delay_pv
from .simulation import SimGrid, estimate_ratio_expectation, simulate

SWEEP_PARAMS = ("alpha", "hurst", "beta")


class UsageError(Exception):
    pass


def _range_spec(text: str) -> np.ndarray:
    """``start:stop:n`` -> ``n`` evenly spaced values including both ends."""
    try:
        start, stop, n = text.split(":")
        start, stop, n = float(start), float(stop), int(n)
    except ValueError:
        raise UsageError(f"expected start:stop:n, got {text!r}") from None
    if n < 1:
        raise UsageError(f"range needs n >= 1, got {n}")
    return np.linspace(start, stop, n)


def _sweep_spec(text: str):
    name, sep, spec = text.partition("=")
    if not sep or name not in SWEEP_PARAMS:
        raise UsageError(f"sweep must look like alpha=a:b:n, hurst=a:b:n or beta=a:b:n, got {text!r}")
    return name, _range_spec(spec)


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _emit_json(obj, out):
    out.write(json.dumps(obj) + "\n")


def _csv_writer(out):
    return csv.writer(out, lineterminator="\n")


def _model(args):
    try:
        return load_model(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid config {args.config}: {exc}") from None


def _swept_model(model, name, value):
    if name == "alpha":
        return dataclasses.replace(model, kernel=ExponentialKernel(alpha=value, sigma=model.kernel.sigma))
    if name == "hurst":
        return dataclasses.replace(model, kernel=RiemannLiouvilleKernel(hurst=value, sigma=model.kernel.sigma))
    return dataclasses.replace(model, driver=OUDriver(beta=value))


# ---------------------------------------------------------------------------
# subcommands


def cmd_price(args, out):
    model = _model(args)
    if args.grid is None:
        if args.maturity is None:
            raise UsageError("price needs --maturity or --grid")
        T = args.maturity
        _emit_json({"P0T": float(zcb_price_initial(model, T).price),
                    "f0T": forward_rate_initial(model, T)}, out)
        return
    w = _csv_writer(out)
    w.writerow(("T", "P0T", "f0T"))
    for T in _range_spec(args.grid):
        T = float(T)
        w.writerow((repr(T), repr(float(zcb_price_initial(model, T).price)),
                    repr(forward_rate_initial(model, T))))


def cmd_convexity(args, out):
    model = _model(args)
    q = ConvexityQuery(t=args.t, t1=args.t1, t2=args.t2, tau=args.tau)
    if args.sweep is None:
        res = convexity_adjustment(model, q, args.method)
        _emit_json({"adjustment": res.adjustment, "log_adjustment": res.log_adjustment,
                    "method": res.method.value, "error_estimate": res.error_estimate}, out)
        return
    name, values = _sweep_spec(args.sweep)
    w = _csv_writer(out)
    w.writerow((name, "adjustment", "log_adjustment", "method"))
    for v in values:
        res = convexity_adjustment(_swept_model(model, name, float(v)), q, args.method)
        w.writerow((repr(float(v)), repr(res.adjustment), repr(res.log_adjustment),
                    res.method.value))


def cmd_simulate(args, out):
    model = _model(args)
    grid = SimGrid.uniform(args.horizon, args.steps)
    paths = simulate(model, grid, args.paths, args.seed, measure=args.measure,
                     T_for_integral=args.maturity, n_workers=args.workers)
    buf = io.StringIO() if args.out else out
    w = _csv_writer(buf)
    w.writerow(("path_id", "time", "short_rate", "stoch_integral"))
    for p in range(paths.n_paths):
        for i, t in enumerate(paths.times):
            w.writerow((p, repr(float(t)), repr(float(paths.short_rate[p, i])),
                        repr(float(paths.stoch_integral[p, i]))))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())


def cmd_mc_convexity(args, out):
    model = _model(args)
    q = ConvexityQuery(t=args.t, t1=args.t1, t2=args.t2, tau=args.tau)
    grid = SimGrid.uniform(q.t, args.steps) if q.t > 0 else None
    est = estimate_ratio_expectation(model, q, grid, args.paths, args.seed, n_workers=args.workers)
    ratio = zcb_price_initial(model, q.t1).price / zcb_price_initial(model, q.t2).price
    target = float(ratio * convexity_adjustment(model, q).adjustment)
    z = (est.mean - target) / est.std_error if est.std_error > 0 else 0.0
    _emit_json({"mean": est.mean, "std_error": est.std_error, "closed_form": target,
                "z_score": z}, out)


def cmd_hurst(args, out):
    try:
        panel = ingest_csv(args.data)
    except OSError as exc:
        raise UsageError(f"cannot read data: {exc}") from None
    mats = _float_list(args.maturities) if args.maturities else list(panel.maturities)
    lags = _int_list(args.lags)
    estimates = hurst_by_maturity(panel, mats, lags)
    buf = io.StringIO()
    w = _csv_writer(buf)
    w.writerow(("maturity", "hurst", "intercept", "r_squared", "n_obs", "error"))
    for e in estimates:
        w.writerow((repr(e.maturity), repr(e.H), repr(e.intercept), repr(e.r_squared),
                    e.n_obs, e.error or ""))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        out.write(buf.getvalue())


def cmd_products(args, out):
    model = _model(args)
    try:
        schedule = load_schedule(args.schedule)
    except OSError as exc:
        raise UsageError(f"cannot read schedule: {exc}") from None
    t = schedule.T_RS if args.t is None else args.t
    if args.reset_delay:
        if args.r0s is None:
            raise UsageError("--reset-delay needs --r0s")
        res = reset_delay_pv(model, schedule, t, args.r0s)
    else:
        if args.r0s is not None:
            raise UsageError("--r0s only applies with --reset-delay")
        res = payment_delay_pv(model, schedule, t)
    _emit_json({"pv": res.pv, "convexity_factor": res.convexity_factor,
                "p0_ratio": res.p0_ratio}, out)


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _query_flags(p):
    p.add_argument("--t", type=float, required=True, help="observation time")
    p.add_argument("--t1", type=float, required=True, help="numerator bond maturity")
    p.add_argument("--t2", type=float, required=True, help="denominator bond maturity")
    p.add_argument("--tau", type=float, required=True, help="forward-measure maturity")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="volterra-rates",
                     description="Gaussian-Volterra short-rate models: bonds, convexity, "
                                 "simulation, Hurst estimation and compounded-rate flows.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("price", help="initial bond price and forward rate")
    p.add_argument("--config", required=True, help="model JSON")
    p.add_argument("--maturity", type=float)
    p.add_argument("--grid", help="maturity grid start:stop:n (CSV output)")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("convexity", help="convexity adjustment of a bond-price ratio")
    p.add_argument("--config", required=True)
    _query_flags(p)
    p.add_argument("--method", default="auto", choices=("auto", "closed", "quad", "asymptotic"))
    p.add_argument("--sweep", help="alpha=a:b:n, hurst=a:b:n or beta=a:b:n (CSV output)")
    p.set_defaults(func=cmd_convexity)

    p = sub.add_parser("simulate", help="simulate short-rate paths (CSV)")
    p.add_argument("--config", required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--measure", default="rn", help="rn or fwd:TAU")
    p.add_argument("--maturity", type=float, help="bond maturity of the stochastic integral "
                                                   "(default: horizon)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mc-convexity", help="Monte Carlo check of the convexity adjustment")
    p.add_argument("--config", required=True)
    _query_flags(p)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_mc_convexity)

    p = sub.add_parser("hurst", help="Hurst exponent per maturity from a yield panel")
    p.add_argument("--data", required=True, help="CSV with header date,maturity,rate")
    p.add_argument("--maturities", help="comma-separated (default: all panel maturities)")
    p.add_argument("--lags", default=",".join(map(str, DEFAULT_LAGS)))
    p.add_argument("--out")
    p.set_defaults(func=cmd_hurst)

    p = sub.add_parser("products", help="compounded-rate flows")
    psub = p.add_subparsers(dest="product_command", required=True, parser_class=_Parser)
    pv = psub.add_parser("pv", help="present value of one compounded flow")
    pv.add_argument("--config", required=True)
    pv.add_argument("--schedule", required=True, help="schedule JSON")
    pv.add_argument("--t", type=float, help="observation time of the ratio (default: first reset)")
    pv.add_argument("--reset-delay", action="store_true")
    pv.add_argument("--r0s", type=float)
    pv.set_defaults(func=cmd_products)
    return parser


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args, stdout)
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return 2
    except ArithmeticError as exc:
        _emit_json({"error": type(exc).__name__, "message": str(exc)}, stdout)
        return 1
    except ValueError as exc:
        # contract violations from the library: bad inputs rather than bad numerics
        stderr.write(f"error: {exc}\n")
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
