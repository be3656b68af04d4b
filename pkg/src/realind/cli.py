"""Command-line front end.

Exit codes: 0 success/verified, 1 usage or I/O error, 2 domain failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from .engine import (InvalidInput, MalformedTrace, SweepPolicy, check_trace, parse_oracle,
                     sweep)
from .interval import DomainError
from .kinematics import Control, Params, adversarial_search, simulate
from .ode import Ivp, rolle_check, solve_rk4, verify_nonnegative
from .predicates import PredicateSyntaxError, parse

OUT_ENV = "REALIND_OUT"

CSV_HELP = """\
CSV columns:
  sweep nodes      index, kind, from, to, epsilon, cert_kind
  ode solution     t, f (RK4 samples)
  kin-sim          t, x, y, theta, R, alpha_pol, Rp, alphap, F, margin
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
        return v
    return conv


def _finite(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return v


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _policy(args) -> SweepPolicy:
    base = SweepPolicy()
    return SweepPolicy(
        stall_window=args.stall_window or base.stall_window,
        stall_threshold=args.stall_threshold or base.stall_threshold,
        max_steps=args.max_steps or base.max_steps,
        max_limit_nodes=args.max_limit_nodes or base.max_limit_nodes,
        max_depth=args.depth or base.max_depth,
    )


def _write(path: Path, text: str) -> None:
    path.write_text(text)
    print(f"wrote {path}")


def cmd_sweep(args) -> int:
    if args.pred is not None:
        try:
            text = Path(args.pred).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read predicate file: {exc}") from exc
    elif args.pred_text is not None:
        text = args.pred_text
    else:
        raise UsageError("one of --pred or --pred-text is required")
    try:
        pred = parse(text.strip())
        oracle = parse_oracle(args.oracle)
    except (PredicateSyntaxError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    try:
        trace = sweep(pred, args.frm, args.to, oracle, _policy(args), var=args.var)
    except InvalidInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = _out_dir(args)
    if args.format in ("json", "both"):
        _write(out / f"{args.name}.json", trace.dumps())
    if args.format in ("csv", "both"):
        _write(out / f"{args.name}_nodes.csv", trace.to_csv())
    print(f"status: {trace.status}")
    print(f"ordinal: {trace.ordinal}")
    if not trace.reached:
        print(f"failed at {trace.failed_at!r}: {trace.reason}")
        return 2
    return 0


def cmd_ode(args) -> int:
    try:
        ivp = Ivp.from_text(args.alpha, args.beta, args.frm, args.b, args.to, args.var)
    except (PredicateSyntaxError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(args)
    samples = solve_rk4(ivp, args.dt)
    fmin = min(f for _, f in samples)
    if args.format in ("csv", "both"):
        _write(out / f"{args.name}_rk4.csv",
               "t,f\n" + "".join(f"{t!r},{f!r}\n" for t, f in samples))
    print(f"rk4: min f = {fmin!r}, f(T) = {samples[-1][1]!r}")
    try:
        trace = verify_nonnegative(ivp, _policy(args), h0=args.h0)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        crossing = rolle_check(ivp, samples)
        if crossing is not None:
            print(f"rk4 goes negative: f({crossing['negative_at']!r}) = {crossing['f']!r}")
        return 2
    if args.format in ("json", "both"):
        _write(out / f"{args.name}.json", trace.dumps())
    print(f"status: {trace.status} ({len(trace.nodes)} steps)")
    print(f"ordinal: {trace.ordinal}")
    if not trace.reached:
        print(f"failed at {trace.failed_at!r}: {trace.reason}")
        return 2
    return 0 if fmin >= -1e-9 else 2


def _control(args, T: float) -> Control:
    if args.control:
        try:
            pieces = [tuple(float(v) for v in part.split(":")) for part in args.control.split(",")]
            return Control(tuple(pieces), args.theta0)
        except ValueError as exc:
            raise UsageError(f"bad --control {args.control!r}; expected DUR:U,DUR:U,...") from exc
    return Control.constant(args.u, T, args.theta0)


def cmd_kin_sim(args) -> int:
    p = Params(args.v, args.rho)
    ctl = _control(args, args.T)
    try:
        traj = simulate(p, ctl, args.T, args.dt)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write(_out_dir(args) / f"{args.name}.csv", traj.to_csv())
    return 0


def cmd_kin_search(args) -> int:
    p = Params(args.v, args.rho)
    try:
        rep = adversarial_search(p, args.n, args.seed, args.T, args.dt, args.pieces,
                                 extended=args.extended)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write(_out_dir(args) / f"{args.name}.json", rep.dumps())
    print(f"min margin: {rep.min_margin!r} at t = {rep.argmin_t!r}")
    if rep.polar is not None:
        print(f"max |alpha'|: {rep.polar.max_abs_alphap!r}, min R': {rep.polar.min_Rp!r}")
    return 0 if rep.min_margin >= -args.tol else 2


def cmd_check(args) -> int:
    try:
        report = check_trace(args.trace)
    except OSError as exc:
        raise UsageError(f"cannot read trace: {exc}") from exc
    except (MalformedTrace, DomainError) as exc:
        print(f"fail: {exc}", file=sys.stderr)
        return 2
    where = f" (node {report.failed_node})" if report.failed_node is not None else ""
    print(f"{report.verdict}{where}: {report.message}")
    if report.ok and (report.rigorous or args.allow_numeric):
        return 0
    return 2


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="realind", description="Real-induction proofs and checks.",
                     epilog=CSV_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, name):
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
        p.add_argument("--name", default=name, help="output file stem")
        p.add_argument("--format", choices=("json", "csv", "both"), default="both")

    def policy(p):
        p.add_argument("--stall-window", type=_positive(int))
        p.add_argument("--stall-threshold", type=_positive(float))
        p.add_argument("--max-steps", type=_positive(int))
        p.add_argument("--max-limit-nodes", type=_positive(int))
        p.add_argument("--depth", type=_positive(int), help="bisection depth")

    p = sub.add_parser("sweep", help="run the induction sweep on a predicate",
                       epilog=CSV_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--pred", help="predicate file (.pred)")
    p.add_argument("--pred-text", help="predicate given inline")
    p.add_argument("--oracle", required=True, help="const:EPS | affine:K,M | table:P1,P2,...")
    p.add_argument("--from", dest="frm", type=_finite, required=True)
    p.add_argument("--to", type=_finite, required=True)
    p.add_argument("--var", default="x", help="induction variable")
    common(p, "trace")
    policy(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ode", help="certify f >= 0 for f' = -alpha f + beta")
    p.add_argument("--alpha", required=True, help="term in the time variable")
    p.add_argument("--beta", required=True, help="term in the time variable")
    p.add_argument("--b", type=_finite, default=0.0, help="initial value f(a)")
    p.add_argument("--from", dest="frm", type=_finite, default=0.0)
    p.add_argument("--to", type=_finite, required=True)
    p.add_argument("--var", default="x")
    p.add_argument("--dt", type=_positive(float), default=1e-3, help="RK4 cross-check step")
    p.add_argument("--h0", type=_positive(float), help="initial trial step")
    common(p, "ode")
    policy(p)
    p.set_defaults(func=cmd_ode)

    def kin(p):
        p.add_argument("--v", type=_positive(float), default=1.0)
        p.add_argument("--rho", type=_positive(float), default=1.0)
        p.add_argument("--T", type=_positive(float), required=True)
        p.add_argument("--dt", type=_positive(float), default=1e-3)

    p = sub.add_parser("kin-sim", help="simulate one control and dump the trajectory")
    kin(p)
    p.add_argument("--u", type=_finite, default=0.0, help="constant turn rate")
    p.add_argument("--control", help="pieces DUR:U,DUR:U,...")
    p.add_argument("--theta0", type=_finite, default=0.0)
    p.add_argument("--out")
    p.add_argument("--name", default="trajectory")
    p.set_defaults(func=cmd_kin_sim)

    p = sub.add_parser("kin-search", help="adversarial search for envelope violations")
    kin(p)
    p.add_argument("--n", type=_positive(int), default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pieces", type=_positive(int), default=6)
    p.add_argument("--extended", action="store_true", help="allow T up to 2 pi / rho")
    p.add_argument("--tol", type=_positive(float), default=1e-6)
    p.add_argument("--out")
    p.add_argument("--name", default="envelope_report")
    p.set_defaults(func=cmd_kin_search)

    p = sub.add_parser("check", help="replay a trace file")
    p.add_argument("trace")
    p.add_argument("--allow-numeric", action="store_true",
                   help="exit 0 on a non-rigorous pass as well")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"realind {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
