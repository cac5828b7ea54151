"""Command-line interface.

Scalar results are printed as JSON objects with the keys ``command``,
``config``, ``value``, ``error``, ``method``, ``paper_route`` (the route that
produced the number) and ``metadata``.  Scans and sample streams are CSV.

Settings are resolved in the order built-in default < config file < flag.  A
config file is INI: keys in ``[DEFAULT]`` apply to every command, keys in a
section named after the command apply to that command only, and keys are the
long option names with dashes replaced by underscores.

Exit codes: 0 success, 2 usage or domain error, 3 numerical non-convergence,
4 verification failure.
"""

from __future__ import annotations

import argparse
import configparser
import contextlib
import csv
import dataclasses
import enum
import io
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from . import ensemble, exact, kernel, painleve, quadrature, verify
from .errors import ConvergenceError, DomainError, JointMomentsError, Method, MomentEstimate

OUTPUT_DIR_ENV = "JOINTMOMENTS_OUTPUT_DIR"
EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_VERIFY = 0, 1, 2, 3, 4


class UsageError(Exception):
    """Parameters that parse but do not fit the chosen method or route."""


@dataclasses.dataclass
class RunConfig:
    """Fully resolved settings of one invocation, echoed into every output."""

    command: str
    params: dict[str, Any]
    seed: int | None
    output: str | None
    format: str
    threads: int

    def to_dict(self) -> dict[str, Any]:
        return {"command": self.command, **self.params, "seed": self.seed,
                "output": self.output, "format": self.format, "threads": self.threads}


# --- parsing ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _grid(text: str) -> list[float]:
    """``a:b:n`` (n equispaced points) or a comma-separated list."""
    if ":" in str(text):
        try:
            a, b, n = str(text).split(":")
            return [float(v) for v in np.linspace(float(a), float(b), int(n))]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"expected start:stop:count, got {text!r}") from exc
    return _float_list(text)


def _bool(text: str) -> bool:
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _common(p: argparse.ArgumentParser, seed: int | None = 0) -> None:
    g = p.add_argument_group("common options")
    g.add_argument("--config", help="INI file of defaults (flags override it)")
    g.add_argument("--output", help=f"output file; relative paths resolve against ${OUTPUT_DIR_ENV}")
    g.add_argument("--format", choices=("json", "csv"), default=None,
                   help="json for scalar results, csv for scans and samples")
    g.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="maximum worker threads (results do not depend on it)")
    if seed is not None:
        g.add_argument("--seed", type=int, default=seed, help="master seed")


def _chain_options(p: argparse.ArgumentParser, samples: int) -> None:
    p.add_argument("--samples", type=int, default=samples, help="retained samples (summed over chains)")
    p.add_argument("--chains", type=int, default=64, help="parallel Metropolis chains")
    p.add_argument("--chains-per-block", type=int, default=64,
                   help="chains sharing one random stream (part of the reproducibility contract)")
    p.add_argument("--burn-in", type=int, default=200, help="sweeps discarded per chain")
    p.add_argument("--thinning", type=int, default=1, help="sweeps between retained states")
    p.add_argument("--proposal-scale", type=float, default=1.0,
                   help="initial angular step in units of 2 pi / N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jointmoments",
        description="Joint moments of CUE characteristic polynomials and their large-N limit.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("exact", help="closed-form F_N(s,0), F(s,0), c_N and a(s)")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--N", type=int)
    p.add_argument("--prime-cutoff", type=int, default=100_000, help="primes kept in a(s)")
    p.add_argument("--series-cutoff", type=int, default=60, help="terms per Euler factor")
    _common(p, seed=None)

    p = sub.add_parser("moment", help="finite-N joint moment F_N(s,h)")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--method", choices=("quadrature", "mcmc", "cue"), default="quadrature")
    p.add_argument("--order", type=int, default=32, help="quadrature nodes per axis")
    _chain_options(p, samples=100_000)
    _common(p)

    p = sub.add_parser("limit", help="large-N limit F(s,h)")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--route", choices=("mcmc_extrapolate", "kernel_variance", "painleve", "bessel_det"),
                   default="painleve")
    p.add_argument("--N-grid", type=_int_list, default=[25, 50, 100, 200], dest="N_grid",
                   help="matrix sizes for the 1/N extrapolation")
    p.add_argument("--K", type=int, default=20, help="Painleve series truncation")
    p.add_argument("--kernel-R", type=float, default=50.0, help="kernel truncation radius")
    p.add_argument("--kernel-nodes", type=int, default=10, help="Gauss-Legendre nodes per panel")
    p.add_argument("--zeta", type=_bool, default=False,
                   help="also report the predicted zeta-moment coefficient a(s) F(s,h)")
    _chain_options(p, samples=100_000)
    _common(p)

    p = sub.add_parser("kernel", help="limiting kernel evaluations and integrals")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--mode", choices=("eval", "integrals", "variance", "spectrum"), default="eval")
    p.add_argument("--x", type=float, help="first argument (eval)")
    p.add_argument("--y", type=float, help="second argument (eval; defaults to x)")
    p.add_argument("--h", type=float, default=1.0, help="moment order (integrals)")
    p.add_argument("--R", type=float, default=None, help="truncation radius")
    p.add_argument("--eps", type=float, default=0.01, help="inner cutoff (spectrum)")
    p.add_argument("--nodes", type=int, default=10, help="Gauss-Legendre nodes per panel")
    _common(p, seed=None)

    p = sub.add_parser("fredholm", help="characteristic function of X(s) as a Fredholm determinant")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t", type=_grid, required=True,
                   help="a value, a comma list, or start:stop:count (several values give CSV)")
    p.add_argument("--eps", type=float, default=None, help="single inner cutoff instead of extrapolating")
    p.add_argument("--R", type=float, default=200.0)
    p.add_argument("--nodes", type=int, default=10)
    _common(p, seed=None)

    p = sub.add_parser("painleve", help="sigma-Painleve series, moments, ODE continuation, residuals")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--mode", choices=("moment", "series", "integrate", "residual"), default="moment")
    p.add_argument("--h", type=int, default=1, help="moment order E[X^(2h)]")
    p.add_argument("--K", type=int, default=20, help="series truncation")
    p.add_argument("--t-start", type=float, default=0.2)
    p.add_argument("--t-end", type=float, default=5.0)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--N", type=int, default=2, help="matrix size (residual)")
    p.add_argument("--t-grid", type=_grid, default=_grid("0.1:1:10"), dest="t_grid",
                   help="residual grid, start:stop:count or comma list")
    p.add_argument("--order", type=int, default=64, help="quadrature order (residual)")
    _common(p, seed=None)

    p = sub.add_parser("sample", help="CSV stream of Hua-Pickrell eigenvalue configurations")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--method", choices=("mcmc", "cue"), default="mcmc")
    _chain_options(p, samples=1000)
    _common(p)

    p = sub.add_parser("plot", help="gnuplot-ready CSV of phi(t) and Xi(t)")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t", type=_grid, default=_grid("0.5:6:12"), help="start:stop:count or comma list")
    p.add_argument("--R", type=float, default=200.0)
    p.add_argument("--nodes", type=int, default=10)
    _common(p, seed=None)

    p = sub.add_parser("verify", help="run the cross-check matrix and print a pass/fail table")
    p.add_argument("--level", choices=verify.LEVELS, default="fast")
    _common(p, seed=42)

    return parser


def _subparsers(parser: argparse.ArgumentParser) -> dict[str, argparse.ArgumentParser]:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return dict(action.choices)
    return {}


def _apply_config_file(sub: argparse.ArgumentParser, command: str, path: str) -> None:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        sub.error(f"cannot read config file {path!r}")
    values = dict(cp.defaults())
    if cp.has_section(command):
        values.update(cp.items(command))
    actions = {a.dest: a for a in sub._actions}
    lowered = {k.lower(): k for k in actions}
    defaults = {}
    for key, raw in values.items():
        dest = lowered.get(key.replace("-", "_").lower())
        if dest is None or dest in ("config", "help"):
            continue
        action = actions[dest]
        try:
            value = action.type(raw) if action.type else raw
        except (argparse.ArgumentTypeError, ValueError) as exc:
            sub.error(f"config key {key!r}: {exc}")
        if action.choices is not None and value not in action.choices:
            sub.error(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        defaults[dest] = value
        action.required = False
    sub.set_defaults(**defaults)


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    subs = _subparsers(parser)
    command = next((a for a in argv if a in subs), None)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if command is not None and known.config:
        # file values become defaults, so explicit flags still win
        _apply_config_file(subs[command], command, known.config)
    return parser.parse_args(argv)


def _run_config(args: argparse.Namespace) -> RunConfig:
    skip = {"command", "config", "seed", "output", "format", "threads"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    fmt = args.format or ("csv" if _is_tabular(args) else "json")
    if args.threads < 1:
        raise UsageError("--threads must be positive")
    return RunConfig(args.command, params, getattr(args, "seed", None), args.output, fmt, args.threads)


def _is_tabular(args: argparse.Namespace) -> bool:
    if args.command in ("sample", "plot"):
        return True
    if args.command == "fredholm":
        return len(args.t) > 1
    return args.command == "painleve" and args.mode == "integrate"


def _chain_config(args: argparse.Namespace) -> ensemble.ChainConfig:
    return ensemble.ChainConfig(
        seed=args.seed, burn_in=args.burn_in, thinning=args.thinning,
        proposal_scale=args.proposal_scale, n_samples=args.samples, n_chains=args.chains,
        chains_per_block=args.chains_per_block, workers=args.threads,
    )


# --- output ----------------------------------------------------------------------------


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, Fraction):
        return str(obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _jsonable(dataclasses.asdict(obj))
    return obj


def _report(cfg: RunConfig, value: Any, error: Any, method: Method | str, route: str,
            metadata: dict | None = None) -> dict[str, Any]:
    return {"command": cfg.command, "config": cfg.to_dict(), "value": value, "error": error,
            "method": method, "paper_route": route, "metadata": metadata or {}}


def _from_estimate(cfg: RunConfig, est: MomentEstimate, route: str) -> dict[str, Any]:
    return _report(cfg, est.value, est.abs_error, est.method, route, est.metadata)


def _csv_text(header: list[str], rows, comment: dict | None = None) -> str:
    buf = io.StringIO()
    if comment is not None:
        # '#' lines are skipped by gnuplot and by csv readers configured for comments
        buf.write("# " + json.dumps(_jsonable(comment), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _destination(cfg: RunConfig) -> Path | None:
    base = os.environ.get(OUTPUT_DIR_ENV)
    if cfg.output:
        path = Path(cfg.output)
        return path if path.is_absolute() or not base else Path(base) / path
    if base:
        return Path(base) / f"{cfg.command}.{cfg.format}"
    return None


def _emit(cfg: RunConfig, text: str, stdout) -> None:
    dest = _destination(cfg)
    if dest is not None:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text)
    stdout.write(text)


def _dump(report: dict[str, Any]) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=False) + "\n"


# --- commands --------------------------------------------------------------------------


def cmd_exact(args, cfg: RunConfig) -> str:
    s = args.s
    value: dict[str, Any] = {"F_limit": math.exp(exact.log_F_limit_s0(s))}
    if args.N is not None:
        value["F_N"] = math.exp(exact.log_F_N_s0(s, args.N))
        value["log_c_N"] = exact.log_c_N(s, args.N)
        value["c_N"] = math.exp(value["log_c_N"])
    a = exact.arithmetic_constant(s, args.prime_cutoff, args.series_cutoff)
    value["a"] = a.value
    error = {k: 0.0 for k in value}
    error["a"] = a.abs_error
    return _dump(_report(cfg, value, error, Method.CLOSED_FORM,
                         "Barnes G closed forms; truncated Euler product for a(s)", a.metadata))


def cmd_moment(args, cfg: RunConfig) -> str:
    s, h, N = args.s, args.h, args.N
    if args.method == "quadrature":
        if not 1 <= N <= quadrature.MAX_N:
            raise UsageError(f"quadrature handles 1 <= N <= {quadrature.MAX_N}; use --method mcmc or cue")
        est = quadrature.joint_moment_quadrature(s, h, N, args.order)
        route = "Hua-Pickrell tensor quadrature of E_N|sum x|^(2h)"
    elif args.method == "mcmc":
        est = ensemble.joint_moment_mcmc(s, h, N, _chain_config(args))
        route = "Hua-Pickrell Metropolis chains, reweighted"
    else:
        est = ensemble.joint_moment_cue(s, h, N, args.samples, args.seed)
        route = "Haar unitaries, direct average of |V|^(2s-2h)|V'|^(2h)"
    return _dump(_from_estimate(cfg, est, route))


def _limit_inner(args) -> tuple[MomentEstimate, str]:
    s, h = args.s, args.h
    if args.route == "mcmc_extrapolate":
        est = ensemble.abs_moment_limit(s, h, args.N_grid, _chain_config(args))
        return est, "E_N|sum x / N|^(2h) by Metropolis chains, extrapolated in 1/N"
    if args.route == "kernel_variance":
        if h != 1:
            raise UsageError("route kernel_variance computes h = 1 only")
        est = kernel.variance_via_kernel(s, R=args.kernel_R, n_nodes=args.kernel_nodes)
        return est, "variance of X(s) from the limiting correlation kernel"
    if h != int(h) or h < 0:
        raise UsageError(f"route {args.route} needs a nonnegative integer h")
    hi = int(h)
    if hi == 0:
        return MomentEstimate(1.0, 0.0, Method.PAINLEVE if args.route == "painleve"
                              else Method.BESSEL_DET, {"s": s, "h": 0}), "trivial moment"
    if not s > hi - 0.5:
        raise UsageError(f"E[X(s)^{2 * hi}] is infinite unless s > {hi - 0.5}")
    if args.route == "painleve":
        return painleve.painleve_moment(s, hi, args.K), "sigma-Painleve III' power series"
    if s != int(s):
        raise UsageError("route bessel_det needs an integer s")
    return painleve.bessel_det_moment(int(s), hi), "Bessel-I determinant generating function"


def cmd_limit(args, cfg: RunConfig) -> str:
    s, h = args.s, args.h
    exact.check_joint_range(s, h)
    inner, route = _limit_inner(args)
    factor = math.exp(exact.log_F_limit_s0(s)) * 2.0 ** (-2.0 * h)
    meta = dict(inner.metadata, E_abs_X_power=inner.value, E_abs_X_power_error=inner.abs_error,
                F_s0=math.exp(exact.log_F_limit_s0(s)))
    if args.zeta:
        a = exact.arithmetic_constant(s)
        meta["zeta_prediction"] = a.value * factor * inner.value
        meta["a"] = a.value
    return _dump(_report(cfg, factor * inner.value, factor * inner.abs_error, inner.method,
                         route, meta))


def cmd_kernel(args, cfg: RunConfig) -> str:
    s = args.s
    if args.mode == "eval":
        if args.x is None:
            raise UsageError("--mode eval needs --x")
        y = args.x if args.y is None else args.y
        value = kernel.kernel_eval(s, args.x, y)
        return _dump(_report(cfg, value, 0.0, Method.KERNEL, "Bessel J kernel, point evaluation",
                             {"correlation_factor": kernel.CORRELATION_FACTOR}))
    if args.mode == "integrals":
        R = 10.0 if args.R is None else args.R
        tail, bulk = kernel.moment_integrals_checked(s, args.h, R)
        return _dump(_report(cfg, {"tail": tail, "bulk": bulk}, None, Method.KERNEL,
                             "diagonal kernel integrals outside and inside radius R", {"R": R}))
    if args.mode == "variance":
        R = 50.0 if args.R is None else args.R
        est = kernel.variance_via_kernel(s, R=R, n_nodes=args.nodes)
        return _dump(_from_estimate(cfg, est, "variance of X(s) from the limiting correlation kernel"))
    R = 200.0 if args.R is None else args.R
    ev = kernel.NystromOperator.build(s, args.eps, R, args.nodes).eigenvalues()
    return _dump(_report(cfg, {"min": float(ev.min()), "max": float(ev.max())}, None, Method.KERNEL,
                         "Nystrom spectrum of the correlation kernel",
                         {"n_nodes": int(ev.size), "top": ev[::-1][:5]}))


def cmd_fredholm(args, cfg: RunConfig) -> str:
    kw = {"eps": args.eps, "R": args.R, "n_nodes": args.nodes}
    route = "Fredholm determinant of the limiting kernel, Nystrom discretisation"
    if cfg.format == "json":
        if len(args.t) != 1:
            raise UsageError("JSON output takes a single --t; use --format csv for a scan")
        est = kernel.fredholm_char_function(args.s, args.t[0], **kw)
        return _dump(_from_estimate(cfg, est, route))
    rows = kernel.fredholm_scan(args.s, args.t, **kw)
    return _csv_text(["t", "phi_re", "phi_im", "spread"], rows, cfg.to_dict())


def cmd_painleve(args, cfg: RunConfig) -> str:
    s = args.s
    if args.mode == "moment":
        inner, route = _limit_inner(argparse.Namespace(s=s, h=args.h, route="painleve", K=args.K))
        return _dump(_from_estimate(cfg, inner, route))
    if args.mode == "series":
        ser = painleve.sigma_piii_series(s, args.K)
        return _dump(_report(cfg, list(ser.coeffs), ser.truncation_error(1.0), Method.PAINLEVE,
                             "sigma-Painleve III' power series coefficients of Xi(t)",
                             {"K": args.K}))
    if args.mode == "residual":
        est = painleve.finite_N_residual(int(s) if s == int(s) else s, args.N, args.t_grid, args.order)
        return _dump(_from_estimate(cfg, est, "finite-N sigma equation residual of quadrature Xi_N"))
    ser = painleve.sigma_piii_series(s, args.K)
    table = painleve.integrate_sigma(s, ser, args.t_start, args.t_end, tol=args.tol, n_out=args.points)
    rows = zip(table.t, table.xi, table.dxi, table.residual)
    comment = dict(cfg.to_dict(), breakdown_t=table.breakdown_t)
    return _csv_text(["t", "xi", "xi_prime", "defect"], rows, comment)


def cmd_sample(args, cfg: RunConfig) -> str:
    if args.method == "mcmc":
        stream = ensemble.mcmc_sample_hp(args.s, args.N, _chain_config(args))
    else:
        if args.s != 0:
            raise UsageError("Haar sampling gives the s = 0 ensemble only")
        stream = _cue_stream(args.N, args.samples, args.seed)
    rows = ([smp.origin.value, *smp.points] for smp in stream)
    return _csv_text(["origin", *[f"x{i + 1}" for i in range(args.N)]], rows, cfg.to_dict())


def _cue_stream(N: int, n: int, seed: int):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    theta = ensemble.cue_angles(N, n, rng)
    for row in ensemble.cayley_points(theta):
        yield ensemble.EigenvalueSample(np.sort(row)[::-1], ensemble.Origin.CUE_CAYLEY)


def cmd_plot(args, cfg: RunConfig) -> str:
    t = np.asarray(args.t, dtype=float)
    phi = kernel.fredholm_scan(args.s, t, R=args.R, n_nodes=args.nodes)
    xi = np.full(t.size, np.nan)
    try:
        ser = painleve.sigma_piii_series(args.s)
        pos = t > 0
        if pos.any():
            start = float(min(t[pos].min(), 0.2))
            grid = painleve.integrate_sigma(args.s, ser, start, float(t.max()), n_out=401)
            xi[pos] = np.interp(t[pos], grid.t, grid.xi)
    except ConvergenceError:
        pass
    rows = [(r[0], r[1], r[2], r[3], x) for r, x in zip(phi, xi)]
    return _csv_text(["t", "phi_re", "phi_im", "phi_spread", "xi"], rows, cfg.to_dict())


def cmd_verify(args, cfg: RunConfig, stdout) -> tuple[str, int]:
    results = verify.run_checks(args.level, args.seed,
                                report=lambda r: (stdout.write(r.line() + "\n"), stdout.flush()))
    n_pass = sum(r.passed for r in results)
    stdout.write(f"{n_pass}/{len(results)} checks passed\n")
    report = _report(cfg, {str(r.index): r.passed for r in results}, None, "verify",
                     "cross-check matrix",
                     {str(r.index): {"name": r.name, "details": r.details} for r in results})
    code = EXIT_OK if n_pass == len(results) else EXIT_VERIFY
    return _dump(report), code


COMMANDS = {
    "exact": cmd_exact, "moment": cmd_moment, "limit": cmd_limit, "kernel": cmd_kernel,
    "fredholm": cmd_fredholm, "painleve": cmd_painleve, "sample": cmd_sample, "plot": cmd_plot,
}


def main(argv: list[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        with contextlib.redirect_stderr(stderr), contextlib.redirect_stdout(stdout):
            args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _run_config(args)
        if args.command == "verify":
            text, code = cmd_verify(args, cfg, stdout)
            dest = _destination(cfg)
            if dest is not None:
                dest.parent.mkdir(parents=True, exist_ok=True)
                dest.write_text(text)
            return code
        _emit(cfg, COMMANDS[args.command](args, cfg), stdout)
        return EXIT_OK
    except (UsageError, DomainError) as exc:
        stderr.write(f"jointmoments {args.command}: {exc}\n")
        return EXIT_USAGE
    except ConvergenceError as exc:
        stderr.write(f"jointmoments {args.command}: did not converge: {exc}\n")
        return EXIT_CONVERGENCE
    except JointMomentsError as exc:
        stderr.write(f"jointmoments {args.command}: {exc}\n")
        return EXIT_ERROR
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); silence the flush at exit
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
