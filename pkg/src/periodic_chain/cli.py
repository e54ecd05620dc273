"""Command-line front end: ``periodic-chain <command> [options]``.

Exit status: 0 success, 2 invalid input, 3 numerical-resolution warning
under ``--strict``, 4 resource cap. Errors are one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
import warnings

import numpy as np

from .discrete import DiscreteChain, discrete_monodromy, mean_transitions_discrete
from .flow import DEFAULT_STEPS, ResolutionWarning
from .genfun import floquet_spectrum
from .linalg2 import det2
from .montecarlo import MonteCarloWarning, ResourceCapError, ensemble_stats
from .pspm import Pspm, pspm_at, periodic_solution_on_grid
from .rates import SpecError, load_spec
from .resonance import (HalfPeriodParams, asymptotic_period, half_period_mean,
                        leading_order_period, tune_constant_trace, tune_half_period)

EXIT_INPUT = 2
EXIT_RESOLUTION = 3
EXIT_RESOURCE = 4
PSPM_TOL = 1e-8
LIOUVILLE_TOL = 1e-10


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _InputError(message)


class _InputError(Exception):
    pass


def _num(kind, cond, what):
    def parse(text):
        try:
            x = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a valid {kind.__name__}: {text!r}")
        if isinstance(x, float) and not math.isfinite(x):
            raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
        if not cond(x):
            raise argparse.ArgumentTypeError(f"must be {what}: {text!r}")
        return x
    return parse


positive = _num(float, lambda x: x > 0, "> 0")
real = _num(float, lambda x: True, "real")
steps_type = _num(int, lambda x: x >= 16, ">= 16")
count = _num(int, lambda x: x >= 1, ">= 1")
seed_type = _num(int, lambda x: 0 <= x < 2 ** 64, "in [0, 2**64)")
above_one = _num(float, lambda x: x > 1, "> 1")


def _fmt(x):
    return "%.17g" % x


def _csv(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) if isinstance(x, float) else str(x) for x in row) + "\n")
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _json(obj):
    return json.dumps(_clean(obj), sort_keys=True, allow_nan=False) + "\n"


def _flag_warning(msg):
    warnings.warn(msg, ResolutionWarning, stacklevel=2)


# commands

def cmd_pspm(args):
    spec = load_spec(args.spec)
    steps = args.steps_per_period
    traj = periodic_solution_on_grid(spec, args.points, steps)
    mu_m, mu_p = pspm_at(Pspm.from_spec(spec), traj.t)
    err = np.abs(mu_m - traj.nu[:, 0])
    if err.max() > PSPM_TOL:
        _flag_warning(f"closed form and ODE disagree by {err.max():.3e}")
    rows = zip(traj.t.tolist(), mu_m.tolist(), mu_p.tolist(), traj.nu[:, 0].tolist(),
               traj.nu[:, 1].tolist(), err.tolist())
    return _csv(["t", "mu_minus", "mu_plus", "nu_minus", "nu_plus", "err"], rows)


def cmd_floquet(args):
    spec = load_spec(args.spec)
    rows = []
    for eta in args.eta or [1.0]:
        fs = floquet_spectrum(spec, eta, args.steps_per_period)
        if fs.liouville_residual > LIOUVILLE_TOL:
            _flag_warning(f"Liouville residual {fs.liouville_residual:.3e} at eta={eta}")
        rows.append((float(eta), fs.lambda1, fs.lambda2, fs.mean_exponent, fs.liouville_residual))
    return _csv(["eta", "lambda1", "lambda2", "mean_exponent", "liouville_residual"], rows)


def cmd_discrete(args):
    spec = load_spec(args.spec)
    chain = DiscreteChain.from_spec(spec, args.N)
    dm = discrete_monodromy(chain, args.eta)
    # determinant of the assembled product against the per-step product, both
    # in mantissa scale
    shift = 2 * dm.scaled.log_scale()
    per_step = dm.det_sign * math.exp(dm.log_abs_det - shift) if dm.det_sign else 0.0
    assembled = float(det2(dm.scaled.mantissa))
    det_check = abs(assembled - per_step) / abs(per_step) if per_step else abs(assembled)
    return _json({
        "N": chain.N, "eta": args.eta, "lambda1": dm.lambda1, "lambda2": dm.lambda2,
        "log_lambda1": dm.log_lambda1, "mean_transitions": mean_transitions_discrete(chain),
        "det_check": det_check,
    })


def cmd_simulate(args):
    spec = load_spec(args.spec)
    initial = args.initial if args.initial == "stationary" else int(args.initial)
    st = ensemble_stats(spec, args.paths, args.horizon, args.eta or [], args.seed,
                        workers=args.workers, initial=initial)
    if args.paths_csv:
        rows = zip(st.seeds.tolist(), st.n_up.tolist(), st.final_state.tolist())
        with open(args.paths_csv, "w", newline="") as fh:
            fh.write(_csv(["seed", "n_up", "final_state"], rows))
    return _json(st.to_dict())


def _half_params(args):
    return HalfPeriodParams(args.p, args.q, args.V, args.v, args.eps)


def cmd_tune_a(args):
    params = _half_params(args)
    res = tune_half_period(params)
    asym = asymptotic_period(params)
    return _json({"T_opt": res.argument, "residual": res.residual, "iterations": res.iterations,
                  "bracket": list(res.bracket), "asymptotic": asym,
                  "ratio": math.exp(math.log(res.argument) - math.log(asym))})


def cmd_tune_b(args):
    res = tune_constant_trace(args.a)
    return _json({"a": args.a, "mu_opt": res.argument, "residual": res.residual,
                  "iterations": res.iterations, "bracket": list(res.bracket)})


def cmd_figure1(args):
    params = _half_params(args)
    centre = asymptotic_period(params)
    lo = args.tmin or centre / 100
    hi = args.tmax or centre * 100
    if not lo < hi:
        raise ValueError("need tmin < tmax")
    T = np.geomspace(lo, hi, args.points)
    means = half_period_mean(params, T)
    return _csv(["T", "mean_transitions"], zip(T.tolist(), means.tolist()))


def cmd_sweep(args):
    rows = []
    for eps in args.eps or [0.1, 0.08, 0.06, 0.05]:
        params = HalfPeriodParams(args.p, args.q, args.V, args.v, eps)
        res = tune_half_period(params)
        lt = math.log(res.argument)
        rows.append((float(eps), res.argument, res.residual, asymptotic_period(params),
                     math.exp(lt - math.log(asymptotic_period(params))),
                     math.exp(lt - math.log(leading_order_period(params)))))
    return _csv(["eps", "T_opt", "residual", "asymptotic", "ratio", "ratio_leading_order"], rows)


def build_parser():
    def global_flags(suppress):
        g = argparse.ArgumentParser(add_help=False)

        def d(value):
            return argparse.SUPPRESS if suppress else value
        g.add_argument("--out", default=d(None), help="write output here instead of stdout")
        g.add_argument("--seed", type=seed_type, default=d(0))
        g.add_argument("--strict", action="store_true", default=d(False),
                       help="exit 3 when a numerical-resolution check fails")
        g.add_argument("--steps-per-period", type=steps_type, default=d(DEFAULT_STEPS))
        g.add_argument("--N", type=count, default=d(4096), help="discrete steps per period")
        return g

    # flags may come before or after the subcommand; only the top level sets defaults
    common = global_flags(suppress=True)

    parser = _Parser(prog="periodic-chain", parents=[global_flags(suppress=False)],
                     description="Periodically forced two-state Markov chain toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_text, spec=True):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if spec:
            p.add_argument("spec", help="rate-spec JSON file")
        p.set_defaults(func=fn)
        return p

    p = add("pspm", cmd_pspm, "closed-form stationary measure against the ODE fixed point")
    p.add_argument("--points", type=count, default=1024)
    p = add("floquet", cmd_floquet, "Floquet exponents of the generating-function ODE")
    p.add_argument("--eta", type=positive, action="append")
    p = add("discrete", cmd_discrete, "discrete-chain monodromy and mean transitions")
    p.add_argument("--eta", type=positive, default=1.0)
    p = add("simulate", cmd_simulate, "Monte Carlo ensemble statistics")
    p.add_argument("--paths", type=_num(int, lambda x: x >= 100, ">= 100"), default=1000)
    p.add_argument("--horizon", type=positive, required=True)
    p.add_argument("--eta", type=positive, action="append")
    p.add_argument("--workers", type=count, default=1)
    p.add_argument("--initial", choices=["stationary", "-1", "1"], default="stationary")
    p.add_argument("--paths-csv", help="also write per-path seed, n_up, final_state")

    def half_flags(p):
        p.add_argument("--p", type=positive, default=1.0)
        p.add_argument("--q", type=positive, default=1.0)
        p.add_argument("--V", type=real, default=2.0)
        p.add_argument("--v", type=real, default=1.0)

    p = add("tune-a", cmd_tune_a, "period giving one up-crossing per period (half-period rates)",
            spec=False)
    half_flags(p)
    p.add_argument("--eps", type=positive, required=True)
    p = add("tune-b", cmd_tune_b,
            "frequency ratio omega/eps for the constant-trace rates", spec=False)
    p.add_argument("--a", type=above_one, required=True)
    p = add("figure1", cmd_figure1, "mean transitions per period over a log-spaced period grid",
            spec=False)
    half_flags(p)
    p.add_argument("--eps", type=positive, default=0.1)
    p.add_argument("--points", type=_num(int, lambda x: x >= 2, ">= 2"), default=64)
    p.add_argument("--tmin", type=positive)
    p.add_argument("--tmax", type=positive)
    p = add("sweep", cmd_sweep, "tuned period against its small-noise asymptotics", spec=False)
    half_flags(p)
    p.add_argument("--eps", type=positive, action="append")
    return parser


def _fail(code, kind, message):
    sys.stderr.write(json.dumps({"error": kind, "message": str(message), "exit": code}) + "\n")
    return code


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _InputError as exc:
        return _fail(EXIT_INPUT, "usage", exc)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            text = args.func(args)
        except ResourceCapError as exc:
            return _fail(EXIT_RESOURCE, "resource_cap", exc)
        except FileNotFoundError as exc:
            return _fail(EXIT_INPUT, "file_not_found", exc)
        except (SpecError, ValueError, OSError) as exc:
            return _fail(EXIT_INPUT, type(exc).__name__, exc)
    resolution = [w for w in caught if issubclass(w.category, ResolutionWarning)]
    for w in caught:
        kind = "resolution" if issubclass(w.category, ResolutionWarning) else (
            "statistics" if issubclass(w.category, MonteCarloWarning) else "warning")
        sys.stderr.write(json.dumps({"warning": kind, "message": str(w.message)}) + "\n")
    if args.strict and resolution:
        return _fail(EXIT_RESOLUTION, "resolution", resolution[0].message)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0
