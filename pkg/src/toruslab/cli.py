"""Command-line runner: every experiment writes CSV data, summary.json and config.json.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 acceptance check failed (only with --strict).
"""

import argparse
import datetime
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import estimates, growth, nls, quadform, spectral, xsb
from ._util import n_threads, stream, to_jsonable, write_csv, write_json
from .spectral import AliasingError, Field, FourierGrid, TorusGeometry

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ASSERT = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class NumericFailure(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _coef(text):
    """Exact coefficient when the text is an integer or a ratio, float otherwise."""
    text = text.strip()
    try:
        Fraction(text)
        return text
    except (ValueError, ZeroDivisionError):
        return float(text)


# --- shared option groups ----------------------------------------------------

def _common(p):
    p.add_argument("--out", default=None, help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap; falls back to TORUSLAB_THREADS, then 1")
    p.add_argument("--strict", action="store_true", help="exit 4 when the run's check fails")


def _geometry(p):
    p.add_argument("--theta1", type=float, default=1.0)
    p.add_argument("--theta2", type=float, default=math.sqrt(2.0))


def _form(p, default=("1", "0", "2")):
    p.add_argument("--a", type=_coef, default=default[0])
    p.add_argument("--b", type=_coef, default=default[1])
    p.add_argument("--c", type=_coef, default=default[2])


def _solver(p, T=1.0):
    p.add_argument("--M", type=int, default=32)
    p.add_argument("--alpha", type=int, default=1, choices=(1, -1))
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--T", type=float, default=T)
    p.add_argument("--dealias-oversample", type=int, default=2)


def _data(p, default="smooth"):
    p.add_argument("--data", choices=("smooth", "zero", "plane", "snapshot"), default=default)
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--mode", type=_int_list, default=[1, 0], help="plane-wave frequency m1,m2")
    p.add_argument("--snapshot", default=None, help="stem of a snapshot pair (stem.json, stem.csv)")


def _sweep(p, N_list, ensemble):
    p.add_argument("--N-list", type=_int_list, default=list(N_list))
    p.add_argument("--ensemble", type=int, default=ensemble)
    p.add_argument("--n-time-samples", type=int, default=64)


def _initial(args):
    if args.data == "snapshot":
        if not args.snapshot:
            raise ConfigError("--data snapshot needs --snapshot STEM")
        return spectral.read_snapshot(args.snapshot)
    grid = FourierGrid(TorusGeometry(args.theta1, args.theta2), args.M)
    if args.data == "zero":
        return Field.zeros(grid)
    if args.data == "plane":
        if len(args.mode) != 2:
            raise ConfigError("--mode needs two integers")
        u = Field.mode(grid, tuple(args.mode))
        return u * (args.amplitude / spectral.l2_norm(u))
    return spectral.smooth_random_field(grid, stream(args.seed, 0), args.kmax, args.amplitude)


def _params(args):
    return nls.NLSParams(args.alpha, args.dt, args.dealias_oversample)


def _require(ok, message, summary):
    summary.setdefault("checks", {})[message] = bool(ok)


# --- commands ----------------------------------------------------------------

def cmd_count(args, out):
    q = quadform.QuadForm(args.a, args.b, args.c)
    results = [quadform.count(q, x) for x in args.x]
    rows = [[r.x, r.count, r.main_term, r.remainder, r.ambiguous] for r in results]
    if out:
        write_csv(os.path.join(out, "count.csv"), ["x", "count", "main_term", "remainder", "ambiguous"], rows)
    r = results[0]
    summary = {"count": r.count, "main_term": r.main_term, "remainder": r.remainder}
    if r.ambiguous:
        summary["ambiguous"] = True
    if len(results) > 1:
        summary["results"] = [dict(zip(["x", "count", "main_term", "remainder", "ambiguous"], row)) for row in rows]
    return summary


def cmd_remainder_fit(args, out):
    q = quadform.QuadForm(args.a, args.b, args.c)
    rep = quadform.fit_remainder_exponent(q, args.x_min, args.x_max, args.blocks_per_decade,
                                          args.samples_per_block, args.seed)
    if out:
        write_csv(os.path.join(out, "remainder.csv"), ["x", "remainder"], rep.points)
    summary = {k: v for k, v in rep.to_dict().items() if k != "points"}
    _require(rep.slope <= args.max_slope, f"slope <= {args.max_slope}", summary)
    return summary


def cmd_annulus_scan(args, out):
    q = quadform.QuadForm(args.a, args.b, args.c)
    g = quadform.annulus_scan(q, args.l_max)
    rep = quadform.annulus_block_fit(q, args.l_max, args.first_block)
    if out:
        write_csv(os.path.join(out, "annulus.csv"), ["l", "size"], enumerate(g.tolist()))
    summary = {"l_max": args.l_max, "max_size": int(g.max()), "slope": rep.slope,
               "intercept": rep.intercept, "residual": rep.residual,
               "block_centers": rep.block_centers, "block_maxima": rep.block_maxima}
    _require(rep.slope <= args.max_slope, f"slope <= {args.max_slope}", summary)
    return summary


def cmd_evolve(args, out):
    u0 = _initial(args)
    spec = nls.ObservableSpec(every=args.every, sobolev_s=tuple(args.sobolev_s), convention=args.convention)
    traj = nls.evolve(u0, args.T, _params(args), record=spec)
    if out:
        traj.to_csv(os.path.join(out, "observables.csv"))
        spectral.write_snapshot(traj.final, os.path.join(out, "final"))
    summary = {"samples": len(traj.times), "final_time": traj.times[-1], "mass_drift": traj.mass_drift(),
               "energy_drift": traj.energy_drift(), "halted": traj.halted}
    if traj.halted:
        raise NumericFailure(traj.halt_reason)
    _require(summary["mass_drift"] <= 1e-10, "mass drift <= 1e-10", summary)
    return summary


def cmd_picard(args, out):
    u0 = _initial(args)
    if args.h1_target:
        u0 = u0 * (args.h1_target / spectral.sobolev_norm(u0, 1.0, "bracket"))
    res = nls.picard_iterate(u0, args.T, args.alpha, args.n_iter, args.n_quad, args.s)
    rows = []
    for k, d in enumerate(res.differences, start=1):
        rows.append([k, d, res.ratios[k - 2] if k >= 2 else float("nan"), res.sup_norms[k], res.in_ball[k]])
    if out:
        write_csv(os.path.join(out, "picard.csv"), ["iteration", "difference", "ratio", "sup_norm", "in_ball"], rows)
    decay = [d0 / d1 if d1 > 0 else math.inf for d0, d1 in zip(res.differences, res.differences[1:])]
    summary = {"differences": res.differences, "diverged": res.diverged, "ball_radius": res.ball_radius,
               "all_in_ball": all(res.in_ball), "residual": res.residual, "decay_factors": decay}
    _require(not res.diverged and all(f >= 2 for f in decay[:5]) and len(decay) >= 5,
             "differences shrink by >= 2 for 5 iterations", summary)
    return summary


def _sweep_cfg(args):
    return estimates.SweepConfig(tuple(args.N_list), args.ensemble, args.seed, args.n_time_samples)


def cmd_strichartz(args, out):
    res = estimates.strichartz_sweep(_sweep_cfg(args), TorusGeometry(args.theta1, args.theta2), args.threads)
    if out:
        estimates.write_sweep(res, out)
    summary = res.summary()
    hi = float(estimates.STRICHARTZ_EXPONENT) + 0.15
    _require(0.0 <= res.fitted_exponent <= hi, f"0 <= exponent <= {hi:.4f}", summary)
    _require(not any(r.flagged for r in res.records), "refinement deltas < 1%", summary)
    return summary


def cmd_bilinear(args, out):
    cfg = estimates.SweepConfig((1,), args.ensemble, args.seed, args.n_time_samples)
    res = estimates.bilinear_sweep(args.N1, args.N2_list, cfg, TorusGeometry(args.theta1, args.theta2), args.threads)
    if out:
        estimates.write_sweep(res, out, bilinear=True)
    summary = res.summary()
    _require(summary["n2_spread"] < 2.0, "N2 spread < 2", summary)
    return summary


def cmd_expsum(args, out):
    rows, worst = [], 0.0
    for i, (a, b) in enumerate(estimates.random_exp_sum_instances(args.instances, args.seed, args.n_max, args.a_max)):
        r = estimates.exp_sum_check(a, b)
        worst = max(worst, r.ratio)
        rows.append([i, a.size, r.lhs, r.rhs, r.ratio])
    if out:
        write_csv(os.path.join(out, "expsum.csv"), ["instance", "n", "lhs", "rhs", "ratio"], rows)
    summary = {"instances": len(rows), "max_ratio": worst}
    _require(worst <= 10.0, "lhs/rhs <= 10", summary)
    return summary


def cmd_vanish(args, out):
    rows, worst_zero, worst_value = [], 0.0, 0.0
    for i, (f, _) in enumerate(estimates.vanish_configs(args.configs, args.seed, True, M=args.M)):
        r = estimates.quadrilinear_vanish_check(*f)
        rel = abs(r.integral) / r.norm_product
        worst_zero = max(worst_zero, rel)
        rows.append(["violating", i, r.integral.real, r.integral.imag, 0.0, rel])
    for i, (f, v) in enumerate(estimates.vanish_configs(args.configs, args.seed, False, M=args.M)):
        val = estimates.quadrilinear_collocation(*f)
        rel = abs(val - v) / abs(v)
        worst_value = max(worst_value, rel)
        rows.append(["zero_sum", i, val.real, val.imag, abs(v), rel])
    if out:
        write_csv(os.path.join(out, "vanish.csv"), ["kind", "config", "re", "im", "expected_abs", "rel_error"], rows)
    summary = {"configs": args.configs, "max_violating_ratio": worst_zero, "max_zero_sum_error": worst_value}
    _require(worst_zero <= 1e-12, "violating integrals <= 1e-12 prod norms", summary)
    _require(worst_value <= 1e-10, "zero-sum values within 1e-10", summary)
    return summary


def cmd_xsb_norm(args, out):
    u0 = _initial(args)
    U = xsb.lift_free(u0, args.n_t)
    rows = [[s, b, xsb.xsb_norm(U, s, b)] for s in args.s_list for b in args.b_list]
    if out:
        write_csv(os.path.join(out, "xsb.csv"), ["s", "b", "norm"], rows)
    l2 = xsb.xsb_norm(U, 0.0, 0.0)
    expected = xsb.window_norm(0.0, args.n_t) * spectral.l2_norm(u0)
    summary = {"norms": [dict(zip(["s", "b", "norm"], r)) for r in rows], "l2": l2, "l2_expected": expected}
    _require(abs(l2 - expected) <= 1e-8 * max(expected, 1.0), "free-lift L2 identity", summary)
    return summary


def cmd_product_check(args, out):
    rows, summaries = [], []
    for bp in args.b_prime:
        res = xsb.product_sweep(tuple(args.N1_list), args.factor, bp, args.ensemble, args.seed,
                                tuple(args.spread_factors), TorusGeometry(args.theta1, args.theta2))
        for r in res.records:
            rows.append([bp, r.N1, r.N2, r.max_ratio, res.n1_exponent, res.n2_spread.get(r.N1, float("nan"))])
        summaries.append(res.summary())
    if out:
        write_csv(os.path.join(out, "sweep.csv"),
                  ["b_prime", "N1", "N2", "max_ratio", "n1_exponent", "n2_spread"], rows)
    summary = {"sweeps": summaries}
    for s in summaries:
        if abs(s["b_prime"] - 0.45) < 1e-12:
            _require(s["n1_exponent"] <= s["paper_bound"] + 0.15, "N1 exponent <= s0 + 0.15", summary)
    return summary


def cmd_growth(args, out):
    u0 = _initial(args)
    series = growth.track_growth(u0, args.s, args.T, _params(args), args.sample_every)
    if out:
        series.to_csv(os.path.join(out, "growth.csv"))
    verdict = growth.fit_growth_exponent(series)
    inc = growth.increment_check(series, args.window_steps, args.r)
    summary = dict(verdict)
    summary.update({"C_min": inc["C_min"], "C_min_unsquared": inc["C_min_unsquared"], "r": inc["r"],
                    "window_steps": inc["window_steps"], "audits": series.audits})
    if series.audits["halted"]:
        raise NumericFailure(series.audits["halt_reason"])
    _require(not verdict["violated"], "growth exponent within bound", summary)
    _require(series.audits["passed"], "conservation audits", summary)
    return summary


def cmd_recurrence(args, out):
    rows, results = [], []
    for r in args.r:
        for C in args.C:
            p = growth.RecurrenceParams(r, C, args.delta, args.y0)
            res = growth.recurrence_bound_check(p, args.K)
            res.update({"r": r, "C": C})
            results.append(res)
            rows.append([r, C, res["C_prime"], res["max_ratio_index"], res["last_decade_increase"], res["holds"]])
    if out:
        write_csv(os.path.join(out, "recurrence.csv"),
                  ["r", "C", "C_prime", "max_ratio_index", "last_decade_increase", "holds"], rows)
    summary = {"results": results}
    _require(all(x["holds"] for x in results), "running max stabilises", summary)
    return summary


COMMANDS = {
    "count": cmd_count,
    "remainder-fit": cmd_remainder_fit,
    "annulus-scan": cmd_annulus_scan,
    "evolve": cmd_evolve,
    "picard": cmd_picard,
    "strichartz": cmd_strichartz,
    "bilinear": cmd_bilinear,
    "expsum": cmd_expsum,
    "vanish": cmd_vanish,
    "xsb-norm": cmd_xsb_norm,
    "product-check": cmd_product_check,
    "growth": cmd_growth,
    "recurrence": cmd_recurrence,
}


def build_parser():
    parser = _Parser(prog="toruslab", description="Lattice counting, NLS and estimate experiments on irrational tori.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("count", help="exact lattice count under a quadratic form")
    _common(p)
    _form(p, ("1", "0", "1"))
    p.add_argument("--x", type=str, nargs="+", required=True)

    p = sub.add_parser("remainder-fit", help="fit the lattice remainder exponent")
    _common(p)
    _form(p)
    p.add_argument("--x-min", type=float, default=1e3)
    p.add_argument("--x-max", type=float, default=1e7)
    p.add_argument("--blocks-per-decade", type=int, default=4)
    p.add_argument("--samples-per-block", type=int, default=200)
    p.add_argument("--max-slope", type=float, default=0.40)

    p = sub.add_parser("annulus-scan", help="sizes of the near-level sets up to l_max")
    _common(p)
    _form(p)
    p.add_argument("--l-max", type=int, default=10 ** 6)
    p.add_argument("--first-block", type=int, default=8)
    p.add_argument("--max-slope", type=float, default=0.45)

    p = sub.add_parser("evolve", help="split-step NLS run with conservation audit")
    _common(p)
    _geometry(p)
    _solver(p)
    _data(p)
    p.add_argument("--every", type=int, default=10)
    p.add_argument("--sobolev-s", type=_float_list, default=[1.0])
    p.add_argument("--convention", choices=("eigen", "bracket"), default="eigen")

    p = sub.add_parser("picard", help="Duhamel fixed-point iteration")
    _common(p)
    _geometry(p)
    _solver(p, T=0.01)
    _data(p)
    p.add_argument("--n-iter", type=int, default=8)
    p.add_argument("--n-quad", type=int, default=64)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--h1-target", type=float, default=1.0, help="rescale data to this H^1 norm (0 keeps it)")

    p = sub.add_parser("strichartz", help="L^4 Strichartz ratio sweep")
    _common(p)
    _geometry(p)
    _sweep(p, (8, 16, 32, 64), 200)

    p = sub.add_parser("bilinear", help="bilinear ratio sweep over N2")
    _common(p)
    _geometry(p)
    _sweep(p, (1,), 50)
    p.add_argument("--N1", type=int, default=4)
    p.add_argument("--N2-list", type=_int_list, default=[8, 16, 32, 64])

    p = sub.add_parser("expsum", help="exponential-sum inequality on random instances")
    _common(p)
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--n-max", type=int, default=64)
    p.add_argument("--a-max", type=float, default=100.0)

    p = sub.add_parser("vanish", help="quadrilinear orthogonality checks")
    _common(p)
    p.add_argument("--configs", type=int, default=100)
    p.add_argument("--M", type=int, default=64)

    p = sub.add_parser("xsb-norm", help="X^{s,b} norms of a free-flow lift")
    _common(p)
    _geometry(p)
    _data(p)
    p.add_argument("--M", type=int, default=16)
    p.add_argument("--n-t", type=int, default=64)
    p.add_argument("--s-list", type=_float_list, default=[0.0, 1.0])
    p.add_argument("--b-list", type=_float_list, default=[0.0, 0.45, 0.55])

    p = sub.add_parser("product-check", help="localized product ratio sweep")
    _common(p)
    _geometry(p)
    p.add_argument("--N1-list", type=_int_list, default=[2, 4, 8, 16])
    p.add_argument("--factor", type=int, default=4)
    p.add_argument("--spread-factors", type=_int_list, default=[])
    p.add_argument("--b-prime", type=_float_list, default=[0.30, 0.40, 0.45])
    p.add_argument("--ensemble", type=int, default=16)

    p = sub.add_parser("growth", help="long-time H^s growth run")
    _common(p)
    _geometry(p)
    _solver(p, T=200.0)
    _data(p)
    p.add_argument("--s", type=float, default=2.0)
    p.add_argument("--sample-every", type=int, default=100)
    p.add_argument("--window-steps", type=int, default=None)
    p.add_argument("--r", type=float, default=None)

    p = sub.add_parser("recurrence", help="worst-case increment recurrence")
    _common(p)
    p.add_argument("--r", type=_float_list, default=[0.25, 0.5, 1.0])
    p.add_argument("--C", type=_float_list, default=[0.5, 2.0])
    p.add_argument("--delta", type=float, default=1.0)
    p.add_argument("--y0", type=float, default=1.0)
    p.add_argument("--K", type=int, default=100_000)
    return parser


def _config(args):
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "strict")}
    cfg["threads"] = n_threads(args.threads) if hasattr(args, "threads") else 1
    return to_jsonable(cfg)


def _fail(code, kind, message):
    print(json.dumps({"error": kind, "message": str(message), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.threads is None:
            args.threads = n_threads()
        out = args.out
        if out:
            os.makedirs(out, exist_ok=True)
            cfg = _config(args)
            write_json(os.path.join(out, "config.json"),
                       {"config": cfg, "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()})
        summary = COMMANDS[args.command](args, out)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    except (NumericFailure, AliasingError, FloatingPointError, OverflowError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_NUMERIC, "numeric", exc)
    except (ValueError, TypeError, ZeroDivisionError, FileNotFoundError, argparse.ArgumentTypeError) as exc:
        return _fail(EXIT_CONFIG, "config", exc)
    if out:
        write_json(os.path.join(out, "summary.json"), summary)
    print(json.dumps(to_jsonable(summary), sort_keys=True))
    checks = summary.get("checks", {})
    if args.strict and not all(checks.values()):
        failed = [k for k, v in checks.items() if not v]
        return _fail(EXIT_ASSERT, "assertion", "failed: " + "; ".join(failed))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
