"""Command-line interface.

Subcommands: rate, zones, simulate, quantile, copula, run.  Exit codes:
0 for OK or PASS, 1 for a FAIL verdict, 2 for input errors, 3 for infeasible
results or exceeded complexity budgets.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from .errors import ComplexityError, InfeasibleError, InputError
from .measures import FiniteProbabilityMeasure, EmpiricalMeasure, TestFunction, load_distribution
from .rate import AT_LEAST, EQUALITY, ConstraintSet, LinearConstraint, ShiftVector, min_rate_linear
from .simulate import (
    EXACT,
    NAIVE,
    TILTED,
    RngSpec,
    draw_sample,
    exact_conditional_tail,
    mc_conditional_tail,
    tilted_conditional_tail,
)
from .zones import (
    SATISFIED,
    SequenceFamily,
    TailModel,
    check_phi_membership,
    check_psi_membership,
    check_theta_conditions,
    zone_report,
)
from .functionals import GridFunction, StepCdf, empirical_copula, quantile_process_diff, rate_Iq
from .experiments import (
    ExperimentConfig,
    manifest_json,
    rows_to_csv,
    run_conditional_experiment,
    run_decay_experiment,
    run_instability_experiment,
    run_joint_experiment,
    run_sandwich_experiment,
)

OK, FAIL, BAD_INPUT, INFEASIBLE = 0, 1, 2, 3


def _sanitize(obj):
    """Make a structure JSON-safe; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if obj == math.inf:
            return "inf"
        if obj == -math.inf:
            return "-inf"
    return obj


def _emit(doc) -> None:
    print(json.dumps(_sanitize(doc), sort_keys=True))


def _floats(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise InputError(f"cannot parse float list {text!r}") from exc


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _cmd_rate(args) -> int:
    P = load_distribution(args.dist)
    doc = _load_json(args.constraints)
    if not isinstance(doc, list) or not doc:
        raise InputError("constraints file must be a nonempty JSON list")
    constraints = []
    for item in doc:
        kind = item.get("kind", EQUALITY)
        constraints.append(LinearConstraint(TestFunction(item["f"]), kind, item["c"]))
    shift = ShiftVector(_floats(args.shift)) if args.shift else None
    value, argmin = min_rate_linear(ConstraintSet(P, constraints), shift)
    _emit({
        "rate": value,
        "argmin": None if argmin is None else list(argmin.density),
    })
    return INFEASIBLE if math.isinf(value) else OK


def _tail_from_args(args) -> TailModel:
    if args.bounded:
        return TailModel.bounded()
    if args.t is not None:
        return TailModel.power(args.t)
    if args.gamma is not None:
        return TailModel.stretched(args.gamma)
    raise InputError("specify a tail: --gamma, --t or --bounded")


def _cmd_zones(args) -> int:
    tail = _tail_from_args(args)
    out = {}
    if args.check:
        seq = SequenceFamily(A=args.A, beta=args.beta, mu=args.mu)
        if args.check == "phi":
            verdict = check_phi_membership(tail, seq)
        elif args.check == "psi":
            verdict = check_psi_membership(tail, seq)
        elif args.check == "theta-sum":
            verdict = check_theta_conditions(tail, seq, "summable")
        else:
            verdict = check_theta_conditions(tail, seq, "vanishing")
        out["check"] = args.check
        out["verdict"] = verdict
        if not args.json:
            print(f"{args.check:10s} beta={args.beta:g} mu={args.mu:g}  ->  {verdict}")
    else:
        report = zone_report(tail)
        out["zone_report"] = asdict(report)
        if not args.json:
            print(f"gamma                     {report.gamma:g}")
            print(f"b exponent (moment)       {report.b_exponent_moment:.6g}")
            print(f"b exponent (resample sum) {report.b_exponent_bootstrap_sum:.6g}")
            d = report.d_exponent
            print(f"d exponent                {'-' if d is None else format(d, '.6g')}")
            print(f"a log exponent            {report.a_log_exponent:g}")
            if report.flags:
                print(f"flags                     {', '.join(report.flags)}")
    if args.json:
        _emit(out)
    return OK


def _cmd_simulate(args) -> int:
    f = TestFunction(_floats(args.f))
    rng = RngSpec(args.seed, 0)
    if args.emp:
        doc = _load_json(args.emp)
        base = FiniteProbabilityMeasure(
            doc["points"], np.asarray(doc["counts"], dtype=float) / sum(doc["counts"])
        )
        emp = EmpiricalMeasure(base, doc["counts"])
    else:
        if args.dist is None or args.n is None:
            raise InputError("simulate needs either --emp or both --dist and --n")
        P = load_distribution(args.dist)
        emp = draw_sample(P, args.n, RngSpec(args.seed, 1))
    if args.method == EXACT:
        est = exact_conditional_tail(emp, f, args.theta, args.k)
    elif args.method == NAIVE:
        est = mc_conditional_tail(emp, f, args.theta, args.k, args.trials, rng)
    else:
        est = tilted_conditional_tail(emp, f, args.theta, args.k, args.trials, rng)
    _emit(asdict(est))
    return OK


def _cmd_quantile(args) -> int:
    out = {}
    if args.star and args.hat:
        star = StepCdf.from_sample(_load_json(args.star))
        hat = StepCdf.from_sample(_load_json(args.hat))
        grid = np.linspace(args.lo, args.hi, args.points)
        diff = quantile_process_diff(star, hat, grid)
        out["diff"] = {"grid": list(diff.grid), "values": list(diff.values)}
    if args.iq:
        lo, hi = _floats(args.support)
        phi = GridFunction([args.lo, args.hi], [args.phi_const, args.phi_const])
        value = rate_Iq(lambda y: np.ones_like(y), (lo, hi), phi, args.resolution)
        out["rate_iq"] = value
        if math.isinf(value):
            _emit(out)
            return INFEASIBLE
    if not out:
        raise InputError("quantile needs --star/--hat files or --iq")
    _emit(out)
    return OK


def _cmd_copula(args) -> int:
    sample = _load_json(args.sample)
    p1, q1, p2, q2 = _floats(args.bounds)
    ug = np.linspace(p1, q1, args.points)
    vg = np.linspace(p2, q2, args.points)
    cop = empirical_copula(sample, ug, vg)
    _emit({
        "ugrid": list(cop.ugrid),
        "vgrid": list(cop.vgrid),
        "values": [list(row) for row in cop.values],
    })
    return OK


def _cmd_run(args) -> int:
    cfg = ExperimentConfig.from_json(args.config)
    os.makedirs(args.out, exist_ok=True)

    def write(name: str, text: str) -> None:
        with open(os.path.join(args.out, name), "w", encoding="utf-8") as fh:
            fh.write(text)

    write("manifest.json", manifest_json(cfg))
    if cfg.scenario == "conditional":
        report = run_conditional_experiment(cfg)
        write("rows.csv", rows_to_csv(report.rows))
        verdict = {
            "scenario": cfg.scenario,
            "slope": report.fit.slope,
            "ci_halfwidth": report.fit.ci_halfwidth,
            "theory": report.verdict.theory,
            "verdict": report.verdict.label,
        }
        passed = report.verdict.passed
    elif cfg.scenario == "joint":
        report = run_joint_experiment(cfg)
        write("rows.csv", rows_to_csv(report.joint_rows))
        write("rows_boot.csv", rows_to_csv(report.boot_rows))
        write("rows_emp.csv", rows_to_csv(report.emp_rows))
        verdict = {
            "scenario": cfg.scenario,
            "joint_slope": report.joint_fit.slope,
            "boot_slope": report.boot_fit.slope,
            "emp_slope": report.emp_fit.slope,
            "combined_rate": report.combined_rate,
            "verdict": "PASS" if report.passed else "FAIL",
        }
        passed = report.passed
    elif cfg.scenario == "instability":
        report = run_instability_experiment(cfg)
        write("rows.csv", rows_to_csv(report.rows))
        verdict = {
            "scenario": cfg.scenario,
            "normalized_last": report.normalized_last,
            "gaussian_benchmark_last": report.benchmark_last,
            "verdict": "PASS" if report.passed else "FAIL",
        }
        passed = report.passed
    else:
        report = run_sandwich_experiment(cfg)
        lines = ["k,a,p_hat,std_err,env_lo,env_hi,inside,truncation_flagged"]
        for pt in report.points:
            lines.append(
                f"{pt.k},{format(pt.a, '.17g')},{format(pt.p_hat, '.17g')},"
                f"{format(pt.std_err, '.17g')},{format(pt.env_lo, '.17g')},"
                f"{format(pt.env_hi, '.17g')},{int(pt.inside)},{int(pt.truncation_flagged)}"
            )
        write("rows.csv", "\n".join(lines) + "\n")
        verdict = {
            "scenario": cfg.scenario,
            "verdict": "PASS" if report.passed else "FAIL",
        }
        passed = report.passed
    write("verdict.json", json.dumps(_sanitize(verdict), sort_keys=True, indent=2) + "\n")
    _emit(verdict)
    return OK if passed else FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdpboot")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="minimize the quadratic rate over linear constraints")
    p.add_argument("--dist", required=True, help="distribution JSON file")
    p.add_argument("--constraints", required=True, help='JSON list of {"f", "kind", "c"}')
    p.add_argument("--shift", default=None, help="comma list of per-constraint shifts")
    p.set_defaults(func=_cmd_rate)

    p = sub.add_parser("zones", help="tail-condition verdicts and critical exponents")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--bounded", action="store_true")
    p.add_argument("--check", choices=["phi", "psi", "theta-sum", "theta-lim"], default=None)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--A", type=float, default=1.0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_zones)

    p = sub.add_parser("simulate", help="estimate a conditional resampling tail")
    p.add_argument("--dist", default=None, help="distribution JSON file")
    p.add_argument("--emp", default=None, help='empirical JSON file {"points", "counts"}')
    p.add_argument("--n", type=int, default=None, help="outer sample size with --dist")
    p.add_argument("--f", required=True, help="comma list of test-function values")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--method", choices=[NAIVE, EXACT, TILTED], default=NAIVE)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("quantile", help="quantile-process differences and the I_q rate")
    p.add_argument("--star", default=None, help="JSON list: resampled sample")
    p.add_argument("--hat", default=None, help="JSON list: original sample")
    p.add_argument("--lo", type=float, default=0.25)
    p.add_argument("--hi", type=float, default=0.75)
    p.add_argument("--points", type=int, default=11)
    p.add_argument("--iq", action="store_true", help="compute the I_q rate for a constant phi")
    p.add_argument("--phi-const", dest="phi_const", type=float, default=-1.0)
    p.add_argument("--support", default="0,1", help="base interval lo,hi (uniform density)")
    p.add_argument("--resolution", type=int, default=1000)
    p.set_defaults(func=_cmd_quantile)

    p = sub.add_parser("copula", help="empirical copula on a grid")
    p.add_argument("--sample", required=True, help="JSON list of [x, y] pairs")
    p.add_argument("--bounds", default="0.1,0.9,0.1,0.9", help="p1,q1,p2,q2")
    p.add_argument("--points", type=int, default=9)
    p.set_defaults(func=_cmd_copula)

    p = sub.add_parser("run", help="run a configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return BAD_INPUT
    except (InfeasibleError, ComplexityError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return INFEASIBLE
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
