"""Command-line harness: run | compare | validate | gen-data.

Exit codes: 0 success, 1 validation-battery failure, 2 configuration
error, 3 runtime numeric error. ARCM_THREADS caps worker parallelism in
``compare``.
"""

from __future__ import annotations

import argparse
import math
import os
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import data as data_mod
from .config import RunConfig, build_model, initial_point, parse_config
from .diagnostics import audit_trace, classify_momentum_events
from .errors import ArcmError, ConfigurationError, NumericError, ParseError
from .objective import (
    DerivativeReport,
    ModelSpec,
    ObjectiveModel,
    check_derivatives,
    make_objective,
    rosenbrock_objective,
)
from .optimizers import HyperParams, StopCriteria, Trace, run, sigma_update
from .subproblem import CubicModel, cauchy_point, solve_exact, solve_krylov
from .traceio import write_summary, write_trace_csv

FAULTS = ("missign-gradient",)


def _iters_to_tol(trace: Trace) -> float:
    if trace.stop_reason == "grad_tol":
        return float(trace.n_successes)
    return math.inf


def _summary_row(label: str, kind: str, solver: str, trace: Trace,
                 params: HyperParams) -> dict:
    events = classify_momentum_events(trace)
    row = {
        "optimizer": label,
        "kind": kind,
        "solver": solver,
        "stop_reason": trace.stop_reason,
        "iterations_total": len(trace.records),
        "iterations_successful": trace.n_successes,
        "iterations_to_tolerance": _iters_to_tol(trace),
        "failures": trace.n_failures,
        "final_f": f"{trace.final_f:.17g}",
        "final_grad_norm": f"{trace.final_grad_norm:.17g}",
        "momentum_helped_pos": events.helped_pos,
        "momentum_helped_neg": events.helped_neg,
        "momentum_beta_zero": events.beta_zero,
    }
    if kind in ("ARCm", "ARC") and trace.records:
        report = audit_trace(trace, params, solver_was_exact=(solver == "exact"))
        row["audit_pass"] = report.passed
        row["audit_violations"] = len(report.violations)
    else:
        row["audit_pass"] = "n/a"
    return row


def _single_run(cfg: RunConfig, opt, seed: int):
    model = build_model(cfg, seed_offset=seed)
    x0 = initial_point(cfg, model.dim, seed_offset=seed)
    return run(opt.kind, model, x0, opt.params, cfg.stop, solver=opt.solver)


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seeds[0]
    outdir = Path(args.outdir or cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    rows = []
    had_error = False
    for opt in cfg.optimizers:
        trace = _single_run(cfg, opt, seed)
        write_trace_csv(trace, outdir / f"{opt.label}.trace.csv")
        rows.append(_summary_row(opt.label, opt.kind, opt.solver, trace,
                                 opt.params))
        if trace.stop_reason == "error":
            had_error = True
        if not args.quiet:
            print(f"{opt.label}: {trace.stop_reason} after "
                  f"{len(trace.records)} iterations, "
                  f"final grad {trace.final_grad_norm:.3e}")
    write_summary(rows, outdir / "summary.txt", outdir / "summary.json")
    if not args.quiet:
        print(f"wrote {outdir}/summary.txt")
    return 3 if had_error else 0


def cmd_compare(args) -> int:
    cfg = parse_config(args.config)
    if len(cfg.optimizers) < 2:
        raise ConfigurationError("compare requires at least 2 optimizers")
    seeds = (args.seed,) if args.seed is not None else cfg.seeds
    outdir = Path(args.outdir or cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    jobs = [(opt, seed) for opt in cfg.optimizers for seed in seeds]
    env_threads = int(os.environ.get("ARCM_THREADS", "0") or "0")
    workers = env_threads if env_threads > 0 else min(4, os.cpu_count() or 1)
    workers = max(1, min(workers, len(jobs)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        traces = list(pool.map(lambda job: _single_run(cfg, *job), jobs))

    raw_lines = ["optimizer,seed,stop_reason,iterations_total,"
                 "iterations_successful,iterations_to_tolerance,final_f,"
                 "final_grad_norm,failures"]
    per_opt: dict[str, list[Trace]] = {opt.label: [] for opt in cfg.optimizers}
    had_error = False
    for (opt, seed), trace in zip(jobs, traces):
        write_trace_csv(trace, outdir / f"{opt.label}.seed{seed}.trace.csv")
        per_opt[opt.label].append(trace)
        had_error = had_error or trace.stop_reason == "error"
        raw_lines.append(
            f"{opt.label},{seed},{trace.stop_reason},{len(trace.records)},"
            f"{trace.n_successes},{_iters_to_tol(trace)},"
            f"{trace.final_f:.17g},{trace.final_grad_norm:.17g},"
            f"{trace.n_failures}")
    (outdir / "compare_raw.csv").write_text("\n".join(raw_lines) + "\n",
                                            encoding="utf-8")

    table = []
    for order, opt in enumerate(cfg.optimizers):
        runs = per_opt[opt.label]
        iters = [_iters_to_tol(t) for t in runs]
        table.append({
            "optimizer": opt.label,
            "median_iters": statistics.median(iters),
            "min_iters": min(iters),
            "max_iters": max(iters),
            "median_final_f": statistics.median(t.final_f for t in runs),
            "median_failures": statistics.median(t.n_failures for t in runs),
            "_order": order,
        })
    table.sort(key=lambda row: (row["median_iters"], row["_order"]))
    header = "optimizer,median_iters,min_iters,max_iters,median_final_f,median_failures"
    lines = [header]
    for row in table:
        lines.append(f"{row['optimizer']},{row['median_iters']},"
                     f"{row['min_iters']},{row['max_iters']},"
                     f"{row['median_final_f']:.17g},{row['median_failures']}")
    (outdir / "compare_table.csv").write_text("\n".join(lines) + "\n",
                                              encoding="utf-8")
    if not args.quiet:
        for line in lines:
            print(line)
    return 3 if had_error else 0


def cmd_gen_data(args) -> int:
    spec = data_mod.SyntheticSpec(n=args.n, d=args.d,
                                  label_noise=args.label_noise,
                                  task=args.task, seed=args.seed or 0)
    ds = data_mod.gen_synthetic(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    data_mod.write_libsvm(ds, out.with_suffix(".libsvm"))
    data_mod.write_csv(ds, out.with_suffix(".csv"))
    if not args.quiet:
        print(f"wrote {out.with_suffix('.libsvm')} and {out.with_suffix('.csv')}")
    return 0


def _battery_models(fault: str | None):
    clf = data_mod.gen_synthetic(data_mod.SyntheticSpec(
        n=120, d=20, label_noise=0.05, task="classification", seed=11))
    reg = data_mod.gen_synthetic(data_mod.SyntheticSpec(
        n=120, d=20, label_noise=0.0, task="regression", seed=12))
    logistic = make_objective(ModelSpec(kind="logistic_nonconvex", dataset=clf,
                                        chi=0.1))
    robust = make_objective(ModelSpec(kind="robust_linear", dataset=reg))
    if fault == "missign-gradient":
        broken = ObjectiveModel(
            dim=logistic.dim, value=logistic.value,
            gradient=lambda x: -logistic.gradient(x),
            hessian_vec=logistic.hessian_vec,
            dense_hessian=logistic.dense_hessian, name=logistic.name)
        logistic = broken
    return logistic, robust


def validation_battery(fault: str | None = None):
    """Built-in verification battery; returns a list of (name, ok, detail)."""
    results = []
    logistic, robust = _battery_models(fault)
    rng = np.random.Generator(np.random.Philox(2024))

    def check(name, ok, detail=""):
        results.append((name, bool(ok), detail))

    # derivative checks on both regression models
    for name, model, tol_g, tol_h in (("derivatives_logistic", logistic, 1e-5, 1e-4),
                                      ("derivatives_robust", robust, 1e-5, 1e-4)):
        worst = DerivativeReport(0.0, 0.0)
        for _ in range(3):
            x = 0.5 * rng.standard_normal(model.dim)
            rep = check_derivatives(model, x, h=1e-5)
            worst.max_rel_err_grad = max(worst.max_rel_err_grad, rep.max_rel_err_grad)
            worst.max_rel_err_hvp = max(worst.max_rel_err_hvp, rep.max_rel_err_hvp)
        check(name, worst.max_rel_err_grad <= tol_g and worst.max_rel_err_hvp <= tol_h,
              f"grad {worst.max_rel_err_grad:.2e} hvp {worst.max_rel_err_hvp:.2e}")

    # exact solver closed forms
    h = np.eye(2)
    sol = solve_exact(CubicModel(g=np.array([1.0, 0.0]),
                                 hess_vec=lambda v: h @ v, sigma=2.0, dense_h=h))
    t = (math.sqrt(5.0) - 1.0) / 2.0
    check("exact_radial_closed_form",
          abs(float(np.linalg.norm(sol.s)) - t) <= 1e-10,
          f"||s||={np.linalg.norm(sol.s):.12f}")
    h1 = np.array([[-1.0]])
    sol1 = solve_exact(CubicModel(g=np.zeros(1), hess_vec=lambda v: h1 @ v,
                                  sigma=1.0, dense_h=h1))
    check("exact_negative_curvature",
          abs(abs(sol1.s[0]) - 2.0) <= 1e-10
          and abs(sol1.model_decrease - 2.0 / 3.0) <= 1e-10,
          f"|s|={abs(sol1.s[0]):.12f}")

    # Krylov agreement with the exact solver at full subspace dimension
    ok = True
    detail = ""
    for i in range(3):
        d = 30
        a = rng.standard_normal((d, d))
        hh = 0.5 * (a + a.T)
        g = rng.standard_normal(d)
        m = CubicModel(g=g, hess_vec=lambda v, hh=hh: hh @ v, sigma=1.0, dense_h=hh)
        ex = solve_exact(m)
        kr = solve_krylov(m, max_dim=d, tol=1e-9)
        rel = abs(kr.model_decrease - ex.model_decrease) / ex.model_decrease
        detail = f"rel diff {rel:.2e}"
        ok = ok and rel <= 1e-8
    check("krylov_matches_exact_d30", ok, detail)

    # Cauchy point never beats the exact solver but always decreases
    ok = True
    for i in range(3):
        d = 6
        a = rng.standard_normal((d, d))
        hh = 0.5 * (a + a.T)
        g = rng.standard_normal(d)
        m = CubicModel(g=g, hess_vec=lambda v, hh=hh: hh @ v, sigma=1.5, dense_h=hh)
        ex = solve_exact(m)
        cp = cauchy_point(m)
        ok = ok and 0.0 < cp.model_decrease <= ex.model_decrease + 1e-12
    check("cauchy_dominated_by_exact", ok)

    # penalty update truth table
    p = HyperParams()
    table_ok = (
        sigma_update(1.0, 0.95, p) == 0.5
        and sigma_update(1.0, 0.5, p) == 1.0
        and sigma_update(1.0, 0.05, p) == 2.0
        and sigma_update(2 * p.sigma_min, 0.95, p) == p.sigma_min
    )
    check("sigma_update_truth_table", table_ok)

    # ARCm with zero momentum caps must replay ARC exactly
    model = rosenbrock_objective(2)
    x0 = np.array([-1.2, 1.0])
    stop = StopCriteria(grad_tol=1e-6, max_iter=100)
    ta = run("ARCm", model, x0, HyperParams(alpha1=0.0, alpha2=0.0), stop)
    tb = run("ARC", model, x0, HyperParams(), stop)
    same = len(ta.records) == len(tb.records) and all(
        (ra.k, ra.f, ra.grad_norm, ra.sigma, ra.step_norm, ra.rho, ra.accepted,
         ra.beta, ra.momentum_sign, ra.krylov_dim, ra.model_decrease)
        == (rb.k, rb.f, rb.grad_norm, rb.sigma, rb.step_norm, rb.rho,
            rb.accepted, rb.beta, rb.momentum_sign, rb.krylov_dim,
            rb.model_decrease)
        for ra, rb in zip(ta.records, tb.records))
    check("arc_reduction_identity", same,
          f"{len(ta.records)} vs {len(tb.records)} records")
    return results


def cmd_validate(args) -> int:
    results = validation_battery(fault=args.inject_fault)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        if not ok:
            failed += 1
        if not args.quiet or not ok:
            suffix = f"  ({detail})" if detail else ""
            print(f"{status} {name}{suffix}")
    if failed:
        print(f"{failed} of {len(results)} checks failed", file=sys.stderr)
        return 1
    if not args.quiet:
        print(f"all {len(results)} checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arcm",
        description="Cubic-regularization optimizer benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run each configured optimizer once")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--outdir", default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--quiet", action="store_true")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare",
                           help="run every optimizer x seed and tabulate")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--outdir", default=None)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--quiet", action="store_true")
    p_cmp.set_defaults(func=cmd_compare)

    p_val = sub.add_parser("validate", help="run the built-in check battery")
    p_val.add_argument("--quiet", action="store_true")
    p_val.add_argument("--inject-fault", choices=FAULTS, default=None,
                       help="deliberately break a component (self-test)")
    p_val.set_defaults(func=cmd_validate)

    p_gen = sub.add_parser("gen-data", help="write a synthetic dataset")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--d", type=int, required=True)
    p_gen.add_argument("--task", choices=("classification", "regression"),
                       default="classification")
    p_gen.add_argument("--label-noise", type=float, default=0.0)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--quiet", action="store_true")
    p_gen.set_defaults(func=cmd_gen_data)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except ArcmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
