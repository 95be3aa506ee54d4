"""Command-line front end.

Exit codes: 0 success, 1 usage/config error, 2 infeasible parameters (or a
failed descent certificate), 3 non-convergence, 4 divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .config import ExperimentConfig
from .params import InfeasibleOverrideError, ParameterError
from .solver import (
    ConfigError,
    DivergenceError,
    extra_trajectory,
    read_trace_csv,
    run,
    tt_extra_trajectory,
)

log = logging.getLogger("ttextra")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NONCONVERGED, EXIT_DIVERGED = 0, 1, 2, 3, 4
EQUIV_TOL = 1e-10


def _emit(obj, path=None) -> None:
    text = json.dumps(obj, indent=2)
    if path:
        Path(path).write_text(text + "\n")
    print(text)


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        cfg.set(key, value)
    return cfg


def _setup(cfg: ExperimentConfig, strict: bool):
    g = cfg.graph.build()
    pb = cfg.problem.build(g.n)
    ps = cfg.params.select(g, pb.l, strict=strict)
    if not ps.steps.feasible:
        log.warning("parameters violate the convergence bounds: %s", ps.steps.to_dict())
    return g, pb, ps


def cmd_select_params(args) -> int:
    cfg = _load(args)
    g = cfg.graph.build()
    pb = cfg.problem.build(g.n)
    try:
        ps = cfg.params.select(g, pb.l, strict=True)
    except InfeasibleOverrideError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        _emit({"feasible": False, "violated": exc.bound, "value": exc.value, "lower_bound": exc.limit})
        return EXIT_INFEASIBLE
    out = {"steps": ps.steps.to_dict(), "validation": ps.validation.to_dict(), "l_is_analytic": pb.l_is_analytic}
    _emit(out, args.out or cfg.output.report)
    return EXIT_OK if ps.validation.passed else EXIT_INFEASIBLE


def _run_trace(cfg: ExperimentConfig, pb, ps, **extra):
    rc = cfg.run
    for k, v in extra.items():
        setattr(rc, k, v)
    return run(pb, ps.W, ps.W_tilde, ps.A, ps.steps, rc)


def cmd_run(args) -> int:
    cfg = _load(args)
    g, pb, ps = _setup(cfg, strict=False)
    trace_path = args.trace or cfg.output.trace
    try:
        tr = _run_trace(cfg, pb, ps)
    except DivergenceError as exc:
        if trace_path:
            Path(trace_path).write_text(exc.trace.to_csv())
        summary = exc.trace.summary()
        summary.update(diverged=True, message=str(exc), steps=ps.steps.to_dict())
        _emit(summary, cfg.output.summary)
        return EXIT_DIVERGED
    if trace_path:
        Path(trace_path).write_text(tr.to_csv())
    summary = tr.summary()
    summary.update(diverged=False, steps=ps.steps.to_dict())
    _emit(summary, cfg.output.summary)
    return EXIT_OK if tr.converged else EXIT_NONCONVERGED


def cmd_compare(args) -> int:
    cfg = _load(args)
    g, pb, ps = _setup(cfg, strict=False)
    rho, beta = ps.rho, ps.beta
    alpha = cfg.compare.alpha if cfg.compare.alpha is not None else 1.0 / beta
    iters = cfg.compare.iters
    x0 = cfg.run.initial_point(pb.n, pb.p)
    algos = {
        "tt-extra-agent": tt_extra_trajectory(pb, ps.W, ps.W_tilde, ps.A, rho, beta, x0, iters, "agent"),
        "tt-extra-compact": tt_extra_trajectory(pb, ps.W, ps.W_tilde, ps.A, rho, beta, x0, iters, "compact"),
        "extra-eliminated": extra_trajectory(pb, ps.W, ps.W_tilde, ps.A, alpha, x0, iters, "eliminated"),
        "extra-primal-dual": extra_trajectory(pb, ps.W, ps.W_tilde, ps.A, alpha, x0, iters, "primal_dual"),
    }
    ref = algos["tt-extra-compact"]
    per_round = pb.n * pb.p
    lines = ["algorithm,iter,f,consensus_err,stationarity,step_norm,gap_to_tt_extra_compact,scalars_exchanged"]
    gaps = {}
    diverged = False
    for name, xs in algos.items():
        gaps[name] = 0.0
        for r, x in enumerate(xs):
            if not np.all(np.isfinite(x)):
                diverged = True
                break
            gap = float(np.max(np.abs(x - ref[r])))
            gaps[name] = max(gaps[name], gap)
            step = float(np.linalg.norm(x - xs[r - 1])) if r else 0.0
            vals = [pb.value(x), dg.consensus_error(x), dg.stationarity(pb, x), step, gap]
            lines.append(",".join([name, str(r)] + [f"{v:.17g}" for v in vals] + [str(per_round * r)]))
    text = "\n".join(lines) + "\n"
    trace_path = args.trace or cfg.output.trace
    if trace_path:
        Path(trace_path).write_text(text)
    equivalent_setting = bool(np.isclose(rho, beta, rtol=1e-15, atol=0) and np.isclose(alpha, 1 / beta, rtol=1e-15, atol=0))
    summary = {
        "rho": rho,
        "beta": beta,
        "alpha": alpha,
        "iters": iters,
        "max_gap_to_tt_extra_compact": gaps,
        "extra_forms_gap": max(
            float(np.max(np.abs(a - b))) for a, b in zip(algos["extra-eliminated"], algos["extra-primal-dual"])
        ),
        "equivalence_asserted": equivalent_setting,
        "scalars_per_round": {"tt-extra": per_round, "two-variable-baseline": 2 * per_round},
    }
    _emit(summary, cfg.output.summary)
    if diverged:
        return EXIT_DIVERGED
    if equivalent_setting and max(gaps.values()) > EQUIV_TOL:
        log.error("TT-EXTRA and EXTRA differ by %.3e under rho = beta, alpha = 1/beta", max(gaps.values()))
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_check_lemmas(args) -> int:
    """Re-run the configured experiment, confirm it reproduces the given trace, and certify it."""
    cfg = _load(args)
    given = Path(args.trace_csv).read_text()
    g, pb, ps = _setup(cfg, strict=False)
    try:
        tr = _run_trace(cfg, pb, ps, check_lemmas=True)
    except DivergenceError as exc:
        log.error("%s", exc)
        return EXIT_DIVERGED
    if tr.to_csv() != given:
        print("trace does not match the run produced by this config", file=sys.stderr)
        return EXIT_CONFIG
    rows = read_trace_csv(given)
    violations = sum(1 for row in rows if row["descent_ok"] != "true")
    report = tr.lemmas.to_dict()
    report["descent_violations"] = violations
    report["feasible"] = ps.steps.feasible
    _emit(report, args.out or cfg.output.report)
    ok = tr.lemmas.holds(dg.SLACK_TOL) and violations == 0
    return EXIT_OK if ok else EXIT_INFEASIBLE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ttextra", description="TT-EXTRA decentralized optimization experiments")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="experiment JSON config")
        sp.add_argument("--set", action="append", metavar="SECTION.FIELD=VALUE", help="override a config field")

    sp = sub.add_parser("select-params", help="choose (W, rho, W~, beta) and validate them")
    common(sp)
    sp.add_argument("--out", help="also write the JSON report here")
    sp.set_defaults(func=cmd_select_params)

    sp = sub.add_parser("run", help="run TT-EXTRA and write a CSV trace")
    common(sp)
    sp.add_argument("--trace", help="CSV trace path (overrides output.trace)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("compare", help="TT-EXTRA (both forms) against EXTRA (both forms)")
    common(sp)
    sp.add_argument("--trace", help="CSV path (overrides output.trace)")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("check-lemmas", help="certify the descent inequalities along a trace")
    common(sp)
    sp.add_argument("trace_csv", help="trace produced by `run` with the same config")
    sp.add_argument("--out", help="also write the JSON report here")
    sp.set_defaults(func=cmd_check_lemmas)
    return p


def main(argv=None) -> int:
    level = os.environ.get("LOG_LEVEL", "warn").upper()
    level = {"WARN": "WARNING"}.get(level, level)
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError, FileNotFoundError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
