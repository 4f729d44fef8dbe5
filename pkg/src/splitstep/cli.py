"""Command line driver: ``splitstep {run,converge,validate,monitor} CONFIG``.

Exit codes: 0 success, 1 configuration error, 2 solver failure, 3 errors not
decreasing, 4 failed validation, 5 a priori monitor ratio breach.
"""
import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .analysis import apriori_quantities, error_norms, estimate_order, manufactured_problem, reference_solve
from .config import load_config, resolve_threads
from .decomposition import build_overlapping_subdomains, build_partition_of_unity, check_partition, check_source_split
from .errors import ConfigError, SolverFailure, SplitstepError, StepFailure
from .integrators import build_split_problem, run
from .mesh import TimeGrid, build_uniform_mesh, h_inner
from .operators import (
    GRADIENT_KINDS,
    OperatorSpec,
    check_coercivity_boundedness,
    check_monotonicity,
    check_radial_continuity,
    check_sum_property,
    check_time_continuity,
)
from .resolvent import ResolventConfig, check_nonexpansive

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CONVERGENCE, EXIT_VALIDATION, EXIT_MONITOR = range(6)


def fmt(x):
    return format(float(x), ".17g")


def build_experiment(cfg):
    """Mesh, manufactured ingredients, partition and split problem for a config."""
    try:
        man = manufactured_problem(cfg.problem, cfg.p, cfg.alpha)
        mesh = build_uniform_mesh(cfg.mesh_extent, cfg.m)
        whole = OperatorSpec(cfg.operator, man.p, man.alpha, cfg.T)
        pou = build_partition_of_unity(build_overlapping_subdomains(mesh, cfg.s, cfg.overlap_fraction), mesh,
                                       cfg.profile)
        problem = build_split_problem(mesh, whole, pou, man.source, man.initial_state(mesh))
    except ConfigError:
        raise
    except (SplitstepError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return mesh, man, pou, problem


def resolvent_config(cfg):
    return ResolventConfig(cfg.tol_abs, cfg.tol_rel, cfg.max_newton_iters, cfg.jacobian_regularization)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_kv(path, items):
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in items:
            fh.write(f"{key} = {value}\n")


def _stats_summary(traj):
    flat = [st for step in traj.stats for st in step]
    if not flat:
        return [("newton_iterations_total", 0), ("newton_iterations_max", 0), ("damping_events_total", 0),
                ("max_final_residual", fmt(0.0))]
    return [
        ("newton_iterations_total", sum(st.iterations for st in flat)),
        ("newton_iterations_max", max(st.iterations for st in flat)),
        ("damping_events_total", sum(st.damping_events for st in flat)),
        ("max_final_residual", fmt(max(st.residual for st in flat))),
    ]


def cmd_run(cfg, threads=None):
    """Integrate one trajectory and write ``trajectory.csv`` and ``summary.txt``."""
    try:
        threads = threads or resolve_threads(cfg)
        mesh, man, pou, problem = build_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(cfg.output, exist_ok=True)
    grid = TimeGrid(cfg.T, cfg.N)
    summary = [("problem", cfg.problem), ("scheme", cfg.scheme), ("operator", cfg.operator),
               ("p", fmt(problem.p)), ("s", problem.s), ("N", cfg.N), ("k", fmt(grid.k)), ("nodes", mesh.size)]
    code = EXIT_OK
    try:
        traj = run(cfg.scheme, problem, grid, resolvent_config(cfg), cfg.record_sublevels, threads)
        summary.append(("status", "ok"))
    except StepFailure as exc:
        traj = exc.trajectory
        summary += [("status", "solver_failure"), ("failed_step", exc.step),
                    ("failed_subdomain", "" if exc.subdomain is None else exc.subdomain)]
        print(f"solver failure: {exc}", file=sys.stderr)
        code = EXIT_SOLVER
    rows = []
    for n, state in enumerate(traj.states):
        t = fmt(grid.t(n))
        rows.extend((n, t, i, fmt(v)) for i, v in enumerate(state))
    _write_csv(os.path.join(cfg.output, "trajectory.csv"), ["n", "t", "node_index", "value"], rows)
    if traj.sublevels is not None:
        sub_rows = []
        for n in range(traj.sublevels.shape[0]):
            for ell, state in enumerate(traj.sublevels[n]):
                sub_rows.extend((n, fmt(grid.t(n)), ell, i, fmt(v)) for i, v in enumerate(state))
        _write_csv(os.path.join(cfg.output, "sublevels.csv"), ["n", "t", "subdomain", "node_index", "value"],
                   sub_rows)
    summary += [("steps_completed", len(traj.states) - 1),
                ("final_H_norm", fmt(np.sqrt(h_inner(mesh, traj.final, traj.final))))]
    summary += _stats_summary(traj)
    _write_kv(os.path.join(cfg.output, "summary.txt"), summary)
    return code


def _sweep(cfg, body, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(body, cfg.N_sweep))
    return [body(N) for N in cfg.N_sweep]


def cmd_converge(cfg, threads=None):
    """Error table ``converge.csv`` over ``N_sweep`` with fitted orders."""
    try:
        threads = threads or resolve_threads(cfg)
        if len(cfg.N_sweep) < 3:
            raise ConfigError("a convergence study needs at least 3 sweep values", key="N_sweep")
        mesh, man, pou, problem = build_experiment(cfg)
        use_exact = cfg.reference == "exact"
        if use_exact and man.exact is None:
            raise ConfigError(f"problem '{cfg.problem}' has no exact solution; set reference = solve", key="reference")
        if not use_exact and any(cfg.reference_N % N for N in cfg.N_sweep):
            raise ConfigError("reference_N must be a multiple of every sweep value", key="reference_N")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(cfg.output, exist_ok=True)
    rcfg = resolvent_config(cfg)
    try:
        reference = man.exact_state if use_exact else reference_solve(problem, cfg.T, cfg.reference_N, rcfg)

        def cell(N):
            traj = run(cfg.scheme, problem, TimeGrid(cfg.T, N), rcfg)
            return error_norms(traj, reference, mesh, problem.p)

        errors = _sweep(cfg, cell, threads)
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    order = sorted(zip(cfg.N_sweep, errors))
    rows = [(N, fmt(cfg.T / N), fmt(e.error_LinfH), fmt(e.error_LpV)) for N, e in order]
    _write_csv(os.path.join(cfg.output, "converge.csv"), ["N", "k", "error_LinfH", "error_LpV"], rows)
    linf = [e.error_LinfH for _, e in order]
    lpv = [e.error_LpV for _, e in order]
    decreasing = all(b < a for a, b in zip(linf, linf[1:])) and all(b < a for a, b in zip(lpv, lpv[1:]))
    summary = [("scheme", cfg.scheme), ("reference", "exact" if use_exact else f"backward_euler N={cfg.reference_N}")]
    for name, errs in (("LinfH", linf), ("LpV", lpv)):
        try:
            summary.append((f"order_{name}", fmt(estimate_order([(cfg.T / N, e) for (N, _), e in zip(order, errs)]))))
        except SplitstepError:
            summary.append((f"order_{name}", "nan"))
    summary.append(("errors_strictly_decreasing", str(decreasing).lower()))
    _write_kv(os.path.join(cfg.output, "converge_summary.txt"), summary)
    if not decreasing:
        print("errors do not decrease strictly along the sweep", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def validation_reports(cfg, pou_hook=None):
    """All structural checks for a configuration, in a fixed order."""
    mesh, man, pou, problem = build_experiment(cfg)
    if pou_hook is not None:
        pou = pou_hook(pou)
        problem = build_split_problem(mesh, problem.whole, pou, problem.source, problem.u0)
    whole, T = problem.whole, cfg.T
    reports = [check_partition(pou), check_source_split(problem.source, problem.sources, mesh, np.linspace(0, T, 5))]
    for t in (0.0, 0.5 * T, T):
        rep = check_sum_property(problem.parts, whole, mesh, t, 10, cfg.seed)
        rep.name += f"[t={t:g}]"
        reports.append(rep)
    for spec in (whole,) + problem.parts:
        reports.append(check_monotonicity(spec, mesh, T, cfg.samples, cfg.seed))
        reports.append(check_coercivity_boundedness(spec, mesh, T, 20, cfg.seed))
    reports.append(check_radial_continuity(whole, mesh, T, 20, cfg.seed))
    reports.append(check_time_continuity(whole, mesh, 20, cfg.seed))
    if whole.kind in GRADIENT_KINDS:
        k = T / cfg.N
        reports.append(check_nonexpansive(whole, mesh, k, T, 20, resolvent_config(cfg), cfg.seed))
        for ell, part in enumerate(problem.parts):
            rep = check_nonexpansive(part, mesh, problem.s * k, T, 20, resolvent_config(cfg), cfg.seed)
            rep.name += f"[part {ell}]"
            reports.append(rep)
    return reports


def cmd_validate(cfg, pou_hook=None):
    """Write ``validate.csv``; exit 4 if any property fails."""
    try:
        reports = validation_reports(cfg, pou_hook)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    os.makedirs(cfg.output, exist_ok=True)
    _write_csv(os.path.join(cfg.output, "validate.csv"),
               ["property", "samples", "worst_margin", "tolerance", "status", "constants"],
               [r.row() for r in reports])
    failed = [r.name for r in reports if not r.passed]
    if failed:
        print("failed properties: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_monitor(cfg, threads=None):
    """A priori terms over ``N_sweep`` in ``monitor.csv``; exit 5 if any term varies by a factor >= 2."""
    try:
        threads = threads or resolve_threads(cfg)
        if len(cfg.N_sweep) < 2:
            raise ConfigError("monitoring needs at least 2 sweep values", key="N_sweep")
        if cfg.scheme != "sum_splitting":
            raise ConfigError("a priori monitoring applies to the sum splitting scheme", key="scheme")
        mesh, man, pou, problem = build_experiment(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(cfg.output, exist_ok=True)
    rcfg = resolvent_config(cfg)

    def cell(N):
        traj = run("sum_splitting", problem, TimeGrid(cfg.T, N), rcfg, record_sublevels=True)
        return apriori_quantities(traj, pou, problem.p)

    try:
        reports = _sweep(cfg, cell, threads)
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    order = sorted(zip(cfg.N_sweep, reports), key=lambda item: item[0])
    _write_csv(os.path.join(cfg.output, "monitor.csv"), ["N", "k", "term1", "term2", "term3", "term4_surrogate"],
               [(N, fmt(r.k), *(fmt(x) for x in r.terms())) for N, r in order])
    ratios = term_ratios([r for _, r in order])
    _write_kv(os.path.join(cfg.output, "monitor_summary.txt"),
              [(f"ratio_{name}", fmt(v)) for name, v in zip(("term1", "term2", "term3", "term4_surrogate"), ratios)])
    breached = [name for name, v in zip(("term1", "term2", "term3", "term4_surrogate"), ratios) if not v < 2.0]
    if breached:
        print("max/min ratio >= 2 for: " + ", ".join(breached), file=sys.stderr)
        return EXIT_MONITOR
    return EXIT_OK


def term_ratios(reports):
    """max/min of each a priori term across a sweep (1 when a term is identically zero)."""
    out = []
    for values in zip(*(r.terms() for r in reports)):
        hi, lo = max(values), min(values)
        out.append(1.0 if hi == 0 else (hi / lo if lo > 0 else float("inf")))
    return out


COMMANDS = {"run": cmd_run, "converge": cmd_converge, "validate": cmd_validate, "monitor": cmd_monitor}


def main(argv=None):
    parser = argparse.ArgumentParser(prog="splitstep", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="path to a 'key = value' configuration file")
    parser.add_argument("--output", help="override the output directory")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.output:
        cfg = replace(cfg, output=args.output)
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
