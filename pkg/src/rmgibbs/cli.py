"""Batch experiment runner: reservoir-info | solve | mc | gibbs-scan | crosscheck.

Exit codes: 0 success, 1 acceptance-threshold failure, 2 configuration or
domain error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import gibbs, reservoir, thermo
from . import ensemble as em
from . import selfconsistent as sc
from .config import ConfigError, ExperimentConfig, load_config
from .numerics import NonIntegrableEnvelopeError, QuadratureError
from .output import (complex_matrix_columns, fmt17, matrix_to_lists,
                     svg_line_plot, write_csv, write_json)

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_CONFIG = 2
EXIT_NUMERICS = 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to the INI config")
    common.add_argument("--seed", type=int, default=None,
                        help="override run.seed")
    common.add_argument("--out", default=None, help="override output directory")
    common.add_argument("--partial", action="store_true",
                        help="tolerate per-grid-point solver failures")
    common.add_argument("--jobs", type=int, default=1,
                        help="worker processes for independent sub-jobs")
    p = argparse.ArgumentParser(prog="rmgibbs", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=fn.__doc__)
        sp.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command,
                          seed_override=args.seed, out_override=args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.fn(cfg, args)
    except (ConfigError, reservoir.DomainError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (sc.FixedPointError, QuadratureError, NonIntegrableEnvelopeError,
            reservoir.InversionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


def entry() -> None:
    sys.exit(main())


# ----------------------------------------------------------------------
# reservoir-info
# ----------------------------------------------------------------------

def cmd_reservoir_info(cfg: ExperimentConfig, args) -> int:
    """Regularity conditions plus a thermodynamic table."""
    model = cfg.model
    report = reservoir.check_conditions(
        model, a_candidates=cfg.run["a_candidates"], t0=cfg.run["t0"])
    eps_grid = cfg.run["epsilon_grid"]
    if eps_grid is None:
        mean = model.block_mean()
        spread = np.sqrt(model.block_var())
        lo_s, hi_s = model.block_support()
        lo = max(mean - 1.5 * spread, lo_s + 0.05 * spread)
        hi = min(mean + 1.5 * spread, hi_s - 0.05 * spread) if np.isfinite(hi_s) \
            else mean + 1.5 * spread
        eps_grid = np.linspace(lo, hi, 21)

    rows = []
    for eps in eps_grid:
        pt = thermo.thermo_point(model, float(eps))
        rows.append((pt.epsilon, pt.beta, pt.entropy_rate, pt.lambda2, pt.mu_j))

    payload = cfg.stamp()
    payload["conditions"] = {
        "a_exponent": report.a_exponent,
        "hausdorff_young_j0": report.hausdorff_young_j0,
        "left_tail_superexponential": report.left_tail_superexponential,
        "char_fn_gap": report.char_fn_gap,
        "q_a_integral": report.q_a_integral,
    }
    if "json" in cfg.formats:
        write_json(os.path.join(cfg.out_dir, "conditions.json"), payload)
    if "csv" in cfg.formats:
        write_csv(os.path.join(cfg.out_dir, "thermo_table.csv"),
                  ["epsilon", "beta", "entropy_rate", "lambda2", "mu_J"], rows)
    return EXIT_OK


# ----------------------------------------------------------------------
# solve
# ----------------------------------------------------------------------

def _solve_point(task):
    sys_spec, model, e, tol, route = task
    sol = sc.solve_real_axis(sys_spec, model, e, tol=tol, route=route)
    return sol.value, sol.info


def cmd_solve(cfg: ExperimentConfig, args) -> int:
    """Limiting spectral density gamma(E) on a grid."""
    sys_spec, model = cfg.system, cfg.model
    e_grid = cfg.run["e_grid"]
    tol = cfg.run["tol"]
    route = cfg.run["route"]
    chained = cfg.run["mode"] == "chained"

    values = [None] * len(e_grid)
    infos = [None] * len(e_grid)
    failures = []
    if chained:
        f_prev = None
        for i, e in enumerate(e_grid):
            try:
                sol = sc.solve_real_axis(sys_spec, model, float(e), tol=tol,
                                         route=route, f0=f_prev)
                f_prev = sol.value
                values[i], infos[i] = sol.value, sol.info
            except (sc.FixedPointError, QuadratureError,
                    NonIntegrableEnvelopeError) as exc:
                failures.append({"E": float(e), "error": str(exc)})
                f_prev = None
                if not args.partial:
                    print(f"numerical failure at E = {e:g}: {exc}",
                          file=sys.stderr)
                    return EXIT_NUMERICS
    else:
        tasks = [(sys_spec, model, float(e), tol, route) for e in e_grid]
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                results = []
                for i, task in enumerate(tasks):
                    results.append(pool.submit(_solve_point, task))
                for i, fut in enumerate(results):
                    try:
                        values[i], infos[i] = fut.result()
                    except (sc.FixedPointError, QuadratureError,
                            NonIntegrableEnvelopeError) as exc:
                        failures.append({"E": float(e_grid[i]),
                                         "error": str(exc)})
        else:
            for i, task in enumerate(tasks):
                try:
                    values[i], infos[i] = _solve_point(task)
                except (sc.FixedPointError, QuadratureError,
                        NonIntegrableEnvelopeError) as exc:
                    failures.append({"E": float(e_grid[i]), "error": str(exc)})
        if failures and not args.partial:
            print(f"numerical failure at E = {failures[0]['E']:g}: "
                  f"{failures[0]['error']}", file=sys.stderr)
            return EXIT_NUMERICS

    n = sys_spec.n
    rows = []
    for e, val in zip(e_grid, values):
        if val is None:
            continue
        gamma = (val - val.conj().T) / 2j / np.pi
        row = [float(e)]
        for a in range(n):
            for b in range(n):
                row.extend([gamma[a, b].real, gamma[a, b].imag])
        rows.append(row)
    if "csv" in cfg.formats:
        write_csv(os.path.join(cfg.out_dir, "gamma.csv"),
                  ["E"] + complex_matrix_columns(n, "gamma_"), rows)
    meta = cfg.stamp()
    meta["points"] = [
        {"E": float(e),
         "residual": (info or {}).get("residual"),
         "iterations": (info or {}).get("iterations"),
         "route": (info or {}).get("route"),
         "t_trunc": (info or {}).get("t_trunc")}
        for e, info in zip(e_grid, infos) if info is not None]
    meta["failures"] = failures
    meta["mode"] = cfg.run["mode"]
    if "json" in cfg.formats:
        write_json(os.path.join(cfg.out_dir, "gamma_meta.json"), meta)
    return EXIT_OK


# ----------------------------------------------------------------------
# mc
# ----------------------------------------------------------------------

def _decoupled_spectrum(sys_spec: em.SystemSpec, levels: np.ndarray) -> np.ndarray:
    h_vals = np.linalg.eigvalsh(sys_spec.h_s)
    return np.sort((levels[None, :] + h_vals[:, None]).ravel())


def _mc_realization(task):
    sys_spec, model, n_value, win, z, master_seed, n_index, rep = task
    levels = model.sample_levels(n_value, mode="quantile")
    w = em.sample_gue(n_value, em.job_rng(master_seed, n_index, rep))
    h = em.build_composite(sys_spec, levels, w)
    eig = np.linalg.eigh(h)
    vals, vecs = eig
    mask = (vals > win.lo) & (vals <= win.hi)
    count = int(mask.sum())
    n = sys_spec.n
    vr = vecs[:, mask].reshape(n, n_value, count)
    e_s = np.einsum("ajk,bjk->ab", vr, vr.conj()) / n_value
    e_s = 0.5 * (e_s + e_s.conj().T)
    weights = 1.0 / (vals - z)
    vr_all = vecs.reshape(n, n_value, len(vals))
    g = np.einsum("ajk,bjk,k->ab", vr_all, vr_all.conj(), weights) / n_value
    return e_s, g, count


def cmd_mc(cfg: ExperimentConfig, args) -> int:
    """Monte Carlo realizations: windowed spectral matrix and resolvent stats."""
    sys_spec, model = cfg.system, cfg.model
    n_list = cfg.run["n_list"]
    m = cfg.run["m"]
    z = complex(cfg.run["z"])
    if abs(z.imag) < 1e-9:
        raise ConfigError("run.z must have a nonzero imaginary part")

    levels0 = model.sample_levels(max(n_list), mode="quantile")
    spectrum0 = _decoupled_spectrum(sys_spec, levels0)
    center = cfg.run["window_center"]
    if center == "auto":
        center = float(np.median(spectrum0))
    delta = cfg.run["window_delta"]
    if delta == "auto":
        win = em.auto_window(spectrum0, center, sys_spec.n)
    else:
        win = em.EnergyWindow(center, float(delta))

    tasks = []
    for n_index, n_value in enumerate(n_list):
        for rep in range(m):
            tasks.append((sys_spec, model, n_value, win, z, cfg.seed,
                          n_index, rep))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_mc_realization, tasks))
    else:
        results = [_mc_realization(t) for t in tasks]

    aggregate = cfg.stamp()
    aggregate["z"] = {"re": z.real, "im": z.imag}
    aggregate["window"] = {"center": win.center, "delta": win.delta}
    aggregate["per_N"] = []
    max_vars = []
    for n_index, n_value in enumerate(n_list):
        chunk = results[n_index * m:(n_index + 1) * m]
        e_list = np.array([c[0] for c in chunk])
        g_list = np.array([c[1] for c in chunk])
        counts = [c[2] for c in chunk]
        var = g_list.var(axis=0).real
        max_vars.append(max(var.max(), 1e-300))
        aggregate["per_N"].append({
            "N": int(n_value),
            "mean_e_s": matrix_to_lists(e_list.mean(axis=0)),
            "mean_g": matrix_to_lists(g_list.mean(axis=0)),
            "g_variance": [[float(v) for v in row] for row in var],
            "counts": counts,
        })
        if "json" in cfg.formats:
            for rep, (e_s, _, count) in enumerate(chunk):
                rec = cfg.stamp()
                rec.update({
                    "N": int(n_value),
                    "job": [n_index, rep],
                    "window": {"center": win.center, "delta": win.delta},
                    "e_s": matrix_to_lists(e_s),
                    "count": int(count),
                })
                write_json(os.path.join(cfg.out_dir, "realizations",
                                        f"rec_N{n_value}_r{rep}.json"), rec)
    slope = (float(np.polyfit(np.log(n_list), np.log(max_vars), 1)[0])
             if len(n_list) > 1 else None)
    aggregate["variance_slope"] = slope
    if "json" in cfg.formats:
        write_json(os.path.join(cfg.out_dir, "aggregate.json"), aggregate)
    if "csv" in cfg.formats:
        rows = [(row["N"], *np.ravel(row["g_variance"]))
                for row in aggregate["per_N"]]
        write_csv(os.path.join(cfg.out_dir, "variance_table.csv"),
                  ["N"] + [f"var_{a}{b}" for a in range(sys_spec.n)
                           for b in range(sys_spec.n)], rows)
    return EXIT_OK


# ----------------------------------------------------------------------
# gibbs-scan
# ----------------------------------------------------------------------

def cmd_gibbs_scan(cfg: ExperimentConfig, args) -> int:
    """Trace distance to the Gibbs state over a ladder of block counts."""
    sys_spec, model = cfg.system, cfg.model
    eps = cfg.run["epsilon"]
    if eps is None:
        eps = thermo.saddle_epsilon(model, cfg.run["beta"])
    report = gibbs.gibbs_ratio_scan(sys_spec, model, float(eps),
                                    cfg.run["j_list"], tol=cfg.run["tol"])
    payload = cfg.stamp()
    payload["report"] = report.as_dict()
    if "json" in cfg.formats:
        write_json(os.path.join(cfg.out_dir, "report.json"), payload)
    if "csv" in cfg.formats:
        rows = [(j, d, report.beta, rd) for j, d, rd in
                zip(report.j_list, report.trace_distances,
                    report.ratio_deviations)]
        write_csv(os.path.join(cfg.out_dir, "scan.csv"),
                  ["J", "trace_distance", "beta", "ratio_deviation"], rows)
    if "svg" in cfg.formats:
        logj = np.log10(report.j_list)
        logd = np.log10(np.maximum(report.trace_distances, 1e-300))
        svg_line_plot(os.path.join(cfg.out_dir, "scan.svg"),
                      [(logj, logd, "log10 D_J")],
                      "Gibbs convergence", "log10 J", "log10 D_J")
    return EXIT_OK


# ----------------------------------------------------------------------
# crosscheck
# ----------------------------------------------------------------------

def _crosscheck_realization(task):
    sys_spec, model, n_value, win, master_seed, rep = task
    levels = model.sample_levels(n_value, mode="quantile")
    w = em.sample_gue(n_value, em.job_rng(master_seed, 0, rep))
    h = em.build_composite(sys_spec, levels, w)
    rho, e_s, count = em.reduced_dm_micro(h, sys_spec, win)
    return rho, e_s, count


def cmd_crosscheck(cfg: ExperimentConfig, args) -> int:
    """Monte Carlo reduced density matrix against the fixed-point prediction."""
    sys_spec, model = cfg.system, cfg.model
    n_value = cfg.run["n_levels"]
    m = cfg.run["m"]
    win = em.EnergyWindow(cfg.run["window_center"], cfg.run["window_delta"])

    tasks = [(sys_spec, model, n_value, win, cfg.seed, rep) for rep in range(m)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_crosscheck_realization, tasks))
    else:
        results = [_crosscheck_realization(t) for t in tasks]
    rho_mc = np.mean([r[0] for r in results], axis=0)
    counts = [int(r[2]) for r in results]

    e_s_theory, edge_flag = sc.invert_window_from_solver(
        sys_spec, model, win, deltas=tuple(cfg.run["deltas"]),
        npts=cfg.run["npts"], tol=cfg.run["tol"])
    rho_theory = e_s_theory / np.trace(e_s_theory).real

    dev = float(np.abs(rho_mc - rho_theory).max())
    threshold = cfg.run["threshold"]
    payload = cfg.stamp()
    payload.update({
        "N": int(n_value), "M": int(m),
        "window": {"center": win.center, "delta": win.delta},
        "counts": counts,
        "rho_mc": matrix_to_lists(rho_mc),
        "rho_theory": matrix_to_lists(rho_theory),
        "max_deviation": dev,
        "threshold": threshold,
        "edge_flag": bool(edge_flag),
        "passed": bool(dev <= threshold),
    })
    if "json" in cfg.formats:
        write_json(os.path.join(cfg.out_dir, "crosscheck.json"), payload)
    if dev > threshold:
        print(f"crosscheck deviation {dev:.4g} exceeds threshold "
              f"{threshold:.4g}", file=sys.stderr)
        return EXIT_THRESHOLD
    return EXIT_OK


_COMMANDS = {
    "reservoir-info": cmd_reservoir_info,
    "solve": cmd_solve,
    "mc": cmd_mc,
    "gibbs-scan": cmd_gibbs_scan,
    "crosscheck": cmd_crosscheck,
}
