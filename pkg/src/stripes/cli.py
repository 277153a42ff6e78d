"""Command-line front end.

Usage::

    stripes COMMAND [key=value ...] [--config FILE]

Each run writes ``<out>_<table>.csv`` tables and an ``<out>.json`` report.
Exit status is 0 on success, 2 when falsification events were recorded and
1 on any error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
import warnings

import numpy as np

from . import __version__
from .analytic import (
    AnomalyWarning,
    abc_inequality_check,
    convexity_scan,
    derivative_sign_changes,
    lambda_value,
    optimal_period,
    perturbation_rates,
)
from .config import REQUIRED, ConfigError, RunConfig, load_config, parse_pairs, typed
from .kernel import jc_diagnostic, make_params
from .profiles import (
    brute_force_min,
    constrained_local_search,
    equal_stripes,
    from_unwrapped,
    profile_energy,
    read_profiles,
    rp_probe,
    same_configuration,
    write_profiles,
)
from .grid.anneal import DEFAULT_MOVES, DEFAULT_T_END, DEFAULT_T_START
from .report import RunReport, write_report

log = logging.getLogger("stripes")

EXIT_OK, EXIT_ERROR, EXIT_FALSIFIED = 0, 1, 2

_KERNEL = {"d": ("int", 2), "p": ("float", 4.0), "tau": ("float", 0.0)}
_OUT = {"out": ("str", None)}


def _schema(*parts, **extra) -> dict:
    out = {}
    for p in parts:
        out.update(p)
    out.update(extra)
    return out


def _params(v):
    return make_params(v["d"], v["p"], v["tau"])


def _event(report: RunReport, kind: str, detail: str, **data) -> None:
    report.falsifications.append({"kind": kind, "detail": detail, **data})


def _capture_anomalies(report: RunReport, fn, *args, **kwargs):
    """Run fn, turning AnomalyWarnings into falsification events."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AnomalyWarning)
        result = fn(*args, **kwargs)
    for w in caught:
        if issubclass(w.category, AnomalyWarning):
            _event(report, "anomaly", str(w.message))
        else:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    return result


# -- analytic commands ----------------------------------------------------------

def cmd_params(v, report):
    prm = make_params(v["d"], v["p"], v["tau"], verify=v["verify"])
    row = [prm.d, prm.p, prm.tau, prm.beta, prm.q, prm.c1, prm.eps, prm.c2]
    cols = ["d", "p", "tau", "beta", "q", "c1", "eps", "c2"]
    if v["jc"]:
        cols.append("jc")
        row.append(jc_diagnostic(prm))
    report.add_table("params", cols, [row])


def cmd_lambda_table(v, report):
    prm = _params(v)
    rows = []
    for a in v["alpha"]:
        s = _capture_anomalies(report, lambda_value, prm, a)
        rows.append((s.alpha, s.h_star, s.lam, s.d_alpha, s.d2_alpha))
        if not s.lam < 0:
            _event(report, "lambda_nonnegative", f"Lambda={s.lam} at alpha={a}", alpha=a)
    report.add_table("lambda", ["alpha", "h_star", "lambda", "d_alpha", "d2_alpha"], rows)


def cmd_optimal_period(v, report):
    prm = _params(v)
    rows = []
    for a in v["alpha"]:
        h, cert = _capture_anomalies(report, optimal_period, prm, a)
        changes = derivative_sign_changes(prm, a)[2]
        rows.append((a, h, cert, changes))
        if changes != 1:
            _event(report, "period_not_unique", f"{changes} sign changes of dF/dh at alpha={a}", alpha=a)
    report.add_table("period", ["alpha", "h_star", "certificate", "sign_changes"], rows)


def cmd_convexity_scan(v, report):
    prm = _params(v)
    rep = _capture_anomalies(report, convexity_scan, prm, v["alpha"])
    report.add_table("convexity", ["alpha", "d2_alpha", "floor_ratio"], rep.rows)
    report.summary.update(c_tilde=rep.c_tilde, c2_fit=rep.c2_fit)
    for e in rep.events:
        _event(report, "convexity", e)
    if rep.rows and not rep.c_tilde > 0:
        _event(report, "convexity_floor", f"fitted floor constant {rep.c_tilde} is not positive")


def cmd_abc_check(v, report):
    prm = make_params(v["d"], v["p"], 0.0)
    rows = []
    for a in v["alpha"]:
        a1, a2, a3, margin = abc_inequality_check(prm, a, v["const"])
        rows.append((a, a1, a2, a3, margin))
        if not margin > 0:
            _event(report, "abc_inequality", f"margin {margin} at alpha={a}", alpha=a)
    report.add_table("abc", ["alpha", "A1", "A2", "A3", "margin"], rows)


def cmd_rate_scan(v, report):
    d, p = v["d"], v["p"]
    rep = perturbation_rates(lambda t: make_params(d, p, t), v["tau"], v["alpha"], c4=v["c4"], n_h=v["n_h"])
    rows = []
    for i, t in enumerate(rep.taus):
        for j, a in enumerate(rep.alphas):
            rows.append((t, a, rep.dev[0, i, j], rep.dev[1, i, j], rep.dev[2, i, j]))
    report.add_table("rates", ["tau", "alpha", "dev_F", "dev_F_h", "dev_F_hh"], rows)
    beta = make_params(d, p, 0.0).beta
    report.summary.update(
        beta=beta,
        expected_slope=1.0 / beta,
        slope_tau=[float(x) for x in rep.slope_tau],
        slope_alpha=[None if math.isnan(x) else float(x) for x in rep.slope_alpha],
    )


# -- one-dimensional profiles -----------------------------------------------------

def cmd_profile_energy(v, report):
    items = read_profiles(v["input"])
    rows, per_r = [], []
    for k, (prof, prm) in enumerate(items):
        br = profile_energy(prm, prof)
        resid = float(np.sum(br.per_boundary_r)) - prof.L * br.total_density
        rows.append((k, prof.L, prof.m, prof.density, br.total_density, br.tail_bound, resid))
        per_r.append([float(r) for r in br.per_boundary_r])
        if abs(resid) > v["identity_tol"] + br.tail_bound:
            _event(report, "decomposition_identity", f"profile {k}: sum r - L F = {resid}", index=k)
    report.add_table("energies", ["index", "L", "m", "density", "energy_density", "tail_bound", "identity_residual"], rows)
    report.summary["per_boundary_r"] = per_r


def cmd_minimize_profile(v, report):
    prm = _params(v)
    a = v["alpha"]
    h = lambda_value(prm, a).h_star
    L = v["L"] if v["L"] is not None else 2.0 * h * v["m_pairs"]
    best, e_best = brute_force_min(prm, v["m_pairs"], a, L, v["grid_n"])
    rng = np.random.default_rng(v["seed"])
    ref = equal_stripes(v["m_pairs"], a, L)
    rows, found = [], []
    for k in range(v["n_starts"]):
        x = ref.unwrapped() + rng.normal(0.0, v["noise"] * L / (2 * v["m_pairs"]), ref.m)
        x = np.sort(x - x[0])
        res = constrained_local_search(prm, from_unwrapped(x, L), alpha=a)
        same = res.profile is not None and same_configuration(res.profile, best, v["match_tol"] * L)
        rows.append((k, res.energy_density, res.iterations, res.converged, same))
        if res.profile is not None:
            found.append((res.profile, prm))
        if not same:
            _event(report, "local_search_mismatch", f"start {k} ended away from the grid minimiser", start=k)
    report.add_table("starts", ["start", "energy_density", "iterations", "converged", "matches_brute_force"], rows)
    gaps = best.gaps()
    report.summary.update(
        L=L,
        brute_force_energy=e_best,
        brute_force_gaps=[float(g) for g in gaps],
        lambda_value=lambda_value(prm, a).lam,
    )
    if v["m_pairs"] > 1 and not same_configuration(best, ref, 2.0 * L / v["grid_n"]):
        _event(report, "not_simple_periodic", "grid minimiser is not equal, equally spaced stripes")
    path = f"{v['out']}_profiles.jsonl"
    write_profiles(path, [(best, prm)] + found)
    report.outputs.append(path)


def cmd_rp_probe(v, report):
    prm = _params(v)
    L = (v["L_min"], v["L_max"]) if v["L_max"] is not None else v["L_min"]
    rows = []
    offenders = []
    for a in v["alpha"]:
        rep = rp_probe(prm, v["n_samples"], v["m_max"], a, L, v["seed"], tol=v["tol"], n_intervals=v["n_intervals"])
        c0 = rep.c0_empirical if math.isfinite(rep.c0_empirical) else 0.0
        rows.append((a, rep.n_samples, len(rep.violations), rep.min_margin, c0))
        for prof, margin in rep.violations:
            offenders.append((prof, prm))
            _event(report, "rp_violation", f"profile beats Lambda by {-margin} at alpha={a}", alpha=a)
    report.add_table("rp", ["alpha", "n_samples", "violations", "min_margin", "c0_empirical"], rows)
    if offenders:
        path = f"{v['out']}_violations.jsonl"
        write_profiles(path, offenders)
        report.outputs.append(path)


# -- grid commands ---------------------------------------------------------------

_GRID = {
    "input": ("str", None),
    "fixture": ("str", "stripes"),
    "n": ("int", 64),
    "alpha": ("float", 0.5),
    "period_cells": ("int", 16),
    "cell": ("int", 4),
    "direction": ("int", 0),
    "L": ("float", None),
    "seed": ("int", None),
}


def _grid(v):
    from .grid import core
    from .grid.io import load_grid

    if v["input"]:
        grid, prm = load_grid(v["input"])
        return grid, prm
    prm = _params(v)
    n, d = v["n"], v["d"]
    L = v["L"] if v["L"] is not None else float(n)
    kind = v["fixture"]
    if kind == "stripes":
        g = core.make_stripes(n, v["alpha"], v["period_cells"], v["direction"], d=d, L=L)
    elif kind == "checkerboard":
        g = core.make_checkerboard(n, v["cell"], d=d, L=L, alpha=v["alpha"])
    elif kind == "disc":
        g = core.make_disc(n, v["alpha"], d=d, L=L)
    elif kind == "full":
        g = core.make_full(n, d=d, L=L)
    elif kind == "random":
        if v["seed"] is None:
            raise ConfigError("fixture=random requires seed")
        g = core.make_random(n, v["alpha"], np.random.default_rng(v["seed"]), d=d, L=L)
    else:
        raise ConfigError(f"unknown fixture {kind!r}")
    return g, prm


def cmd_grid_energy(v, report):
    from .grid.energy import grid_energy_report

    g, prm = _grid(v)
    e = grid_energy_report(prm, g)
    report.add_table(
        "energy",
        ["d", "n", "L", "alpha", "energy_density", "perimeter", "moment", "tail_estimate", "box_images"],
        [(g.d, g.n, g.L, g.alpha, e.density, e.perimeter, e.moment, e.tail_estimate, e.box_images)],
    )


def cmd_grid_decompose(v, report):
    from .grid.energy import decomposition_terms

    g, prm = _grid(v)
    rep = decomposition_terms(prm, g)
    rows = [(i, rep.r_total[i], rep.v_total[i], rep.w_total[i]) for i in range(g.d)]
    report.add_table("terms", ["direction", "r", "v", "w"], rows)
    report.summary.update(energy=rep.energy, rhs=rep.rhs_total, slack=rep.slack)
    if rep.slack < -v["slack_tol"] * abs(rep.energy):
        _event(report, "decomposition_slack", f"slack {rep.slack} below -{v['slack_tol']}|E|")


def cmd_grid_distance(v, report):
    from .grid.distance import box_distance, stripe_distance

    g, _ = _grid(v)
    eta = v["eta"] if v["eta"] is not None else 2.0 * g.delta
    rows = []
    for i in range(g.d):
        if v["center"]:
            c = v["center"]
            if len(c) != g.d:
                raise ConfigError("center needs one index per dimension")
            l = v["l"] if v["l"] is not None else g.L
            sd = stripe_distance(g, c, l, i, eta)
            rows.append((i, sd.value))
        else:
            rows.append((i, box_distance(g, i, eta)))
    report.add_table("distance", ["direction", "D_eta"], rows)
    report.summary["eta"] = eta


def cmd_grid_classify(v, report):
    from .grid.distance import RegionParams, classify_regions

    g, _ = _grid(v)
    eta = v["eta"] if v["eta"] is not None else 2.0 * g.delta
    region = RegionParams(v["l"], eta, v["delta_thresh"], v["rho"])
    lab = classify_regions(g, region)
    rows = [(k, lab.fraction(k)) for k in range(-1, g.d + 1)]
    report.add_table("regions", ["label", "fraction"], rows)
    report.summary.update(components=lab.components, anomalies=lab.anomalies, labels=lab.labels.tolist())
    for a in lab.anomalies:
        _event(report, "mixed_component", f"component {a['component']} mixes directions {a['directions']}")


def cmd_grid_anneal(v, report):
    from .grid.anneal import Schedule, anneal, stripe_period
    from .grid.io import save_grid

    prm = _params(v)
    n, d = v["n"], prm.d
    # the occupied count must be an integer; the nearest one is used
    count = int(round(v["alpha"] * n**d))
    a = count / n**d
    if a != v["alpha"]:
        log.warning("alpha=%s gives %s cells; using %d/%d", v["alpha"], v["alpha"] * n**d, count, n**d)
    h_star = lambda_value(prm, a).h_star
    L = v["L"] if v["L"] is not None else 2.0 * h_star * v["periods"]
    sched = Schedule(v["t_start"], v["t_end"], v["moves"], v["boundary_fraction"], v["local_fraction"])
    res = anneal(prm, n, a, L, sched, v["seed"], eta=v["eta"])
    report.add_table("trace", ["move", "energy", "D_eta", "temperature"], res.trace)
    period = stripe_period(res.grid)
    report.summary.update(
        L=L,
        alpha_used=a,
        occupied_cells=count,
        energy=res.energy,
        accepted=res.accepted,
        max_mismatch=res.max_mismatch,
        distances=[float(x) for x in res.distances],
        eta=res.eta,
        period=period if math.isfinite(period) else None,
        period_ratio=(period / (2.0 * h_star)) if math.isfinite(period) else None,
        lambda_value=lambda_value(prm, a).lam,
    )
    if res.max_mismatch > 1e-8:
        _event(report, "energy_bookkeeping", f"incremental energy drifted by {res.max_mismatch}")
    path = f"{v['out']}.grid"
    save_grid(path, res.grid, prm.tau, prm.p)
    report.outputs.append(path)


_ALPHA_RANGE = {"alpha": ("range", "0.1:0.9:0.1")}

COMMANDS = {
    "params": (cmd_params, _schema(_KERNEL, _OUT, verify=("bool", False), jc=("bool", False))),
    "lambda-table": (cmd_lambda_table, _schema(_KERNEL, _OUT, _ALPHA_RANGE)),
    "optimal-period": (cmd_optimal_period, _schema(_KERNEL, _OUT, _ALPHA_RANGE)),
    "convexity-scan": (cmd_convexity_scan, _schema(_KERNEL, _OUT, {"alpha": ("range", "0.05:0.95:0.05")})),
    "abc-check": (cmd_abc_check, _schema(_KERNEL, _OUT, {"alpha": ("range", "0.05:0.5:0.05")}, const=("float", 0.0))),
    "rate-scan": (
        cmd_rate_scan,
        _schema(
            _KERNEL, _OUT,
            tau=("range", "1e-4,1e-3,1e-2"),
            alpha=("range", "0.1,0.3,0.5"),
            c4=("float", 0.5),
            n_h=("int", 64),
        ),
    ),
    "profile-energy": (cmd_profile_energy, _schema(_OUT, input=("str", REQUIRED), identity_tol=("float", 1e-8))),
    "minimize-profile": (
        cmd_minimize_profile,
        _schema(
            _KERNEL, _OUT,
            alpha=("float", 0.5),
            m_pairs=("int", 2),
            L=("float", None),
            grid_n=("int", 200),
            n_starts=("int", 20),
            noise=("float", 0.1),
            match_tol=("float", 1e-4),
            seed=("int", REQUIRED),
        ),
    ),
    "rp-probe": (
        cmd_rp_probe,
        _schema(
            _KERNEL, _OUT,
            alpha=("range", "0.5"),
            n_samples=("int", 1000),
            m_max=("int", 6),
            L_min=("float", 1.0),
            L_max=("float", 20.0),
            tol=("float", 1e-6),
            n_intervals=("int", 0),
            seed=("int", REQUIRED),
        ),
    ),
    "grid-energy": (cmd_grid_energy, _schema(_KERNEL, _OUT, _GRID)),
    "grid-decompose": (cmd_grid_decompose, _schema(_KERNEL, _OUT, _GRID, slack_tol=("float", 0.02))),
    "grid-distance": (
        cmd_grid_distance,
        _schema(_KERNEL, _OUT, _GRID, eta=("float", None), l=("float", None), center=("ints", None)),
    ),
    "grid-classify": (
        cmd_grid_classify,
        _schema(
            _KERNEL, _OUT, _GRID,
            eta=("float", None),
            l=("float", REQUIRED),
            delta_thresh=("float", 0.1),
            rho=("float", 1.0),
        ),
    ),
    "grid-anneal": (
        cmd_grid_anneal,
        _schema(
            _KERNEL, _OUT,
            tau=("float", 0.05),
            n=("int", 64),
            alpha=("float", 0.5),
            L=("float", None),
            periods=("int", 2),
            t_start=("float", DEFAULT_T_START),
            t_end=("float", DEFAULT_T_END),
            moves=("int", DEFAULT_MOVES),
            boundary_fraction=("float", 0.8),
            local_fraction=("float", 0.5),
            eta=("float", None),
            seed=("int", REQUIRED),
        ),
    ),
}

RANDOMIZED = {"minimize-profile", "rp-probe", "grid-anneal"}


def run(command: str, config: RunConfig) -> RunReport:
    """Execute one command; raises on errors, records falsifications in the report."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {', '.join(sorted(COMMANDS))}")
    fn, schema = COMMANDS[command]
    values = typed(config, schema)
    if values.get("out") is None:
        values["out"] = command.replace("-", "_")
    report = RunReport(command, dict(sorted(config.values.items())), config.hash(), __version__)
    t0 = time.perf_counter()
    fn(values, report)
    report.wall_time = time.perf_counter() - t0
    write_report(report, values["out"])
    return report


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = _Parser(prog="stripes", description="Stripe-formation functional toolkit.")
    parser.add_argument("command", help=", ".join(sorted(COMMANDS)))
    parser.add_argument("pairs", nargs="*", help="key=value settings (override the config file)")
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--version", action="version", version=f"stripes {__version__}")
    try:
        args = parser.parse_intermixed_args(argv)
        overrides = parse_pairs(args.pairs, "<command line>")
        cfg = load_config(args.config, args.command, overrides)
        report = run(args.command, cfg)
    except Exception as exc:  # every failure maps to exit status 1
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for ev in report.falsifications:
        print(f"falsification [{ev['kind']}]: {ev['detail']}", file=sys.stderr)
    print("\n".join(report.outputs))
    return EXIT_FALSIFIED if report.falsifications else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
