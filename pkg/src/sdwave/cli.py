"""Command-line interface: config-driven commands, CSV reports, figures.

Exit codes: 0 success, 2 blow-up detected (simulate only; the data written
up to detection is kept), 3 invalid configuration or inputs, 4 linear
solver non-convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import itertools
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from sdwave import figures
from sdwave.config import MODES, SimConfig, emit_config, parse_config_file
from sdwave.energetics import CSV_HEADER, fit_decay_exponent
from sdwave.errors import ConfigError
from sdwave.grid import build_annulus
from sdwave.inequality_lab import (
    gn_ratio_parts,
    random_field_modes,
    sample_field,
)
from sdwave.solver import mms_joint_study, mms_temporal_study, run
from sdwave.weight import default_eps, epsilon_window, inequality_sides

REPORT_HEADER = "check_id,params,lhs,rhs,slack_or_ratio,pass"
MARGIN_TOL = 1e-12


def _write_lines(path, lines) -> None:
    parent = os.path.dirname(str(path))
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w") as fh:
        for line in lines:
            fh.write(line + "\n")


def _fmt(x: float) -> str:
    return format(float(x), ".17e")


def command_simulate(cfg: SimConfig) -> int:
    grid = cfg.build_grid()
    u0, u1 = cfg.initial_fields(grid)
    result = run(
        grid,
        cfg.time_scheme(),
        cfg.nonlinearity_params(),
        cfg.weight_params(),
        u0,
        u1,
        t_end=cfg.time.t_end,
        stride=cfg.time.stride,
    )
    _write_lines(
        cfg.output.path, [CSV_HEADER] + [row.to_csv() for row in result.rows]
    )
    if cfg.output.figures:
        figures.simulate_figure(result.rows, figures.figure_path(cfg.output.path))

    worst_ring = max(
        (row.outer_ring_amp / row.sup_u for row in result.rows if row.sup_u > 0.0),
        default=0.0,
    )
    print(f"status: {result.status} at t={result.t_final:.6g}")
    print(f"outer-ring/sup ratio max: {worst_ring:.3e} (validity level 1e-08)")
    if result.status == "blew_up":
        return 2
    if result.status == "solver_failed":
        return 4
    return 0


def command_mms(cfg: SimConfig) -> int:
    m = cfg.mms
    rows = mms_joint_study(
        base_nr=m.base_nr,
        base_ntheta=m.base_ntheta,
        levels=m.levels,
        r_inner=cfg.domain.r_inner,
        r_outer=cfg.domain.r_outer,
        t_end=m.t_end,
        theta=cfg.time.theta,
        cfl=m.cfl,
    )
    rows += mms_temporal_study(
        r_inner=cfg.domain.r_inner,
        r_outer=cfg.domain.r_outer,
        t_end=m.t_end,
        theta=cfg.time.theta,
    )
    lines = ["study,nr,ntheta,h,dt,error,order"]
    for row in rows:
        lines.append(
            f"{row.study},{row.nr},{row.ntheta},{_fmt(row.h)},{_fmt(row.dt)},"
            f"{_fmt(row.error)},{_fmt(row.order) if not math.isnan(row.order) else 'nan'}"
        )
    _write_lines(cfg.output.path, lines)
    if cfg.output.figures:
        figures.mms_figure(rows, figures.figure_path(cfg.output.path))
    observed = [r.order for r in rows if not math.isnan(r.order)]
    print(f"observed orders: {', '.join(f'{o:.3f}' for o in observed)}")
    return 0


def command_check_weight(cfg: SimConfig) -> int:
    params = cfg.weight_params()
    cw = cfg.checkweight
    t_values = np.linspace(0.0, cw.t_max, cw.nt)
    r_values = np.linspace(cfg.domain.r_inner, cw.r_max, cw.nr)

    disabled = not params.in_window
    records = []
    lines = [REPORT_HEADER]
    if disabled:
        note = (
            "# higher-order checks disabled: eps window empty or eps missing "
            f"(rho={params.rho}, needs rho > critical and eps in window)"
        )
        lines.insert(0, note)
        print(note.lstrip("# "), file=sys.stderr)

    worst = math.inf
    for t in t_values:
        for r in r_values:
            sides = inequality_sides(t, r, params)
            for check_id in ("lower_order", "higher_order", "grad_ratio", "log_derivative"):
                pair = sides[check_id]
                if pair is None:
                    continue
                lhs, rhs = float(pair[0]), float(pair[1])
                margin = (rhs - lhs) / (1.0 + abs(lhs) + abs(rhs))
                ok = margin >= -MARGIN_TOL
                worst = min(worst, margin)
                params_text = f"t={t:.6g};r={r:.6g};rho={params.rho:.6g};eps={params.eps}"
                lines.append(
                    f"{check_id},{params_text},{_fmt(lhs)},{_fmt(rhs)},{_fmt(margin)},{ok}"
                )
                records.append({"check_id": check_id, "t": float(t), "margin": margin})
    _write_lines(cfg.output.path, lines)
    if cfg.output.figures:
        figures.check_weight_figure(records, figures.figure_path(cfg.output.path))
    print(f"worst normalized margin: {worst:.3e} over {len(records)} checks")
    return 0


def command_check_gn(cfg: SimConfig) -> int:
    base = cfg.build_grid()
    refined = build_annulus(
        cfg.domain.r_inner,
        cfg.domain.r_outer,
        2 * cfg.domain.nr,
        2 * cfg.domain.ntheta,
        cfg.domain.B,
    )
    rng = np.random.default_rng(cfg.gn.seed)
    specs = [
        random_field_modes(rng, cfg.domain.r_inner, cfg.domain.r_outer)
        for _ in range(cfg.gn.samples)
    ]
    lines = [REPORT_HEADER]
    records = []
    for m in cfg.gn.m_values:
        for sample_idx, modes in enumerate(specs):
            for level, grid in ((0, base), (1, refined)):
                v = sample_field(grid, modes)
                num, den = gn_ratio_parts(grid, v, m)
                ratio = num / den
                ok = math.isfinite(ratio)
                params_text = f"m={m:.6g};sample={sample_idx};level={level}"
                lines.append(
                    f"gn_ratio,{params_text},{_fmt(num)},{_fmt(den)},{_fmt(ratio)},{ok}"
                )
                records.append({"m": m, "level": level, "ratio": ratio})
    _write_lines(cfg.output.path, lines)
    if cfg.output.figures:
        figures.gn_figure(records, figures.figure_path(cfg.output.path))
    ratios = [rec["ratio"] for rec in records]
    print(f"{len(ratios)} ratios, max {max(ratios):.4f}")
    return 0


def _read_diagnostics_csv(path):
    try:
        data = np.genfromtxt(path, delimiter=",", names=True)
    except OSError as err:
        raise ConfigError(f"fitdecay.input: cannot read {path}: {err}") from None
    if data.dtype.names is None:
        raise ConfigError(f"fitdecay.input: {path} has no header row")
    return data


def command_fit_decay(cfg: SimConfig) -> int:
    source = cfg.fitdecay.input or cfg.output.path
    data = _read_diagnostics_csv(source)
    names = data.dtype.names
    if "t" not in names:
        raise ConfigError(f"fitdecay.input: {source} has no 't' column")
    t = np.atleast_1d(data["t"])
    t_max = cfg.fitdecay.t_max if cfg.fitdecay.t_max is not None else float(t[-1])
    t_min = (
        cfg.fitdecay.t_min if cfg.fitdecay.t_min is not None else 0.1 * t_max
    )
    lines = ["column,alpha,c,t_min,t_max,samples"]
    fits = {}
    series = {}
    for column in cfg.fitdecay.columns:
        if column not in names:
            raise ConfigError(
                f"fitdecay.columns: column {column!r} not in {source} (has {', '.join(names)})"
            )
        values = np.atleast_1d(data[column])
        try:
            alpha, c = fit_decay_exponent(t, values, window=(t_min, t_max))
        except ValueError as err:
            raise ConfigError(f"fitdecay.columns: {column}: {err}") from None
        n_window = int(np.sum((t >= t_min) & (t <= t_max)))
        lines.append(
            f"{column},{_fmt(alpha)},{_fmt(c)},{_fmt(t_min)},{_fmt(t_max)},{n_window}"
        )
        fits[column] = (alpha, c)
        series[column] = values
        print(f"{column}: alpha={alpha:.6g} c={c:.6g} over t in [{t_min:.6g}, {t_max:.6g}]")
    out_path = cfg.output.path
    if os.path.abspath(str(out_path)) == os.path.abspath(str(source)):
        stem = str(out_path)
        stem = stem[: -len(".csv")] if stem.endswith(".csv") else stem
        out_path = stem + "_fits.csv"
    _write_lines(out_path, lines)
    if cfg.output.figures:
        figures.fit_decay_figure(t, series, fits, figures.figure_path(out_path))
    return 0


def _sweep_combo_config(cfg: SimConfig, p: float, q: float, rho: float, amp: float) -> SimConfig:
    # eps is re-derived per combo: a base eps tuned for one rho is generally
    # outside another rho's window
    eps = default_eps(rho) if epsilon_window(rho) is not None else None
    return dataclasses.replace(
        cfg,
        nonlinearity=dataclasses.replace(cfg.nonlinearity, p=p, q=q),
        weight=dataclasses.replace(cfg.weight, rho=rho, eps=eps),
        init=dataclasses.replace(cfg.init, u0_amplitude=amp),
    )


def _sweep_job(job) -> dict:
    cfg, p, q, rho, amp = job
    combo = _sweep_combo_config(cfg, p, q, rho, amp)
    grid = combo.build_grid()
    u0, u1 = combo.initial_fields(grid)
    result = run(
        grid,
        combo.time_scheme(),
        combo.nonlinearity_params(),
        combo.weight_params(),
        u0,
        u1,
        t_end=combo.time.t_end,
        stride=combo.time.stride,
    )
    w_vals = [row.W for row in result.rows]
    max_w = max(w_vals) if w_vals else 0.0
    try:
        t = result.series["t"]
        alpha, _ = fit_decay_exponent(
            t,
            np.asarray([row.E_higher for row in result.rows]),
            window=(0.1 * combo.time.t_end, combo.time.t_end),
        )
    except ValueError:
        alpha = float("nan")
    return {
        "p": p,
        "q": q,
        "rho": rho,
        "u0_amplitude": amp,
        "status": result.status,
        "max_W": max_w,
        "alpha": alpha,
        "blowup_t": result.t_final if result.status == "blew_up" else -1.0,
    }


def command_sweep(cfg: SimConfig, jobs: int) -> int:
    p_values = cfg.sweep.p or (cfg.nonlinearity.p,)
    q_values = cfg.sweep.q or (cfg.nonlinearity.q,)
    rho_values = cfg.sweep.rho or (cfg.weight.rho,)
    amp_values = cfg.sweep.u0_amplitude or (cfg.init.u0_amplitude,)
    combos = list(
        itertools.product(
            sorted(set(p_values)),
            sorted(set(q_values)),
            sorted(set(rho_values)),
            sorted(set(amp_values)),
        )
    )
    job_args = [(cfg, p, q, rho, amp) for (p, q, rho, amp) in combos]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summary = list(pool.map(_sweep_job, job_args))
    else:
        summary = [_sweep_job(job) for job in job_args]

    lines = ["p,q,rho,u0_amplitude,status,max_W,alpha,blowup_t"]
    for row in summary:
        alpha_text = _fmt(row["alpha"]) if math.isfinite(row["alpha"]) else "nan"
        lines.append(
            f"{_fmt(row['p'])},{_fmt(row['q'])},{_fmt(row['rho'])},"
            f"{_fmt(row['u0_amplitude'])},{row['status']},{_fmt(row['max_W'])},"
            f"{alpha_text},{_fmt(row['blowup_t'])}"
        )
        print(
            f"p={row['p']:g} q={row['q']:g} rho={row['rho']:g} amp={row['u0_amplitude']:g}"
            f" -> {row['status']} (max W {row['max_W']:.3e})"
        )
    _write_lines(cfg.output.path, lines)
    if cfg.output.figures:
        figures.sweep_figure(summary, figures.figure_path(cfg.output.path))
    return 0


def _resolve_jobs(arg_jobs) -> int:
    if arg_jobs is not None:
        return max(1, arg_jobs)
    env = os.environ.get("SDWAVE_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"SDWAVE_JOBS: expected an integer, got {env!r}") from None
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sdwave",
        description=(
            "Numerical laboratory for a strongly damped wave equation on an "
            "annulus: simulation, manufactured-solution verification, weight "
            "and interpolation inequality checks, decay fits and sweeps."
        ),
    )
    parser.add_argument("--config", required=True, help="path to the INI config file")
    parser.add_argument("--mode", choices=MODES, help="override mode.mode from the config")
    parser.add_argument("--out", help="override output.path from the config")
    parser.add_argument(
        "--jobs", type=int, help="sweep parallelism (fallback: SDWAVE_JOBS, default 1)"
    )
    args = parser.parse_args(argv)

    try:
        cfg = parse_config_file(args.config)
        if args.mode:
            cfg = dataclasses.replace(cfg, mode=args.mode)
        if args.out:
            cfg = dataclasses.replace(cfg, output=dataclasses.replace(cfg.output, path=args.out))
        jobs = _resolve_jobs(args.jobs)

        print(emit_config(cfg), end="")  # echo the fully resolved config

        if cfg.mode == "simulate":
            return command_simulate(cfg)
        if cfg.mode == "mms":
            return command_mms(cfg)
        if cfg.mode == "check-weight":
            return command_check_weight(cfg)
        if cfg.mode == "check-gn":
            return command_check_gn(cfg)
        if cfg.mode == "fit-decay":
            return command_fit_decay(cfg)
        if cfg.mode == "sweep":
            return command_sweep(cfg, jobs)
        raise ConfigError(f"mode.mode: unhandled mode {cfg.mode!r}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
