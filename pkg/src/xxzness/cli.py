"""Command-line driver for parameter sweeps, fits, and data export.

Subcommands (defaults in each command's --help) cover the steady-state
phase diagram, drive line cuts, the anisotropy resonance scan, current and
entanglement scaling, finite-size critical fits, two-time correlator
symmetry checks, brute-force oracle comparisons, coefficient dumps, and
classical walk simulations.  Every run writes `<out>.csv` (or .json) plus
`<out>.meta.json`; with --format svg a matplotlib figure is rendered next
to the delimited output.  Exit codes: 0 success, 1 invalid input,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import mps, observables as obs, oracle, report, walk
from .errors import DegenerateDriveError, ValidationError, XxzError
from .model import ModelParams, derive, nearest_special_points
from .report import GridAxis, SweepResult, SweepSpec, build_meta, parse_grid_spec


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError("n-list", f"bad integer list {text!r}: {exc}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError("list", f"bad float list {text!r}: {exc}") from None


def _axis(spec: SweepSpec, name: str, default: GridAxis) -> np.ndarray:
    for ax in spec.grid:
        if ax.name == name:
            return ax.values()
    spec.grid.append(default)
    return default.values()


def _params(spec: SweepSpec, **over) -> ModelParams:
    f = dict(spec.fixed)
    f.update(over)
    return ModelParams(J=f.get("J", 1.0), delta=f.get("delta", 0.2),
                       omega=f.get("omega", 1.0), gamma=f.get("gamma", 1.0),
                       n=int(f.get("n", 200)), n_th=f.get("nth", 0.0))


# ---------------------------------------------------------------------------
# parallel workers (top level so they pickle)

def _sweep_column(args):
    """One anisotropy value of a (delta, omega) sweep: list of (m, j, err)."""
    J, delta, gamma, n, omegas = args
    out = []
    try:
        params = ModelParams(J=J, delta=delta, omega=1.0, gamma=gamma, n=n)
        coeffs = mps.solve_coefficients(params)
    except XxzError as exc:
        return [(math.nan, math.nan, str(exc))] * len(omegas)
    positive = [om for om in omegas if om > 0]
    try:
        res = obs.observables_vs_drive(coeffs, positive)
    except XxzError as exc:
        return [(math.nan, math.nan, str(exc))] * len(omegas)
    it = iter(res)
    for om in omegas:
        if om > 0:
            r = next(it)
            out.append((r.magnetization, r.current, ""))
        else:
            p = obs.polarized_observables(n)
            out.append((p.magnetization, p.current, ""))
    return out


def _run_columns(spec: SweepSpec, tasks):
    if spec.threads > 1:
        with ProcessPoolExecutor(max_workers=spec.threads) as pool:
            return list(pool.map(_sweep_column, tasks, chunksize=1))
    return [_sweep_column(t) for t in tasks]


# ---------------------------------------------------------------------------
# commands

def cmd_phase_diagram(spec: SweepSpec) -> SweepResult:
    """Magnetization over the (Delta/J, Omega/J) plane at fixed N and gamma."""
    deltas = _axis(spec, "delta", GridAxis("delta", 0.0, 1.4, 57))
    omegas = _axis(spec, "omega", GridAxis("omega", 0.0, 3.0, 61))
    J = spec.fixed.get("J", 1.0)
    gamma = spec.fixed.get("gamma", 1.0)
    n = int(spec.fixed.get("n", 200))
    tasks = [(J, float(d), gamma, n, list(omegas)) for d in deltas]
    columns = _run_columns(spec, tasks)
    rows = []
    for d, col in zip(deltas, columns):
        for om, (m, j, err) in zip(omegas, col):
            rows.append((float(d), float(om), m, j, err))
    meta = build_meta(spec, {"params": {"J": J, "gamma": gamma, "n": n}})
    return SweepResult(columns=["delta", "omega", "magnetization", "current", "error"],
                       rows=rows, meta=meta)


def cmd_linecut(spec: SweepSpec) -> SweepResult:
    """Magnetization and current vs drive at fixed anisotropy."""
    omegas = _axis(spec, "omega", GridAxis("omega", 0.0, 2.0, 201))
    params = _params(spec, n=int(spec.fixed.get("n", 500)))
    col = _sweep_column((params.J, params.delta, params.gamma, params.n, list(omegas)))
    rows = [(float(om), m, j, err) for om, (m, j, err) in zip(omegas, col)]
    d = derive(params)
    meta = build_meta(spec, {"params": {"J": params.J, "delta": params.delta,
                                        "gamma": params.gamma, "n": params.n},
                             "omega_c": d.omega_c, "regime": d.regime})
    return SweepResult(columns=["omega", "magnetization", "current", "error"],
                       rows=rows, meta=meta)


def cmd_fractal_scan(spec: SweepSpec) -> SweepResult:
    """Magnetization vs Delta/J with resonance annotations (small N resolves them)."""
    deltas = _axis(spec, "delta", GridAxis("delta", -0.05, 0.92, 389))
    J = spec.fixed.get("J", 1.0)
    gamma = spec.fixed.get("gamma", 0.05)
    omega = spec.fixed.get("omega", 0.2)
    n = int(spec.fixed.get("n", 15))
    max_m = int(spec.fixed.get("max_m", 7))
    ms = []
    errs = []
    for d in deltas:
        try:
            cf = mps.solve_coefficients(ModelParams(J=J, delta=float(d), omega=omega,
                                                    gamma=gamma, n=n))
            ms.append(obs.magnetization(cf).magnetization)
            errs.append("")
        except XxzError as exc:
            ms.append(math.nan)
            errs.append(str(exc))
    ms = np.asarray(ms)
    is_peak = np.r_[False, (ms[1:-1] > ms[:-2]) & (ms[1:-1] >= ms[2:]), False]
    rows = []
    for i, d in enumerate(deltas):
        x = float(d) / J
        if abs(x) < 1 and max_m >= 2:
            sp = nearest_special_points(x, max_m)[0]
            near = (sp.l, sp.m, sp.delta_over_j)
        else:
            near = (0, 0, math.nan)
        rows.append((float(d), float(ms[i]), bool(is_peak[i]), near[0], near[1], near[2], errs[i]))
    meta = build_meta(spec, {"params": {"J": J, "gamma": gamma, "omega": omega,
                                        "n": n, "max_m": max_m}})
    return SweepResult(columns=["delta", "magnetization", "is_peak",
                                "nearest_l", "nearest_m", "nearest_delta", "error"],
                       rows=rows, meta=meta)


def _fit_current_scaling(sizes, log_currents):
    sizes = np.asarray(sizes, dtype=float)
    logj = np.asarray(log_currents, dtype=float)
    loglog = np.polyfit(np.log(sizes), logj, 1)
    semilog = np.polyfit(sizes, logj, 1)
    pred = np.polyval(semilog, sizes)
    ss_res = float(np.sum((logj - pred) ** 2))
    ss_tot = float(np.sum((logj - logj.mean()) ** 2))
    r2_exp = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"loglog_slope": float(loglog[0]),
            "semilog_slope": float(semilog[0]),
            "exponential_r2": r2_exp}


def cmd_current_scaling(spec: SweepSpec) -> SweepResult:
    """Current vs system size with ballistic / subdiffusive / insulating fits."""
    sizes = spec.fixed.get("n_list") or sorted(
        set(int(round(x)) for x in np.geomspace(50, 500, 12)))
    if len(sizes) < 5:
        raise ValidationError("n-list", f"need at least 5 sizes, got {len(sizes)}")
    params = _params(spec, n=max(sizes), omega=spec.fixed.get("omega", 0.5))
    coeffs = mps.solve_coefficients(params)
    res = obs.observables_vs_size(coeffs, sizes)
    rows = [(int(n), r.current, r.log_current, r.magnetization)
            for n, r in zip(sorted(set(sizes)), res)]
    fits = _fit_current_scaling([r[0] for r in rows], [r[2] for r in rows])
    regime = derive(params).regime
    meta = build_meta(spec, {"params": {"J": params.J, "delta": params.delta,
                                        "omega": params.omega, "gamma": params.gamma},
                             "regime": regime, "fits": fits})
    return SweepResult(columns=["n", "current", "log_current", "magnetization"],
                       rows=rows, meta=meta)


def _fss_data(spec: SweepSpec):
    """Magnetization and susceptibility curves per size near the critical drive."""
    params0 = _params(spec)
    d = derive(params0)
    if d.omega_c is None:
        raise ValidationError("delta", "finite-size scaling needs |Delta| < J")
    oc = d.omega_c
    sizes = spec.fixed.get("n_list") or [200, 400, 800]
    if len(sizes) < 3:
        raise ValidationError("n-list", f"need at least 3 sizes, got {len(sizes)}")
    omegas = _axis(spec, "omega", GridAxis("omega", 0.96 * oc, 1.04 * oc, 41))
    h = 1e-3 * oc
    m_rows, chi_rows = [], []
    for n in sizes:
        cf = mps.solve_coefficients(ModelParams(J=params0.J, delta=params0.delta,
                                                omega=1.0, gamma=params0.gamma, n=int(n)))
        m = np.array([r.magnetization for r in obs.observables_vs_drive(cf, omegas)])
        mp = np.array([r.magnetization for r in obs.observables_vs_drive(cf, omegas + h)])
        mm = np.array([r.magnetization for r in obs.observables_vs_drive(cf, omegas - h)])
        m_rows.append(m)
        chi_rows.append((mp - mm) / (2 * h))
    return params0, oc, sizes, omegas, m_rows, chi_rows


def _default_power_window(spec: SweepSpec, params0: ModelParams, oc: float, n_big: int):
    """Condensation-safe window: delta_min where Q >= 10, capped into [0.03, 0.2]."""
    probe = np.geomspace(3e-3, 0.2, 12)
    cf = mps.solve_coefficients(ModelParams(J=params0.J, delta=params0.delta, omega=1.0,
                                            gamma=params0.gamma, n=n_big))
    chain = obs.build_transfer_chain(cf)
    f, flog = obs.transfer_propagate(chain, chain.n)
    from . import scaled
    logf = scaled.log_abs(f, flog)
    lo = None
    for dd in probe:
        alpha, alpha_log = mps.solve_alpha(cf, float(oc * (1 - dd)))
        logs = logf + 2.0 * scaled.log_abs(alpha, alpha_log)
        q = math.inf if logs[0] == -math.inf else \
            math.exp(min(scaled.logsumexp(logs[1:]) - logs[0], 700))
        if q >= 10:
            lo = dd
            break
    if lo is None:
        raise ValidationError("window", "no condensation-safe delta found; give --window")
    return (max(lo, 0.03), 0.2)


def cmd_fss(spec: SweepSpec) -> SweepResult:
    """Finite-size scaling: crossing estimate, collapse exponents, beta."""
    params0, oc, sizes, omegas, m_rows, chi_rows = _fss_data(spec)
    window = spec.fixed.get("window")
    if params0.gamma / params0.J <= 0.1 and window is None:
        window = _default_power_window(spec, params0, oc, int(max(sizes)))
    fit = walk.fit_critical(sizes, omegas, m_rows, chi_rows, gamma=params0.gamma / params0.J,
                            omega_c_ref=oc, power_window=window)
    rows = []
    for n, m, chi in zip(sizes, m_rows, chi_rows):
        for om, mv, cv in zip(omegas, m, chi):
            rows.append((int(n), float(om), float(mv), float(cv)))
    meta = build_meta(spec, {
        "params": {"J": params0.J, "delta": params0.delta, "gamma": params0.gamma},
        "omega_c_analytic": oc,
        "fit": {"a": fit.a, "b": fit.b, "beta": fit.beta,
                "a_err": fit.a_err, "b_err": fit.b_err,
                "omega_c_est": fit.omega_c_est, "residual": fit.residual,
                "fit_window": list(fit.fit_window)},
    })
    return SweepResult(columns=["n", "omega", "magnetization", "susceptibility"],
                       rows=rows, meta=meta)


def cmd_entropy_scan(spec: SweepSpec) -> SweepResult:
    """Half-chain entanglement entropy of the doubled state vs N."""
    sizes = spec.fixed.get("n_list") or [20, 40, 80, 160, 320]
    delta_list = spec.fixed.get("delta_list") or [0.2, 0.5]
    J = spec.fixed.get("J", 1.0)
    omega = spec.fixed.get("omega", 2.0)
    gamma = spec.fixed.get("gamma", 1.0)
    rows = []
    fits = {}
    for delta in delta_list:
        svals = []
        for n in sizes:
            cf = mps.solve_coefficients(ModelParams(J=J, delta=delta, omega=omega,
                                                    gamma=gamma, n=int(n)))
            s = obs.entanglement_entropy(cf, int(n) // 2)
            svals.append(s)
            rows.append((float(delta), int(n), s))
        svals = np.asarray(svals)
        coef = np.polyfit(np.log(sizes), svals, 1)
        rss_log = float(np.sum((svals - np.polyval(coef, np.log(sizes))) ** 2))
        rss_const = float(np.sum((svals - svals.mean()) ** 2))
        # nested models: prefer the log law only if it wins by a wide margin
        fits[str(delta)] = {"slope": float(coef[0]), "intercept": float(coef[1]),
                            "rss_log": rss_log, "rss_const": rss_const,
                            "model": "log" if rss_log < 0.01 * rss_const else "constant"}
    meta = build_meta(spec, {"params": {"J": J, "omega": omega, "gamma": gamma},
                             "fits": fits})
    return SweepResult(columns=["delta", "n", "entropy"], rows=rows, meta=meta)


def cmd_onsager(spec: SweepSpec) -> SweepResult:
    """Two-time correlators of the certified pair and the z-z counterexample."""
    params = _params(spec, n=int(spec.fixed.get("n", 3)),
                     omega=spec.fixed.get("omega", 0.4))
    if params.n > oracle.MAX_SINGLE_N - 1:
        raise ValidationError("n", f"onsager check needs n <= {oracle.MAX_SINGLE_N - 1}")
    t_axis = _axis(spec, "t", GridAxis("t", 0.05, 10.0, 200))
    variant = oracle.VARIANT_THERMAL if params.n_th > 0 else oracle.VARIANT_COHERENT
    lind = oracle.build_liouvillian(params, variant)
    ss = oracle.steady_state(lind)
    X, Y = oracle.onsager_operator_pair(params)
    cxy = oracle.two_time_correlator(lind, ss.rho, X, Y, t_axis)
    cyx = oracle.two_time_correlator(lind, ss.rho, Y, X, t_axis)
    z1 = np.asarray(oracle.site_operator(oracle.SZ, 1, params.n).todense())
    z2 = np.asarray(oracle.site_operator(oracle.SZ, 2, params.n).todense())
    az = oracle.two_time_correlator(lind, ss.rho, z1, z2, t_axis)
    bz = oracle.two_time_correlator(lind, ss.rho, z2, z1, t_axis)
    rows = []
    for i, t in enumerate(t_axis):
        rows.append((float(t), cxy[i].real, cxy[i].imag, cyx[i].real, cyx[i].imag,
                     abs(cxy[i] - cyx[i]), abs(az[i] - bz[i])))
    meta = build_meta(spec, {
        "params": {"J": params.J, "delta": params.delta, "omega": params.omega,
                   "gamma": params.gamma, "n": params.n, "nth": params.n_th},
        "max_pair_asymmetry": float(np.max(np.abs(cxy - cyx))),
        "max_zz_asymmetry": float(np.max(np.abs(az - bz))),
    })
    return SweepResult(columns=["t", "re_xy", "im_xy", "re_yx", "im_yx",
                                "pair_diff", "zz_diff"], rows=rows, meta=meta)


def cmd_oracle_check(spec: SweepSpec) -> SweepResult:
    """Trace distance between the exact construction and the dense kernel state."""
    variant = spec.variant
    if variant == oracle.VARIANT_INCOHERENT:
        sizes = spec.fixed.get("n_list") or [2, 3, 4]
    else:
        sizes = spec.fixed.get("n_list") or [2, 3, 4, 5]
    delta_list = spec.fixed.get("delta_list") or [0.2, 0.5, 1.2]
    omega_list = spec.fixed.get("omega_list") or [0.2, 1.0, 3.0]
    gamma = spec.fixed.get("gamma", 1.0)
    J = spec.fixed.get("J", 1.0)
    rows = []
    worst = 0.0
    for n in sizes:
        for delta in delta_list:
            omegas = omega_list if variant == oracle.VARIANT_COHERENT else [0.0]
            for omega in omegas:
                params = ModelParams(J=J, delta=delta, omega=omega, gamma=gamma, n=int(n))
                lind = oracle.build_liouvillian(params, variant)
                ss = oracle.steady_state(lind)
                if variant == oracle.VARIANT_COHERENT:
                    cf = mps.solve_coefficients(params)
                else:
                    cf = mps.solve_incoherent(params)
                rho = mps.build_cholesky(cf).steady_state()
                td = oracle.trace_distance(ss.rho, rho)
                worst = max(worst, td)
                rows.append((int(n), float(delta), float(omega), td, ss.gap))
    meta = build_meta(spec, {"variant": variant, "max_trace_distance": worst,
                             "params": {"J": J, "gamma": gamma}})
    return SweepResult(columns=["n", "delta", "omega", "trace_distance", "gap"],
                       rows=rows, meta=meta)


def cmd_coeff_dump(spec: SweepSpec) -> SweepResult:
    """Dump the coefficient table for one parameter point."""
    params = _params(spec, n=int(spec.fixed.get("n", 50)))
    gauge = spec.fixed.get("gauge", "c_unit")
    if gauge == "analytic":
        coeffs = mps.analytic_coefficients(params)
    elif gauge == "incoherent":
        coeffs = mps.solve_incoherent(params)
    else:
        coeffs = mps.solve_coefficients(params, gauge=gauge)
    columns, rows = mps.coefficient_table(coeffs)
    meta = build_meta(spec, {"params": {"J": params.J, "delta": params.delta,
                                        "omega": params.omega, "gamma": params.gamma,
                                        "n": params.n},
                             "gauge": coeffs.gauge, "drive": coeffs.drive})
    return SweepResult(columns=columns, rows=[tuple(r) for r in rows], meta=meta)


def cmd_walk_sim(spec: SweepSpec) -> SweepResult:
    """Classical walk: exact propagation, Monte Carlo, MSD, or g profile."""
    kind = spec.fixed.get("walk", "quasiperiodic")
    steps = int(spec.fixed.get("steps", 1000))
    length = int(spec.fixed.get("length", 0)) or min(steps + 2, 4096)
    entry = spec.fixed.get("entry", 0.5)
    n_traj = int(spec.fixed.get("n_traj", 0))
    observable = spec.fixed.get("observable", "distribution")
    delta = spec.fixed.get("delta", 0.2)
    if kind == "quasiperiodic":
        env = walk.quasiperiodic_environment(math.acos(delta), length, entry=entry)
    elif kind == "random":
        env = walk.random_environment(length, seed=spec.seed)
    elif kind == "uniform":
        env = walk.uniform_environment(length)
    else:
        raise ValidationError("walk", f"unknown environment {kind!r}")
    meta_extra = {"walk": kind, "steps": steps, "length": length,
                  "entry": entry, "n_traj": n_traj, "observable": observable}
    if observable == "distribution":
        p = walk.classical_propagate(env, steps)
        if n_traj > 0:
            mc = walk.monte_carlo_walk(env, steps, n_traj, seed=spec.seed)
            rows = [(int(k), float(p[k]), float(mc.p_hat[k]), float(mc.stderr[k]))
                    for k in range(env.length)]
            cols = ["k", "p_exact", "p_mc", "stderr"]
        else:
            rows = [(int(k), float(p[k])) for k in range(env.length)]
            cols = ["k", "p_exact"]
    elif observable == "msd":
        checkpoints = np.unique(np.round(np.geomspace(10, steps, 20)).astype(int))
        k2 = walk.walk_msd(env, checkpoints)
        rows = [(int(t), float(v)) for t, v in zip(checkpoints, k2)]
        cols = ["t", "msd"]
        if len(checkpoints) >= 3:
            meta_extra["msd_loglog_slope"] = float(
                np.polyfit(np.log(checkpoints), np.log(k2), 1)[0])
    elif observable == "gprofile":
        xi, g = walk.walk_g_profile(env, steps)
        rows = [(float(x), float(v)) for x, v in zip(xi, g) if np.isfinite(v)]
        cols = ["xi", "g"]
    else:
        raise ValidationError("observable", f"unknown observable {observable!r}")
    meta = build_meta(spec, meta_extra)
    return SweepResult(columns=cols, rows=rows, meta=meta)


COMMANDS = {
    "phase-diagram": cmd_phase_diagram,
    "linecut": cmd_linecut,
    "fractal-scan": cmd_fractal_scan,
    "current-scaling": cmd_current_scaling,
    "fss": cmd_fss,
    "entropy-scan": cmd_entropy_scan,
    "onsager": cmd_onsager,
    "oracle-check": cmd_oracle_check,
    "coeff-dump": cmd_coeff_dump,
    "walk-sim": cmd_walk_sim,
}


# ---------------------------------------------------------------------------
# figures

def _render_figure(command: str, result: SweepResult, path: str):
    cols = {name: np.array([row[i] for row in result.rows], dtype=object)
            for i, name in enumerate(result.columns)}

    def fcol(name):
        return np.array([float(x) for x in cols[name]])

    if command == "phase-diagram":
        deltas = np.unique(fcol("delta"))
        omegas = np.unique(fcol("omega"))
        z = fcol("magnetization").reshape(len(deltas), len(omegas)).T
        mask = np.abs(deltas) < 1
        boundary = (deltas[mask], np.sqrt(1 - deltas[mask] ** 2))
        report.save_heatmap_figure(path, deltas, omegas, z, "Delta/J", "Omega/J",
                                   "magnetization", boundary=boundary)
    elif command in ("linecut", "fractal-scan"):
        x = fcol("omega" if command == "linecut" else "delta")
        report.save_line_figure(path, x, {"m": fcol("magnetization")},
                                "Omega/J" if command == "linecut" else "Delta/J",
                                "magnetization")
    elif command == "current-scaling":
        report.save_line_figure(path, fcol("n"), {"j": fcol("current")},
                                "N", "current", logx=True, logy=True)
    elif command == "fss":
        fit = result.meta.get("fit", {})
        a, b = fit.get("a", 0.0), fit.get("b", 1.0)
        oc = fit.get("omega_c_est", 1.0)
        series = {}
        for n in sorted(set(int(x) for x in fcol("n"))):
            pick = fcol("n") == n
            d = (oc - fcol("omega")[pick]) / oc
            series[f"N={n}"] = (d * n**b, fcol("magnetization")[pick] * n**a)
        plt = report._mpl()
        fig, ax = plt.subplots(figsize=(6, 4))
        for label, (x, y) in series.items():
            ax.plot(x, y, "o", ms=3, label=label)
        ax.set_xlabel("delta N^b")
        ax.set_ylabel("m N^a")
        ax.legend(frameon=False, fontsize=8)
        ax.grid(True, alpha=0.3)
        report._savefig(fig, path)
    elif command == "entropy-scan":
        series = {}
        for d in sorted(set(fcol("delta"))):
            pick = fcol("delta") == d
            series[f"Delta={d}"] = fcol("entropy")[pick]
            ns = fcol("n")[pick]
        report.save_line_figure(path, ns, series, "N", "S(N/2)", logx=True)
    elif command == "onsager":
        report.save_line_figure(path, fcol("t"),
                                {"pair": fcol("pair_diff"), "zz": fcol("zz_diff")},
                                "t J", "|<X(t)Y>-<Y(t)X>|", logy=True)
    elif command == "oracle-check":
        report.save_line_figure(path, fcol("n"), {"td": fcol("trace_distance")},
                                "N", "trace distance", logy=True)
    elif command == "walk-sim":
        if "k" in cols:
            series = {"exact": fcol("p_exact")}
            if "p_mc" in cols:
                series["mc"] = fcol("p_mc")
            report.save_line_figure(path, fcol("k"), series, "k", "p(k)")
        elif "t" in cols:
            report.save_line_figure(path, fcol("t"), {"msd": fcol("msd")}, "t",
                                    "<k^2>", logx=True, logy=True)
        else:
            report.save_line_figure(path, fcol("xi"), {"g": fcol("g")}, "xi", "g(xi)")
    # coeff-dump: tabular only


# ---------------------------------------------------------------------------
# argument handling

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xxzness",
        description="Exact steady states of boundary-driven dissipative XXZ chains.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").splitlines()[0],
                           description=fn.__doc__)
        p.add_argument("--J", type=float, default=1.0, help="coupling J (default 1)")
        p.add_argument("--delta", type=float, default=0.2, help="anisotropy Delta")
        p.add_argument("--omega", type=float, default=None, help="drive amplitude Omega")
        p.add_argument("--gamma", type=float, default=None, help="loss rate gamma")
        p.add_argument("--n", type=int, default=None, help="chain length N")
        p.add_argument("--n-list", type=str, default=None,
                       help="comma-separated chain lengths")
        p.add_argument("--nth", type=float, default=0.0, help="thermal occupation")
        p.add_argument("--variant", type=str, default="coherent_drive",
                       choices=list(oracle.VARIANTS), help="model variant")
        p.add_argument("--grid", type=str, default=None,
                       help="axes, e.g. 'delta=0:1.4:57,omega=0:3:61[:log]'")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (Philox)")
        p.add_argument("--threads", type=int, default=0,
                       help="worker processes (0 = machine parallelism)")
        p.add_argument("--out", type=str, default=f"{name.replace('-', '_')}",
                       help="output base path")
        p.add_argument("--format", type=str, default="csv", choices=["csv", "json", "svg"],
                       help="csv/json data; svg also renders a figure")
        p.add_argument("--config", type=str, default=None,
                       help="key=value file; command-line flags override it")
        if name == "fractal-scan":
            p.add_argument("--max-m", type=int, default=7, help="annotation depth")
        if name == "fss":
            p.add_argument("--window", type=str, default=None,
                           help="power-law fit window 'lo:hi' in delta (weak gamma)")
        if name in ("entropy-scan", "oracle-check"):
            p.add_argument("--delta-list", type=str, default=None)
        if name == "oracle-check":
            p.add_argument("--omega-list", type=str, default=None)
        if name == "coeff-dump":
            p.add_argument("--gauge", type=str, default="c_unit",
                           choices=["c_unit", "weak_dissipation", "analytic", "incoherent"])
        if name == "walk-sim":
            p.add_argument("--walk", type=str, default="quasiperiodic",
                           choices=["quasiperiodic", "random", "uniform"])
            p.add_argument("--steps", type=int, default=1000)
            p.add_argument("--length", type=int, default=0, help="lattice length (0 = auto)")
            p.add_argument("--entry", type=float, default=0.5,
                           help="hop weight out of site 0")
            p.add_argument("--n-traj", type=int, default=0,
                           help="Monte Carlo trajectories (0 = exact only)")
            p.add_argument("--observable", type=str, default="distribution",
                           choices=["distribution", "msd", "gprofile"])
    return parser


def _load_config(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError("config", f"malformed line {line!r}")
            key, value = line.split("=", 1)
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(args: argparse.Namespace, parser_defaults: dict):
    if not args.config:
        return args
    conf = _load_config(args.config)
    for key, raw in conf.items():
        if not hasattr(args, key):
            raise ValidationError("config", f"unknown option {key!r}")
        current = getattr(args, key)
        default = parser_defaults.get(key)
        if current != default:
            continue  # explicit flag wins
        for cast in (int, float):
            try:
                setattr(args, key, cast(raw))
                break
            except ValueError:
                continue
        else:
            setattr(args, key, raw)
    return args


_OMEGA_DEFAULTS = {"fractal-scan": 0.2, "entropy-scan": 2.0, "onsager": 0.4,
                   "current-scaling": 0.5}
_GAMMA_DEFAULTS = {"fractal-scan": 0.05}


def _spec_from_args(args: argparse.Namespace) -> SweepSpec:
    fixed = {"J": args.J, "delta": args.delta, "nth": args.nth}
    fixed["omega"] = args.omega if args.omega is not None else \
        _OMEGA_DEFAULTS.get(args.command, 1.0)
    fixed["gamma"] = args.gamma if args.gamma is not None else \
        _GAMMA_DEFAULTS.get(args.command, 1.0)
    if args.n is not None:
        fixed["n"] = args.n
    if args.n_list:
        fixed["n_list"] = _int_list(args.n_list)
    for key in ("max_m", "gauge", "walk", "steps", "length", "entry", "n_traj",
                "observable"):
        if hasattr(args, key):
            fixed[key] = getattr(args, key)
    if getattr(args, "window", None):
        lo, hi = args.window.split(":")
        fixed["window"] = (float(lo), float(hi))
    if getattr(args, "delta_list", None):
        fixed["delta_list"] = _float_list(args.delta_list)
    if getattr(args, "omega_list", None):
        fixed["omega_list"] = _float_list(args.omega_list)
    grid = parse_grid_spec(args.grid) if args.grid else []
    threads = args.threads if args.threads > 0 else (os_cpu_count())
    return SweepSpec(command=args.command, variant=args.variant, grid=grid,
                     fixed=fixed, observables=[], output=args.out, fmt=args.format,
                     seed=args.seed, threads=threads)


def os_cpu_count() -> int:
    import os
    return os.cpu_count() or 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        defaults = {a.dest: a.default for g in parser._subparsers._group_actions
                    for a in g.choices[args.command]._actions}
        args = _apply_config(args, defaults)
        spec = _spec_from_args(args)
        result = COMMANDS[spec.command](spec)
        paths = result.write(spec.output, "json" if spec.fmt == "json" else "csv")
        if spec.fmt == "svg":
            fig_path = spec.output + ".svg"
            _render_figure(spec.command, result, fig_path)
            paths.append(fig_path)
        print(f"{spec.command}: {len(result.rows)} rows -> {', '.join(paths)}")
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (XxzError, DegenerateDriveError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
