"""Sweep orchestration and figure-reproduction row generation.

Rows are plain dicts so they can cross process boundaries; every row carries
a `status` field that is empty for clean rows and holds the failure or
invariant-violation text otherwise (failed points never abort a sweep).
Row order is sorted by axis values regardless of worker completion order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from .config import Fig2Config, Fig34Config, RunConfig, SweepConfig
from .dynamics import IntegratorOptions, ReservoirSpec
from .errors import CutoffTooSmallError, IntegrationError, UsageError
from .model import ModelParams, ProtocolParams, doublet_spectrum
from .observables import ChargingReport, eta_closed_form
from .operators import ThermalSpec
from .operators import thermal_state_fock
from .protocols import (
    ProtocolRun,
    battery_probs,
    classical_charge,
    classical_delta_u,
    open_system_run,
    sequential_charge,
    single_shot_quantum,
)

__all__ = [
    "execute_run",
    "report_row",
    "RUN_COLUMNS",
    "FIG2_COLUMNS",
    "FIG3_COLUMNS",
    "FIG4_COLUMNS",
    "sweep_rows",
    "fig2_rows",
    "fig3_rows",
    "fig4_rows",
]

HEAT_LABELS = ("gm", "mg", "em", "me", "minus", "plus")

RUN_COLUMNS = [
    "kind",
    "engine",
    "tau_used",
    "s_value",
    "delta_u_battery",
    "delta_u_fc",
    "ergotropy",
    "work_in",
    "delta_u_c_reference",
    "k_q",
    "eta",
    "eta_corrected",
    *[f"q_{lab}" for lab in HEAT_LABELS],
    "status",
]
FIG2_COLUMNS = ["xi", "tbar", "k_q", "eta", "tau_star", "s_star", "status"]
FIG3_COLUMNS = ["tbar", "gamma0", "k_q", "tau_star", "engine", "status"]
FIG4_COLUMNS = ["tbar", "gamma0", "eta", "eta_corrected", "tau_star", "engine", "status"]

_ENGINE_ORDER = {"unitary_heff": 0, "lindblad_heff": 1, "lindblad_full": 2}


def execute_run(cfg: RunConfig) -> ChargingReport:
    """Run one configured protocol and return its report."""
    run = cfg.protocol_run()
    if cfg.kind == "classical":
        return classical_charge(run)
    if cfg.kind == "quantum_single_shot":
        return single_shot_quantum(run)
    if cfg.kind == "quantum_sequential":
        return sequential_charge(run)
    return open_system_run(run, cfg.reservoir())


def report_row(report: ChargingReport | None, status=""):
    row = {c: None for c in RUN_COLUMNS}
    if report is not None:
        row.update(
            kind=report.kind,
            engine=report.engine,
            tau_used=report.tau_used,
            s_value=report.s_value,
            delta_u_battery=report.delta_u_battery,
            delta_u_fc=report.delta_u_fc,
            ergotropy=report.ergotropy,
            work_in=report.work_in,
            delta_u_c_reference=report.delta_u_c_reference,
            k_q=report.k_q,
            eta=report.eta,
            eta_corrected=report.eta_corrected,
        )
        for lab in HEAT_LABELS:
            row[f"q_{lab}"] = report.heat.get(lab)
        problems = report.validate()
        if problems and not status:
            status = "invariant: " + "; ".join(problems)
    row["status"] = status
    return row


def _guarded(fn, *args, **kw):
    """Run fn, mapping numerical/config failures into a status string."""
    try:
        return fn(*args, **kw), ""
    except IntegrationError as exc:
        return None, f"integration_error: {exc}"
    except CutoffTooSmallError as exc:
        return None, f"cutoff_too_small: {exc}"
    except UsageError as exc:
        return None, f"usage_error: {exc}"


def _map_jobs(worker, payloads, jobs):
    jobs = jobs if jobs and jobs > 0 else (os.cpu_count() or 1)
    jobs = min(jobs, len(payloads)) or 1
    if jobs == 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, payloads))


# ---------------------------------------------------------------------------
# generic one-axis sweep

def _sweep_worker(payload):
    try:
        cfg = RunConfig(**payload["config"])
    except PydanticValidationError as exc:
        first = exc.errors()[0]
        report, status = None, f"config_error: {first['loc']}: {first['msg']}"
    else:
        report, status = _guarded(execute_run, cfg)
    row = report_row(report, status)
    row[payload["axis"]] = payload["value"]
    return row


def sweep_rows(cfg: SweepConfig, jobs=None):
    values = cfg.axis_values()
    payloads = [
        {"axis": cfg.axis, "value": float(v), "config": cfg.point_config(v).model_dump()}
        for v in values
    ]
    rows = _map_jobs(_sweep_worker, payloads, jobs)
    rows.sort(key=lambda r: r[cfg.axis])
    return [cfg.axis] + RUN_COLUMNS, rows


# ---------------------------------------------------------------------------
# figure 2: K_q and eta vs xi for two temperatures (tau optimized per point)

def _fig2_worker(payload):
    cfg = Fig2Config(**payload["fig"])
    xi, tbar = payload["xi"], payload["tbar"]
    delta = 2.0 * math.pi * cfg.delta_hz
    params = ModelParams.from_xi(
        xi,
        omega_m=2.0 * math.pi * cfg.omega_m_hz,
        delta=delta,
        omega_l_rabi=delta * cfg.omega_l_fraction,
        g_q=delta * cfg.g_q_fraction,
    )
    thermal = ThermalSpec("tbar", tbar, omega_m_ref=params.omega_m)
    run = ProtocolRun(
        "quantum_single_shot", params, ProtocolParams(1), thermal, grid=cfg.grid
    )
    report, status = _guarded(single_shot_quantum, run)
    row = {"xi": xi, "tbar": tbar, "status": status}
    if report is not None:
        row.update(
            k_q=report.k_q,
            eta=report.eta,
            tau_star=report.tau_used,
            s_star=report.s_value,
        )
        problems = report.validate()
        if problems and not status:
            row["status"] = "invariant: " + "; ".join(problems)
    return row


def fig2_rows(cfg: Fig2Config, jobs=None):
    payloads = [
        {"fig": cfg.model_dump(), "xi": float(xi), "tbar": float(tb)}
        for tb in cfg.tbars
        for xi in cfg.xi_grid()
    ]
    rows = _map_jobs(_fig2_worker, payloads, jobs)
    rows.sort(key=lambda r: (r["tbar"], r["xi"]))
    return FIG2_COLUMNS, rows


# ---------------------------------------------------------------------------
# figures 3/4: open-system K_q and eta vs temperature

def _fig34_shared_grid(params, grid_points):
    """Time grid shared by every engine at one parameter set: two periods of
    the slowest (resonant) doublet, so reference and dissipative series pick
    tau from identical candidates."""
    omega0 = doublet_spectrum(params, ProtocolParams(1), 0).omega_n
    t_max = 4.0 * math.pi / omega0
    return np.linspace(0.0, t_max, grid_points + 1), t_max


def _s_on_grid_truncated(params, proto, thermal, times, n_max, eps_trunc):
    """S(t) over a time grid with the same truncated, renormalized thermal
    weights the master-equation engines use, so the gamma0 -> 0 limit is an
    integrator check rather than a truncation comparison.  Doublet n couples
    |g,n> to |e,n+1>, so the truncated space supports n = 0 .. n_max-1."""
    p_g, p_e = battery_probs(params, thermal)
    pn = thermal_state_fock(params.omega_q, thermal, n_max, eps_trunc=eps_trunc).populations()
    total = np.zeros_like(times)
    for n in range(n_max):
        ds = doublet_spectrum(params, proto, n)
        w = p_g * pn[n] - p_e * pn[n + 1]
        total += ds.a_n * w * np.sin(ds.omega_n * times) ** 2
    return total


def _fig34_reference_row(cfg: Fig34Config, tbar):
    """Unitary effective-Hamiltonian series (the closed-system reference curve)."""
    params = cfg.model_params()
    thermal = ThermalSpec("tbar", tbar, omega_m_ref=params.omega_m)
    times, _ = _fig34_shared_grid(params, cfg.grid_points)
    svals = _s_on_grid_truncated(
        params, ProtocolParams(cfg.target_n), thermal, times, cfg.n_max, cfg.eps_trunc
    )
    idx = int(np.argmax(svals))
    s_star = float(svals[idx])
    du_c = classical_delta_u(params, thermal)
    k_q = params.omega_eg * s_star / du_c - 1.0 if du_c > 0 else None
    eta = eta_closed_form(params.xi, k_q) if k_q is not None else None
    return {
        "tbar": tbar,
        "gamma0": 0.0,
        "k_q": k_q,
        "eta": eta,
        "eta_corrected": None,
        "tau_star": float(times[idx]),
        "engine": "unitary_heff",
        "status": "",
    }


def _fig34_worker(payload):
    cfg = Fig34Config(**payload["fig"])
    tbar = payload["tbar"]
    if payload["series"] == "reference":
        return _fig34_reference_row(cfg, tbar)

    params = cfg.model_params()
    thermal = ThermalSpec("tbar", tbar, omega_m_ref=params.omega_m)
    _, t_max = _fig34_shared_grid(params, cfg.grid_points)
    run = ProtocolRun(
        "open_system",
        params,
        ProtocolParams(cfg.target_n),
        thermal,
        n_max=cfg.n_max,
        eps_trunc=cfg.eps_trunc,
        t_max=t_max,
    )
    opts = IntegratorOptions(grid_points=cfg.grid_points)
    if payload["series"] == "heff_limit":
        res = ReservoirSpec(0.0, 0.0, 0.0, 0.0)
        report, status = _guarded(open_system_run, run, res, hamiltonian="effective", opts=opts)
        gamma0 = 0.0
    else:
        gamma0 = payload["gamma0"]
        res = ReservoirSpec.from_temperature(gamma0, thermal, params)
        report, status = _guarded(open_system_run, run, res, hamiltonian="full", opts=opts)
    row = {
        "tbar": tbar,
        "gamma0": gamma0 / (2.0 * math.pi),  # reported in Hz like the config
        "engine": "lindblad_heff" if payload["series"] == "heff_limit" else "lindblad_full",
        "status": status,
    }
    if report is not None:
        row.update(
            k_q=report.k_q,
            eta=report.eta,
            eta_corrected=report.eta_corrected,
            tau_star=report.tau_used,
        )
        problems = report.validate()
        if problems and not status:
            row["status"] = "invariant: " + "; ".join(problems)
    return row


def _fig34_all_rows(cfg: Fig34Config, jobs=None):
    params = cfg.model_params()
    payloads = []
    for tbar in cfg.tbars:
        payloads.append({"fig": cfg.model_dump(), "tbar": float(tbar), "series": "reference"})
        payloads.append({"fig": cfg.model_dump(), "tbar": float(tbar), "series": "heff_limit"})
        for frac in cfg.gamma0_fractions:
            payloads.append(
                {
                    "fig": cfg.model_dump(),
                    "tbar": float(tbar),
                    "series": "full",
                    "gamma0": float(frac) * params.g_eff,
                }
            )
    rows = _map_jobs(_fig34_worker, payloads, jobs)
    rows.sort(key=lambda r: (r["tbar"], _ENGINE_ORDER[r["engine"]], r["gamma0"]))
    return rows


def fig3_rows(cfg: Fig34Config, jobs=None):
    rows = _fig34_all_rows(cfg, jobs)
    return FIG3_COLUMNS, [{c: r.get(c) for c in FIG3_COLUMNS} for r in rows]


def fig4_rows(cfg: Fig34Config, jobs=None):
    rows = _fig34_all_rows(cfg, jobs)
    return FIG4_COLUMNS, [{c: r.get(c) for c in FIG4_COLUMNS} for r in rows]
