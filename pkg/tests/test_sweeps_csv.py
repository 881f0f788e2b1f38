import math

import numpy as np
import pytest
from pydantic import ValidationError

from qbattery.config import Fig2Config, Fig34Config, RunConfig, SweepConfig, default_config_json
from qbattery.csvio import format_value, render_csv
from qbattery.sweeps import (
    FIG2_COLUMNS,
    FIG3_COLUMNS,
    FIG4_COLUMNS,
    execute_run,
    fig2_rows,
    fig3_rows,
    fig4_rows,
    sweep_rows,
)


def tiny_fig34(**kw):
    base = dict(
        tbars=[0.1, 0.5],
        gamma0_fractions=[0.1],
        n_max=5,
        eps_trunc=1e-2,
        grid_points=512,
    )
    base.update(kw)
    return Fig34Config(**base)


# ---------------------------------------------------------------------------
# csv formatting

def test_csv_determinism_and_precision():
    rows = [{"a": 1.0 / 3.0, "b": None, "c": "ok"}, {"a": 6.283185307179586e6, "b": -1e-12, "c": ""}]
    text1 = render_csv(["a", "b", "c"], rows)
    text2 = render_csv(["a", "b", "c"], rows)
    assert text1 == text2
    assert text1.splitlines()[1] == "3.33333333333e-01,,ok"
    assert "6.28318530718e+06" in text1
    assert "\r" not in text1
    assert format_value(None) == ""
    assert format_value(7) == "7"
    # 12 significant digits round-trip
    x = 0.5249791625413359
    assert abs(float(format_value(x)) - x) < 1e-12


# ---------------------------------------------------------------------------
# config validation

def test_run_config_rejects_conflicts():
    with pytest.raises(ValidationError):
        RunConfig(omega_l_hz=-1.0)
    with pytest.raises(ValidationError):
        RunConfig(xi=9.0, omega_eg_hz=1e9)
    with pytest.raises(ValidationError):
        RunConfig(kind="classical", engine="lindblad")
    with pytest.raises(ValidationError):
        RunConfig(kind="quantum_single_shot", gamma0_hz=3.0)
    with pytest.raises(ValidationError):
        RunConfig(bogus_field=1.0)


def test_sweep_config_axis_rules():
    ok = SweepConfig(axis="xi", start=1.0, stop=10.0, count=5, spacing="geometric")
    assert len(ok.axis_values()) == 5
    with pytest.raises(ValidationError):
        SweepConfig(axis="xi", values=[1.0, 2.0], start=1.0, stop=2.0, count=2)
    with pytest.raises(ValidationError):
        SweepConfig(axis="xi")
    with pytest.raises(ValidationError):
        SweepConfig(axis="xi", values=[1.0, 3.0, 2.0])  # not monotone
    with pytest.raises(ValidationError):
        SweepConfig(axis="xi", values=[1.0, 2.0], base=RunConfig(xi=5.0))  # double spec
    with pytest.raises(ValidationError):
        SweepConfig(axis="tau", values=[1e-3], base=RunConfig(tau_s=1e-3))
    with pytest.raises(ValidationError):
        SweepConfig(axis="gamma0", values=[0.0, 1.0], base=RunConfig())  # needs open_system
    cfg = SweepConfig(axis="tbar", values=[0.1, 0.2])
    assert cfg.point_config(0.2).temperature == 0.2


def test_default_config_json_commands():
    for cmd in ("run", "sweep", "fig2", "fig3", "fig4"):
        d = default_config_json(cmd)
        assert isinstance(d, dict) and d
    with pytest.raises(ValueError):
        default_config_json("fig9")


# ---------------------------------------------------------------------------
# run dispatch and sweeps

def test_execute_run_dispatch():
    rep = execute_run(RunConfig(kind="classical", engine="analytic", temperature=0.0, xi=99.0))
    assert rep.kind == "classical"
    omega_eg = 2 * math.pi * (1e12 - 1e6) / 100.0
    assert math.isclose(rep.delta_u_battery, omega_eg, rel_tol=1e-12)
    rep2 = execute_run(RunConfig(kind="quantum_sequential", xi=99.0, temperature=0.4))
    assert rep2.kind == "quantum_sequential"


def test_sweep_rows_sorted_and_parallel_identical():
    with pytest.raises(ValidationError):
        SweepConfig(axis="tbar", values=[0.4, 0.1, 0.2])  # validator demands monotone
    cfg = SweepConfig(axis="tbar", values=[0.1, 0.2, 0.4], base=RunConfig())
    cols, rows = sweep_rows(cfg, jobs=1)
    assert cols[0] == "tbar"
    assert [r["tbar"] for r in rows] == [0.1, 0.2, 0.4]
    assert all(r["status"] == "" for r in rows)
    _, rows2 = sweep_rows(cfg, jobs=2)
    for r1, r2 in zip(rows, rows2):
        assert r1 == r2


def test_sweep_row_failure_status_does_not_abort():
    # n_max far beyond the superoperator limit trips the integration guard
    base = RunConfig(kind="open_system", engine="lindblad", xi=99.0, n_max=80, eps_trunc=0.5,
                     temperature=0.1)
    cfg = SweepConfig(axis="gamma0", values=[0.0, 1.0], base=base)
    _, rows = sweep_rows(cfg, jobs=1)
    assert len(rows) == 2
    assert all("integration_error" in r["status"] for r in rows)
    assert all(r["k_q"] is None for r in rows)


def test_sweep_invalid_axis_value_becomes_status_row():
    # tau = 0 violates the run schema; the row records it instead of aborting
    cfg = SweepConfig(axis="tau", values=[0.0, 1e-3], base=RunConfig())
    _, rows = sweep_rows(cfg, jobs=1)
    assert "config_error" in rows[0]["status"]
    assert rows[1]["status"] == ""


# ---------------------------------------------------------------------------
# figure sweeps

def test_fig2_rows_properties():
    cfg = Fig2Config(points=100, tbars=[0.1, 0.4], xi_start=0.9, xi_stop=200.0, grid=400)
    cols, rows = fig2_rows(cfg, jobs=2)
    assert cols == FIG2_COLUMNS
    assert len(rows) == 200
    assert all(r["status"] == "" for r in rows)
    by_tbar = {0.1: [], 0.4: []}
    for r in rows:
        by_tbar[r["tbar"]].append(r)
    for tb, series in by_tbar.items():
        assert [r["xi"] for r in series] == sorted(r["xi"] for r in series)
        for r in series:
            assert 0.0 < r["eta"] < 2.0 / (1.0 + r["xi"])
    # gain grows with temperature row by row
    for r1, r4 in zip(by_tbar[0.1], by_tbar[0.4]):
        assert r4["k_q"] > r1["k_q"]
    # and with xi at fixed temperature (beyond the threshold region)
    ks = [r["k_q"] for r in by_tbar[0.1] if r["xi"] > 2]
    assert all(b > a for a, b in zip(ks, ks[1:]))


def test_fig34_rows_structure_and_closed_limit():
    cfg = tiny_fig34()
    cols3, rows3 = fig3_rows(cfg, jobs=2)
    assert cols3 == FIG3_COLUMNS
    # per tbar: reference + heff-limit + one full row
    assert len(rows3) == 2 * 3
    for tb in (0.1, 0.5):
        series = [r for r in rows3 if r["tbar"] == tb]
        engines = [r["engine"] for r in series]
        assert engines == ["unitary_heff", "lindblad_heff", "lindblad_full"]
        ref, heff, full = series
        # the gamma0 = 0 master-equation series equals the unitary reference
        assert abs(heff["k_q"] / ref["k_q"] - 1.0) < 1e-6
        assert heff["tau_star"] == ref["tau_star"]
        # dissipation at work: the full row differs but stays within ~20%
        assert abs(full["k_q"] / ref["k_q"] - 1.0) < 0.2
    cols4, rows4 = fig4_rows(cfg, jobs=2)
    assert cols4 == FIG4_COLUMNS
    assert {r["engine"] for r in rows4} == {"unitary_heff", "lindblad_heff", "lindblad_full"}
    for r in rows4:
        if r["eta"] is not None:
            assert 0.0 < r["eta"] <= 2.0 / (1.0 + cfg.xi) + 1e-12
