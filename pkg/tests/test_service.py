import math

import pytest
from fastapi.testclient import TestClient

from qbattery.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app, raise_server_exceptions=False)


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_config_defaults(client):
    r = client.get("/config/defaults", params={"command": "fig2"})
    assert r.status_code == 200
    assert r.json()["points"] >= 100
    r = client.get("/config/defaults", params={"command": "nope"})
    assert r.status_code == 400
    assert r.json()["error_code"] == 1


def test_run_endpoint_classical_t0(client):
    r = client.post("/run", json={"kind": "classical", "temperature": 0.0, "xi": 99.0})
    assert r.status_code == 200
    body = r.json()
    omega_eg = 2 * math.pi * (1e12 - 1e6) / 100.0
    assert math.isclose(body["report"]["delta_u_battery"], omega_eg, rel_tol=1e-12)
    assert body["invariant_violations"] == []
    assert "protocol: classical" in body["pretty"]


def test_run_endpoint_quantum_identity(client):
    r = client.post("/run", json={"kind": "quantum_single_shot", "xi": 99.0, "temperature": 0.1})
    body = r.json()["report"]
    # internal-consistency path: eta equals the closed form built from k_q
    eta_cf = (1 + 2 * body["k_q"]) / ((1 + body["k_q"]) * (1 + 99.0))
    assert abs(body["eta"] - eta_cf) < 1e-9


def test_validation_error_names_field(client):
    r = client.post("/run", json={"omega_l_hz": -2.0})
    assert r.status_code == 422
    assert any("omega_l_hz" in str(item["loc"]) for item in r.json()["detail"])


def test_usage_error_maps_to_400(client):
    r = client.post("/run", json={"xi": 9.0, "omega_eg_hz": 1e9})
    assert r.status_code == 422  # pydantic catches the conflict
    r = client.post("/run", json={"kind": "classical", "engine": "lindblad"})
    assert r.status_code == 422


def test_numerical_failure_maps_to_500(client):
    r = client.post(
        "/run",
        json={
            "kind": "open_system",
            "engine": "lindblad",
            "xi": 99.0,
            "n_max": 80,
            "eps_trunc": 0.5,
        },
    )
    assert r.status_code == 500
    assert r.json()["error_code"] == 2


def test_sweep_endpoint_json_and_csv_agree(client):
    cfg = {"axis": "tbar", "values": [0.1, 0.2], "base": {"kind": "quantum_single_shot"}}
    rj = client.post("/sweep", params={"jobs": 1}, json=cfg)
    rc = client.post("/sweep", params={"format": "csv", "jobs": 1}, json=cfg)
    assert rj.status_code == 200 and rc.status_code == 200
    body = rj.json()
    lines = rc.text.splitlines()
    assert lines[0].split(",") == body["columns"]
    assert len(lines) == 1 + len(body["rows"])
    # csv row reproduces the json value at 12 significant digits
    k_q_json = body["rows"][0]["k_q"]
    k_q_csv = float(lines[1].split(",")[body["columns"].index("k_q")])
    assert abs(k_q_csv - k_q_json) <= 1e-11 * abs(k_q_json)


def test_fig2_endpoint_csv(client):
    cfg = {"points": 100, "tbars": [0.1], "xi_start": 1.0, "xi_stop": 50.0, "grid": 200}
    r = client.post("/figures/fig2", params={"format": "csv", "jobs": 2}, json=cfg)
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("text/csv")
    lines = r.text.splitlines()
    assert lines[0] == "xi,tbar,k_q,eta,tau_star,s_star,status"
    assert len(lines) == 101


def test_fig3_endpoint_rows(client):
    cfg = {
        "tbars": [0.25],
        "gamma0_fractions": [0.1],
        "n_max": 5,
        "eps_trunc": 1e-2,
        "grid_points": 256,
    }
    r = client.post("/figures/fig3", params={"jobs": 1}, json=cfg)
    assert r.status_code == 200
    rows = r.json()["rows"]
    assert [row["engine"] for row in rows] == ["unitary_heff", "lindblad_heff", "lindblad_full"]
    r4 = client.post("/figures/fig4", params={"jobs": 1}, json=cfg)
    assert r4.status_code == 200
    assert r4.json()["columns"] == ["tbar", "gamma0", "eta", "eta_corrected", "tau_star", "engine", "status"]
