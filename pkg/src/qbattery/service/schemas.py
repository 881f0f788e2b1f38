"""Request/response models of the HTTP service.

Requests reuse the configuration models from qbattery.config directly.
"""

from __future__ import annotations

from pydantic import BaseModel

from ..observables import ChargingReport

__all__ = ["HealthResponse", "ReportModel", "RunResponse", "RowsResponse", "ErrorResponse"]


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class ReportModel(BaseModel):
    kind: str
    engine: str
    tau_used: float
    s_value: float | None = None
    delta_u_battery: float
    delta_u_fc: float
    ergotropy: float
    work_in: float
    delta_u_c_reference: float
    k_q: float | None = None
    eta: float | None = None
    eta_corrected: float | None = None
    heat: dict[str, float] = {}
    diagnostics: dict[str, float] = {}

    @classmethod
    def from_report(cls, rep: ChargingReport):
        return cls(
            kind=rep.kind,
            engine=rep.engine,
            tau_used=rep.tau_used,
            s_value=rep.s_value,
            delta_u_battery=rep.delta_u_battery,
            delta_u_fc=rep.delta_u_fc,
            ergotropy=rep.ergotropy,
            work_in=rep.work_in,
            delta_u_c_reference=rep.delta_u_c_reference,
            k_q=rep.k_q,
            eta=rep.eta,
            eta_corrected=rep.eta_corrected,
            heat={k: float(v) for k, v in rep.heat.items()},
            diagnostics={k: float(v) for k, v in rep.diagnostics.items()},
        )


class RunResponse(BaseModel):
    report: ReportModel
    invariant_violations: list[str] = []
    pretty: str


class RowsResponse(BaseModel):
    columns: list[str]
    rows: list[dict[str, float | str | None]]


class ErrorResponse(BaseModel):
    error_code: int  # 1 = validation/usage, 2 = numerical failure
    detail: str
