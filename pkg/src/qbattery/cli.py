"""Command-line client of the qbattery service.

The CLI is a thin HTTP client: by default it talks to the FastAPI app through
an in-process ASGI transport (no server needed); `--base-url` points it at a
running `qbattery serve` / uvicorn instance instead.  CSV bytes come from the
service verbatim, so files are identical either way.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from .config import COMMAND_CONFIGS

REPORT_CSV_COLUMNS = [
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
]


class CliFailure(Exception):
    def __init__(self, msg, code):
        super().__init__(msg)
        self.code = code


async def _request_async(base_url, method, path, body, params):
    if base_url:
        client = httpx.AsyncClient(base_url=base_url, timeout=None)
    else:
        from .service.app import app  # imported lazily: only the local path needs it

        client = httpx.AsyncClient(
            transport=httpx.ASGITransport(app=app),
            base_url="http://qbattery.local",
            timeout=None,
        )
    async with client:
        return await client.request(method, path, json=body, params=params)


def request(base_url, method, path, body=None, params=None):
    try:
        resp = asyncio.run(_request_async(base_url, method, path, body, params))
    except httpx.HTTPError as exc:
        raise CliFailure(f"transport error: {exc}", 2) from exc
    if resp.status_code in (200, 201):
        return resp
    try:
        detail = resp.json()
    except ValueError:
        detail = resp.text
    code = 1 if resp.status_code in (400, 422) else 2
    raise CliFailure(f"HTTP {resp.status_code}: {json.dumps(detail, indent=2)}", code)


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise CliFailure(f"config file not found: {path}", 1) from exc
    except json.JSONDecodeError as exc:
        raise CliFailure(f"config file is not valid JSON: {exc}", 1) from exc


def _write_out(out, text):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _cmd_run(args):
    body = _load_config(args.config)
    resp = request(args.base_url, "POST", "/run", body=body)
    payload = resp.json()
    print(payload["pretty"])
    violations = payload.get("invariant_violations") or []
    if violations:
        print("invariant violations: " + "; ".join(violations), file=sys.stderr)
    if args.out:
        from .csvio import write_csv

        rep = payload["report"]
        row = {c: rep.get(c) for c in REPORT_CSV_COLUMNS}
        row.update({f"q_{k}": v for k, v in (rep.get("heat") or {}).items()})
        columns = REPORT_CSV_COLUMNS + sorted(k for k in row if k.startswith("q_"))
        write_csv(args.out, columns, [row])
    return 0


def _rows_command(path, require_config):
    def handler(args):
        body = _load_config(args.config)
        if require_config and not body:
            raise CliFailure("this command needs --config", 1)
        params = {"format": "csv"}
        if args.jobs:
            params["jobs"] = args.jobs
        resp = request(args.base_url, "POST", path, body=body, params=params)
        _write_out(args.out, resp.text)
        return 0

    return handler


def _cmd_print_config(args):
    resp = request(args.base_url, "GET", "/config/defaults", params={"command": args.command_name})
    print(json.dumps(resp.json(), indent=2, sort_keys=True))
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="qbattery", description=__doc__)
    parser.add_argument("--base-url", default=None, help="remote service URL; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_, handler, config=False, out=False, jobs=False):
        p = sub.add_parser(name, help=help_)
        if config:
            p.add_argument("--config", default=None, help="JSON config file")
        if out:
            p.add_argument("--out", default=None, help="output CSV path (default stdout)")
        if jobs:
            p.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
        p.add_argument("--seed", type=int, default=None, help="reserved; all paths are deterministic")
        p.set_defaults(handler=handler)
        return p

    add("run", "execute one protocol run", _cmd_run, config=True, out=True)
    add("sweep", "one-axis parameter sweep", _rows_command("/sweep", True), config=True, out=True, jobs=True)
    add("fig2", "gain/efficiency vs xi sweep", _rows_command("/figures/fig2", False), config=True, out=True, jobs=True)
    add("fig3", "open-system gain vs temperature sweep", _rows_command("/figures/fig3", False), config=True, out=True, jobs=True)
    add("fig4", "open-system efficiency vs temperature sweep", _rows_command("/figures/fig4", False), config=True, out=True, jobs=True)

    p = sub.add_parser("print-config", help="print the default JSON config of a command")
    p.add_argument("--command", dest="command_name", default="run", choices=sorted(COMMAND_CONFIGS))
    p.set_defaults(handler=_cmd_print_config)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=_cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except CliFailure as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
