"""Command-line client for the budgeting service.

``run`` and ``validate`` post the scenario to the HTTP API; without
``--server`` the service app is driven in process through its ASGI
interface, so no daemon is needed for local work.  The client writes
the report files itself from the response payload, which keeps the
service stateless and the emitted files byte-identical either way.

Exit codes: 0 success, 2 scenario/schema error, 3 model error
(instability, bad dimensions), 4 numerical failure, 1 anything else.

``serve`` starts the HTTP service; POINTBUDGET_WORKERS sets the worker
count (analysis runs themselves are deterministic and single-threaded).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path

import httpx

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_SCENARIO = 2
EXIT_MODEL = 3
EXIT_NUMERICAL = 4

_KIND_EXIT = {"scenario": EXIT_SCENARIO, "model": EXIT_MODEL, "numerical": EXIT_NUMERICAL}


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    timeout = httpx.Timeout(3600.0, connect=30.0)
    if server is not None:
        with httpx.Client(base_url=server, timeout=timeout) as client:
            return client.post(path, json=payload)

    from .service.app import app

    async def call() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://pointbudget.local",
                                     timeout=timeout) as client:
            return await client.post(path, json=payload)

    return asyncio.run(call())


def _error_exit(detail) -> int:
    if isinstance(detail, dict):
        kind = detail.get("kind", "other")
        field = detail.get("field")
        msg = detail.get("message", "")
        where = f" [{field}]" if field else ""
        print(f"error ({kind}){where}: {msg}", file=sys.stderr)
        return _KIND_EXIT.get(kind, EXIT_OTHER)
    print(f"error: {detail}", file=sys.stderr)
    return EXIT_OTHER


def _cmd_run(args: argparse.Namespace) -> int:
    scenario_path = Path(args.scenario)
    if not scenario_path.exists():
        print(f"error (scenario): file not found: {scenario_path}", file=sys.stderr)
        return EXIT_SCENARIO
    overrides = {
        "seed": args.seed,
        "samples": args.samples,
        "method": args.method,
        "worst_case": True if args.wc else None,
        "dump_model": bool(args.dump_model),
    }
    payload = {"scenario": scenario_path.read_text(), "overrides": overrides}
    try:
        resp = _post(args.server, "/analyses", payload)
    except httpx.HTTPError as exc:
        print(f"error: service unreachable: {exc}", file=sys.stderr)
        return EXIT_OTHER
    body = resp.json()
    if resp.status_code != 200:
        return _error_exit(body.get("detail", body))

    from .report import emit, from_dict, render_budget_table

    report = from_dict(body)
    outdir = Path(args.out) if args.out else Path(report.scenario["output"]["directory"])
    formats = tuple(report.scenario["output"]["formats"])
    written = emit(report, outdir, formats)
    print(render_budget_table(report))
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    scenario_path = Path(args.scenario)
    if not scenario_path.exists():
        print(f"error (scenario): file not found: {scenario_path}", file=sys.stderr)
        return EXIT_SCENARIO
    try:
        resp = _post(args.server, "/validate", {"scenario": scenario_path.read_text()})
    except httpx.HTTPError as exc:
        print(f"error: service unreachable: {exc}", file=sys.stderr)
        return EXIT_OTHER
    body = resp.json()
    if not body.get("valid", False):
        for issue in body.get("errors", []):
            print(f"invalid [{issue['field']}]: {issue['message']}", file=sys.stderr)
        return EXIT_SCENARIO
    if args.dump_normalized:
        print(json.dumps(body["normalized"], sort_keys=True, indent=1))
    else:
        print("scenario is valid")
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    workers = int(os.environ.get("POINTBUDGET_WORKERS", "1"))
    uvicorn.run("pointbudget.service.app:app", host=args.host, port=args.port,
                workers=workers)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pointbudget",
        description="Pointing-error budgeting for flexible spacecraft",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an analysis scenario")
    p_run.add_argument("scenario", help="scenario file (.scn)")
    p_run.add_argument("--out", help="output directory (default: scenario output.directory)")
    p_run.add_argument("--seed", type=int, help="override the combination seed")
    p_run.add_argument("--samples", type=int, help="override the sample count")
    p_run.add_argument("--wc", action="store_true",
                       help="require the worst-case analysis (scenario must define it)")
    p_run.add_argument("--method", choices=["simplified", "advanced"],
                       help="override the combination method")
    p_run.add_argument("--dump-model", action="store_true",
                       help="emit model dimensions and eigenvalues")
    p_run.add_argument("--server", help="remote service URL (default: in-process)")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a scenario file")
    p_val.add_argument("scenario")
    p_val.add_argument("--dump-normalized", action="store_true",
                       help="print the normalized configuration as JSON")
    p_val.add_argument("--server", help="remote service URL (default: in-process)")
    p_val.set_defaults(func=_cmd_validate)

    p_srv = sub.add_parser("serve", help="start the HTTP service")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
