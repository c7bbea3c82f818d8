"""Command-line front end.

The CLI is a thin client of the HTTP service: every subcommand builds a
request and POSTs it either to a running server (--server URL) or, by
default, to an in-process instance of the same app over an ASGI transport,
so both paths exercise identical service code.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path
from typing import Any

import httpx

from .sweeps import emit, table_from_wire


class ServiceClient:
    """HTTP client for the ratekit service.

    With a server URL, requests go over the network; without one, they run
    against an in-process app instance through an ASGI transport, so the
    same service code handles both."""

    def __init__(self, server: str | None = None):
        self._server = server
        self._client = httpx.Client(base_url=server, timeout=3600.0) if server else None
        self._app = None
        if not server:
            from .service import create_app

            self._app = create_app()

    def close(self) -> None:
        if self._client is not None:
            self._client.close()

    def _request(self, method: str, path: str, payload: dict[str, Any] | None) -> httpx.Response:
        if self._client is not None:
            return self._client.request(method, path, json=payload)

        async def go() -> httpx.Response:
            transport = httpx.ASGITransport(app=self._app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://ratekit.internal", timeout=None
            ) as client:
                return await client.request(method, path, json=payload)

        return asyncio.run(go())

    def get(self, path: str) -> dict[str, Any]:
        return self._raise_for_detail(self._request("GET", path, None))

    def post(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        return self._raise_for_detail(self._request("POST", path, payload))

    @staticmethod
    def _raise_for_detail(response: httpx.Response) -> dict[str, Any]:
        if response.status_code >= 400:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise SystemExit(f"error ({response.status_code}): {detail}")
        return response.json()


def _load_json(path: str) -> dict[str, Any]:
    with open(path) as fh:
        return json.load(fh)


def _print_report(report: dict[str, Any]) -> None:
    tag = " + MAC overhead" if report["with_overhead"] else ""
    print(f"algorithm: {report['algorithm']}{tag}")
    print(f"throughput: {report['tau_bps'] / 1e6:.6f} Mbit/s")
    label = "g" if report["with_overhead"] else "f"
    for i, (rate, frac) in enumerate(zip(report["rates_bps"], report["time_fractions"]), 1):
        print(f"  {label}_{i} (R={rate / 1e6:g} Mbit/s): {frac:.6f}")


def cmd_validate(client: ServiceClient, args: argparse.Namespace) -> int:
    out = client.post("/validate", _load_json(args.scenario))
    if out["valid"]:
        print("valid")
        return 0
    for err in out["errors"]:
        print(f"{err['code']}: {err['message']}", file=sys.stderr)
    return 1


def cmd_analyze(client: ServiceClient, args: argparse.Namespace) -> int:
    report = client.post("/analyze", _load_json(args.scenario))
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        _print_report(report)
    return 0


def cmd_simulate(client: ServiceClient, args: argparse.Namespace) -> int:
    payload = {
        "scenario": _load_json(args.scenario),
        "n_packets": args.packets,
        "seed": args.seed,
    }
    out = client.post("/simulate", payload)
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        tau, err = out["throughput_est_bps"], out["throughput_stderr_bps"]
        print(f"throughput: {tau / 1e6:.6f} Mbit/s  (stderr {err / 1e6:.6f})")
        for i, frac in enumerate(out["tx_time_fraction_est"], 1):
            print(f"  f_{i}: {frac:.6f} (+- {out['tx_time_fraction_stderr'][i - 1]:.6f})")
    return 0


def _write_table(table_wire: dict[str, Any], out: str | None, fmt: str) -> int:
    table = table_from_wire(table_wire)
    text = emit(table, fmt)
    if out:
        Path(out).write_text(text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)
    if not table.complete:
        for row in table.rows:
            for algo, r in row.results.items():
                if r.error:
                    print(f"error @ {row.param_value} [{algo}]: {r.error}", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(client: ServiceClient, args: argparse.Namespace) -> int:
    spec = _load_json(args.spec)
    if args.with_sim:
        spec["with_sim"] = True
    if args.packets is not None:
        spec["n_packets"] = args.packets
    if args.seed is not None:
        spec["seed"] = args.seed
    out = client.post("/sweep", spec)
    return _write_table(out, args.out, args.format)


def cmd_figure(client: ServiceClient, args: argparse.Namespace) -> int:
    payload = {
        "with_sim": args.with_sim,
        "n_packets": args.packets or 1_000_000,
        "seed": args.seed if args.seed is not None else 1,
        "mean_packet_bits": args.mean_packet_bits,
    }
    out = client.post(f"/figures/{args.fig}/run", payload)
    target = None
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        target = str(Path(args.out) / f"fig{args.fig}.{args.format}")
    return _write_table(out, target, args.format)


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratekit",
        description="Steady-state throughput of ARF/AARF/PAARF rate adaptation.",
    )
    parser.add_argument(
        "--server",
        default=None,
        help="base URL of a running ratekit service; default runs in-process",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario JSON file")
    p.add_argument("scenario")

    p = sub.add_parser("analyze", help="closed-form throughput of a scenario")
    p.add_argument("scenario")
    p.add_argument("--json", action="store_true", help="raw JSON output")

    p = sub.add_parser("simulate", help="Monte Carlo estimate for a scenario")
    p.add_argument("scenario")
    p.add_argument("--packets", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("sweep", help="run a sweep spec JSON file")
    p.add_argument("spec")
    p.add_argument("--with-sim", action="store_true", help="add simulation columns")
    p.add_argument("--packets", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "dat"), default="csv")

    p = sub.add_parser("figure", help="run a preset figure scenario (4-9)")
    p.add_argument("fig", type=int, choices=range(4, 10))
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--with-sim", action="store_true")
    p.add_argument("--packets", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mean-packet-bits", type=float, default=8000.0)
    p.add_argument("--format", choices=("csv", "dat"), default="csv")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        return cmd_serve(args)
    client = ServiceClient(args.server)
    try:
        handler = {
            "validate": cmd_validate,
            "analyze": cmd_analyze,
            "simulate": cmd_simulate,
            "sweep": cmd_sweep,
            "figure": cmd_figure,
        }[args.command]
        return handler(client, args)
    finally:
        client.close()


if __name__ == "__main__":
    sys.exit(main())
