"""Command-line front end: a thin client over the compute service.

By default each invocation hosts the service in-process (same app, ASGI
test transport), so batch use needs no running server; ``--server URL``
points the identical client at a remote instance instead.  Either way
the command is a pure function of (config file, seed): rerunning writes
byte-identical files.

Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 statistical-test failure (oracle z-score above threshold, or the
discrepancy principle unmet within its lambda bounds).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

__all__ = ["main"]

_EXIT_BY_ERROR_TYPE = {"validation": 2, "numerical": 3, "statistical": 4}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qgalv",
        description="condensate current-noise spectroscopy toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help="scenario file path")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario master seed")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for kernel quadrature")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       dest="fmt", help="output file format")
        p.add_argument("--server", default=None,
                       help="base URL of a running service "
                            "(default: run in-process)")

    common(sub.add_parser("kernel", help="emit kernel tables and summary"))
    common(sub.add_parser("scan", help="run the forward pipeline"))
    common(sub.add_parser("oracle", help="Monte-Carlo vs analytic comparison"))
    common(sub.add_parser("estimate", help="sensitivity report"))
    invert = sub.add_parser("invert", help="deconvolve a scan into a spectrum")
    invert.add_argument("--scan", required=True, help="scan table file path")
    invert.add_argument("--kernel", required=True, help="kernel table file path")
    common(invert, config_required=False)
    return parser


def _read(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        print(f"error: cannot read {what} {path!r}: {exc}", file=sys.stderr)
        raise SystemExit(2) from exc


def _post(path: str, payload: dict, server: str | None):
    if server is not None:
        import httpx

        response = httpx.post(server.rstrip("/") + path, json=payload,
                              timeout=None)
        return response.status_code, response.json()
    import warnings

    with warnings.catch_warnings():
        # the test transport's import-time deprecation chatter is not ours
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    with TestClient(create_app(), raise_server_exceptions=False) as client:
        response = client.post(path, json=payload)
    return response.status_code, response.json()


def _fail(status: int, body: dict) -> int:
    error_type = body.get("error_type", "")
    detail = body.get("detail", body)
    print(f"error ({error_type or status}): {detail}", file=sys.stderr)
    return _EXIT_BY_ERROR_TYPE.get(error_type, 3)


def _deliver(body: dict, out_dir: str) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, content in body["files"].items():
        target = out / name
        target.write_text(content)
        print(f"wrote {target}")
    if body["summary"]:
        print(body["summary"])
    for note in body.get("warnings", ()):
        print(f"warning: {note}", file=sys.stderr)
    flags = body.get("flags", {})
    for flag, label in (("oracle_passed", "oracle agreement failed"),
                        ("dp_met", "discrepancy principle unmet")):
        if flags.get(flag) is False:
            print(f"statistical: {label}", file=sys.stderr)
            return 4
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "invert":
        payload = {
            "scan_file": _read(args.scan, "scan file"),
            "kernel_file": _read(args.kernel, "kernel file"),
            "fmt": args.fmt,
        }
        if args.config is not None:
            payload["config"] = _read(args.config, "config file")
        if args.seed is not None:
            payload["seed"] = args.seed
        status, body = _post("/v1/invert", payload, args.server)
    else:
        payload = {
            "config": _read(args.config, "config file"),
            "fmt": args.fmt,
            "threads": args.threads,
        }
        if args.seed is not None:
            payload["seed"] = args.seed
        status, body = _post(f"/v1/{args.command}", payload, args.server)

    if status != 200:
        return _fail(status, body)
    return _deliver(body, args.out)


if __name__ == "__main__":
    sys.exit(main())
