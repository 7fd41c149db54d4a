"""Command-line entry points: serve, headless, replay, report."""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

from tpo.config import DEFAULT_CONFIG, ConfigError, load_bundle, read_data_text
from tpo.scenario import TrialError
from tpo.session import LogError, TrialLog, load_script_file, replay, report_from_log, run_headless


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=DEFAULT_CONFIG,
                   help="config bundle file (default: packaged %(default)s)")
    p.add_argument("--condition", choices=["A", "B", "C"], default=None,
                   help="override the study condition from the config")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpo",
        description="rope-style teleoperation of a simulated dual-arm mobile robot",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the live session server")
    _add_config_args(serve)
    serve.add_argument("--port", type=int, default=None,
                       help="TCP port for JSON-lines clients")
    serve.add_argument("--http-port", type=int, default=None,
                       help="HTTP port for the WebSocket bridge and UI")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--out", default=None, help="write the trial log here")
    serve.add_argument("--static", default=None,
                       help="directory of built UI assets to serve")

    headless = sub.add_parser("headless",
                              help="run a scripted trial as fast as possible")
    _add_config_args(headless)
    headless.add_argument("--script", required=True,
                          help="operator script (path or packaged name)")
    headless.add_argument("--out", default=None, help="write the trial log here")

    rep = sub.add_parser("replay", help="re-run a trial log and check divergence")
    rep.add_argument("--log", required=True)
    rep.add_argument("--profile", default=None,
                     help="override the control profile (flags a config mismatch)")

    report = sub.add_parser("report", help="print the trial metrics from a log")
    report.add_argument("--log", required=True)

    return parser


def _cmd_serve(args) -> int:
    from tpo.server import serve as serve_async

    bundle = load_bundle(args.config, condition=args.condition)
    try:
        asyncio.run(serve_async(
            bundle,
            tcp_port=args.port,
            http_port=args.http_port,
            out_path=args.out,
            static_dir=args.static,
            host=args.host,
        ))
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_headless(args) -> int:
    bundle = load_bundle(args.config, condition=args.condition)
    script = load_script_file(args.script)
    result = run_headless(bundle, script, out_path=args.out)
    json.dump(result, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0 if result.get("mission_phase") == "Done" else 1


def _cmd_replay(args) -> int:
    log = TrialLog.read(args.log)
    profile_doc = None
    if args.profile is not None:
        profile_doc = json.loads(read_data_text(args.profile))
    result = replay(log, profile_doc=profile_doc)
    out = {
        "ok": result.ok,
        "config_mismatch": result.config_mismatch,
        "ticks": result.ticks,
        "frames_checked": result.frames_checked,
        "divergence_count": len(result.divergences),
        "divergences": [
            {"index": d.index, "t": d.t, "expected": d.expected, "got": d.got}
            for d in result.divergences[:10]
        ],
    }
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0 if result.ok else 1


def _cmd_report(args) -> int:
    log = TrialLog.read(args.log)
    json.dump(report_from_log(log), sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "serve": _cmd_serve,
        "headless": _cmd_headless,
        "replay": _cmd_replay,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, LogError, TrialError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
