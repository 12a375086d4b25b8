"""Command-line entry point: run scenarios, validate inputs, summarize logs.

Exit codes: 0 success, 1 invalid input (parse or validation failure),
2 internal error (unexpected failures, unwritable outputs).
"""

from __future__ import annotations

import argparse
import sys
from collections import Counter
from pathlib import Path

from .config import load_config
from .engine import parse_scenario, read_alert_log, run_scenario, write_alert_log
from .errors import InputError
from .kb import load_kb, save_kb
from .model import AgentConfig

EXIT_OK = 0
EXIT_INVALID_INPUT = 1
EXIT_INTERNAL = 2


def _load_input(path: str, loader):
    """Load an input file; missing or unreadable files are invalid input."""
    try:
        return loader(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from exc


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _load_input(args.scenario, lambda p: parse_scenario(p, name=Path(p).stem))
    kb = _load_input(args.kb, load_kb)
    config = _load_input(args.config, load_config) if args.config else AgentConfig()

    log, final_kb = run_scenario(scenario, config, kb)

    write_alert_log(log, args.out)
    if args.kb_out:
        save_kb(final_kb, args.kb_out)
    print(
        f"scenario={scenario.name} events={len(scenario.events)} "
        f"alerts={len(log.entries)} diagnostics={len(log.diagnostics)}"
    )
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    if args.scenario:
        scenario = _load_input(args.scenario, parse_scenario)
        print(f"ok: scenario with {len(scenario.events)} events")
    elif args.kb:
        kb = _load_input(args.kb, load_kb)
        print(
            f"ok: knowledge base with {len(kb.contacts)} contacts, "
            f"{len(kb.safety_records)} safety records, {len(kb.devices)} devices"
        )
    else:
        _load_input(args.config, load_config)
        print("ok: config")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    alerts = _load_input(args.log, read_alert_log)

    kind_counts = Counter(alert.kind for alert in alerts)
    print(f"alerts: {len(alerts)}")
    for kind in sorted(kind_counts):
        print(f"  {kind}: {kind_counts[kind]}")

    calls: Counter[str] = Counter()
    messages: Counter[str] = Counter()
    for alert in alerts:
        if alert.kind in ("ring", "suppress_note"):
            calls[alert.payload.get("caller", "?")] += 1
        elif alert.kind == "beep":
            messages[alert.payload.get("caller", "?")] += 1
    if calls or messages:
        print("per-caller missed items:")
        for caller in sorted(set(calls) | set(messages)):
            print(f"  {caller}: calls={calls[caller]} messages={messages[caller]}")

    snapshot = next(
        (alert for alert in reversed(alerts) if alert.kind == "sorted_list_snapshot"), None
    )
    if snapshot is None:
        print("callback list: no snapshot")
    else:
        print(f"callback list (snapshot at t={snapshot.t}):")
        for rank, entry in enumerate(snapshot.payload.get("entries", []), start=1):
            print(
                f"  {rank}. {entry.get('caller')} ({entry.get('kind')}) "
                f"score={entry.get('score')}"
            )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alertagent",
        description="Deterministic smartphone alert agent: replay scenarios into alert logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and write the alert log")
    run_p.add_argument("--scenario", required=True, help="scenario file (JSON lines)")
    run_p.add_argument("--kb", required=True, help="knowledge-base file (JSON)")
    run_p.add_argument("--config", help="agent config file (JSON); defaults apply if omitted")
    run_p.add_argument("--out", required=True, help="alert log output path")
    run_p.add_argument("--kb-out", help="write the updated knowledge base here")
    run_p.set_defaults(func=cmd_run)

    val_p = sub.add_parser("validate", help="check an input file without running")
    target = val_p.add_mutually_exclusive_group(required=True)
    target.add_argument("--scenario", help="scenario file to check")
    target.add_argument("--kb", help="knowledge-base file to check")
    target.add_argument("--config", help="config file to check")
    val_p.set_defaults(func=cmd_validate)

    rep_p = sub.add_parser("report", help="summarize a written alert log")
    rep_p.add_argument("--log", required=True, help="alert log file to summarize")
    rep_p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except Exception as exc:  # noqa: BLE001 - boundary: report and exit 2
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
