"""Deterministic scenario replay: parsing, dispatch, timers, canonical log.

One run is a pure function of (scenario, config, initial knowledge base).
Events are processed in (t, seq) order. Internal deadlines (exposure-warning
points, tracker timeouts, attendance deadlines) interleave at their exact
virtual times and fire before external events carrying the same timestamp;
among themselves they order by subsystem (radiation, tracker, forwarder),
then by creation order. For each external event the subsystems react in a
fixed order: context, battery, audible gating, radiation, tracker, sorter,
forwarder. The alert log serializes with canonical field ordering and no
whitespace variance, so identical runs produce identical bytes.
"""

from __future__ import annotations

import copy
import heapq
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Any

from .battery import BatteryGuard
from .context import SENSOR_SIGNAL_KINDS, Context, ContextEngine
from .errors import AlertLogError, ScenarioError
from .forwarder import AttendanceLedger, matching_devices
from .kb import KnowledgeBase
from .model import (
    ALERT_KINDS,
    EVENT_KINDS,
    USER_FACING_ALERT_KINDS,
    AgentConfig,
    Alert,
    BatteryAction,
    Event,
)
from .radiation import CallMonitor, is_unsafe_call, should_warn_precall
from .sleep import RING, SleepGate, alert_ordinal
from .sorter import MissedItemTally
from .tracker import FAILURE_REASONS, CallerTracker, TrackerState

# ---------------------------------------------------------------------------
# Scenario parsing


@dataclass
class Scenario:
    name: str
    events: list[Event] = field(default_factory=list)


_CONTEXT_NAMES = {c.value for c in Context}


def _need_str(data: dict[str, Any], name: str, lineno: int, choices=None) -> str:
    value = data.get(name)
    if not isinstance(value, str) or not value:
        raise ScenarioError(f"line {lineno}: field {name!r} must be a non-empty string")
    if choices is not None and value not in choices:
        raise ScenarioError(f"line {lineno}: field {name!r} must be one of {sorted(choices)}")
    return value


def _need_int(data: dict[str, Any], name: str, lineno: int, lo=None, hi=None) -> int:
    value = data.get(name)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ScenarioError(f"line {lineno}: field {name!r} must be an integer")
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise ScenarioError(f"line {lineno}: field {name!r} out of range")
    return value


def _need_bool(data: dict[str, Any], name: str, lineno: int) -> bool:
    value = data.get(name)
    if not isinstance(value, bool):
        raise ScenarioError(f"line {lineno}: field {name!r} must be a boolean")
    return value


# kind -> (required fields, optional fields)
_EVENT_FIELDS: dict[str, tuple[tuple[str, ...], tuple[str, ...]]] = {
    "call_start": (("caller",), ("safety",)),
    "call_end": ((), ()),
    "call_failed": (("callee", "reason"), ()),
    "message_received": (("caller",), ()),
    "battery_level": (("pct",), ()),
    "sensor": (("signal_kind", "signal_value"), ()),
    "user_context": (("context",), ()),
    "user_response": (("prompt_id", "answer"), ()),
    "delivery_report": (("tracking_msg_id", "positive"), ()),
    "notification_attended": (("alert_id",), ()),
    "sleep_mode": (("on",), ()),
    "safety_mode_enter": ((), ()),
    "safety_mode_exit": ((), ()),
    "snapshot_request": ((), ()),
}


def _validate_event(kind: str, data: dict[str, Any], lineno: int) -> dict[str, Any]:
    required, optional = _EVENT_FIELDS[kind]
    for name in required:
        if name not in data:
            raise ScenarioError(f"line {lineno}: missing field {name!r}")
    allowed = set(required) | set(optional)
    for name in data:
        if name not in allowed:
            raise ScenarioError(f"line {lineno}: unknown field {name!r}")

    if kind == "call_start":
        _need_str(data, "caller", lineno)
        if "safety" in data:
            _need_bool(data, "safety", lineno)
        else:
            data["safety"] = False
    elif kind == "call_failed":
        _need_str(data, "callee", lineno)
        _need_str(data, "reason", lineno, choices=FAILURE_REASONS)
    elif kind == "message_received":
        _need_str(data, "caller", lineno)
    elif kind == "battery_level":
        _need_int(data, "pct", lineno, lo=0, hi=100)
    elif kind == "sensor":
        _need_str(data, "signal_kind", lineno, choices=SENSOR_SIGNAL_KINDS)
        _need_str(data, "signal_value", lineno)
    elif kind == "user_context":
        _need_str(data, "context", lineno, choices=_CONTEXT_NAMES)
    elif kind == "user_response":
        _need_str(data, "prompt_id", lineno)
        _need_str(data, "answer", lineno, choices=("yes", "no"))
    elif kind == "delivery_report":
        _need_str(data, "tracking_msg_id", lineno)
        _need_bool(data, "positive", lineno)
    elif kind == "notification_attended":
        _need_int(data, "alert_id", lineno, lo=1)
    elif kind == "sleep_mode":
        _need_bool(data, "on", lineno)
    return data


def parse_scenario(source: str | Path | IO[str], name: str = "scenario") -> Scenario:
    """Parse a JSON-lines scenario; seq is the 1-based line number.

    Timestamps must be nondecreasing in file order. Blank lines are skipped
    but still count toward line numbering.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()

    events: list[Event] = []
    prev_t = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise ScenarioError(f"line {lineno}: event must be an object")
        if "type" not in obj:
            raise ScenarioError(f"line {lineno}: missing field 'type'")
        kind = obj["type"]
        if kind not in EVENT_KINDS:
            raise ScenarioError(f"line {lineno}: unknown event type {kind!r}")
        if "t" not in obj:
            raise ScenarioError(f"line {lineno}: missing field 't'")
        t = obj["t"]
        if not isinstance(t, int) or isinstance(t, bool) or t < 0:
            raise ScenarioError(f"line {lineno}: field 't' must be a nonnegative integer")
        if t < prev_t:
            raise ScenarioError(
                f"line {lineno}: timestamp {t} is earlier than the previous event at {prev_t}"
            )
        prev_t = t
        data = {key: value for key, value in obj.items() if key not in ("t", "type")}
        events.append(Event(t=t, seq=lineno, kind=kind, data=_validate_event(kind, data, lineno)))
    return Scenario(name=name, events=events)


# ---------------------------------------------------------------------------
# Alert log


@dataclass
class AlertLog:
    entries: list[Alert] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def alert_to_json(alert: Alert) -> str:
    return json.dumps(alert.to_record(), separators=(",", ":"))


def write_alert_log(log: AlertLog, sink: str | Path | IO[str]) -> None:
    text = "".join(alert_to_json(alert) + "\n" for alert in log.entries)
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)


def read_alert_log(source: str | Path | IO[str]) -> list[Alert]:
    """Parse a written alert log back into Alert values (for reporting)."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    alerts: list[Alert] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AlertLogError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise AlertLogError(f"line {lineno}: entry must be an object")
        for name in ("t", "seq", "kind"):
            if name not in obj:
                raise AlertLogError(f"line {lineno}: missing field {name!r}")
        if obj["kind"] not in ALERT_KINDS:
            raise AlertLogError(f"line {lineno}: unknown alert kind {obj['kind']!r}")
        for name in ("t", "seq"):
            if not isinstance(obj[name], int) or isinstance(obj[name], bool):
                raise AlertLogError(f"line {lineno}: field {name!r} must be an integer")
        payload = {key: value for key, value in obj.items() if key not in ("t", "seq", "kind")}
        alerts.append(Alert(t=obj["t"], seq=obj["seq"], kind=obj["kind"], payload=payload))
    return alerts


# ---------------------------------------------------------------------------
# Engine

# Same-instant priority of internal deadlines.
_PRIO_RADIATION = 0
_PRIO_TRACKER = 1
_PRIO_FORWARDER = 2

# Alert kinds that acknowledge a missed item when attended.
_ACK_ITEM_KIND = {"ring": "call", "suppress_note": "call", "beep": "message"}

# External events that end the current exposure stretch; a warning falling on
# the exact same instant is a reach, not a crossing, and must not fire.
_EPOCH_TERMINATORS = frozenset({"call_end", "safety_mode_enter"})


class Engine:
    """One scenario run. Owns copies of the knowledge base and all state."""

    def __init__(self, config: AgentConfig, kb: KnowledgeBase):
        config.validate()
        kb.validate()
        self.config = config
        self.kb = copy.deepcopy(kb)

        self.ctx = ContextEngine(self.kb.context_signals)
        self.battery = BatteryGuard(config)
        self.sleep = SleepGate()
        self.monitor = CallMonitor(config.safe_call_limit_ms)
        self.tracker = CallerTracker()
        self.tally = MissedItemTally()
        self.ledger = AttendanceLedger()

        self.clock = 0
        self.entries: list[Alert] = []
        self.diagnostics: list[str] = []
        self._alert_seq = 0
        self._emitted: dict[int, Alert] = {}
        # heap of (t, subsystem priority, creation order, kind, data)
        self._timers: list[tuple[int, int, int, str, tuple]] = []
        self._timer_order = 0

    # -- plumbing -----------------------------------------------------------

    def _note(self, message: str) -> None:
        self.diagnostics.append(f"t={self.clock}: {message}")

    def _emit(self, kind: str, payload: dict[str, Any]) -> Alert:
        self._alert_seq += 1
        alert = Alert(t=self.clock, seq=self._alert_seq, kind=kind, payload=payload)
        self.entries.append(alert)
        self._emitted[alert.seq] = alert
        if kind in USER_FACING_ALERT_KINDS:
            deadline = self.clock + self.config.attend_window_ms
            self.ledger.track(alert, deadline)
            self._schedule(deadline, _PRIO_FORWARDER, "attendance", (alert.seq,))
        return alert

    def _schedule(self, t: int, prio: int, kind: str, data: tuple) -> None:
        self._timer_order += 1
        heapq.heappush(self._timers, (t, prio, self._timer_order, kind, data))

    def _timer_valid(self, timer: tuple[int, int, int, str, tuple]) -> bool:
        t, _prio, _order, kind, data = timer
        if kind == "crossing":
            token, expected_t = data
            return self.monitor.epoch_token == token and self.monitor.next_warning_at() == expected_t
        if kind == "tracker_timeout":
            task = self.tracker.task_for_prompt(data[0])
            return task is not None and task.state is TrackerState.AWAITING_DELIVERY
        if kind == "attendance":
            return self.ledger.deadline_of(data[0]) is not None
        return False

    def _peek_timer(self) -> tuple[int, int, int, str, tuple] | None:
        while self._timers and not self._timer_valid(self._timers[0]):
            heapq.heappop(self._timers)
        return self._timers[0] if self._timers else None

    def _schedule_crossing(self) -> None:
        due = self.monitor.next_warning_at()
        if due is not None:
            self._schedule(due, _PRIO_RADIATION, "crossing", (self.monitor.epoch_token, due))

    def _snapshot_entries(self) -> list[dict[str, Any]]:
        return [
            {"caller": caller, "kind": kind, "score": score}
            for caller, kind, score in self.tally.snapshot(
                self.kb, self.clock, self.config.sorter_t_floor_min
            )
        ]

    # -- timers -------------------------------------------------------------

    def _fire_timer(
        self,
        timer: tuple[int, int, int, str, tuple],
        events: list[Event],
        next_index: int,
    ) -> None:
        t, _prio, _order, kind, data = timer
        if kind == "crossing":
            # The exposure stretch must continue strictly past this instant:
            # an epoch-ending event at the same t means the limit was only
            # reached, never exceeded, so nothing fires.
            j = next_index
            while j < len(events) and events[j].t == t:
                if events[j].kind in _EPOCH_TERMINATORS:
                    return
                j += 1
            session = self.monitor.session
            assert session is not None
            exposure = self.monitor.note_warning()
            self._emit(
                "radiation_incall_warning",
                {"caller": session.caller_id, "exposure_ms": exposure},
            )
            self._schedule_crossing()
        elif kind == "tracker_timeout":
            task = self.tracker.expire(data[0], now=t, timeout_ms=self.config.tracker_timeout_ms)
            if task is not None:
                self._emit(
                    "tracker_expired",
                    {
                        "prompt_id": task.prompt_id,
                        "callee": task.callee_id,
                        "tracking_msg_id": task.tracking_msg_id,
                    },
                )
        elif kind == "attendance":
            alert = self.ledger.pop_due(data[0])
            if alert is not None:
                for device in matching_devices(self.kb.devices, self.ctx.current, alert.kind):
                    self._emit(
                        "forward_to_device",
                        {"device_id": device.device_id, "alert": alert.to_record()},
                    )

    # -- per-event dispatch --------------------------------------------------

    def _dispatch(self, ev: Event) -> None:
        if ev.kind == "notification_attended":
            self._handle_attended(ev)
            return
        diverted = False
        # context stage
        if ev.kind == "sensor":
            self.ctx.apply_sensor(ev.data["signal_kind"], ev.data["signal_value"])
        elif ev.kind == "user_context":
            self.ctx.apply_user(Context(ev.data["context"]))
        # battery stage
        elif ev.kind == "battery_level":
            if self.battery.on_level(ev.data["pct"]):
                self._emit("sorted_list_snapshot", {"entries": self._snapshot_entries()})
                for spec in self.config.battery_actions:
                    payload: dict[str, Any] = {"action": spec.kind.value}
                    if spec.destination:
                        payload["destination"] = spec.destination
                    self._emit("battery_action", payload)
        if ev.kind == "call_start":
            caller = ev.data["caller"]
            specs, diverted = self.battery.on_incoming_call(self.kb.contact_group(caller))
            for spec in specs:
                payload = {"action": spec.kind.value, "caller": caller}
                if spec.kind is BatteryAction.DIVERT_GROUP_A:
                    payload["destination"] = spec.destination
                self._emit("battery_action", payload)
        # audible stage: ring/suppress for calls, beep for messages
        if ev.kind == "sleep_mode":
            self.sleep.set_active(ev.data["on"], ev.t)
        elif ev.kind == "call_start" and not diverted:
            caller = ev.data["caller"]
            ordinal = alert_ordinal(self.kb.contact_group(caller), self.kb.temp_important(caller))
            decision, count = self.sleep.on_call(caller, ordinal)
            if decision == RING:
                self._emit("ring", {"caller": caller})
            else:
                self._emit(
                    "suppress_note", {"caller": caller, "count": count, "ring_at": ordinal}
                )
        elif ev.kind == "message_received":
            self._emit("beep", {"caller": ev.data["caller"]})
        # radiation stage
        if ev.kind == "call_start":
            caller = ev.data["caller"]
            if self.monitor.session is not None:
                self._note(f"call from {caller!r} while another call is active; not tracked")
            else:
                record = self.kb.safety_records.get(caller)
                if should_warn_precall(record, self.config):
                    assert record is not None
                    self._emit(
                        "radiation_precall_warning",
                        {
                            "caller": caller,
                            "probability": record.unsafe_calls / record.total_calls,
                        },
                    )
                self.monitor.start_call(ev.t, caller, ev.data["safety"])
                self._schedule_crossing()
        elif ev.kind == "call_end":
            if self.monitor.session is None:
                self._note("call_end with no active call")
            else:
                caller, main_ms = self.monitor.end_call(ev.t)
                self.kb.record_call(
                    caller, is_unsafe_call(main_ms, self.config.safe_call_limit_ms)
                )
        elif ev.kind in ("safety_mode_enter", "safety_mode_exit"):
            if self.monitor.session is None:
                self._note(f"{ev.kind} with no active call")
            else:
                self.monitor.on_safety(ev.t, entering=ev.kind == "safety_mode_enter")
                self._schedule_crossing()
        # tracker stage
        elif ev.kind == "call_failed":
            task = self.tracker.on_call_failed(ev.t, ev.data["callee"], ev.data["reason"])
            if task is not None:
                self._emit(
                    "prompt",
                    {
                        "prompt_id": task.prompt_id,
                        "callee": task.callee_id,
                        "reason": task.reason,
                    },
                )
        elif ev.kind == "user_response":
            outcome, task = self.tracker.on_user_response(
                ev.t, ev.data["prompt_id"], ev.data["answer"]
            )
            if outcome == "accepted":
                assert task is not None
                self._emit(
                    "tracker_message",
                    {
                        "tracking_msg_id": task.tracking_msg_id,
                        "callee": task.callee_id,
                        "prompt_id": task.prompt_id,
                    },
                )
                due = max(ev.t, task.created_ms + self.config.tracker_timeout_ms + 1)
                self._schedule(due, _PRIO_TRACKER, "tracker_timeout", (task.prompt_id,))
            elif outcome == "ignored":
                self._note(f"user_response for unknown or settled prompt {ev.data['prompt_id']!r}")
        elif ev.kind == "delivery_report":
            outcome, task = self.tracker.on_delivery_report(
                ev.t, ev.data["tracking_msg_id"], ev.data["positive"]
            )
            if outcome == "done":
                assert task is not None
                self._emit(
                    "tracker_notify",
                    {
                        "prompt_id": task.prompt_id,
                        "callee": task.callee_id,
                        "tracking_msg_id": task.tracking_msg_id,
                    },
                )
            elif outcome == "unknown":
                self._note(
                    f"delivery_report for unknown tracking id {ev.data['tracking_msg_id']!r}"
                )
        # sorter stage
        if ev.kind == "call_start":
            self.tally.add(ev.data["caller"], "call", ev.t)
        elif ev.kind == "message_received":
            self.tally.add(ev.data["caller"], "message", ev.t)
        elif ev.kind == "snapshot_request":
            self._emit("sorted_list_snapshot", {"entries": self._snapshot_entries()})

    def _handle_attended(self, ev: Event) -> None:
        alert_id = ev.data["alert_id"]
        alert = self._emitted.get(alert_id)
        if alert is None:
            self._note(f"notification_attended for unknown alert id {alert_id}")
            return
        # sorter stage: attending the item's alert acknowledges the item
        item_kind = _ACK_ITEM_KIND.get(alert.kind)
        if item_kind is not None:
            self.tally.acknowledge(alert.payload["caller"], item_kind)
        # forwarder stage: a pending entry attended in time never forwards
        self.ledger.attend(alert_id)

    # -- main loop ------------------------------------------------------------

    def run(self, scenario: Scenario) -> AlertLog:
        events = scenario.events
        total = len(events)
        index = 0
        drained = False
        while True:
            if index >= total and not drained:
                drained = True
                # A call the scenario never ended would keep producing
                # exposure warnings forever; stop tracking it, unclassified.
                if self.monitor.session is not None:
                    caller = self.monitor.abandon_call()
                    self._note(
                        f"call from {caller!r} still active at end of scenario; "
                        "exposure tracking stopped"
                    )
            timer = self._peek_timer()
            ev = events[index] if index < total else None
            if timer is None and ev is None:
                break
            if ev is None or (timer is not None and timer[0] <= ev.t):
                heapq.heappop(self._timers)
                self.clock = timer[0]
                self._fire_timer(timer, events, index)
            else:
                self.clock = ev.t
                index += 1
                self._dispatch(ev)
        return AlertLog(entries=self.entries, diagnostics=self.diagnostics)


def run_scenario(
    scenario: Scenario, config: AgentConfig, kb: KnowledgeBase
) -> tuple[AlertLog, KnowledgeBase]:
    """Replay a scenario; returns the alert log and the updated knowledge base.

    The given knowledge base is not modified.
    """
    engine = Engine(config, kb)
    log = engine.run(scenario)
    return log, engine.kb
