from __future__ import annotations

import io

import pytest

from alertagent.engine import (
    alert_to_json,
    parse_scenario,
    read_alert_log,
    run_scenario,
)
from alertagent.errors import ScenarioError
from alertagent.kb import kb_to_text
from alertagent.model import AgentConfig, BatteryAction, BatteryActionSpec
from alertagent.sorter import MissedItemRecord, sort_notifications

from helpers import contact_doc, kb_doc, kinds_of, load_kb_doc, log_text, make_scenario


def run(lines, kb_doc_dict=None, config=None):
    kb = load_kb_doc(kb_doc_dict or kb_doc())
    return run_scenario(make_scenario(lines), config or AgentConfig(), kb)


# -- parsing ----------------------------------------------------------------


def test_parse_empty_file():
    scenario = parse_scenario(io.StringIO(""))
    assert scenario.events == []


def test_parse_single_event_and_seq_by_line_number():
    text = '\n{"t": 0, "type": "battery_level", "pct": 50}\n'
    scenario = parse_scenario(io.StringIO(text))
    assert len(scenario.events) == 1
    assert scenario.events[0].seq == 2  # blank first line still counts


def test_parse_rejects_out_of_range_pct():
    with pytest.raises(ScenarioError) as err:
        parse_scenario(io.StringIO('{"t": 0, "type": "battery_level", "pct": 101}'))
    assert "pct" in str(err.value)


def test_parse_rejects_out_of_order_timestamps():
    text = (
        '{"t": 5, "type": "battery_level", "pct": 50}\n'
        '{"t": 4, "type": "battery_level", "pct": 50}'
    )
    with pytest.raises(ScenarioError) as err:
        parse_scenario(io.StringIO(text))
    assert "line 2" in str(err.value)


def test_parse_names_the_bad_line_and_field():
    lines = ['{"t": %d, "type": "battery_level", "pct": 50}' % i for i in range(6)]
    lines.append('{"t": 9, "type": "call_start"}')  # missing caller on line 7
    with pytest.raises(ScenarioError) as err:
        parse_scenario(io.StringIO("\n".join(lines)))
    message = str(err.value)
    assert "line 7" in message and "caller" in message


@pytest.mark.parametrize(
    "line, fragment",
    [
        ("not json", "invalid JSON"),
        ("[1, 2]", "object"),
        ('{"t": 0}', "type"),
        ('{"t": 0, "type": "warp"}', "unknown event type"),
        ('{"type": "call_end"}', "'t'"),
        ('{"t": -1, "type": "call_end"}', "'t'"),
        ('{"t": 0, "type": "call_end", "bogus": 1}', "unknown field"),
        ('{"t": 0, "type": "user_response", "prompt_id": "p1", "answer": "maybe"}', "answer"),
        ('{"t": 0, "type": "sensor", "signal_kind": "sonar", "signal_value": "x"}', "signal_kind"),
        ('{"t": 0, "type": "call_failed", "callee": "c", "reason": "lost"}', "reason"),
    ],
)
def test_parse_rejects_malformed_lines(line, fragment):
    with pytest.raises(ScenarioError) as err:
        parse_scenario(io.StringIO(line))
    assert fragment in str(err.value)


# -- basic runs ---------------------------------------------------------------


def test_empty_scenario_changes_nothing():
    kb = load_kb_doc(kb_doc(contacts=[contact_doc("c1", "A")]))
    log, final_kb = run_scenario(make_scenario([]), AgentConfig(), kb)
    assert log.entries == [] and log.diagnostics == []
    assert final_kb == kb


def test_input_kb_is_not_mutated():
    kb = load_kb_doc(kb_doc())
    lines = [
        {"t": 0, "type": "call_start", "caller": "c1"},
        {"t": 420_000, "type": "call_end"},
    ]
    run_scenario(make_scenario(lines), AgentConfig(), kb)
    assert kb.safety_records == {}


def test_seven_minute_call_frozen_log():
    log, final_kb = run(
        [
            {"t": 0, "type": "call_start", "caller": "c1"},
            {"t": 420_000, "type": "call_end"},
        ]
    )
    assert [alert_to_json(a) for a in log.entries] == [
        '{"t":0,"seq":1,"kind":"ring","caller":"c1"}',
        '{"t":360000,"seq":2,"kind":"radiation_incall_warning","caller":"c1","exposure_ms":360000}',
    ]
    record = final_kb.safety_records["c1"]
    assert (record.total_calls, record.unsafe_calls) == (1, 1)


def test_alert_times_and_seqs_are_monotone():
    log, _ = run(
        [
            {"t": 0, "type": "call_start", "caller": "c1"},
            {"t": 1000, "type": "call_end"},
            {"t": 2000, "type": "message_received", "caller": "c2"},
            {"t": 900_000, "type": "snapshot_request"},
        ]
    )
    times = [a.t for a in log.entries]
    seqs = [a.seq for a in log.entries]
    assert times == sorted(times)
    assert seqs == sorted(set(seqs))


# -- composition ---------------------------------------------------------------


def test_precall_warning_fires_from_history():
    doc = kb_doc(safety={"c1": {"total": 4, "unsafe": 2}})
    log, _ = run([{"t": 0, "type": "call_start", "caller": "c1"}], doc)
    assert "radiation_precall_warning" in kinds_of(log)
    warning = next(a for a in log.entries if a.kind == "radiation_precall_warning")
    assert warning.payload == {"caller": "c1", "probability": 0.5}


def test_no_precall_warning_without_enough_history():
    doc = kb_doc(safety={"c1": {"total": 2, "unsafe": 2}})
    log, _ = run([{"t": 0, "type": "call_start", "caller": "c1"}], doc)
    assert "radiation_precall_warning" not in kinds_of(log)


def test_sleep_session_gates_calls_but_not_messages():
    doc = kb_doc(contacts=[contact_doc("d1", "D")])
    lines = [{"t": 0, "type": "sleep_mode", "on": True}]
    t = 1000
    for _ in range(3):
        lines.append({"t": t, "type": "call_start", "caller": "d1"})
        lines.append({"t": t + 100, "type": "call_end"})
        t += 1000
    lines.append({"t": t, "type": "message_received", "caller": "d1"})
    log, _ = run(lines, doc)
    assert kinds_of(log) == ["suppress_note", "suppress_note", "suppress_note", "beep"]


def test_suppressed_calls_still_reach_the_callback_list():
    doc = kb_doc(contacts=[contact_doc("d1", "D")])
    lines = [
        {"t": 0, "type": "sleep_mode", "on": True},
        {"t": 1000, "type": "call_start", "caller": "d1"},
        {"t": 1100, "type": "call_end"},
        {"t": 2000, "type": "snapshot_request"},
    ]
    log, _ = run(lines, doc)
    snapshot = next(a for a in log.entries if a.kind == "sorted_list_snapshot")
    assert snapshot.payload["entries"] == [
        {"caller": "d1", "kind": "call", "score": pytest.approx(1.0)}
    ]


def test_attending_a_ring_clears_the_missed_item():
    lines = [
        {"t": 0, "type": "call_start", "caller": "c1"},
        {"t": 100, "type": "call_end"},
        {"t": 200, "type": "notification_attended", "alert_id": 1},
        {"t": 300, "type": "snapshot_request"},
    ]
    log, _ = run(lines)
    snapshot = next(a for a in log.entries if a.kind == "sorted_list_snapshot")
    assert snapshot.payload["entries"] == []


def test_attending_unknown_alert_is_a_diagnostic():
    log, _ = run([{"t": 0, "type": "notification_attended", "alert_id": 42}])
    assert log.entries == []
    assert any("unknown alert id 42" in note for note in log.diagnostics)


def test_battery_burst_snapshot_matches_sorter_state():
    doc = kb_doc(contacts=[contact_doc("a1", "A"), contact_doc("b1", "B")])
    config = AgentConfig()
    lines = [
        {"t": 0, "type": "call_start", "caller": "b1"},
        {"t": 1000, "type": "call_end"},
        {"t": 2000, "type": "message_received", "caller": "a1"},
        {"t": 60_000, "type": "battery_level", "pct": 3},
    ]
    log, _ = run(lines, doc, config)
    snapshot = next(a for a in log.entries if a.kind == "sorted_list_snapshot")
    assert snapshot.t == 60_000

    records = [
        MissedItemRecord("b1", "call", 1, 0),
        MissedItemRecord("a1", "message", 1, 2000),
    ]
    kb = load_kb_doc(doc)
    expected = [
        {"caller": caller, "kind": kind, "score": score}
        for caller, kind, score in sort_notifications(records, kb, 60_000)
    ]
    assert snapshot.payload["entries"] == expected


def test_battery_divert_replaces_ring_and_inform_reacts():
    doc = kb_doc(contacts=[contact_doc("a1", "A"), contact_doc("b1", "B")])
    config = AgentConfig(
        battery_actions=(
            BatteryActionSpec(kind=BatteryAction.INFORM_CALLER),
            BatteryActionSpec(kind=BatteryAction.DIVERT_GROUP_A, destination="+1-999"),
        )
    )
    lines = [
        {"t": 0, "type": "battery_level", "pct": 3},
        {"t": 1000, "type": "call_start", "caller": "a1"},
        {"t": 2000, "type": "call_end"},
        {"t": 3000, "type": "call_start", "caller": "b1"},
        {"t": 4000, "type": "call_end"},
    ]
    log, _ = run(lines, doc, config)
    kinds = kinds_of(log)
    # Burst first: snapshot + one battery_action per configured action.
    assert kinds[:3] == ["sorted_list_snapshot", "battery_action", "battery_action"]
    # Group A call: inform + divert, no ring. Group B call: inform + ring.
    a_alerts = [a for a in log.entries if a.payload.get("caller") == "a1"]
    assert [a.kind for a in a_alerts] == ["battery_action", "battery_action"]
    assert [a.payload["action"] for a in a_alerts] == ["inform_caller", "divert_group_a"]
    assert a_alerts[1].payload["destination"] == "+1-999"
    b_alerts = [a for a in log.entries if a.payload.get("caller") == "b1"]
    assert [a.kind for a in b_alerts] == ["battery_action", "ring"]


def test_every_ring_or_suppress_maps_to_one_call():
    doc = kb_doc(contacts=[contact_doc("d1", "D")])
    lines = [
        {"t": 0, "type": "sleep_mode", "on": True},
        {"t": 1000, "type": "call_start", "caller": "d1"},
        {"t": 1100, "type": "call_end"},
        {"t": 2000, "type": "call_start", "caller": "x9"},
        {"t": 2100, "type": "call_end"},
        {"t": 3000, "type": "sleep_mode", "on": False},
        {"t": 4000, "type": "call_start", "caller": "d1"},
        {"t": 4100, "type": "call_end"},
    ]
    log, _ = run(lines, doc)
    decisions = [a for a in log.entries if a.kind in ("ring", "suppress_note")]
    calls = [l for l in lines if l["type"] == "call_start"]
    assert len(decisions) == len(calls)


# -- tracker through the engine ------------------------------------------------


def test_tracker_full_flow_through_engine():
    lines = [
        {"t": 0, "type": "call_failed", "callee": "c3", "reason": "unreachable"},
        {"t": 1000, "type": "user_response", "prompt_id": "p1", "answer": "yes"},
        {"t": 5000, "type": "delivery_report", "tracking_msg_id": "m1", "positive": False},
        {"t": 9000, "type": "delivery_report", "tracking_msg_id": "m1", "positive": True},
    ]
    log, _ = run(lines)
    assert kinds_of(log) == ["prompt", "tracker_message", "tracker_notify"]
    notify = log.entries[-1]
    assert notify.payload == {"prompt_id": "p1", "callee": "c3", "tracking_msg_id": "m1"}


def test_tracker_timeout_fires_during_drain():
    lines = [
        {"t": 0, "type": "call_failed", "callee": "c3", "reason": "switched_off"},
        {"t": 1000, "type": "user_response", "prompt_id": "p1", "answer": "yes"},
    ]
    log, _ = run(lines)
    assert kinds_of(log) == ["prompt", "tracker_message", "tracker_expired"]
    expired = log.entries[-1]
    assert expired.t == 86_400_001  # created at t=0, strict timeout


def test_late_report_after_timeout_is_ignored():
    lines = [
        {"t": 0, "type": "call_failed", "callee": "c3", "reason": "unreachable"},
        {"t": 1000, "type": "user_response", "prompt_id": "p1", "answer": "yes"},
        {"t": 90_000_000, "type": "delivery_report", "tracking_msg_id": "m1", "positive": True},
    ]
    log, _ = run(lines)
    assert kinds_of(log) == ["prompt", "tracker_message", "tracker_expired"]


def test_response_to_settled_prompt_goes_to_diagnostics():
    lines = [
        {"t": 0, "type": "call_failed", "callee": "c3", "reason": "unreachable"},
        {"t": 1000, "type": "user_response", "prompt_id": "p1", "answer": "no"},
        {"t": 2000, "type": "user_response", "prompt_id": "p1", "answer": "yes"},
    ]
    log, _ = run(lines)
    assert kinds_of(log) == ["prompt"]
    assert any("p1" in note for note in log.diagnostics)


# -- forwarding through the engine ----------------------------------------------


FORWARD_KB = kb_doc(
    devices=[
        {"device_id": "tv", "contexts": ["Home"], "kinds": ["ring", "beep"]},
        {"device_id": "laptop", "contexts": ["Home", "Workspace"], "kinds": ["beep"]},
    ]
)


def test_unattended_ring_forwards_at_the_deadline():
    lines = [
        {"t": 0, "type": "user_context", "context": "Home"},
        {"t": 1000, "type": "call_start", "caller": "c1"},
        {"t": 2000, "type": "call_end"},
    ]
    log, _ = run(lines, FORWARD_KB)
    forwards = [a for a in log.entries if a.kind == "forward_to_device"]
    assert len(forwards) == 1
    assert forwards[0].t == 61_000
    assert forwards[0].payload["device_id"] == "tv"
    assert forwards[0].payload["alert"]["kind"] == "ring"
    assert forwards[0].payload["alert"]["seq"] == 1


def test_attended_alert_never_forwards():
    lines = [
        {"t": 0, "type": "user_context", "context": "Home"},
        {"t": 1000, "type": "call_start", "caller": "c1"},
        {"t": 2000, "type": "call_end"},
        {"t": 31_000, "type": "notification_attended", "alert_id": 1},
    ]
    log, _ = run(lines, FORWARD_KB)
    assert "forward_to_device" not in kinds_of(log)


def test_forwarding_uses_context_at_the_deadline_instant():
    doc = kb_doc(
        devices=[{"device_id": "desk", "contexts": ["Workspace"], "kinds": ["ring"]}]
    )
    lines = [
        {"t": 0, "type": "user_context", "context": "Home"},
        {"t": 1000, "type": "call_start", "caller": "c1"},
        {"t": 2000, "type": "call_end"},
        {"t": 30_000, "type": "user_context", "context": "Workspace"},
    ]
    log, _ = run(lines, doc)
    forwards = [a for a in log.entries if a.kind == "forward_to_device"]
    assert [f.payload["device_id"] for f in forwards] == ["desk"]


def test_no_forwarding_while_context_unknown():
    lines = [
        {"t": 1000, "type": "call_start", "caller": "c1"},
        {"t": 2000, "type": "call_end"},
    ]
    log, _ = run(lines, FORWARD_KB)
    assert "forward_to_device" not in kinds_of(log)


def test_internal_deadline_fires_before_same_instant_event():
    lines = [
        {"t": 0, "type": "user_context", "context": "Home"},
        {"t": 1000, "type": "call_start", "caller": "c1"},
        {"t": 2000, "type": "call_end"},
        {"t": 61_000, "type": "message_received", "caller": "c2"},
    ]
    log, _ = run(lines, FORWARD_KB)
    at_deadline = [a.kind for a in log.entries if a.t == 61_000]
    assert at_deadline == ["forward_to_device", "beep"]


def test_attendance_at_the_deadline_instant_is_too_late():
    lines = [
        {"t": 0, "type": "user_context", "context": "Home"},
        {"t": 1000, "type": "call_start", "caller": "c1"},
        {"t": 2000, "type": "call_end"},
        {"t": 61_000, "type": "notification_attended", "alert_id": 1},
    ]
    log, _ = run(lines, FORWARD_KB)
    assert "forward_to_device" in kinds_of(log)


# -- exposure warnings through the engine ---------------------------------------


def test_warning_skipped_when_call_ends_exactly_on_the_limit():
    log, final_kb = run(
        [
            {"t": 0, "type": "call_start", "caller": "c1"},
            {"t": 360_000, "type": "call_end"},
        ]
    )
    assert "radiation_incall_warning" not in kinds_of(log)
    record = final_kb.safety_records["c1"]
    assert (record.total_calls, record.unsafe_calls) == (1, 0)


def test_warning_skipped_when_safety_starts_exactly_on_the_limit():
    log, _ = run(
        [
            {"t": 0, "type": "call_start", "caller": "c1"},
            {"t": 360_000, "type": "safety_mode_enter"},
            {"t": 400_000, "type": "call_end"},
        ]
    )
    assert "radiation_incall_warning" not in kinds_of(log)


def test_warning_fires_when_unrelated_event_shares_the_instant():
    log, _ = run(
        [
            {"t": 0, "type": "call_start", "caller": "c1"},
            {"t": 360_000, "type": "message_received", "caller": "c2"},
            {"t": 400_000, "type": "call_end"},
        ]
    )
    at_limit = [a.kind for a in log.entries if a.t == 360_000]
    assert at_limit == ["radiation_incall_warning", "beep"]


def test_open_call_at_scenario_end_is_abandoned():
    log, final_kb = run([{"t": 0, "type": "call_start", "caller": "c1"}])
    warnings = [a for a in log.entries if a.kind == "radiation_incall_warning"]
    assert warnings == []
    assert final_kb.safety_records == {}
    assert any("still active" in note for note in log.diagnostics)


def test_overlapping_call_start_goes_to_diagnostics():
    log, final_kb = run(
        [
            {"t": 0, "type": "call_start", "caller": "c1"},
            {"t": 1000, "type": "call_start", "caller": "c2"},
            {"t": 2000, "type": "call_end"},
        ]
    )
    assert any("another call is active" in note for note in log.diagnostics)
    # The overlapping call still rings and still counts as a missed item.
    assert kinds_of(log).count("ring") == 2
    assert "c1" in final_kb.safety_records and "c2" not in final_kb.safety_records


def test_safety_transition_outside_a_call_is_a_diagnostic():
    log, _ = run([{"t": 0, "type": "safety_mode_enter"}])
    assert log.entries == []
    assert any("no active call" in note for note in log.diagnostics)


# -- determinism and log io -----------------------------------------------------


def test_same_scenario_runs_identically():
    doc = kb_doc(contacts=[contact_doc("a1", "A")])
    lines = [
        {"t": 0, "type": "call_start", "caller": "a1"},
        {"t": 500_000, "type": "call_end"},
        {"t": 500_500, "type": "snapshot_request"},
    ]
    outputs = set()
    for _ in range(3):
        log, final_kb = run(lines, doc)
        outputs.add(log_text(log) + "|" + kb_to_text(final_kb))
    assert len(outputs) == 1


def test_alert_log_round_trip():
    lines = [
        {"t": 0, "type": "call_start", "caller": "c1"},
        {"t": 100, "type": "call_end"},
        {"t": 200, "type": "snapshot_request"},
    ]
    log, _ = run(lines)
    text = log_text(log)
    parsed = read_alert_log(io.StringIO(text))
    assert [(a.t, a.seq, a.kind) for a in parsed] == [
        (a.t, a.seq, a.kind) for a in log.entries
    ]
    assert parsed[-1].payload["entries"] == log.entries[-1].payload["entries"]
