"""Core domain types: contact groups, events, alerts, agent configuration."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .errors import ConfigError


class Group(str, Enum):
    """Contact classification. A is the inner circle, D covers unknown callers."""

    A = "A"
    B = "B"
    C = "C"
    D = "D"


_WEIGHTS = {Group.A: 4, Group.B: 3, Group.C: 2, Group.D: 1}


def group_weight(group: Group) -> int:
    """Priority weight of a group: A=4, B=3, C=2, D=1."""
    return _WEIGHTS[group]


@dataclass(frozen=True)
class Contact:
    id: str
    display_name: str
    group: Group
    temp_important: bool = False


EVENT_KINDS: tuple[str, ...] = (
    "call_start",
    "call_end",
    "call_failed",
    "message_received",
    "battery_level",
    "sensor",
    "user_context",
    "user_response",
    "delivery_report",
    "notification_attended",
    "sleep_mode",
    "safety_mode_enter",
    "safety_mode_exit",
    "snapshot_request",
)


@dataclass(frozen=True)
class Event:
    """One timestamped input to the engine.

    ``t`` is virtual milliseconds since the scenario epoch. ``seq`` breaks
    ties between events sharing the same ``t`` (file order).
    """

    t: int
    seq: int
    kind: str
    data: dict[str, Any] = field(default_factory=dict)


ALERT_KINDS: tuple[str, ...] = (
    "ring",
    "beep",
    "suppress_note",
    "prompt",
    "tracker_message",
    "tracker_notify",
    "tracker_expired",
    "radiation_precall_warning",
    "radiation_incall_warning",
    "battery_action",
    "forward_to_device",
    "sorted_list_snapshot",
)

# Alert kinds presented directly to the user. Only these enter the
# attendance ledger and are eligible for forwarding to registered devices.
USER_FACING_ALERT_KINDS = frozenset(
    {
        "ring",
        "beep",
        "tracker_notify",
        "radiation_precall_warning",
        "radiation_incall_warning",
    }
)


@dataclass(frozen=True)
class Alert:
    """One output decision. ``seq`` is unique and strictly increasing per run."""

    t: int
    seq: int
    kind: str
    payload: dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> dict[str, Any]:
        """Flat record in canonical key order: t, seq, kind, then sorted payload keys."""
        record: dict[str, Any] = {"t": self.t, "seq": self.seq, "kind": self.kind}
        for key in sorted(self.payload):
            record[key] = self.payload[key]
        return record


class BatteryAction(str, Enum):
    INFORM_CALLER = "inform_caller"
    DIVERT_GROUP_A = "divert_group_a"
    SEND_STATUS_SMS = "send_status_sms"
    EMAIL_STATUS = "email_status"


# Actions whose destination (phone number or address) must be configured.
_NEEDS_DESTINATION = frozenset(
    {BatteryAction.DIVERT_GROUP_A, BatteryAction.SEND_STATUS_SMS, BatteryAction.EMAIL_STATUS}
)


@dataclass(frozen=True)
class BatteryActionSpec:
    """One enabled low-battery action and its destination, if it needs one."""

    kind: BatteryAction
    destination: str = ""


@dataclass(frozen=True)
class AgentConfig:
    """Tunable thresholds for every subsystem, all on the virtual clock."""

    battery_critical_pct: int = 4
    battery_rearm_pct: int = 20
    safe_call_limit_ms: int = 360_000
    precall_prob_threshold: float = 0.5
    precall_min_calls: int = 3
    attend_window_ms: int = 60_000
    tracker_timeout_ms: int = 86_400_000
    sorter_t_floor_min: float = 1.0
    battery_actions: tuple[BatteryActionSpec, ...] = ()

    def validate(self) -> None:
        if not 0 < self.battery_critical_pct < self.battery_rearm_pct <= 100:
            raise ConfigError(
                "battery thresholds must satisfy 0 < battery_critical_pct "
                f"< battery_rearm_pct <= 100, got {self.battery_critical_pct} "
                f"and {self.battery_rearm_pct}"
            )
        for name in ("safe_call_limit_ms", "attend_window_ms", "tracker_timeout_ms"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name}: must be positive")
        if self.sorter_t_floor_min <= 0:
            raise ConfigError("sorter_t_floor_min: must be positive")
        if not 0.0 <= self.precall_prob_threshold <= 1.0:
            raise ConfigError("precall_prob_threshold: must be within [0, 1]")
        if self.precall_min_calls < 0:
            raise ConfigError("precall_min_calls: must be nonnegative")
        for spec in self.battery_actions:
            if spec.kind in _NEEDS_DESTINATION and not spec.destination:
                raise ConfigError(f"battery action {spec.kind.value}: destination required")
