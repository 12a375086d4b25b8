"""Forwarding of unattended user-facing alerts to registered devices."""

from __future__ import annotations

from dataclasses import dataclass

from .context import Context
from .model import Alert


@dataclass(frozen=True)
class DeviceRegistration:
    """A device that accepts certain alert kinds while in certain contexts."""

    device_id: str
    contexts: frozenset[Context]
    kinds: frozenset[str]


def matching_devices(
    devices: list[DeviceRegistration], current: Context, alert_kind: str
) -> list[DeviceRegistration]:
    """Devices registered for (current context, alert kind), in registry order.

    Forwarding is inert while the context is Unknown.
    """
    if current is Context.UNKNOWN:
        return []
    return [d for d in devices if current in d.contexts and alert_kind in d.kinds]


class AttendanceLedger:
    """Pending user-facing alerts, keyed by alert seq, each with a deadline."""

    def __init__(self) -> None:
        self._pending: dict[int, tuple[Alert, int]] = {}

    def track(self, alert: Alert, deadline_ms: int) -> None:
        self._pending[alert.seq] = (alert, deadline_ms)

    def attend(self, alert_seq: int) -> bool:
        """Remove a pending entry. True if the alert was still pending."""
        return self._pending.pop(alert_seq, None) is not None

    def pop_due(self, alert_seq: int) -> Alert | None:
        """Take the alert out for deadline handling; None if already attended."""
        entry = self._pending.pop(alert_seq, None)
        return entry[0] if entry is not None else None

    def deadline_of(self, alert_seq: int) -> int | None:
        entry = self._pending.get(alert_seq)
        return entry[1] if entry is not None else None

    def __len__(self) -> int:
        return len(self._pending)
