"""Deterministic event-driven smartphone alert agent.

Replays timestamped device/user event traces through a rule-based alert
policy (callback-priority sorting, suppression-session gating, battery
actions, call-exposure warnings, reachability tracking, device forwarding)
and produces a reproducible alert log.
"""

from .context import Context, ContextEngine, SensorObservation
from .engine import (
    AlertLog,
    Engine,
    Scenario,
    parse_scenario,
    read_alert_log,
    run_scenario,
    write_alert_log,
)
from .errors import (
    AlertLogError,
    ConfigError,
    InputError,
    KnowledgeBaseError,
    ScenarioError,
)
from .forwarder import DeviceRegistration
from .kb import KnowledgeBase, SafetyRecord, load_kb, save_kb
from .config import load_config
from .model import (
    AgentConfig,
    Alert,
    BatteryAction,
    BatteryActionSpec,
    Contact,
    Event,
    Group,
    group_weight,
)
from .sorter import MissedItemRecord, priority_score, sort_notifications
from .sleep import alert_ordinal

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "Alert",
    "AlertLog",
    "AlertLogError",
    "BatteryAction",
    "BatteryActionSpec",
    "ConfigError",
    "Contact",
    "Context",
    "ContextEngine",
    "DeviceRegistration",
    "Engine",
    "Event",
    "Group",
    "InputError",
    "KnowledgeBase",
    "KnowledgeBaseError",
    "MissedItemRecord",
    "SafetyRecord",
    "Scenario",
    "ScenarioError",
    "SensorObservation",
    "alert_ordinal",
    "group_weight",
    "load_config",
    "load_kb",
    "parse_scenario",
    "priority_score",
    "read_alert_log",
    "run_scenario",
    "save_kb",
    "sort_notifications",
    "write_alert_log",
    "__version__",
]
