from core.control.actuator import Actuator, LocalActuator
from core.control.reactor import Reactor
from core.control.rules import TYPE_MAP, ReactorRule, RuleContext, RuleRegistry, reactor_rule
from core.control.sensor import Sensor
from core.control.types import (MANAGER, TRIGGERS, Action, ActionResult, ActionStatus, Rebind, ReplaceNode,
                                SensorSpec, StopNode, TuneParameter)

__all__ = [
    "Actuator",
    "LocalActuator",
    "Reactor",
    "TYPE_MAP",
    "ReactorRule",
    "RuleContext",
    "RuleRegistry",
    "reactor_rule",
    "Sensor",
    "MANAGER",
    "TRIGGERS",
    "Action",
    "ActionResult",
    "ActionStatus",
    "Rebind",
    "ReplaceNode",
    "SensorSpec",
    "StopNode",
    "TuneParameter",
]
