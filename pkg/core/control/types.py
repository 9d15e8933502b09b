from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from core.config import SENSOR_METRIC, SENSOR_NOISE, SENSOR_PERIOD
from core.errors import ConfigurationError
from core.messages import OPTIMIZATION, REPAIR

MANAGER = "Manager"

TRIGGERS = ("node-failed", "node-available", "node-recovered", "metric", "window")


@dataclass(frozen=True)
class SensorSpec:
    metric: str = SENSOR_METRIC
    period: int = SENSOR_PERIOD
    placement: str = "Node"
    noise: float = SENSOR_NOISE

    def __post_init__(self):
        if self.period <= 0:
            raise ConfigurationError(f"Sensor period must be > 0, got {self.period}")
        if self.noise < 0:
            raise ConfigurationError(f"Sensor noise amplitude must be >= 0, got {self.noise}")


@dataclass(frozen=True)
class Action:
    @property
    def kind(self) -> str:
        return type(self).__name__

    @property
    def target_executor(self) -> str:
        return MANAGER


@dataclass(frozen=True)
class ReplaceNode(Action):
    failed: str
    apps: Tuple[str, ...]
    domain: str = REPAIR


@dataclass(frozen=True)
class TuneParameter(Action):
    node: str
    name: str
    value: Any
    domain: str = OPTIMIZATION

    @property
    def target_executor(self) -> str:
        return f"LocalActuator({self.node})"


@dataclass(frozen=True)
class Rebind(Action):
    component: str
    target: str
    domain: str = OPTIMIZATION


@dataclass(frozen=True)
class StopNode(Action):
    node: str
    domain: str = OPTIMIZATION


class ActionStatus(str, Enum):
    PENDING = "Pending"
    SUCCEEDED = "Succeeded"
    FAILED = "Failed"


@dataclass
class ActionResult:
    """Outcome of one actuated action, with one entry per sub-step."""
    action_id: str
    action: Action
    status: ActionStatus = ActionStatus.PENDING
    reason: Optional[str] = None
    steps: List[Dict[str, Any]] = field(default_factory=list)

    def step(self, name: str, ok: bool, /, **detail: Any) -> None:
        self.steps.append({"step": name, "ok": ok, **detail})

    def succeed(self) -> "ActionResult":
        self.status = ActionStatus.SUCCEEDED
        return self

    def fail(self, reason: str) -> "ActionResult":
        self.status = ActionStatus.FAILED
        self.reason = reason
        return self

    @property
    def done(self) -> bool:
        return self.status != ActionStatus.PENDING
