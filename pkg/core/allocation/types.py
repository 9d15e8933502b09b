from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

from core.errors import ConfigurationError
from core.fabric.types import SimTime
from core.messages import ALLOCATION

Demand = Dict[str, int]


@dataclass(frozen=True)
class Granted:
    node: str

    def as_dict(self) -> dict:
        return {"outcome": "Granted", "node": self.node}


@dataclass(frozen=True)
class Escalated:
    to: str

    def as_dict(self) -> dict:
        return {"outcome": "Escalated", "to": self.to}


@dataclass(frozen=True)
class Delegated:
    to: str

    def as_dict(self) -> dict:
        return {"outcome": "Delegated", "to": self.to}


@dataclass(frozen=True)
class Denied:
    reason: str

    def as_dict(self) -> dict:
        return {"outcome": "Denied", "reason": self.reason}


AllocationOutcome = Union[Granted, Escalated, Delegated, Denied]


class DeploymentState(str, Enum):
    DEPLOYING = "Deploying"
    RUNNING = "Running"
    STOPPED = "Stopped"
    LOST = "Lost"

    @property
    def live(self) -> bool:
        return self in (DeploymentState.DEPLOYING, DeploymentState.RUNNING)


_TRANSITIONS = {
    DeploymentState.DEPLOYING: {DeploymentState.RUNNING, DeploymentState.STOPPED, DeploymentState.LOST},
    DeploymentState.RUNNING: {DeploymentState.STOPPED, DeploymentState.LOST},
    DeploymentState.STOPPED: set(),
    DeploymentState.LOST: set(),
}


@dataclass
class DeploymentRecord:
    app: str
    node: str
    state: DeploymentState
    deployed_at: SimTime
    demand: Demand = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    request_id: Optional[str] = None
    origin: Optional[str] = None
    domain: str = ALLOCATION
    timer: Optional[int] = None

    def move_to(self, state: DeploymentState) -> None:
        if state not in _TRANSITIONS[self.state]:
            raise ConfigurationError(f"Illegal transition for {self.app}: {self.state.value} -> {state.value}")
        self.state = state


@dataclass
class OwnedApp:
    """What an origin manager knows about an app it asked for."""
    app: str
    request_id: str
    demand: Demand
    params: Dict[str, Any]
    domain: str = ALLOCATION
    manager: Optional[str] = None
    node: Optional[str] = None
    state: Optional[str] = None
    release_pending: bool = False
    # (origin, request id) of the request this one re-places after a repair
    on_behalf: Optional[Tuple[str, str]] = None
    timer: Optional[int] = None

    @property
    def settled(self) -> bool:
        return self.state is not None

    @property
    def live(self) -> bool:
        return self.state is None or self.state in (DeploymentState.DEPLOYING.value, DeploymentState.RUNNING.value)
