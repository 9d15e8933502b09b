"""
Fabric message vocabulary.

Every message knows its monitoring domain so traces can be filtered by it.
Messages whose domain depends on who caused them (an install issued by a repair
versus one issued by a plain deploy) carry ``domain`` as a field; the rest
use the class-level ``DOMAIN``.
"""
import dataclasses
from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, Optional, Tuple

from core.fabric.trace import to_jsonable

MEMBERSHIP = "membership"
MONITORING = "monitoring"
ALLOCATION = "allocation"
REPAIR = "repair"
OPTIMIZATION = "optimization"
CONTROL = "control"

DOMAINS = (MEMBERSHIP, MONITORING, ALLOCATION, REPAIR, OPTIMIZATION, CONTROL)


@dataclass(frozen=True)
class Message:
    DOMAIN: ClassVar[str] = CONTROL

    @property
    def message_domain(self) -> str:
        return getattr(self, "domain", None) or self.DOMAIN

    def summary(self) -> dict:
        body = {f.name: to_jsonable(getattr(self, f.name))
                for f in dataclasses.fields(self) if f.name != "domain"}
        return {"type": type(self).__name__, "domain": self.message_domain, **body}


# -- membership --------------------------------------------------------------

@dataclass(frozen=True)
class Heartbeat(Message):
    DOMAIN: ClassVar[str] = MEMBERSHIP
    node: str
    capacity: Dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class HeartbeatTick(Message):
    DOMAIN: ClassVar[str] = MEMBERSHIP


@dataclass(frozen=True)
class SweepTick(Message):
    DOMAIN: ClassVar[str] = MEMBERSHIP


@dataclass(frozen=True)
class Detach(Message):
    """Sent by a host to its old manager when it moves under a new one."""
    DOMAIN: ClassVar[str] = MEMBERSHIP
    node: str


# -- monitoring --------------------------------------------------------------

@dataclass(frozen=True)
class Register(Message):
    DOMAIN: ClassVar[str] = MONITORING
    subject: str
    kind: str
    properties: Tuple[str, ...]
    ttl: int


@dataclass(frozen=True)
class Lookup(Message):
    DOMAIN: ClassVar[str] = MONITORING
    request_id: str
    wanted: Tuple[str, ...]
    reply_to: str
    forward_on_miss: bool = False


@dataclass(frozen=True)
class LookupReply(Message):
    DOMAIN: ClassVar[str] = MONITORING
    request_id: str
    producers: Tuple[str, ...]


@dataclass(frozen=True)
class Subscribe(Message):
    DOMAIN: ClassVar[str] = MONITORING
    consumer: str


@dataclass(frozen=True)
class Unsubscribe(Message):
    DOMAIN: ClassVar[str] = MONITORING
    consumer: str


@dataclass(frozen=True)
class Query(Message):
    DOMAIN: ClassVar[str] = MONITORING
    reply_to: str


@dataclass(frozen=True)
class QueryReply(Message):
    DOMAIN: ClassVar[str] = MONITORING
    producer: str
    event: Optional[Any] = None


@dataclass(frozen=True)
class RefreshTick(Message):
    DOMAIN: ClassVar[str] = MONITORING


@dataclass(frozen=True)
class DiscoveryTick(Message):
    DOMAIN: ClassVar[str] = MONITORING


@dataclass(frozen=True)
class SenseTick(Message):
    DOMAIN: ClassVar[str] = MONITORING


@dataclass(frozen=True)
class WindowTick(Message):
    DOMAIN: ClassVar[str] = MONITORING
    close: int


# -- allocation and deployment -----------------------------------------------

@dataclass(frozen=True)
class AllocationRequest(Message):
    request_id: str
    app: str
    demand: Dict[str, int]
    params: Dict[str, Any]
    origin: str
    hop_count: int = 0
    delegated: bool = False
    domain: str = ALLOCATION


@dataclass(frozen=True)
class AllocationDeclined(Message):
    request_id: str
    app: str
    domain: str = ALLOCATION


@dataclass(frozen=True)
class AllocationAccepted(Message):
    """A delegated request was granted below the delegatee."""
    request_id: str
    app: str
    domain: str = ALLOCATION


@dataclass(frozen=True)
class DeployOutcome(Message):
    """Terminal answer for a request, sent by whichever manager settled it."""
    request_id: str
    app: str
    outcome: str
    node: Optional[str] = None
    manager: Optional[str] = None
    state: Optional[str] = None
    reason: Optional[str] = None
    hosted_as: Optional[str] = None
    domain: str = ALLOCATION


@dataclass(frozen=True)
class Install(Message):
    request_id: str
    app: str
    demand: Dict[str, int]
    params: Dict[str, Any]
    domain: str = ALLOCATION


@dataclass(frozen=True)
class InstallAck(Message):
    request_id: str
    app: str
    node: str
    domain: str = ALLOCATION


@dataclass(frozen=True)
class InstallTimeout(Message):
    request_id: str
    domain: str = ALLOCATION


@dataclass(frozen=True)
class DelegationTimeout(Message):
    """A delegated request got no answer from ``mirror`` in time."""
    request_id: str
    mirror: str
    domain: str = ALLOCATION


@dataclass(frozen=True)
class RequestTimeout(Message):
    """The origin gave up waiting for a terminal outcome."""
    request_id: str
    domain: str = ALLOCATION


@dataclass(frozen=True)
class Uninstall(Message):
    app: str
    domain: str = ALLOCATION


@dataclass(frozen=True)
class ReleaseRequest(Message):
    app: str
    request_id: Optional[str] = None
    domain: str = ALLOCATION


# -- control loops -----------------------------------------------------------

@dataclass(frozen=True)
class SetParameter(Message):
    action_id: str
    name: str
    value: Any
    domain: str = OPTIMIZATION


@dataclass(frozen=True)
class ParameterAck(Message):
    action_id: str
    node: str
    name: str
    value: Any
    domain: str = OPTIMIZATION


@dataclass(frozen=True)
class Shutdown(Message):
    action_id: str
    domain: str = OPTIMIZATION


@dataclass(frozen=True)
class RepairEscalation(Message):
    DOMAIN: ClassVar[str] = REPAIR
    origin: str
    node: str
    apps: Tuple[str, ...]
    reason: str


# -- harness commands (delivered as timers) ----------------------------------

@dataclass(frozen=True)
class DeployCommand(Message):
    app: str
    demand: Dict[str, int]
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ReleaseCommand(Message):
    app: str


@dataclass(frozen=True)
class ReattachCommand(Message):
    parent: str
