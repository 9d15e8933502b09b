"""
Node Discovery Service and HeartBeat emitter.

Managed hosts announce themselves to their manager every ``period``; the
manager keeps one soft-state ``NodeRecord`` per child and, on each sweep, marks
any child silent for longer than ``failure_timeout`` as failed.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable, Dict, List, Optional

from core.config import FAILURE_TIMEOUT, HEARTBEAT_PERIOD, SWEEP_INTERVAL
from core.errors import ConfigurationError
from core.fabric.types import SimTime
from core.messages import Heartbeat, HeartbeatTick

if TYPE_CHECKING:
    from core.hierarchy.host import Host

logger = logging.getLogger(__name__)

NODE_AVAILABLE = "node-available"
NODE_FAILED = "node-failed"
NODE_RECOVERED = "node-recovered"


class NodeStatus(str, Enum):
    AVAILABLE = "Available"
    # reserved; detection is two-state today
    SUSPECTED = "Suspected"
    FAILED = "Failed"


@dataclass(frozen=True)
class HeartbeatConfig:
    period: int = HEARTBEAT_PERIOD
    failure_timeout: int = FAILURE_TIMEOUT
    sweep_interval: int = SWEEP_INTERVAL

    def __post_init__(self):
        if self.period <= 0 or self.sweep_interval <= 0:
            raise ConfigurationError("heartbeat period and sweep_interval must be positive")
        if self.failure_timeout <= self.period:
            raise ConfigurationError(
                f"failure_timeout ({self.failure_timeout}) must exceed period ({self.period})")
        if self.sweep_interval > self.failure_timeout:
            raise ConfigurationError(
                f"sweep_interval ({self.sweep_interval}) must not exceed failure_timeout ({self.failure_timeout})")


@dataclass
class NodeRecord:
    node: str
    last_heartbeat: SimTime
    status: NodeStatus = NodeStatus.AVAILABLE
    capacity: Dict[str, int] = field(default_factory=dict)
    retired: bool = False


@dataclass(frozen=True)
class LifecycleEvent:
    """Published on a manager's event bus when a child changes liveness."""
    kind: str
    node: str
    manager: str
    at: SimTime


class NodeDiscovery:
    """Keeps the manager's dynamic list of available children."""

    def __init__(
            self,
            manager_id: str,
            config: HeartbeatConfig,
            publish: Callable[[LifecycleEvent], None]
    ):
        self.manager_id = manager_id
        self.config = config
        self.records: Dict[str, NodeRecord] = {}
        self._publish = publish

    def record_heartbeat(self, node: str, at: SimTime, capacity: Optional[Dict[str, int]] = None) -> None:
        record = self.records.get(node)
        if record is None:
            self.records[node] = NodeRecord(node=node, last_heartbeat=at, capacity=dict(capacity or {}))
            logger.debug(f"[t={at}] {self.manager_id} discovered {node}")
            self._publish(LifecycleEvent(NODE_AVAILABLE, node, self.manager_id, at))
            return

        record.last_heartbeat = at
        if capacity is not None:
            record.capacity = dict(capacity)
        if record.status == NodeStatus.FAILED and not record.retired:
            record.status = NodeStatus.AVAILABLE
            logger.info(f"[t={at}] {self.manager_id}: {node} recovered")
            self._publish(LifecycleEvent(NODE_RECOVERED, node, self.manager_id, at))

    def sweep(self, now: SimTime) -> List[str]:
        """Mark silent children as failed. Returns only the newly failed ones."""
        failed = []
        for node, record in self.records.items():
            if record.status != NodeStatus.AVAILABLE:
                continue
            if now - record.last_heartbeat > self.config.failure_timeout:
                record.status = NodeStatus.FAILED
                failed.append(node)
        for node in failed:
            logger.info(f"[t={now}] {self.manager_id}: {node} marked failed")
            self._publish(LifecycleEvent(NODE_FAILED, node, self.manager_id, now))
        return failed

    def retire(self, node: str) -> None:
        """Take a node out of service without reporting a failure."""
        record = self.records.get(node)
        if record is not None:
            record.status = NodeStatus.FAILED
            record.retired = True

    def forget(self, node: str) -> None:
        self.records.pop(node, None)

    def available_nodes(self) -> List[str]:
        return [n for n, r in self.records.items() if r.status == NodeStatus.AVAILABLE]

    def status(self, node: str) -> Optional[NodeStatus]:
        record = self.records.get(node)
        return record.status if record else None

    def is_available(self, node: str) -> bool:
        return self.status(node) == NodeStatus.AVAILABLE


class HeartbeatEmitter:
    """Sends the host's heartbeat, carrying its capacity, to whoever is its parent now."""

    def __init__(self, host: "Host", config: HeartbeatConfig, capacity: Dict[str, int]):
        self.host = host
        self.config = config
        self.capacity = dict(capacity)

    def start(self) -> None:
        self.host.schedule(0, HeartbeatTick())

    def emit_heartbeat(self) -> None:
        if self.host.parent is not None:
            self.host.send(self.host.parent, Heartbeat(node=self.host.actor_id, capacity=dict(self.capacity)))
        self.host.schedule(self.config.period, HeartbeatTick())
