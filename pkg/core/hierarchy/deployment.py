import logging
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

from core.config import Settings
from core.control.rules import ReactorRule
from core.errors import ConfigurationError, TopologyError
from core.fabric import Fabric
from core.fabric.types import SimTime
from core.gma import DirectoryActor, MetricEvent, directory_id
from core.hierarchy.host import Host
from core.hierarchy.representation import SystemRepresentation
from core.hierarchy.topology import HierarchyTopology, HostSpec, NodeRole
from core.messages import DeployCommand, ReattachCommand, ReleaseCommand

logger = logging.getLogger(__name__)


class Deployment:
    """
    A topology instantiated on a fabric.

    The harness only creates actors and schedules commands; everything at
    runtime happens through fabric messages.
    """

    def __init__(
            self,
            topology: HierarchyTopology,
            fabric: Optional[Fabric] = None,
            settings: Optional[Settings] = None,
            rules: Optional[Callable[[], Sequence[ReactorRule]]] = None
    ):
        self.topology = topology
        self.fabric = fabric or Fabric()
        self.settings = settings or Settings()
        self.rules = rules
        self.hosts: Dict[str, Host] = {}

    @classmethod
    def build(
            cls,
            topology: HierarchyTopology,
            fabric: Optional[Fabric] = None,
            settings: Optional[Settings] = None,
            rules: Optional[Callable[[], Sequence[ReactorRule]]] = None,
            skip: Iterable[str] = ()
    ) -> "Deployment":
        """Validate the topology and launch every host not listed in ``skip``."""
        topology.validate()
        deployment = cls(topology, fabric, settings, rules)
        skip = set(skip)
        for node_id in topology.hosts:
            if node_id not in skip:
                deployment.launch_host(node_id)
        return deployment

    def launch_host(self, node_id: str) -> Host:
        spec = self.topology.spec(node_id)
        if node_id in self.hosts or self.fabric.has_actor(node_id):
            raise ConfigurationError(f"Host '{node_id}' is already running")
        host = Host(spec, self.settings, self.rules, tier_level=max(1, self.topology.height(node_id)))
        self.fabric.register(host)
        if spec.is_manager:
            parent_dir = directory_id(spec.parent) if spec.parent else None
            self.fabric.register(DirectoryActor(node_id, parent_dir), colocated_with=node_id)
        host.start()
        self.hosts[node_id] = host
        logger.debug(f"Launched {spec.role.value} {node_id} under {spec.parent}")
        return host

    def host(self, node_id: str) -> Host:
        if node_id not in self.hosts:
            raise ConfigurationError(f"Unknown host '{node_id}'")
        return self.hosts[node_id]

    def manager(self, node_id: str) -> Host:
        host = self.host(node_id)
        if not host.is_manager:
            raise ConfigurationError(f"'{node_id}' is a {host.role.value}, not a manager")
        return host

    def managers(self) -> List[str]:
        return [n for n, h in self.hosts.items() if h.is_manager]

    # -- operations ----------------------------------------------------------

    def snapshot(self, manager: str) -> SystemRepresentation:
        """The manager's own placements merged with those of every manager below it."""
        self.manager(manager)
        parts = [self.hosts[n].representation for n in self.topology.subtree(manager)
                 if n in self.hosts and self.hosts[n].is_manager]
        return SystemRepresentation.merged(manager, parts)

    def summarize_up(self, mirror: str, window_close: SimTime) -> List[MetricEvent]:
        return self.manager(mirror).summarize_up(window_close)

    def deploy(self, manager: str, app: str, demand: Dict[str, int], params: Optional[Dict[str, Any]] = None,
               at: Optional[SimTime] = None) -> None:
        self.manager(manager)
        self._command(manager, DeployCommand(app, dict(demand), dict(params or {})), at)

    def release(self, manager: str, app: str, at: Optional[SimTime] = None) -> None:
        self.manager(manager)
        self._command(manager, ReleaseCommand(app), at)

    def reattach(self, node: str, new_parent: str, at: Optional[SimTime] = None) -> None:
        """Move a Mirror or Node under another manager."""
        spec = self.topology.spec(node)
        if spec.role == NodeRole.BOOT:
            raise TopologyError("The Boot cannot be reattached")
        if new_parent not in self.topology or not self.topology.spec(new_parent).is_manager:
            raise TopologyError(f"New parent '{new_parent}' is not a manager")
        if new_parent in self.topology.subtree(node):
            raise TopologyError(f"Moving '{node}' under '{new_parent}' would create a cycle")
        self.topology.set_parent(node, new_parent)
        self._command(node, ReattachCommand(new_parent), at)

    def _command(self, actor: str, command: Any, at: Optional[SimTime]) -> None:
        at = self.fabric.now if at is None else at
        if at < self.fabric.now:
            raise ConfigurationError(f"Command at {at} is in the past (now={self.fabric.now})")
        self.fabric.schedule(actor, at - self.fabric.now, command)

    def run_until(self, t: SimTime):
        return self.fabric.run_until(t)

    def placements(self) -> Dict[str, Dict[str, str]]:
        return {m: self.hosts[m].representation.mapping() for m in self.managers()}
