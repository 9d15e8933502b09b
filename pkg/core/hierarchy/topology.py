import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence

from core.config import CAPACITY
from core.control.types import SensorSpec
from core.errors import TopologyError
from core.gma.types import AggregationSpec
from core.membership import HeartbeatConfig

logger = logging.getLogger(__name__)


class NodeRole(str, Enum):
    BOOT = "Boot"
    MIRROR = "Mirror"
    NODE = "Node"


@dataclass
class HostSpec:
    node_id: str
    role: NodeRole
    parent: Optional[str] = None
    heartbeat: HeartbeatConfig = field(default_factory=HeartbeatConfig)
    aggregation: AggregationSpec = field(default_factory=AggregationSpec)
    sensor: SensorSpec = field(default_factory=SensorSpec)
    capacity: Dict[str, int] = field(default_factory=lambda: dict(CAPACITY))

    @property
    def is_manager(self) -> bool:
        return self.role in (NodeRole.BOOT, NodeRole.MIRROR)


class HierarchyTopology:
    """The Boot/Mirror/Node tree. Hosts keep declaration order."""

    def __init__(self, hosts: Iterable[HostSpec] = ()):
        self.hosts: Dict[str, HostSpec] = {}
        for spec in hosts:
            self.add(spec)

    def add(self, spec: HostSpec) -> None:
        if spec.node_id in self.hosts:
            raise TopologyError(f"Duplicate host '{spec.node_id}'")
        self.hosts[spec.node_id] = spec

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.hosts

    def __len__(self) -> int:
        return len(self.hosts)

    def spec(self, node_id: str) -> HostSpec:
        if node_id not in self.hosts:
            raise TopologyError(f"Unknown host '{node_id}'")
        return self.hosts[node_id]

    def role(self, node_id: str) -> NodeRole:
        return self.spec(node_id).role

    def parent(self, node_id: str) -> Optional[str]:
        return self.spec(node_id).parent

    def set_parent(self, node_id: str, parent: str) -> None:
        self.hosts[node_id] = replace(self.spec(node_id), parent=parent)

    def children(self, node_id: str) -> List[str]:
        return [n for n, s in self.hosts.items() if s.parent == node_id]

    @property
    def root(self) -> str:
        boots = [n for n, s in self.hosts.items() if s.role == NodeRole.BOOT]
        if len(boots) != 1:
            raise TopologyError(f"Expected exactly one Boot, found {len(boots)}")
        return boots[0]

    def subtree(self, node_id: str) -> List[str]:
        """Pre-order list of node_id and everything below it."""
        out = [node_id]
        for child in self.children(node_id):
            out.extend(self.subtree(child))
        return out

    def depth_of(self, node_id: str) -> int:
        depth = 0
        while self.parent(node_id) is not None:
            node_id = self.parent(node_id)
            depth += 1
        return depth

    def depth(self) -> int:
        return max((self.depth_of(n) for n in self.hosts), default=0)

    def height(self, node_id: str) -> int:
        children = self.children(node_id)
        return 1 + max(self.height(c) for c in children) if children else 0

    def managers(self) -> List[str]:
        return [n for n, s in self.hosts.items() if s.is_manager]

    def violations(self) -> List[str]:
        problems = []
        boots = [n for n, s in self.hosts.items() if s.role == NodeRole.BOOT]
        if len(boots) != 1:
            problems.append(f"expected exactly one Boot, found {len(boots)}: {boots}")
        for node_id, spec in self.hosts.items():
            if spec.role == NodeRole.BOOT:
                if spec.parent is not None:
                    problems.append(f"Boot '{node_id}' must not have a parent")
                continue
            if spec.parent is None:
                problems.append(f"{spec.role.value} '{node_id}' has no parent (multiple roots)")
            elif spec.parent not in self.hosts:
                problems.append(f"'{node_id}' has unknown parent '{spec.parent}'")
            elif self.hosts[spec.parent].role == NodeRole.NODE:
                problems.append(f"'{node_id}' has a Node ('{spec.parent}') as parent")
        problems.extend(self._cycles())
        return problems

    def _cycles(self) -> List[str]:
        problems = []
        for start in self.hosts:
            seen = [start]
            current = self.hosts[start].parent
            while current is not None and current in self.hosts:
                if current in seen:
                    problems.append(f"cycle through '{start}': {' -> '.join(seen + [current])}")
                    break
                seen.append(current)
                current = self.hosts[current].parent
        return problems

    def validate(self) -> "HierarchyTopology":
        problems = self.violations()
        if problems:
            raise TopologyError("Invalid topology: " + "; ".join(problems))
        return self

    @classmethod
    def from_parents(
            cls,
            parents: Dict[str, Optional[str]],
            roles: Optional[Dict[str, NodeRole]] = None,
            **defaults
    ) -> "HierarchyTopology":
        """
        Build a tree from a parent map.

        Unless given explicitly, the parentless host is the Boot, hosts with
        children are Mirrors and the rest are Nodes.
        """
        roles = dict(roles or {})
        with_children = {p for p in parents.values() if p is not None}
        topology = cls()
        for node_id, parent in parents.items():
            role = roles.get(node_id)
            if role is None:
                role = NodeRole.BOOT if parent is None else (
                    NodeRole.MIRROR if node_id in with_children else NodeRole.NODE)
            topology.add(HostSpec(node_id=node_id, role=role, parent=parent, **defaults))
        return topology

    @classmethod
    def seven_node(cls, **defaults) -> "HierarchyTopology":
        """1 Boot, 2 Mirrors, 2 Nodes under each Mirror."""
        return cls.from_parents({
            "boot": None,
            "m1": "boot", "m2": "boot",
            "n3": "m1", "n4": "m1",
            "n5": "m2", "n6": "m2",
        }, **defaults)

    @classmethod
    def balanced(cls, fanouts: Sequence[int], **defaults) -> "HierarchyTopology":
        """Boot with ``fanouts[0]`` children, each with ``fanouts[1]``, and so on; the last level are Nodes."""
        parents: Dict[str, Optional[str]] = {"boot": None}
        level = ["boot"]
        mirrors, nodes = 0, 0
        for depth, fanout in enumerate(fanouts):
            leaf_level = depth == len(fanouts) - 1
            next_level = []
            for parent in level:
                for _ in range(fanout):
                    if leaf_level:
                        nodes += 1
                        name = f"n{nodes}"
                    else:
                        mirrors += 1
                        name = f"m{mirrors}"
                    parents[name] = parent
                    next_level.append(name)
            level = next_level
        return cls.from_parents(parents, **defaults)
