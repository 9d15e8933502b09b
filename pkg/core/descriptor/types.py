from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple


class Multiplicity(str, Enum):
    SINGLE = "single"
    MULTIPLE = "multiple"


@dataclass(frozen=True)
class Variable:
    name: str
    default: Optional[str] = None


@dataclass(frozen=True)
class VirtualNode:
    name: str
    multiplicity: Multiplicity = Multiplicity.SINGLE
    timeout: int = 0


@dataclass(frozen=True)
class ProcessDefinition:
    name: str
    launcher_kind: str
    hostlist_expr: str


@dataclass(frozen=True)
class DeploymentDescriptor:
    variables: Tuple[Variable, ...] = ()
    virtual_nodes: Tuple[VirtualNode, ...] = ()
    mappings: Tuple[Tuple[str, str], ...] = ()
    process_definitions: Tuple[ProcessDefinition, ...] = ()

    def variable(self, name: str) -> Optional[Variable]:
        return next((v for v in self.variables if v.name == name), None)

    def virtual_node(self, name: str) -> Optional[VirtualNode]:
        return next((v for v in self.virtual_nodes if v.name == name), None)

    def process(self, name: str) -> Optional[ProcessDefinition]:
        return next((p for p in self.process_definitions if p.name == name), None)

    def process_for(self, virtual_node: str) -> Optional[ProcessDefinition]:
        target = dict(self.mappings).get(virtual_node)
        return self.process(target) if target else None


@dataclass(frozen=True)
class LaunchPlan:
    """Resolved host tokens per virtual node, in declaration and input order."""
    targets: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    launchers: Dict[str, str] = field(default_factory=dict)
    bindings: Dict[str, str] = field(default_factory=dict)
    command: str = ""

    @property
    def all_targets(self) -> List[str]:
        return [t for hosts in self.targets.values() for t in hosts]
