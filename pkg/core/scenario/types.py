from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from core.config import DEFAULT_DROP_RATE, DEFAULT_LATENCY, Settings
from core.fabric.types import FaultSpec, SimTime
from core.hierarchy.topology import HierarchyTopology


@dataclass(frozen=True)
class WorkloadCommand:
    at: SimTime
    kind: str
    target: str
    app: Optional[str] = None
    demand: Dict[str, int] = field(default_factory=dict)
    params: Dict[str, Any] = field(default_factory=dict)
    parent: Optional[str] = None


@dataclass(frozen=True)
class RandomWorkload:
    commands: int = 50
    apps: int = 10
    demand: Tuple[int, int] = (1, 2)
    start: SimTime = 1000
    end: SimTime = 50000
    managers: Tuple[str, ...] = ()
    resource: str = "cpu"


@dataclass(frozen=True)
class DescriptorRef:
    path: Path
    bindings: Dict[str, str] = field(default_factory=dict)
    template: str = "jadeNode"
    virtual_node: Optional[str] = None
    parent: Optional[str] = None


@dataclass(frozen=True)
class RuleSpec:
    name: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class AssertionSpec:
    kind: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    topology: HierarchyTopology
    duration: SimTime
    seed: int = 0
    settings: Settings = field(default_factory=Settings)
    latency: int = DEFAULT_LATENCY
    drop_rate: float = DEFAULT_DROP_RATE
    descriptor: Optional[DescriptorRef] = None
    faults: List[FaultSpec] = field(default_factory=list)
    rules: List[RuleSpec] = field(default_factory=list)
    workload: List[WorkloadCommand] = field(default_factory=list)
    random_workload: Optional[RandomWorkload] = None
    assertions: List[AssertionSpec] = field(default_factory=list)
    source: Optional[Path] = None


@dataclass
class AssertionOutcome:
    kind: str
    passed: bool
    detail: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class RunReport:
    scenario: str
    seed: int
    duration: SimTime
    hosts: Dict[str, int]
    windows: Dict[str, List[dict]]
    received: Dict[str, List[int]]
    lifecycle: Dict[str, int]
    repair_episodes: List[dict]
    allocation: Dict[str, int]
    representation: Dict[str, List[dict]]
    assertions: List[AssertionOutcome] = field(default_factory=list)
    out_dir: Optional[str] = None

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def as_dict(self) -> dict:
        data = asdict(self)
        data["passed"] = self.passed
        return data
