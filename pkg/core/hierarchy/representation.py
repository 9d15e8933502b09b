from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

from core.fabric.types import SimTime


@dataclass(frozen=True)
class Placement:
    component: str
    node: str
    name: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    since: SimTime = 0


class SystemRepresentation:
    """A manager's picture of what runs where under it."""

    def __init__(self, manager: str):
        self.manager = manager
        self.placements: Dict[str, Placement] = {}
        self.last_updated: SimTime = 0

    def place(self, component: str, node: str, parameters: Optional[Dict[str, Any]], at: SimTime,
              name: Optional[str] = None) -> Placement:
        placement = Placement(component, node, name or component, dict(parameters or {}), at)
        self.placements[component] = placement
        self.last_updated = at
        return placement

    def remove(self, component: str, at: SimTime) -> Optional[Placement]:
        placement = self.placements.pop(component, None)
        if placement is not None:
            self.last_updated = at
        return placement

    def node_of(self, component: str) -> Optional[str]:
        placement = self.placements.get(component)
        return placement.node if placement else None

    def apps_on(self, node: str) -> List[str]:
        return [c for c, p in self.placements.items() if p.node == node]

    def mapping(self) -> Dict[str, str]:
        return {c: p.node for c, p in self.placements.items()}

    def as_records(self) -> List[dict]:
        return [
            {"manager": self.manager, "component": p.component, "node": p.node, "name": p.name,
             "parameters": dict(p.parameters), "since": p.since}
            for p in sorted(self.placements.values(), key=lambda p: p.component)
        ]

    @classmethod
    def merged(cls, manager: str, parts: Iterable["SystemRepresentation"]) -> "SystemRepresentation":
        merged = cls(manager)
        for part in parts:
            merged.placements.update(part.placements)
            merged.last_updated = max(merged.last_updated, part.last_updated)
        return merged
