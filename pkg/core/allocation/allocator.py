import logging
from typing import TYPE_CHECKING, Callable, Dict, List, Optional

from core.allocation.policy import Candidate, get_policy
from core.allocation.types import Demand

if TYPE_CHECKING:
    from core.membership import NodeDiscovery

logger = logging.getLogger(__name__)


class Allocator:
    """
    Per-manager reservation table and node-selection policy.

    Only children that announced a non-empty capacity in their heartbeats are
    hostable, so Mirrors are never picked.
    """

    def __init__(
            self,
            manager: str,
            discovery: "NodeDiscovery",
            policy: str,
            on_change: Callable[[str, Demand], None]
    ):
        self.manager = manager
        self.discovery = discovery
        self.policy_name = policy
        self.policy = get_policy(policy)
        self.reservations: Dict[str, Dict[str, Demand]] = {}
        self._on_change = on_change

    def capacity(self, node: str) -> Demand:
        record = self.discovery.records.get(node)
        return dict(record.capacity) if record else {}

    def reserved(self, node: str) -> Demand:
        total: Demand = {}
        for demand in self.reservations.get(node, {}).values():
            for resource, units in demand.items():
                total[resource] = total.get(resource, 0) + units
        return total

    def free(self, node: str) -> Demand:
        reserved = self.reserved(node)
        return {r: units - reserved.get(r, 0) for r, units in self.capacity(node).items()}

    def candidates(self) -> List[Candidate]:
        return [
            Candidate(node, self.free(node))
            for node in sorted(self.discovery.available_nodes())
            if self.capacity(node)
        ]

    def choose(self, demand: Demand) -> Optional[str]:
        return self.policy(self.candidates(), demand)

    def fits(self, node: str, demand: Demand) -> bool:
        return any(c.node == node and c.fits(demand) for c in self.candidates())

    def reserve(self, node: str, key: str, demand: Demand) -> None:
        self.reservations.setdefault(node, {})[key] = dict(demand)
        logger.debug(f"{self.manager}: reserved {demand} on {node} for {key}")
        self._on_change(node, self.reserved(node))

    def release(self, node: str, key: str) -> Optional[Demand]:
        demand = self.reservations.get(node, {}).pop(key, None)
        if demand is not None:
            if not self.reservations[node]:
                del self.reservations[node]
            self._on_change(node, self.reserved(node))
        return demand

    def hostable_children(self) -> List[str]:
        return [n for n in sorted(self.discovery.records) if self.capacity(n)]
