"""
Node-selection policies.

A policy sees only feasible candidates and returns one of them. Candidates
arrive sorted by node id, so "lowest id" means lexicographically smallest.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

from core.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Candidate:
    node: str
    free: Dict[str, int]

    def fits(self, demand: Dict[str, int]) -> bool:
        return all(self.free.get(resource, 0) >= units for resource, units in demand.items())

    def free_for(self, demand: Dict[str, int]) -> int:
        resources = demand or self.free
        return sum(self.free.get(resource, 0) for resource in resources)


Policy = Callable[[Sequence[Candidate], Dict[str, int]], Optional[str]]

POLICIES: Dict[str, Policy] = {}


def allocation_policy(name: str):
    def register(func: Policy) -> Policy:
        POLICIES[name] = func
        return func

    return register


@allocation_policy("most-free")
def most_free(candidates: Sequence[Candidate], demand: Dict[str, int]) -> Optional[str]:
    """Feasible node with the most free capacity, ties broken by lowest id."""
    best: Optional[Candidate] = None
    for candidate in sorted(candidates, key=lambda c: c.node):
        if not candidate.fits(demand):
            continue
        if best is None or candidate.free_for(demand) > best.free_for(demand):
            best = candidate
    return best.node if best else None


@allocation_policy("first-fit")
def first_fit(candidates: Sequence[Candidate], demand: Dict[str, int]) -> Optional[str]:
    for candidate in sorted(candidates, key=lambda c: c.node):
        if candidate.fits(demand):
            return candidate.node
    return None


def least_loaded(candidates: Sequence[Candidate], demand: Dict[str, int], exclude: Sequence[str] = ()) -> Optional[str]:
    """Rebalancing target: most-free among feasible nodes not in ``exclude``."""
    return most_free([c for c in candidates if c.node not in exclude], demand)


def get_policy(name: str) -> Policy:
    if name not in POLICIES:
        raise ConfigurationError(f"Unknown allocation policy '{name}', expected one of {sorted(POLICIES)}")
    return POLICIES[name]


def policy_names() -> List[str]:
    return sorted(POLICIES)
