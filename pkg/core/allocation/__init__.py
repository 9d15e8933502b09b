from core.allocation.allocator import Allocator
from core.allocation.deployer import ResourceDeployer
from core.allocation.policy import POLICIES, Candidate, allocation_policy, get_policy, least_loaded, policy_names
from core.allocation.types import (AllocationOutcome, Delegated, Denied, DeploymentRecord, DeploymentState, Escalated,
                                   Granted, OwnedApp)

__all__ = [
    "Allocator",
    "ResourceDeployer",
    "POLICIES",
    "Candidate",
    "allocation_policy",
    "get_policy",
    "least_loaded",
    "policy_names",
    "AllocationOutcome",
    "Granted",
    "Escalated",
    "Delegated",
    "Denied",
    "DeploymentRecord",
    "DeploymentState",
    "OwnedApp",
]
