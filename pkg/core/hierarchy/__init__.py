from core.hierarchy.deployment import Deployment
from core.hierarchy.host import Host
from core.hierarchy.representation import Placement, SystemRepresentation
from core.hierarchy.topology import HierarchyTopology, HostSpec, NodeRole

__all__ = [
    "Deployment",
    "Host",
    "Placement",
    "SystemRepresentation",
    "HierarchyTopology",
    "HostSpec",
    "NodeRole",
]
