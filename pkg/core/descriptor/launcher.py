import logging
from dataclasses import replace
from typing import TYPE_CHECKING, Dict, List, Optional

from core.descriptor.types import LaunchPlan
from core.errors import DescriptorError
from core.hierarchy.topology import HostSpec, NodeRole

if TYPE_CHECKING:
    from core.hierarchy.deployment import Deployment

logger = logging.getLogger(__name__)

# command templates; "jade" takes the role from the topology
TEMPLATES: Dict[str, Optional[NodeRole]] = {
    "jadeBoot": NodeRole.BOOT,
    "jadeMirror": NodeRole.MIRROR,
    "jadeNode": NodeRole.NODE,
    "jade": None,
}


def launch(
        plan: LaunchPlan,
        deployment: "Deployment",
        template: str = "jadeNode",
        virtual_node: Optional[str] = None,
        parent: Optional[str] = None
) -> List[str]:
    """
    Start one host per target, named by its host token.

    Targets already in the topology keep their declared parent and settings.
    Others are attached under ``parent`` with that parent's settings. Every
    check runs before the first actor is created, so a failed launch leaves
    the fabric untouched.
    """
    if template not in TEMPLATES:
        raise DescriptorError(f"unknown command template '{template}', expected one of {sorted(TEMPLATES)}")
    role = TEMPLATES[template]
    if virtual_node is not None and virtual_node not in plan.targets:
        raise DescriptorError(f"plan has no virtual node '{virtual_node}'")
    targets = list(plan.targets[virtual_node]) if virtual_node else plan.all_targets
    if not targets:
        raise DescriptorError("launch plan has no targets")

    duplicates = sorted({t for t in targets if targets.count(t) > 1})
    if duplicates:
        raise DescriptorError(f"duplicate host token(s): {', '.join(duplicates)}")

    topology = deployment.topology
    specs: List[HostSpec] = []
    new: List[HostSpec] = []
    for target in targets:
        if deployment.fabric.has_actor(target):
            raise DescriptorError(f"host '{target}' is already running")
        if target in topology:
            spec = topology.spec(target)
            if role is not None and spec.role != role:
                raise DescriptorError(f"template '{template}' starts a {role.value}, "
                                      f"but '{target}' is a {spec.role.value} in the topology")
        else:
            if role is None:
                raise DescriptorError(f"'{target}' is not in the topology; template 'jade' cannot pick a role")
            if parent is None or parent not in topology or not topology.spec(parent).is_manager:
                raise DescriptorError(f"'{target}' is not in the topology and no manager parent was given")
            spec = replace(topology.spec(parent), node_id=target, role=role, parent=parent)
            new.append(spec)
        specs.append(spec)

    for spec in new:
        topology.add(spec)
    problems = topology.violations()
    if problems:
        for spec in new:
            del topology.hosts[spec.node_id]
        raise DescriptorError("launch would break the topology: " + "; ".join(problems))

    created = [deployment.launch_host(spec.node_id).actor_id for spec in specs]
    logger.info(f"Launched {len(created)} host(s) with template {template}: {created}")
    return created
