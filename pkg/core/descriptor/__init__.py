from core.descriptor.launcher import TEMPLATES, launch
from core.descriptor.parser import parse, parse_bindings, placeholders, resolve
from core.descriptor.render import render
from core.descriptor.types import (DeploymentDescriptor, LaunchPlan, Multiplicity, ProcessDefinition, Variable,
                                   VirtualNode)

__all__ = [
    "TEMPLATES",
    "launch",
    "parse",
    "parse_bindings",
    "placeholders",
    "resolve",
    "render",
    "DeploymentDescriptor",
    "LaunchPlan",
    "Multiplicity",
    "ProcessDefinition",
    "Variable",
    "VirtualNode",
]
