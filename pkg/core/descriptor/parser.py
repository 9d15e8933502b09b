"""
Deployment descriptor grammar, one declaration per line::

    # comment
    variable NODES
    variable USER = admin
    virtualnode grid multiple timeout=30000
    mapping grid -> g5k
    process g5k launcher=ssh hostlist="${NODES}"

Declarations may appear in any order; cross references are checked once the
whole document has been read. ``launcher`` is an opaque tag.
"""
import logging
import re
import shlex
from typing import Dict, List, Mapping, Optional, Tuple

from core.descriptor.types import (DeploymentDescriptor, LaunchPlan, Multiplicity, ProcessDefinition, Variable,
                                   VirtualNode)
from core.errors import DescriptorError

logger = logging.getLogger(__name__)

PLACEHOLDER = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")
NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.-]*$")


def placeholders(expr: str) -> List[str]:
    return PLACEHOLDER.findall(expr)


def parse(text: str) -> DeploymentDescriptor:
    variables: List[Variable] = []
    virtual_nodes: List[VirtualNode] = []
    mappings: List[Tuple[str, str]] = []
    processes: List[ProcessDefinition] = []
    lines: Dict[Tuple[str, str], int] = {}

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()

        if keyword == "variable":
            name, _, default = rest.partition("=")
            name = _name(name.strip(), number, "variable")
            if any(v.name == name for v in variables):
                raise DescriptorError(f"duplicate variable '{name}'", number)
            variables.append(Variable(name, default.strip() if "=" in rest else None))
            lines[("variable", name)] = number

        elif keyword == "virtualnode":
            virtual_nodes.append(_virtual_node(rest, number, virtual_nodes))
            lines[("virtualnode", virtual_nodes[-1].name)] = number

        elif keyword == "mapping":
            source, arrow, target = rest.partition("->")
            if not arrow:
                raise DescriptorError(f"expected 'mapping VIRTUALNODE -> PROCESS', got '{line}'", number)
            source = _name(source.strip(), number, "virtual node")
            if any(s == source for s, _ in mappings):
                raise DescriptorError(f"duplicate mapping for virtual node '{source}'", number)
            mappings.append((source, _name(target.strip(), number, "process definition")))
            lines[("mapping", source)] = number

        elif keyword == "process":
            processes.append(_process(rest, number, processes))
            lines[("process", processes[-1].name)] = number

        else:
            raise DescriptorError(f"unknown declaration '{keyword}'", number)

    descriptor = DeploymentDescriptor(tuple(variables), tuple(virtual_nodes), tuple(mappings), tuple(processes))
    _check_references(descriptor, lines)
    logger.debug(f"Parsed descriptor: {len(variables)} variable(s), {len(virtual_nodes)} virtual node(s)")
    return descriptor


def _name(value: str, number: int, what: str) -> str:
    if not NAME.match(value):
        raise DescriptorError(f"invalid {what} name '{value}'", number)
    return value


def _options(tokens: List[str], number: int, allowed: Tuple[str, ...]) -> Dict[str, str]:
    options = {}
    for token in tokens:
        key, eq, value = token.partition("=")
        if not eq or key not in allowed:
            raise DescriptorError(f"unexpected option '{token}', expected one of {allowed}", number)
        options[key] = value
    return options


def _split(rest: str, number: int) -> List[str]:
    try:
        return shlex.split(rest)
    except ValueError as e:
        raise DescriptorError(str(e), number) from e


def _virtual_node(rest: str, number: int, seen: List[VirtualNode]) -> VirtualNode:
    tokens = _split(rest, number)
    if len(tokens) < 2:
        raise DescriptorError("expected 'virtualnode NAME single|multiple [timeout=MS]'", number)
    name = _name(tokens[0], number, "virtual node")
    if any(v.name == name for v in seen):
        raise DescriptorError(f"duplicate virtual node '{name}'", number)
    try:
        multiplicity = Multiplicity(tokens[1])
    except ValueError:
        raise DescriptorError(f"multiplicity must be 'single' or 'multiple', got '{tokens[1]}'", number) from None
    options = _options(tokens[2:], number, ("timeout",))
    timeout = options.get("timeout", "0")
    if not timeout.isdigit():
        raise DescriptorError(f"timeout must be a non-negative integer, got '{timeout}'", number)
    return VirtualNode(name, multiplicity, int(timeout))


def _process(rest: str, number: int, seen: List[ProcessDefinition]) -> ProcessDefinition:
    tokens = _split(rest, number)
    if not tokens:
        raise DescriptorError("expected 'process NAME launcher=KIND hostlist=\"...\"'", number)
    name = _name(tokens[0], number, "process definition")
    if any(p.name == name for p in seen):
        raise DescriptorError(f"duplicate process definition '{name}'", number)
    options = _options(tokens[1:], number, ("launcher", "hostlist"))
    for required in ("launcher", "hostlist"):
        if required not in options:
            raise DescriptorError(f"process '{name}' is missing {required}=", number)
    return ProcessDefinition(name, options["launcher"], options["hostlist"])


def _check_references(descriptor: DeploymentDescriptor, lines: Dict[Tuple[str, str], int]) -> None:
    declared = {v.name for v in descriptor.variables}
    for process in descriptor.process_definitions:
        for variable in placeholders(process.hostlist_expr):
            if variable not in declared:
                raise DescriptorError(f"undeclared variable {variable} in hostlist of '{process.name}'",
                                      lines[("process", process.name)])
    for source, target in descriptor.mappings:
        number = lines[("mapping", source)]
        if descriptor.virtual_node(source) is None:
            raise DescriptorError(f"mapping from unknown virtual node '{source}'", number)
        if descriptor.process(target) is None:
            raise DescriptorError(f"unknown process definition '{target}'", number)


def parse_bindings(pairs: List[str]) -> Dict[str, str]:
    """``NAME=value`` strings, as given with ``-DNAME=value``."""
    bindings = {}
    for pair in pairs:
        name, eq, value = pair.partition("=")
        if not eq or not name:
            raise DescriptorError(f"binding must look like NAME=value, got '{pair}'")
        bindings[name] = value
    return bindings


def resolve(descriptor: DeploymentDescriptor, bindings: Mapping[str, str],
            command: Optional[str] = None) -> LaunchPlan:
    """Expand every mapped virtual node's host list into ordered targets."""
    values: Dict[str, str] = {}
    for variable in descriptor.variables:
        if variable.name in bindings:
            values[variable.name] = str(bindings[variable.name])
        elif variable.default is not None:
            values[variable.name] = variable.default

    targets: Dict[str, Tuple[str, ...]] = {}
    launchers: Dict[str, str] = {}
    for vn in descriptor.virtual_nodes:
        process = descriptor.process_for(vn.name)
        if process is None:
            continue
        for variable in placeholders(process.hostlist_expr):
            if variable not in values:
                raise DescriptorError(f"unbound variable {variable}")
        expanded = PLACEHOLDER.sub(lambda m: values[m.group(1)], process.hostlist_expr)
        if "${" in expanded:
            raise DescriptorError(f"unresolved placeholder left in '{expanded}'")
        hosts = tuple(expanded.split())
        if not hosts:
            raise DescriptorError(f"empty host list for virtual node '{vn.name}'")
        if vn.multiplicity == Multiplicity.SINGLE and len(hosts) != 1:
            raise DescriptorError(f"virtual node '{vn.name}' is single but resolved to {len(hosts)} hosts")
        targets[vn.name] = hosts
        launchers[vn.name] = process.launcher_kind

    used = {k: values[k] for k in sorted(values)}
    flags = " ".join(f"-D{k}={shlex.quote(v)}" for k, v in used.items())
    return LaunchPlan(targets=targets, launchers=launchers, bindings=used,
                      command=f"launch {flags} {command}".strip() if command else f"launch {flags}".strip())
