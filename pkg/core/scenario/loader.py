"""
Scenario files.

A scenario is one YAML document::

    name: seven-node
    seed: 1
    duration: 60000
    defaults: {latency: 10, heartbeat: {period: 1000}, aggregation: {window: 5000}, policy: most-free}
    topology: {preset: seven-node}        # or {balanced: [4, 4]} or {hosts: [...]}
    descriptor: {file: ../descriptors/grid.desc, bindings: {NODES: n3 n4}, template: jadeNode}
    faults: [{crash: n3, at: 20500}]
    rules: [{rule: replace_failed_node}]
    workload: [{at: 500, deploy: A, manager: m1, demand: {cpu: 2}}]
    assertions: [{kind: lifecycle, event: node-failed, expected: 1}]

Precedence, lowest first: ``core.config`` constants, ``defaults``, per-host
keys under ``topology.hosts``, ``key=value`` overrides, then explicit
seed/duration/binding arguments. Every problem found is reported at once.
"""
import logging
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional

import yaml

from core.allocation.policy import get_policy
from core.config import ALIASES, DEFAULT_DROP_RATE, DEFAULT_LATENCY, SCENARIO_DIR, Settings
from core.control.types import SensorSpec
from core.errors import ConfigurationError, HiermonError, ScenarioError
from core.fabric.types import FaultSpec
from core.gma.types import AggregationSpec
from core.hierarchy.topology import HierarchyTopology, HostSpec, NodeRole
from core.membership import HeartbeatConfig
from core.scenario.assertions import ASSERTIONS, check_params
from core.scenario.types import (AssertionSpec, DescriptorRef, RandomWorkload, RuleSpec, Scenario,
                                 WorkloadCommand)
from rules import DEFAULT_RULES, build_registry

logger = logging.getLogger(__name__)

TOP_LEVEL = {"name", "seed", "duration", "defaults", "topology", "descriptor", "faults", "rules", "workload",
             "assertions", "description"}
DEFAULT_KEYS = {"latency", "drop_rate", "heartbeat", "aggregation", "sensor", "capacity", "install_timeout",
                "allocation_timeout", "request_timeout",
                "policy", "registration_refresh", "registration_ttl", "discovery_delay", "disabled_domains"}
HOST_KEYS = {"id", "role", "parent", "heartbeat", "aggregation", "sensor", "capacity"}


def load_scenario(
        path,
        overrides: Iterable[str] = (),
        seed: Optional[int] = None,
        duration: Optional[int] = None,
        bindings: Optional[Dict[str, str]] = None
) -> Scenario:
    path = resolve_scenario(path)
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as e:
        raise ScenarioError([f"cannot read scenario: {e}"], str(path)) from e
    except yaml.YAMLError as e:
        raise ScenarioError([f"invalid YAML: {e}"], str(path)) from e
    if not isinstance(document, dict):
        raise ScenarioError(["scenario must be a mapping at the top level"], str(path))

    document.setdefault("name", path.stem)
    apply_overrides(document, overrides)
    if seed is not None:
        document["seed"] = seed
    if duration is not None:
        document["duration"] = duration
    if bindings:
        descriptor = document.setdefault("descriptor", {})
        if isinstance(descriptor, dict):
            descriptor.setdefault("bindings", {}).update(bindings)
    return from_document(document, base_dir=path.parent, source=path)



def resolve_scenario(name_or_path) -> Path:
    """A scenario file path, or the name of a bundled scenario such as ``seven-node``."""
    path = Path(name_or_path)
    if path.exists() or path.suffix:
        return path
    bundled = Path(SCENARIO_DIR) / f"{ALIASES.get(path.name, path.name)}.yaml"
    return bundled if bundled.exists() else path


def apply_overrides(document: Dict[str, Any], overrides: Iterable[str]) -> None:
    """``a.b.c=value`` sets a nested key; the value is read as YAML, so numbers stay numbers."""
    for override in overrides:
        key, eq, raw = override.partition("=")
        if not eq or not key:
            raise ScenarioError([f"override must look like key=value, got '{override}'"])
        node = document
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.get(part)
            if not isinstance(child, dict):
                child = node[part] = {}
            node = child
        node[parts[-1]] = yaml.safe_load(raw)


def from_document(document: Dict[str, Any], base_dir: Path = Path("."), source: Optional[Path] = None) -> Scenario:
    violations: List[str] = []

    def check(what: str, build: Callable[[], Any], fallback: Any = None) -> Any:
        try:
            return build()
        except (HiermonError, TypeError, ValueError) as e:
            violations.append(f"{what}: {e}")
            return fallback

    for key in sorted(set(document) - TOP_LEVEL):
        violations.append(f"unknown top-level key '{key}'")

    seed = document.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        violations.append(f"seed must be an integer, got {seed!r}")
        seed = 0
    duration = document.get("duration")
    if not isinstance(duration, int) or duration <= 0:
        violations.append(f"duration must be a positive integer (ms), got {duration!r}")
        duration = 0

    defaults = document.get("defaults") or {}
    if not isinstance(defaults, dict):
        violations.append("defaults must be a mapping")
        defaults = {}
    for key in sorted(set(defaults) - DEFAULT_KEYS):
        violations.append(f"unknown key 'defaults.{key}'")

    settings = check("defaults", lambda: _settings(defaults), Settings())
    host_defaults = {
        "heartbeat": check("defaults.heartbeat", lambda: HeartbeatConfig(**(defaults.get("heartbeat") or {})),
                           HeartbeatConfig()),
        "aggregation": check("defaults.aggregation", lambda: _aggregation(defaults.get("aggregation") or {}),
                             AggregationSpec()),
        "sensor": check("defaults.sensor", lambda: SensorSpec(**(defaults.get("sensor") or {})), SensorSpec()),
        "capacity": dict(defaults.get("capacity") or settings.capacity),
    }
    topology = _topology(document.get("topology"), host_defaults, violations)
    known = set(topology.hosts) if topology else set()

    descriptor = _descriptor(document.get("descriptor"), base_dir, violations)
    faults = _faults(document.get("faults") or [], duration, known, violations)
    rules = _rules(document.get("rules"), violations)
    workload, random_workload = _workload(document.get("workload") or [], duration, known, violations)
    assertions = _assertions(document.get("assertions") or [], violations)

    if violations:
        raise ScenarioError(violations, str(source) if source else document.get("name"))

    scenario = Scenario(
        name=str(document["name"]), topology=topology, duration=duration, seed=seed, settings=settings,
        latency=defaults.get("latency", DEFAULT_LATENCY), drop_rate=defaults.get("drop_rate", DEFAULT_DROP_RATE),
        descriptor=descriptor, faults=faults, rules=rules, workload=workload, random_workload=random_workload,
        assertions=assertions, source=source,
    )
    logger.debug(f"Loaded scenario {scenario.name}: {len(topology)} hosts, {len(faults)} faults, "
                 f"{len(workload)} commands")
    return scenario


def _settings(defaults: Dict[str, Any]) -> Settings:
    settings = Settings()
    for key in ("install_timeout", "allocation_timeout", "request_timeout", "policy", "registration_refresh",
                "registration_ttl", "discovery_delay"):
        if key in defaults:
            settings = replace(settings, **{key: defaults[key]})
    if "disabled_domains" in defaults:
        settings = replace(settings, disabled_domains=tuple(defaults["disabled_domains"]))
    if "capacity" in defaults:
        settings = replace(settings, capacity=dict(defaults["capacity"]))
    if "registration_ttl" not in defaults and "registration_refresh" in defaults:
        settings = replace(settings, registration_ttl=3 * settings.registration_refresh)
    get_policy(settings.policy)
    for value, name in ((settings.install_timeout, "install_timeout"),
                        (settings.allocation_timeout, "allocation_timeout"),
                        (settings.request_timeout, "request_timeout"),
                        (settings.registration_refresh, "registration_refresh"),
                        (settings.registration_ttl, "registration_ttl")):
        if not isinstance(value, int) or value <= 0:
            raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
    if settings.request_timeout <= settings.install_timeout:
        raise ConfigurationError(f"request_timeout ({settings.request_timeout}) must exceed "
                                 f"install_timeout ({settings.install_timeout})")
    return settings


def _aggregation(block: Dict[str, Any]) -> AggregationSpec:
    block = dict(block)
    if "functions" in block:
        block["functions"] = tuple(block["functions"])
    return AggregationSpec(**block)


def _host_spec(entry: Dict[str, Any], defaults: Dict[str, Any], role: NodeRole) -> HostSpec:
    heartbeat = defaults["heartbeat"]
    if "heartbeat" in entry:
        heartbeat = replace(heartbeat, **entry["heartbeat"])
    aggregation = defaults["aggregation"]
    if "aggregation" in entry:
        aggregation = _aggregation({**vars(aggregation), **entry["aggregation"]})
    sensor = defaults["sensor"]
    if "sensor" in entry:
        sensor = replace(sensor, **entry["sensor"])
    return HostSpec(node_id=str(entry["id"]), role=role, parent=entry.get("parent"), heartbeat=heartbeat,
                    aggregation=aggregation, sensor=sensor, capacity=dict(entry.get("capacity", defaults["capacity"])))


def _topology(block: Any, defaults: Dict[str, Any], violations: List[str]) -> Optional[HierarchyTopology]:
    if not isinstance(block, dict):
        violations.append("topology is required: {preset: seven-node}, {balanced: [...]} or {hosts: [...]}")
        return None
    try:
        if ALIASES.get(block.get("preset"), block.get("preset")) == "seven-node":
            topology = HierarchyTopology.seven_node(**defaults)
        elif "balanced" in block:
            topology = HierarchyTopology.balanced([int(f) for f in block["balanced"]], **defaults)
        elif "preset" in block:
            violations.append(f"unknown topology preset '{block['preset']}'")
            return None
        else:
            topology = _explicit_topology(block.get("hosts") or [], defaults, violations)
            if topology is None:
                return None
        topology.validate()
        return topology
    except HiermonError as e:
        violations.append(f"topology: {e}")
        return None


def _explicit_topology(hosts: List[Any], defaults: Dict[str, Any],
                       violations: List[str]) -> Optional[HierarchyTopology]:
    if not hosts:
        violations.append("topology.hosts is empty")
        return None
    parents = {}
    for i, entry in enumerate(hosts):
        if not isinstance(entry, dict) or "id" not in entry:
            violations.append(f"topology.hosts[{i}] needs an 'id'")
            return None
        for key in sorted(set(entry) - HOST_KEYS):
            violations.append(f"topology.hosts[{i}]: unknown key '{key}'")
        parents[str(entry["id"])] = entry.get("parent")
    with_children = {p for p in parents.values() if p is not None}
    topology = HierarchyTopology()
    for i, entry in enumerate(hosts):
        try:
            if "role" in entry:
                role = NodeRole(entry["role"])
            elif entry.get("parent") is None:
                role = NodeRole.BOOT
            else:
                role = NodeRole.MIRROR if str(entry["id"]) in with_children else NodeRole.NODE
            topology.add(_host_spec(entry, defaults, role))
        except (HiermonError, TypeError, ValueError) as e:
            violations.append(f"topology.hosts[{i}] ({entry.get('id')}): {e}")
    return topology


def _descriptor(block: Any, base_dir: Path, violations: List[str]) -> Optional[DescriptorRef]:
    if block is None:
        return None
    if not isinstance(block, dict) or "file" not in block:
        violations.append("descriptor needs a 'file'")
        return None
    path = (base_dir / block["file"]).resolve()
    if not path.exists():
        violations.append(f"descriptor file not found: {path}")
    return DescriptorRef(path=path, bindings={str(k): str(v) for k, v in (block.get("bindings") or {}).items()},
                         template=block.get("template", "jadeNode"), virtual_node=block.get("virtual_node"),
                         parent=block.get("parent"))


def _faults(entries: List[Any], duration: int, known: set, violations: List[str]) -> List[FaultSpec]:
    faults = []
    for i, entry in enumerate(entries):
        where = f"faults[{i}]"
        if not isinstance(entry, dict):
            violations.append(f"{where} must be a mapping")
            continue
        if "crash" in entry or "restart" in entry:
            kind = "crash" if "crash" in entry else "restart"
            actor, at = entry[kind], entry.get("at")
            if actor not in known:
                violations.append(f"{where}: unknown host '{actor}'")
            if not isinstance(at, int) or not 0 <= at <= duration:
                violations.append(f"{where}: 'at' must be within [0, duration], got {at!r}")
                continue
            faults.append(FaultSpec(kind=kind, actor=actor, at=at))
        elif "drop_rate" in entry:
            link = entry.get("link") or []
            if len(link) != 2 or any(a not in known for a in link):
                violations.append(f"{where}: link must name two known hosts, got {link!r}")
                continue
            faults.append(FaultSpec.drop_rate(tuple(link), float(entry["drop_rate"])))
        elif "partition" in entry:
            groups = entry["partition"]
            start, until = entry.get("start", 0), entry.get("until", duration)
            if not isinstance(groups, list) or len(groups) != 2:
                violations.append(f"{where}: partition needs two groups")
                continue
            if not 0 <= start <= until <= duration:
                violations.append(f"{where}: partition window {start}..{until} outside [0, duration]")
                continue
            faults.append(FaultSpec.partition(groups[0], groups[1], start, until))
        else:
            violations.append(f"{where}: expected one of crash, restart, drop_rate, partition")
    return faults


def _rules(entries: Any, violations: List[str]) -> List[RuleSpec]:
    if entries is None:
        entries = DEFAULT_RULES
    registry = build_registry()
    rules = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "rule" not in entry:
            violations.append(f"rules[{i}] needs a 'rule'")
            continue
        params = entry.get("params") or {}
        problems = registry.check(entry["rule"], params)
        violations.extend(f"rules[{i}]: {p}" for p in problems)
        if not problems:
            rules.append(RuleSpec(entry["rule"], dict(params)))
    return rules


def _workload(entries: List[Any], duration: int, known: set, violations: List[str]):
    commands: List[WorkloadCommand] = []
    random_workload = None
    for i, entry in enumerate(entries):
        where = f"workload[{i}]"
        if not isinstance(entry, dict):
            violations.append(f"{where} must be a mapping")
            continue
        if "random" in entry:
            block = dict(entry["random"] or {})
            if "demand" in block:
                block["demand"] = tuple(block["demand"])
            block["managers"] = tuple(block.get("managers") or ())
            try:
                random_workload = RandomWorkload(**block)
            except TypeError as e:
                violations.append(f"{where}: {e}")
                continue
            unknown = [m for m in random_workload.managers if m not in known]
            if unknown or not random_workload.managers:
                violations.append(f"{where}: random workload needs known managers, got {list(random_workload.managers)}")
            if not 0 <= random_workload.start < random_workload.end <= duration:
                violations.append(f"{where}: random window must lie within [0, duration]")
            continue

        at = entry.get("at")
        if not isinstance(at, int) or not 0 <= at <= duration:
            violations.append(f"{where}: 'at' must be within [0, duration], got {at!r}")
            continue
        if "deploy" in entry or "release" in entry:
            kind = "deploy" if "deploy" in entry else "release"
            manager = entry.get("manager")
            if manager not in known:
                violations.append(f"{where}: unknown manager {manager!r}")
                continue
            demand = entry.get("demand") or {}
            if kind == "deploy" and (not demand or any(not isinstance(v, int) or v <= 0 for v in demand.values())):
                violations.append(f"{where}: deploy needs a demand of positive integers")
                continue
            commands.append(WorkloadCommand(at, kind, manager, app=str(entry[kind]), demand=dict(demand),
                                            params=dict(entry.get("params") or {})))
        elif "reattach" in entry:
            node, parent = entry["reattach"], entry.get("parent")
            if node not in known or parent not in known:
                violations.append(f"{where}: reattach needs known hosts, got {node!r} -> {parent!r}")
                continue
            commands.append(WorkloadCommand(at, "reattach", node, parent=parent))
        else:
            violations.append(f"{where}: expected deploy, release, reattach or random")
    return commands, random_workload


def _assertions(entries: List[Any], violations: List[str]) -> List[AssertionSpec]:
    assertions = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "kind" not in entry:
            violations.append(f"assertions[{i}] needs a 'kind'")
            continue
        if entry["kind"] not in ASSERTIONS:
            violations.append(f"assertions[{i}]: unknown kind '{entry['kind']}', expected one of {sorted(ASSERTIONS)}")
            continue
        params = {k: v for k, v in entry.items() if k != "kind"}
        problems = check_params(entry["kind"], params)
        if problems:
            violations.extend(f"assertions[{i}]: {p}" for p in problems)
            continue
        assertions.append(AssertionSpec(entry["kind"], params))
    return assertions
