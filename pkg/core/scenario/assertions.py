"""
Assertions embedded in scenario files.

Each kind is a function ``(ctx, **params) -> (passed, detail)`` registered with
``@assertion``. Parameters come straight from the scenario entry, so a kind's
signature is also its schema.
"""
import inspect
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Dict, Iterable, List, Optional, Tuple

from core.scenario.oracles import verify
from core.scenario.types import AssertionOutcome, AssertionSpec

if TYPE_CHECKING:
    from core.hierarchy.deployment import Deployment
    from core.scenario.types import RunReport, Scenario

logger = logging.getLogger(__name__)

Check = Tuple[bool, str]

ASSERTIONS: Dict[str, Callable[..., Check]] = {}


@dataclass
class RunContext:
    scenario: "Scenario"
    deployment: "Deployment"
    trace: List[dict]
    trace_path: Optional[Path]
    report: "RunReport"

    @property
    def root(self) -> str:
        return self.deployment.topology.root

    def events(self, event_type: str) -> Iterable[Tuple[int, dict]]:
        for record in self.trace:
            if record["kind"] == "event" and record["payload"]["type"] == event_type:
                yield record["time"], record["payload"]


def assertion(kind: str):
    def decorate(func):
        ASSERTIONS[kind] = func
        return func

    return decorate


def check_params(kind: str, params: Dict) -> List[str]:
    """Problems with calling ``kind`` with ``params``; empty when fine."""
    signature = inspect.signature(ASSERTIONS[kind])
    accepted = [p for name, p in signature.parameters.items() if name != "ctx"]
    names = {p.name for p in accepted}
    problems = [f"assertion '{kind}': unknown parameter '{p}'" for p in params if p not in names]
    problems.extend(f"assertion '{kind}': missing parameter '{p.name}'" for p in accepted
                    if p.default is inspect.Parameter.empty and p.name not in params)
    return problems


def evaluate(spec: AssertionSpec, ctx: RunContext) -> AssertionOutcome:
    passed, detail = ASSERTIONS[spec.kind](ctx, **spec.params)
    level = logging.INFO if passed else logging.WARNING
    logger.log(level, f"assertion {spec.kind} {'passed' if passed else 'FAILED'}: {detail}")
    return AssertionOutcome(spec.kind, passed, detail, dict(spec.params))


# -- monitoring -------------------------------------------------------------------

@assertion("boot_events_per_window")
def boot_events_per_window(ctx: RunContext, expected: int, manager: Optional[str] = None, skip: int = 1) -> Check:
    """Every complete window after the warm-up delivered exactly ``expected`` MetricEvents to the manager."""
    manager = manager or ctx.root
    counts = ctx.report.received.get(manager, [])[skip:]
    if not counts:
        return False, f"{manager} closed no window after skipping {skip}"
    wrong = [c for c in counts if c != expected]
    return not wrong, f"{manager} received {counts} per window, expected {expected}"


@assertion("raw_events_at")
def raw_events_at(ctx: RunContext, manager: Optional[str] = None, expected: int = 0) -> Check:
    manager = manager or ctx.root
    raw = sum(1 for r in ctx.trace if r["kind"] == "deliver" and r["to"] == manager
              and r["payload"].get("type") == "MetricEvent" and r["payload"]["level"] == 0)
    return raw == expected, f"{manager} received {raw} raw event(s), expected {expected}"


# -- membership -------------------------------------------------------------------

@assertion("lifecycle")
def lifecycle(ctx: RunContext, event: str, expected: int, node: Optional[str] = None,
              manager: Optional[str] = None) -> Check:
    found = [p for _, p in ctx.events(event)
             if (node is None or p["node"] == node) and (manager is None or p["manager"] == manager)]
    return len(found) == expected, f"{len(found)} {event} event(s) for {node or 'any node'}, expected {expected}"


@assertion("detection_bound")
def detection_bound(ctx: RunContext, node: str, crash_at: Optional[int] = None) -> Check:
    """The crashed node is marked Failed in (crash + timeout, crash + timeout + sweep + latency], never before."""
    if crash_at is None:
        crashes = [f.at for f in ctx.scenario.faults if f.kind == "crash" and f.actor == node]
        if not crashes:
            return False, f"no crash fault for {node}"
        crash_at = crashes[0]
    heartbeat = ctx.deployment.topology.spec(node).heartbeat
    low = crash_at + heartbeat.failure_timeout
    high = low + heartbeat.sweep_interval + ctx.scenario.latency
    failures = [t for t, p in ctx.events("node-failed") if p["node"] == node]
    early = [t for t in failures if t <= crash_at]
    if early:
        return False, f"{node} reported Failed at {early[0]}, before its crash at {crash_at}"
    if not failures:
        return False, f"{node} never reported Failed after crash at {crash_at}"
    return low < failures[0] <= high, f"{node} Failed at {failures[0]}, bound ({low}, {high}]"


# -- allocation and repair --------------------------------------------------------

def _running(ctx: RunContext, app: str) -> List[Tuple[str, str]]:
    return [(m, node) for m in ctx.deployment.managers()
            for a, node in ctx.deployment.host(m).deployer.placements().items() if a == app]


@assertion("running")
def running(ctx: RunContext, app: str, node: Optional[str] = None, not_node: Optional[str] = None,
            by: Optional[int] = None) -> Check:
    """The app ends the run Running exactly once, on an available node."""
    places = _running(ctx, app)
    if len(places) != 1:
        return False, f"{app} Running at {places}, expected exactly one placement"
    manager, at = places[0]
    if node is not None and at != node:
        return False, f"{app} Running on {at}, expected {node}"
    if not_node is not None and at == not_node:
        return False, f"{app} still Running on {not_node}"
    if not ctx.deployment.host(manager).discovery.is_available(at):
        return False, f"{app} Running on {at}, which {manager} does not consider available"
    if by is not None:
        since = max((t for t, p in ctx.events("deployment")
                     if p["app"] == app and p["node"] == at and p["state"] == "Running"), default=None)
        if since is None or since > by:
            return False, f"{app} Running on {at} since {since}, expected by {by}"
    return True, f"{app} Running on {at} under {manager}"


@assertion("placements")
def placements(ctx: RunContext, manager: str, contains: Optional[Dict[str, str]] = None,
               excludes: Optional[List[str]] = None, single: Optional[List[str]] = None) -> Check:
    """Checks the manager's subtree snapshot; ``single`` apps must be placed by exactly one manager."""
    mapping = ctx.deployment.snapshot(manager).mapping()
    for app, node in (contains or {}).items():
        if mapping.get(app) != node:
            return False, f"{manager} snapshot has {app}->{mapping.get(app)}, expected {node}"
    for app in excludes or []:
        if app in mapping:
            return False, f"{manager} snapshot unexpectedly places {app} on {mapping[app]}"
    for app in single or []:
        owners = [m for m in ctx.deployment.managers() if app in ctx.deployment.host(m).representation.placements]
        if len(owners) != 1:
            return False, f"{app} placed by {owners}, expected exactly one manager"
    return True, f"{manager} snapshot {mapping}"


@assertion("granted")
def granted(ctx: RunContext, app: str, subtree: Optional[str] = None, via: Optional[str] = None) -> Check:
    """The first outcome for the app is a Running grant, optionally inside ``subtree`` and passing through ``via``."""
    outcomes = [p for _, p in ctx.events("outcome") if p["app"] == app]
    if not outcomes:
        return False, f"no outcome for {app}"
    outcome = outcomes[0]
    if outcome["outcome"] != "Granted" or outcome["state"] != "Running":
        return False, f"{app}: {outcome['outcome']} {outcome['state'] or ''} {outcome['reason'] or ''}".rstrip()
    if subtree is not None and outcome["node"] not in ctx.deployment.topology.subtree(subtree):
        return False, f"{app} granted on {outcome['node']}, outside {subtree}'s subtree"
    if via is not None and not any(p["request_id"] == outcome["request_id"] and p["manager"] == via
                                   for _, p in ctx.events("allocation")):
        return False, f"{app} request never reached {via}"
    return True, f"{app} granted on {outcome['node']} by {outcome['manager']}"


@assertion("denied")
def denied(ctx: RunContext, app: str, reason: str = "exhausted") -> Check:
    outcomes = [p for _, p in ctx.events("outcome") if p["app"] == app]
    if not outcomes:
        return False, f"no outcome for {app}"
    outcome = outcomes[0]
    ok = outcome["outcome"] == "Denied" and outcome["reason"] == reason
    return ok, f"{app}: {outcome['outcome']} ({outcome['reason']}), expected Denied ({reason})"


@assertion("repair_episodes")
def repair_episodes(ctx: RunContext, expected: int, status: Optional[str] = None) -> Check:
    episodes = [e for e in ctx.report.repair_episodes if status is None or e["status"] == status]
    return len(episodes) == expected, f"{len(episodes)} repair episode(s), expected {expected}"


@assertion("no_domain_at")
def no_domain_at(ctx: RunContext, manager: Optional[str] = None, domain: str = "repair") -> Check:
    """No message of ``domain`` was delivered to the manager."""
    manager = manager or ctx.root
    seen = [r["payload"]["type"] for r in ctx.trace if r["kind"] == "deliver" and r["to"] == manager
            and r["payload"].get("domain") == domain]
    return not seen, f"{manager} received {len(seen)} {domain} message(s) {sorted(set(seen))}".rstrip()


# -- oracles ----------------------------------------------------------------------

@assertion("oracle")
def run_oracle(ctx: RunContext, name: str = "all") -> Check:
    results = verify(ctx.trace, name)
    failed = [r for r in results if not r.passed]
    return not failed, "; ".join(str(r) for r in (failed or results))
