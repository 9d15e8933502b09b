import logging
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from core.config import OUT_DIR
from core.descriptor import launch, parse, resolve
from core.errors import DescriptorError
from core.fabric import Fabric, write_trace
from core.hierarchy.deployment import Deployment
from core.scenario.assertions import RunContext, evaluate
from core.scenario.report import build_report, write_metrics, write_report
from core.scenario.types import RandomWorkload, RunReport, Scenario, WorkloadCommand
from rules import build_registry

logger = logging.getLogger(__name__)


def expand_random(workload: RandomWorkload, rng: np.random.Generator) -> List[WorkloadCommand]:
    """
    Turn a random workload block into timed commands.

    Times are drawn first and sorted. An app that is live gets released at the
    manager that deployed it; any other app is deployed at a random manager.
    """
    times = sorted(int(t) for t in rng.integers(workload.start, workload.end, size=workload.commands))
    low, high = workload.demand
    live = {}
    commands = []
    for at in times:
        app = f"app{int(rng.integers(workload.apps))}"
        if app in live:
            commands.append(WorkloadCommand(at, "release", live.pop(app), app=app))
            continue
        manager = workload.managers[int(rng.integers(len(workload.managers)))]
        demand = {workload.resource: int(rng.integers(low, high + 1))}
        commands.append(WorkloadCommand(at, "deploy", manager, app=app, demand=demand))
        live[app] = manager
    logger.debug(f"Random workload expanded to {len(commands)} command(s)")
    return commands


def execute(scenario: Scenario) -> RunContext:
    """Build the scenario's deployment, run it to its duration and evaluate its assertions."""
    fabric = Fabric(seed=scenario.seed, latency=scenario.latency, drop_rate=scenario.drop_rate)
    registry = build_registry()
    rule_specs = list(scenario.rules)

    def rules():
        return [registry.instantiate(r.name, r.params) for r in rule_specs]

    plan, skip = None, ()
    descriptor = scenario.descriptor
    if descriptor is not None:
        try:
            text = descriptor.path.read_text(encoding="utf-8")
        except OSError as e:
            raise DescriptorError(f"cannot read descriptor: {e}") from e
        plan = resolve(parse(text), descriptor.bindings)
        targets = plan.targets[descriptor.virtual_node] if descriptor.virtual_node in plan.targets \
            else plan.all_targets
        skip = tuple(t for t in targets if t in scenario.topology)

    deployment = Deployment.build(scenario.topology, fabric, scenario.settings, rules, skip=skip)
    if plan is not None:
        launch(plan, deployment, descriptor.template, descriptor.virtual_node, descriptor.parent)

    for fault in scenario.faults:
        fabric.inject(fault)

    commands = list(scenario.workload)
    if scenario.random_workload is not None:
        commands.extend(expand_random(scenario.random_workload, fabric.rng))
    for command in sorted(commands, key=lambda c: c.at):
        _schedule(deployment, command)

    logger.info(f"Running {scenario.name} (seed {scenario.seed}) for {scenario.duration} ms "
                f"on {len(deployment.hosts)} hosts")
    deployment.run_until(scenario.duration)

    trace = fabric.trace
    report = build_report(scenario, deployment, trace)
    ctx = RunContext(scenario, deployment, trace, None, report)
    report.assertions = [evaluate(spec, ctx) for spec in scenario.assertions]
    return ctx


def _schedule(deployment: Deployment, command: WorkloadCommand) -> None:
    if command.kind == "deploy":
        deployment.deploy(command.target, command.app, command.demand, command.params, at=command.at)
    elif command.kind == "release":
        deployment.release(command.target, command.app, at=command.at)
    else:
        deployment.reattach(command.target, command.parent, at=command.at)


def output_dir(scenario: Scenario, base: Optional[Path] = None) -> Path:
    return Path(base or OUT_DIR) / scenario.name / str(scenario.seed)


def run(scenario: Scenario, out_dir: Optional[Path] = None) -> Tuple[RunReport, RunContext]:
    """Execute the scenario and write trace.jsonl, metrics.jsonl, report.json and report.txt."""
    ctx = execute(scenario)
    target = output_dir(scenario, out_dir)
    ctx.trace_path = write_trace(ctx.trace, target / "trace.jsonl")
    report = replace(ctx.report, out_dir=str(target))
    write_metrics(report, target)
    write_report(report, target)
    logger.info(f"{scenario.name}: {'all assertions passed' if report.passed else 'assertions FAILED'}")
    return report, ctx
