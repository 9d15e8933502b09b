from core.scenario.assertions import ASSERTIONS, RunContext
from core.scenario.loader import load_scenario
from core.scenario.oracles import ORACLES, OracleResult, verify
from core.scenario.report import render_text
from core.scenario.runner import execute, expand_random, run
from core.scenario.types import (AssertionOutcome, AssertionSpec, DescriptorRef, RandomWorkload, RuleSpec, RunReport,
                                 Scenario, WorkloadCommand)

__all__ = [
    "ASSERTIONS",
    "ORACLES",
    "AssertionOutcome",
    "AssertionSpec",
    "DescriptorRef",
    "OracleResult",
    "RandomWorkload",
    "RuleSpec",
    "RunContext",
    "RunReport",
    "Scenario",
    "WorkloadCommand",
    "execute",
    "expand_random",
    "load_scenario",
    "render_text",
    "run",
    "verify",
]
