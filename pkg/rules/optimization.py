from typing import Annotated

from core.allocation.policy import least_loaded
from core.control.rules import RuleContext, reactor_rule
from core.control.types import Rebind, StopNode, TuneParameter
from core.errors import ConfigurationError
from core.gma.types import MetricEvent
from core.messages import OPTIMIZATION

RESPONSES = ("rebalance", "tune", "stop")


@reactor_rule(domain=OPTIMIZATION, trigger="window")
def cpu_threshold(
        event: MetricEvent,
        ctx: RuleContext,
        threshold: Annotated[float, "Utilization above which a window counts as hot"] = 0.9,
        windows: Annotated[int, "Consecutive hot windows before acting"] = 2,
        response: Annotated[str, "rebalance, tune or stop"] = "rebalance",
        metric: str = "cpu",
        parameter: str = "pool_size",
        value: int = 8
):
    """
    Act when the subtree's mean utilization stays above ``threshold`` for
    ``windows`` consecutive windows. Fires once per hot streak.
    """
    mean = event.get(f"{metric}_mean", event.get(metric))
    streak = ctx.memory.get(event.source, 0)
    if mean is None or mean <= threshold:
        ctx.memory[event.source] = 0
        return []
    streak += 1
    ctx.memory[event.source] = streak
    if streak != windows:
        return []

    if response == "rebalance":
        return _rebalance(ctx)
    busiest = _busiest(ctx)
    if busiest is None:
        return []
    if response == "tune":
        return [TuneParameter(node=busiest, name=parameter, value=value)]
    if response == "stop":
        return [StopNode(node=busiest)]
    raise ConfigurationError(f"Unknown response '{response}', expected one of {RESPONSES}")


def _busiest(ctx: RuleContext):
    loads = {node: sum(ctx.allocator.reserved(node).values()) for node in ctx.allocator.hostable_children()
             if ctx.discovery.is_available(node)}
    if not loads:
        return None
    return min(loads, key=lambda n: (-loads[n], n))


def _rebalance(ctx: RuleContext):
    """Move the smallest running app to the least-loaded other node that fits it."""
    running = [r for r in ctx.deployer.records.values() if r.state.value == "Running"]
    if not running:
        return []
    smallest = min(running, key=lambda r: (sum(r.demand.values()), r.app))
    target = least_loaded(ctx.allocator.candidates(), smallest.demand, exclude=[smallest.node])
    if target is None:
        return []
    return [Rebind(component=smallest.app, target=target)]
