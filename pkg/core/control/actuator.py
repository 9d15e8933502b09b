"""
Actuators: the execution end of the monitoring cycle.

The manager-side ``Actuator`` runs ReplaceNode, Rebind and StopNode itself and
delegates TuneParameter to the node's ``LocalActuator``. Results come back
asynchronously and are written to the trace as ``action-result`` events.
"""
import itertools
import logging
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Tuple

from core.control.types import Action, ActionResult, Rebind, ReplaceNode, StopNode, TuneParameter
from core.messages import REPAIR, DeployOutcome, ParameterAck, RepairEscalation, SetParameter, Shutdown

if TYPE_CHECKING:
    from core.allocation.deployer import ResourceDeployer
    from core.hierarchy.host import Host
    from core.membership import NodeDiscovery

logger = logging.getLogger(__name__)


class Actuator:
    def __init__(self, host: "Host", deployer: "ResourceDeployer", discovery: "NodeDiscovery"):
        self.host = host
        self.deployer = deployer
        self.discovery = discovery
        self.results: Dict[str, ActionResult] = {}
        self._repairs: Dict[str, Tuple[str, str]] = {}
        self._outstanding: Dict[str, List[str]] = {}
        self._ids = itertools.count(1)

    def execute(self, action: Action) -> ActionResult:
        action_id = f"{self.host.actor_id}!{next(self._ids)}"
        result = ActionResult(action_id, action)
        self.results[action_id] = result
        self.host.emit("action", action_id=action_id, kind=action.kind, executor=action.target_executor,
                       **{k: v for k, v in vars(action).items()})
        logger.info(f"[t={self.host.now}] {self.host.actor_id}: {action_id} {action}")

        if isinstance(action, ReplaceNode):
            self._replace(result, action)
        elif isinstance(action, TuneParameter):
            self.host.send(action.node, SetParameter(action_id, action.name, action.value, domain=action.domain))
            result.step("set-parameter", True, node=action.node)
        elif isinstance(action, Rebind):
            self._rebind(result, action)
        elif isinstance(action, StopNode):
            self._stop(result, action)
        else:
            self._finish(result.fail(f"unsupported action {action.kind}"))
        return result

    # -- repair ------------------------------------------------------------

    def _replace(self, result: ActionResult, action: ReplaceNode) -> None:
        pending = []
        for app in action.apps:
            record = self.deployer.mark_lost(app, action.failed)
            if record is None:
                result.step("mark-lost", False, app=app, reason="no live record")
                continue
            result.step("mark-lost", True, app=app, node=action.failed)
            request_id = self.deployer.deploy(app, record.demand, record.params, domain=REPAIR,
                                              on_behalf=self.deployer.lineage(record))
            if request_id is None:
                result.step("redeploy", False, app=app, reason="duplicate")
                continue
            self._repairs[request_id] = (result.action_id, app)
            pending.append(request_id)
            self.deployer.watch(request_id, self._on_repair_outcome)
        self._outstanding[result.action_id] = pending
        if not pending:
            self._close_repair(result)

    def _on_repair_outcome(self, outcome: DeployOutcome) -> None:
        action_id, app = self._repairs.pop(outcome.request_id)
        result = self.results[action_id]
        ok = outcome.outcome == "Granted" and outcome.state == "Running"
        result.step("redeploy", ok, app=app, node=outcome.node, manager=outcome.manager,
                    outcome=outcome.outcome, reason=outcome.reason)
        self._outstanding[action_id].remove(outcome.request_id)
        if not self._outstanding[action_id]:
            self._close_repair(result)

    def _close_repair(self, result: ActionResult) -> None:
        del self._outstanding[result.action_id]
        failed = [s for s in result.steps if not s["ok"]]
        if not failed:
            self._finish(result.succeed())
            return
        reason = failed[0].get("reason") or "failed"
        self._finish(result.fail(reason))
        if reason == "exhausted":
            action: ReplaceNode = result.action
            lost = tuple(s["app"] for s in failed if s["step"] == "redeploy")
            self.escalate(RepairEscalation(origin=self.host.actor_id, node=action.failed, apps=lost, reason=reason))

    def escalate(self, escalation: RepairEscalation) -> None:
        """Pass an unrepairable failure towards the Boot, which records it."""
        if self.host.parent is not None:
            self.host.send(self.host.parent, escalation)
        else:
            logger.warning(f"[t={self.host.now}] {self.host.actor_id}: repair of {escalation.node} exhausted "
                           f"({escalation.apps}) reported by {escalation.origin}")
            self.host.emit("repair-escalation", origin=escalation.origin, node=escalation.node,
                           apps=escalation.apps, reason=escalation.reason)

    # -- optimization ------------------------------------------------------

    def _rebind(self, result: ActionResult, action: Rebind) -> None:
        reason = self.deployer.migrate(action.component, action.target, result.action_id)
        if reason is not None:
            self._finish(result.fail(reason))
            return
        result.step("install", True, app=action.component, node=action.target)
        self.deployer.watch(result.action_id, self._on_rebind_outcome)

    def _on_rebind_outcome(self, outcome: DeployOutcome) -> None:
        result = self.results[outcome.request_id]
        ok = outcome.state == "Running"
        result.step("switch", ok, app=outcome.app, node=outcome.node, reason=outcome.reason)
        self._finish(result.succeed() if ok else result.fail(outcome.reason or "failed"))

    def _stop(self, result: ActionResult, action: StopNode) -> None:
        self.discovery.retire(action.node)
        for app in self.deployer.stop_node(action.node):
            result.step("release", True, app=app)
        self.host.send(action.node, Shutdown(result.action_id, domain=action.domain))
        result.step("shutdown", True, node=action.node)
        self._finish(result.succeed())

    def on_parameter_ack(self, ack: ParameterAck) -> None:
        result = self.results.get(ack.action_id)
        if result is None or result.done:
            return
        result.step("ack", True, node=ack.node, name=ack.name, value=ack.value)
        self._finish(result.succeed())

    def _finish(self, result: ActionResult) -> None:
        self.host.emit("action-result", action_id=result.action_id, kind=result.action.kind,
                       status=result.status.value, reason=result.reason, steps=result.steps)


class LocalActuator:
    """Node-side executor: applies parameter changes and shutdowns."""

    def __init__(self, host: "Host"):
        self.host = host
        self.properties: Dict[str, Any] = {}

    def get(self, name: str, default: Optional[Any] = None) -> Any:
        return self.properties.get(name, default)

    def apply(self, request: SetParameter, manager: str) -> None:
        self.properties[request.name] = request.value
        self.host.send(manager, ParameterAck(request.action_id, self.host.actor_id, request.name, request.value,
                                             domain=request.domain))

    def shutdown(self, request: Shutdown) -> None:
        logger.info(f"[t={self.host.now}] {self.host.actor_id}: shutdown by {request.action_id}")
        self.host.halt()
