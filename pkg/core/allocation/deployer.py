"""
Resource Deployer.

Runs inside every manager and plays up to three parts for a request:

* origin: the manager a deploy was issued at. It owns the request and
  receives exactly one terminal ``DeployOutcome`` for it.
* intermediate: a manager that could not place the request locally and
  delegated it sideways to another child Mirror, or escalated it upward.
* host: the manager that directly manages the chosen node. It owns the
  reservation, the ``DeploymentRecord`` and the placement.

The three can coincide; when origin and host are the same manager no
messages are exchanged for the outcome.
"""
import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Callable, Dict, List, Optional, Tuple

from core.allocation.allocator import Allocator
from core.allocation.types import (AllocationOutcome, Delegated, Demand, Denied, DeploymentRecord,
                                   DeploymentState, Escalated, Granted, OwnedApp)
from core.config import ALLOCATION_TIMEOUT, REQUEST_TIMEOUT
from core.messages import (ALLOCATION, OPTIMIZATION, AllocationAccepted, AllocationDeclined, AllocationRequest,
                           DelegationTimeout, DeployOutcome, Install, InstallAck, InstallTimeout, ReleaseRequest,
                           RequestTimeout, Uninstall)

if TYPE_CHECKING:
    from core.hierarchy.host import Host
    from core.hierarchy.representation import SystemRepresentation

logger = logging.getLogger(__name__)

OutcomeWatcher = Callable[[DeployOutcome], None]

# reason on an update telling an origin where a repaired app now runs
RELOCATED = "relocated"


@dataclass
class _Delegation:
    request: AllocationRequest
    remaining: List[str]
    delegator: Optional[str]
    came_from: Optional[str]
    tried: List[str] = field(default_factory=list)
    timer: Optional[int] = None
    timed_out: bool = False


class ResourceDeployer:
    def __init__(
            self,
            host: "Host",
            allocator: Allocator,
            representation: "SystemRepresentation",
            install_timeout: int,
            allocation_timeout: int = ALLOCATION_TIMEOUT,
            request_timeout: int = REQUEST_TIMEOUT
    ):
        self.host = host
        self.allocator = allocator
        self.representation = representation
        self.install_timeout = install_timeout
        self.allocation_timeout = allocation_timeout
        self.request_timeout = request_timeout

        # hosting side
        self.records: Dict[str, DeploymentRecord] = {}
        self.migrations: Dict[str, DeploymentRecord] = {}
        self.history: List[DeploymentRecord] = []
        self._by_request: Dict[str, DeploymentRecord] = {}

        # origin side
        self.owned: Dict[str, OwnedApp] = {}
        self._watchers: Dict[str, OutcomeWatcher] = {}

        self._delegations: Dict[str, _Delegation] = {}
        self._ids = itertools.count(1)

    @property
    def manager(self) -> str:
        return self.host.actor_id

    # -- origin ------------------------------------------------------------

    def deploy(self, app: str, demand: Demand, params: Optional[Dict[str, Any]] = None,
               domain: str = ALLOCATION, on_behalf: Optional[Tuple[str, str]] = None) -> Optional[str]:
        """
        Start a deploy at this manager. Returns the request id, or None for a
        duplicate. ``on_behalf`` names the (origin, request id) whose app this
        deploy re-places; that origin is kept informed of where it ends up.
        """
        current = self.owned.get(app)
        if current is not None and current.live:
            self._warn("duplicate-deploy", app=app, request_id=current.request_id)
            return None
        request_id = f"{self.manager}/{app}#{next(self._ids)}"
        owned = OwnedApp(app, request_id, dict(demand), dict(params or {}), domain, on_behalf=on_behalf)
        owned.timer = self.host.schedule(self.request_timeout, RequestTimeout(request_id, domain=domain))
        self.owned[app] = owned
        request = AllocationRequest(request_id=request_id, app=app, demand=dict(demand), params=dict(params or {}),
                                    origin=self.manager, domain=domain)
        self.allocate(request)
        return request_id

    def watch(self, request_id: str, watcher: OutcomeWatcher) -> None:
        self._watchers[request_id] = watcher

    def on_outcome(self, outcome: DeployOutcome) -> None:
        """A terminal outcome, or a later state change, for a request this manager originated."""
        owned = self.owned.get(outcome.app)
        if owned is None or owned.request_id != outcome.request_id:
            self._drop_stray(outcome)
            return
        if owned.settled and outcome.manager != owned.manager and outcome.reason != RELOCATED:
            self._drop_stray(outcome)
            return
        first = not owned.settled
        owned.manager = outcome.manager
        owned.node = outcome.node
        owned.state = outcome.state if outcome.outcome == "Granted" else outcome.outcome
        if first:
            self._cancel(owned)
            self.host.emit("outcome", request_id=outcome.request_id, app=outcome.app, outcome=outcome.outcome,
                           node=outcome.node, manager=outcome.manager, state=outcome.state,
                           reason=outcome.reason, domain=outcome.message_domain)
        elif outcome.reason == RELOCATED:
            self.host.emit("relocated", request_id=outcome.request_id, app=outcome.app, node=outcome.node,
                           manager=outcome.manager, state=outcome.state, domain=outcome.message_domain)
        if owned.on_behalf is not None:
            self._relay(owned, outcome)
        if owned.release_pending:
            owned.release_pending = False
            if owned.live:
                self.release(outcome.app)
        watcher = self._watchers.pop(outcome.request_id, None)
        if watcher is not None:
            watcher(outcome)

    def on_request_timeout(self, timeout: RequestTimeout) -> None:
        owned = next((o for o in self.owned.values() if o.request_id == timeout.request_id), None)
        if owned is None or owned.settled:
            return
        owned.timer = None
        self._warn("request-timeout", app=owned.app, request_id=owned.request_id)
        self.on_outcome(DeployOutcome(owned.request_id, owned.app, "Denied", manager=self.manager,
                                      reason="timeout", domain=owned.domain))

    def _drop_stray(self, outcome: DeployOutcome) -> None:
        """An outcome for a request this manager no longer waits on. A live grant is torn down."""
        live = (DeploymentState.DEPLOYING.value, DeploymentState.RUNNING.value)
        if outcome.outcome != "Granted" or outcome.state not in live or outcome.manager is None:
            logger.debug(f"[t={self.host.now}] {self.manager}: ignoring outcome {outcome}")
            return
        self._warn("stray-grant", app=outcome.app, request_id=outcome.request_id, at=outcome.manager)
        release = ReleaseRequest(outcome.app, request_id=outcome.hosted_as or outcome.request_id,
                                 domain=outcome.message_domain)
        if outcome.manager == self.manager:
            self.on_release_request(release, self.manager)
        else:
            self.host.send(outcome.manager, release)

    def _relay(self, owned: OwnedApp, outcome: DeployOutcome) -> None:
        origin, request_id = owned.on_behalf
        state = outcome.state if outcome.outcome == "Granted" else DeploymentState.LOST.value
        self.host.send(origin, DeployOutcome(request_id, owned.app, "Granted", node=outcome.node,
                                             manager=outcome.manager, state=state, reason=RELOCATED,
                                             hosted_as=outcome.hosted_as, domain=outcome.message_domain))

    def _cancel(self, owned: OwnedApp) -> None:
        if owned.timer is not None:
            self.host.cancel(owned.timer)
            owned.timer = None

    # -- allocation --------------------------------------------------------

    def allocate(self, request: AllocationRequest, came_from: Optional[str] = None,
                 delegator: Optional[str] = None) -> AllocationOutcome:
        """
        Local grant first, then delegation to the other child Mirrors, then
        escalation to the parent. The root answers Denied("exhausted"), or
        Denied("timeout") when a Mirror it waited on never answered.
        """
        live = self.records.get(request.app)
        if live is not None and live.state.live and live.request_id == request.request_id:
            # a retried delegation reached the manager that already hosts it
            if delegator is not None:
                self.host.send(delegator, AllocationAccepted(request.request_id, request.app, domain=request.domain))
            return self._decided(request, Granted(live.node))
        if live is not None and live.state.live:
            self._warn("duplicate-allocation", app=request.app, request_id=request.request_id)
            self._answer(request, DeployOutcome(request.request_id, request.app, "Denied", manager=self.manager,
                                                reason="duplicate", domain=request.domain))
            return self._decided(request, Denied("duplicate"))

        node = self.allocator.choose(request.demand)
        if node is not None:
            self._install(request, node)
            if delegator is not None:
                self.host.send(delegator, AllocationAccepted(request.request_id, request.app, domain=request.domain))
            return self._decided(request, Granted(node))

        mirrors = [m for m in self._child_mirrors() if m != came_from]
        if mirrors:
            delegation = _Delegation(request, mirrors[1:], delegator, came_from)
            self._delegations[request.request_id] = delegation
            return self._delegate(delegation, mirrors[0])
        return self._give_up(request, delegator)

    def on_request(self, request: AllocationRequest, sender: str) -> AllocationOutcome:
        if request.delegated:
            return self.allocate(request, delegator=sender)
        return self.allocate(request, came_from=sender)

    def on_declined(self, declined: AllocationDeclined, sender: str) -> None:
        delegation = self._delegations.get(declined.request_id)
        if delegation is None or delegation.tried[-1] != sender:
            # the wait on that Mirror already timed out
            return
        self._next_mirror(delegation)

    def on_accepted(self, accepted: AllocationAccepted) -> None:
        delegation = self._delegations.pop(accepted.request_id, None)
        if delegation is None:
            return
        self._stop_waiting(delegation)
        if delegation.delegator is not None:
            self.host.send(delegation.delegator, accepted)

    def on_delegation_timeout(self, timeout: DelegationTimeout) -> None:
        delegation = self._delegations.get(timeout.request_id)
        if delegation is None or delegation.tried[-1] != timeout.mirror:
            return
        delegation.timer = None
        delegation.timed_out = True
        self._warn("delegation-timeout", app=delegation.request.app, request_id=timeout.request_id,
                   mirror=timeout.mirror)
        self._next_mirror(delegation)

    def _next_mirror(self, delegation: _Delegation) -> None:
        self._stop_waiting(delegation)
        if delegation.remaining:
            self._delegate(delegation, delegation.remaining.pop(0))
            return
        del self._delegations[delegation.request.request_id]
        self._give_up(delegation.request, delegation.delegator,
                      reason="timeout" if delegation.timed_out else "exhausted")

    def _delegate(self, delegation: _Delegation, mirror: str) -> AllocationOutcome:
        delegation.tried.append(mirror)
        self.host.send(mirror, replace(delegation.request, delegated=True))
        delegation.timer = self.host.schedule(
            self.allocation_timeout, DelegationTimeout(delegation.request.request_id, mirror,
                                                       domain=delegation.request.domain))
        return self._decided(delegation.request, Delegated(mirror))

    def _stop_waiting(self, delegation: _Delegation) -> None:
        if delegation.timer is not None:
            self.host.cancel(delegation.timer)
            delegation.timer = None

    def _give_up(self, request: AllocationRequest, delegator: Optional[str],
                 reason: str = "exhausted") -> AllocationOutcome:
        if delegator is not None:
            self.host.send(delegator, AllocationDeclined(request.request_id, request.app, domain=request.domain))
            return self._decided(request, Denied("declined"))
        parent = self.host.parent
        if parent is not None:
            self.host.send(parent, replace(request, hop_count=request.hop_count + 1, delegated=False))
            return self._decided(request, Escalated(parent))
        self._answer(request, DeployOutcome(request.request_id, request.app, "Denied", manager=self.manager,
                                            reason=reason, domain=request.domain))
        return self._decided(request, Denied(reason))

    def _decided(self, request: AllocationRequest, outcome: AllocationOutcome) -> AllocationOutcome:
        self.host.emit("allocation", manager=self.manager, request_id=request.request_id, app=request.app,
                       demand=request.demand, origin=request.origin, hop_count=request.hop_count,
                       domain=request.domain, **outcome.as_dict())
        logger.debug(f"[t={self.host.now}] {self.manager}: {request.request_id} -> {outcome}")
        return outcome

    def _child_mirrors(self) -> List[str]:
        hostable = set(self.allocator.hostable_children())
        return [n for n in sorted(self.allocator.discovery.available_nodes()) if n not in hostable]

    def _answer(self, request: AllocationRequest, outcome: DeployOutcome) -> None:
        if request.origin == self.manager:
            self.on_outcome(outcome)
        else:
            self.host.send(request.origin, outcome)

    # -- hosting -----------------------------------------------------------

    def _install(self, request: AllocationRequest, node: str) -> DeploymentRecord:
        record = DeploymentRecord(
            app=request.app, node=node, state=DeploymentState.DEPLOYING, deployed_at=self.host.now,
            demand=dict(request.demand), params=dict(request.params), request_id=request.request_id,
            origin=request.origin, domain=request.domain,
        )
        self.records[request.app] = record
        self._start_install(record)
        return record

    def _start_install(self, record: DeploymentRecord) -> None:
        self._by_request[record.request_id] = record
        self._emit_record(record)
        self.allocator.reserve(record.node, record.app, record.demand)
        self.host.send(record.node, Install(record.request_id, record.app, record.demand, record.params,
                                            domain=record.domain))
        record.timer = self.host.schedule(self.install_timeout, InstallTimeout(record.request_id, domain=record.domain))

    def on_install_ack(self, ack: InstallAck) -> None:
        record = self._by_request.get(ack.request_id)
        if record is None or record.state != DeploymentState.DEPLOYING:
            # the record was settled meanwhile; the component must not linger
            logger.info(f"[t={self.host.now}] {self.manager}: late ack for {ack.request_id}, uninstalling")
            if self.allocator.discovery.is_available(ack.node):
                self.host.send(ack.node, Uninstall(ack.app, domain=ack.domain))
            return
        self._cancel_timer(record)
        migrating = self.migrations.get(record.app) is record
        if migrating:
            del self.migrations[record.app]
            old = self.records.get(record.app)
            if old is not None and old.state.live:
                self._settle(old, DeploymentState.STOPPED, uninstall=True)
            self.records[record.app] = record
        record.move_to(DeploymentState.RUNNING)
        self.representation.place(record.app, record.node, record.params, self.host.now)
        self._emit_record(record)
        outcome = self._outcome(record)
        if migrating:
            self._notify_local(outcome)
        else:
            self._report(record, outcome)

    def on_install_timeout(self, timeout: InstallTimeout) -> None:
        record = self._by_request.get(timeout.request_id)
        if record is None or record.state != DeploymentState.DEPLOYING:
            return
        record.timer = None
        logger.warning(f"[t={self.host.now}] {self.manager}: install of {record.app} on {record.node} timed out")
        migrating = self.migrations.get(record.app) is record
        if migrating:
            del self.migrations[record.app]
        self._settle(record, DeploymentState.LOST, uninstall=False)
        outcome = self._outcome(record, reason="install-timeout")
        if migrating:
            self._notify_local(outcome)
        else:
            self._report(record, outcome)

    def _settle(self, record: DeploymentRecord, state: DeploymentState, uninstall: bool) -> None:
        """Move a live record to Stopped or Lost and give its capacity back."""
        self._cancel_timer(record)
        record.move_to(state)
        self._emit_record(record)
        self.allocator.release(record.node, record.app)
        if self.representation.node_of(record.app) == record.node:
            self.representation.remove(record.app, self.host.now)
        if self.records.get(record.app) is record:
            del self.records[record.app]
        self.history.append(record)
        if uninstall and self.allocator.discovery.is_available(record.node):
            self.host.send(record.node, Uninstall(record.app, domain=record.domain))

    def _outcome(self, record: DeploymentRecord, reason: Optional[str] = None) -> DeployOutcome:
        return DeployOutcome(record.request_id, record.app, "Granted", node=record.node, manager=self.manager,
                             state=record.state.value, reason=reason, hosted_as=record.request_id,
                             domain=record.domain)

    def _report(self, record: DeploymentRecord, outcome: DeployOutcome) -> None:
        if record.origin == self.manager or record.origin is None:
            self.on_outcome(outcome)
        else:
            self.host.send(record.origin, outcome)

    def _notify_local(self, outcome: DeployOutcome) -> None:
        watcher = self._watchers.pop(outcome.request_id, None)
        if watcher is not None:
            watcher(outcome)

    def _cancel_timer(self, record: DeploymentRecord) -> None:
        if record.timer is not None:
            self.host.cancel(record.timer)
            record.timer = None

    def _emit_record(self, record: DeploymentRecord) -> None:
        self.host.emit("deployment", manager=self.manager, app=record.app, node=record.node,
                       state=record.state.value, demand=record.demand, request_id=record.request_id,
                       domain=record.domain)

    # -- release, loss, migration -------------------------------------------

    def release(self, app: str, notify_origin: bool = True) -> bool:
        """
        Stop an app wherever this manager knows it to be. Returns False for an
        unknown app, which is a warning no-op.
        """
        pending = self.migrations.pop(app, None)
        if pending is not None:
            self._settle(pending, DeploymentState.STOPPED, uninstall=True)
        record = self.records.get(app)
        if record is not None and record.state.live:
            self._settle(record, DeploymentState.STOPPED, uninstall=True)
            owned = self.owned.get(app)
            if owned is not None and owned.request_id == record.request_id:
                owned.state = DeploymentState.STOPPED.value
                if owned.on_behalf is not None:
                    self._relay(owned, self._outcome(record))
            if notify_origin and record.origin not in (None, self.manager):
                self.host.send(record.origin, self._outcome(record))
            return True

        owned = self.owned.get(app)
        if owned is not None and owned.live:
            if not owned.settled:
                owned.release_pending = True
                self.host.emit("release-deferred", manager=self.manager, app=app, request_id=owned.request_id)
                return True
            if owned.manager not in (None, self.manager):
                self.host.send(owned.manager, ReleaseRequest(app, domain=owned.domain))
                owned.state = DeploymentState.STOPPED.value
                return True

        self._warn("release-unknown", app=app)
        return False

    def on_release_request(self, request: ReleaseRequest, sender: str) -> None:
        """Release asked for by another manager. A request id limits it to that one placement."""
        record = self.records.get(request.app)
        if request.request_id is not None and (record is None or record.request_id != request.request_id):
            logger.info(f"[t={self.host.now}] {self.manager}: no placement {request.request_id} of "
                        f"{request.app} to release")
            return
        self.release(request.app, notify_origin=record is not None and record.origin != sender)

    def mark_lost(self, app: str, node: str) -> Optional[DeploymentRecord]:
        """Mark the app's live record on ``node`` Lost, without messaging the node."""
        record = self.records.get(app)
        if record is None or record.node != node or not record.state.live:
            return None
        self._settle(record, DeploymentState.LOST, uninstall=False)
        owned = self.owned.get(app)
        if owned is not None and owned.request_id == record.request_id:
            owned.state = DeploymentState.LOST.value
        return record

    def lineage(self, record: DeploymentRecord) -> Optional[Tuple[str, str]]:
        """The (origin, request id) a re-placement of ``record`` must keep informed, if not this manager."""
        if record.origin not in (None, self.manager):
            return record.origin, record.request_id
        owned = self.owned.get(record.app)
        if owned is not None and owned.request_id == record.request_id:
            return owned.on_behalf
        return None

    def migrate(self, app: str, target: str, request_id: str) -> Optional[str]:
        """
        Start moving a Running app to ``target``. The old record stays Running
        until the new install is acknowledged. Returns a failure reason, or None.
        """
        record = self.records.get(app)
        if record is None or record.state != DeploymentState.RUNNING:
            return "not-running"
        if app in self.migrations:
            return "already-migrating"
        if target == record.node:
            return "same-node"
        if not self.allocator.fits(target, record.demand):
            return "no-capacity"
        moved = DeploymentRecord(
            app=app, node=target, state=DeploymentState.DEPLOYING, deployed_at=self.host.now,
            demand=dict(record.demand), params=dict(record.params), request_id=request_id,
            origin=record.origin, domain=OPTIMIZATION,
        )
        self.migrations[app] = moved
        self._start_install(moved)
        return None

    def stop_node(self, node: str) -> List[str]:
        """Stop every live app on ``node`` without messaging it. Returns the app ids."""
        stopped = []
        for record in [r for r in [*self.records.values(), *self.migrations.values()] if r.node == node]:
            if not record.state.live:
                continue
            if self.migrations.get(record.app) is record:
                del self.migrations[record.app]
            self._settle(record, DeploymentState.STOPPED, uninstall=False)
            if record.origin not in (None, self.manager):
                self.host.send(record.origin, self._outcome(record))
            stopped.append(record.app)
        return stopped

    def detach(self, node: str) -> List[str]:
        """Release everything on a host that is leaving for another manager."""
        released = []
        for record in [r for r in [*self.records.values(), *self.migrations.values()] if r.node == node]:
            if self.migrations.get(record.app) is record:
                del self.migrations[record.app]
            self._settle(record, DeploymentState.STOPPED, uninstall=True)
            released.append(record.app)
        return released

    # -- views -------------------------------------------------------------

    def placements(self) -> Dict[str, str]:
        """Allocator mapping: app to node for every Running record."""
        return {app: r.node for app, r in sorted(self.records.items()) if r.state == DeploymentState.RUNNING}

    def live_records(self) -> List[DeploymentRecord]:
        return [r for r in [*self.records.values(), *self.migrations.values()] if r.state.live]

    def _warn(self, what: str, **data: Any) -> None:
        logger.warning(f"[t={self.host.now}] {self.manager}: {what} {data}")
        self.host.emit("warning", manager=self.manager, warning=what, **data)
