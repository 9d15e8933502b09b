"""
A host on the fabric, wired for its role.

Boot:   discovery, allocator, deployer, monitor (republisher, reactor,
        actuator), consumer and system representation. Its directory is a
        co-located actor.
Mirror: everything the Boot has, plus a heartbeat emitter, a local sensor
        whose readings feed its own republisher, a producer that publishes
        the republisher's summaries and a local actuator.
Node:   heartbeat emitter, factory, local sensor, producer and local actuator.
"""
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence

from core.allocation import Allocator, ResourceDeployer
from core.config import Settings
from core.control import Actuator, LocalActuator, Reactor, ReactorRule, RuleContext, Sensor
from core.fabric.actor import Actor
from core.fabric.types import Envelope
from core.gma import Consumer, MetricEvent, Producer, Republisher, directory_id
from core.hierarchy.representation import SystemRepresentation
from core.hierarchy.topology import HostSpec, NodeRole
from core.membership import HeartbeatEmitter, LifecycleEvent, NodeDiscovery
from core.messages import (AllocationAccepted, AllocationDeclined, AllocationRequest, DelegationTimeout,
                           DeployCommand, DeployOutcome, Detach, DiscoveryTick, Heartbeat, HeartbeatTick, Install,
                           InstallAck, InstallTimeout, LookupReply, ParameterAck, Query, QueryReply, ReattachCommand,
                           RefreshTick, ReleaseCommand, ReleaseRequest, RepairEscalation, RequestTimeout, SenseTick,
                           SetParameter, Shutdown, Subscribe, SweepTick, Uninstall, Unsubscribe, WindowTick)

logger = logging.getLogger(__name__)

RuleFactory = Callable[[], Sequence[ReactorRule]]


class Host(Actor):
    def __init__(
            self,
            spec: HostSpec,
            settings: Optional[Settings] = None,
            rules: Optional[RuleFactory] = None,
            tier_level: int = 1
    ):
        super().__init__(spec.node_id)
        self.spec = spec
        self.settings = settings or Settings()
        self.parent: Optional[str] = spec.parent
        self.tier_level = tier_level
        self.halted = False
        self._rules = rules or (lambda: [])
        self._build()

    @property
    def role(self) -> NodeRole:
        return self.spec.role

    @property
    def is_manager(self) -> bool:
        return self.spec.is_manager

    def _build(self) -> None:
        """(Re)create every volatile service for this host's role."""
        spec, settings = self.spec, self.settings
        metric = spec.sensor.metric
        self.pulled: Dict[str, Optional[MetricEvent]] = {}
        self.heartbeat = HeartbeatEmitter(self, spec.heartbeat, spec.capacity if self.role == NodeRole.NODE else {})
        self.local_actuator = LocalActuator(self) if self.role != NodeRole.BOOT else None

        handlers: Dict[type, Callable[[Any, str], None]] = {
            HeartbeatTick: lambda msg, _: self.heartbeat.emit_heartbeat(),
            RefreshTick: lambda msg, _: self._refresh(),
            Subscribe: lambda msg, _: self.producer.subscribe(msg.consumer),
            Unsubscribe: lambda msg, _: self.producer.unsubscribe(msg.consumer),
            Query: lambda msg, _: self.producer.answer(msg),
            QueryReply: lambda msg, _: self.pulled.__setitem__(msg.producer, msg.event),
            ReattachCommand: lambda msg, _: self.reattach(msg.parent),
        }
        if self.local_actuator is not None:
            handlers[SetParameter] = lambda msg, sender: self.local_actuator.apply(msg, sender)
            handlers[Shutdown] = lambda msg, _: self.local_actuator.shutdown(msg)

        if self.role == NodeRole.NODE:
            self.installed: Dict[str, Dict[str, int]] = {}
            self.sensor = Sensor(self, spec.sensor, spec.capacity, self.load)
            self.producer = Producer(self, (metric,), settings.registration_ttl)
            handlers.update({
                SenseTick: lambda msg, _: self._sense(),
                Install: self._on_install,
                Uninstall: lambda msg, _: self.installed.pop(msg.app, None),
            })
        else:
            self.discovery = NodeDiscovery(self.actor_id, spec.heartbeat, self._on_lifecycle)
            self.representation = SystemRepresentation(self.actor_id)
            self.allocator = Allocator(self.actor_id, self.discovery, settings.policy, self._on_reservation)
            self.deployer = ResourceDeployer(self, self.allocator, self.representation, settings.install_timeout,
                                             settings.allocation_timeout, settings.request_timeout)
            self.actuator = Actuator(self, self.deployer, self.discovery)
            self.reactor = Reactor(self.actor_id, self._rules(), settings.disabled_domains)
            offered = spec.aggregation.offered((metric,))
            self.republisher = Republisher(self.actor_id, spec.aggregation, (metric,), self.tier_level)
            self.producer = Producer(self, offered, settings.registration_ttl)
            self.consumer = Consumer(self, (metric, *offered), settings.registration_ttl,
                                     accept=self.discovery.is_available)
            if self.role == NodeRole.MIRROR:
                # a Mirror hosts no apps, so only noise moves its reading off zero
                self.sensor = Sensor(self, spec.sensor, spec.capacity, lambda: {})
                handlers[SenseTick] = lambda msg, _: self._sense()
            handlers.update({
                Heartbeat: lambda msg, _: self.discovery.record_heartbeat(msg.node, self.now, msg.capacity),
                SweepTick: lambda msg, _: self._sweep(),
                Detach: lambda msg, _: self._on_detach(msg.node),
                DiscoveryTick: lambda msg, _: self._discover(),
                LookupReply: lambda msg, _: self.consumer.on_lookup_reply(msg),
                WindowTick: lambda msg, _: self._on_window(msg.close),
                MetricEvent: lambda msg, _: self._on_metric(msg),
                AllocationRequest: lambda msg, sender: self.deployer.on_request(msg, sender),
                AllocationDeclined: lambda msg, sender: self.deployer.on_declined(msg, sender),
                AllocationAccepted: lambda msg, _: self.deployer.on_accepted(msg),
                DeployOutcome: lambda msg, _: self.deployer.on_outcome(msg),
                InstallAck: lambda msg, _: self.deployer.on_install_ack(msg),
                InstallTimeout: lambda msg, _: self.deployer.on_install_timeout(msg),
                DelegationTimeout: lambda msg, _: self.deployer.on_delegation_timeout(msg),
                RequestTimeout: lambda msg, _: self.deployer.on_request_timeout(msg),
                ReleaseRequest: lambda msg, sender: self.deployer.on_release_request(msg, sender),
                ParameterAck: lambda msg, _: self.actuator.on_parameter_ack(msg),
                RepairEscalation: lambda msg, _: self.actuator.escalate(msg),
                DeployCommand: lambda msg, _: self.deployer.deploy(msg.app, msg.demand, msg.params),
                ReleaseCommand: lambda msg, _: self.deployer.release(msg.app),
            })
        self._handlers = handlers

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self.halted = False
        if self.parent is not None:
            self.heartbeat.start()
            self.schedule(0, RefreshTick())
        if self.role != NodeRole.BOOT:
            self.schedule(self.spec.sensor.period, SenseTick())
        if self.role == NodeRole.NODE:
            return
        self.schedule(self.spec.heartbeat.sweep_interval, SweepTick())
        self.schedule(self.settings.discovery_delay, DiscoveryTick())
        close = self.republisher.next_close(self.now)
        self.schedule(close - self.now, WindowTick(close))

    def restart(self) -> None:
        logger.info(f"[t={self.now}] {self.actor_id}: restarting with empty volatile state")
        self._build()
        self.start()

    def halt(self) -> None:
        self.halted = True
        self.emit("halted", node=self.actor_id)

    def receive(self, envelope: Envelope) -> None:
        self._dispatch(envelope.payload, envelope.sender)

    def on_timer(self, payload: Any) -> None:
        self._dispatch(payload, self.actor_id)

    def _dispatch(self, payload: Any, sender: str) -> None:
        if self.halted:
            return
        handler = self._handlers.get(type(payload))
        if handler is None:
            logger.warning(f"[t={self.now}] {self.actor_id} ({self.role.value}) has no handler for "
                           f"{type(payload).__name__} from {sender}")
            return
        handler(payload, sender)

    # -- every role ----------------------------------------------------------

    def _refresh(self) -> None:
        if self.parent is not None:
            self.send(directory_id(self.parent), self.producer.registration())
        self.schedule(self.settings.registration_refresh, RefreshTick())

    def query(self, producer: str) -> None:
        """Pull the producer's latest event; the answer lands in ``pulled``."""
        self.send(producer, Query(reply_to=self.actor_id))

    def reattach(self, new_parent: str) -> None:
        old = self.parent
        if new_parent == old:
            return
        if old is not None:
            self.send(old, Detach(node=self.actor_id))
            self.producer.unsubscribe(old)
        self.parent = new_parent
        self.emit("reattach", node=self.actor_id, old_parent=old, new_parent=new_parent)
        logger.info(f"[t={self.now}] {self.actor_id}: moved from {old} to {new_parent}")

    # -- node ----------------------------------------------------------------

    def load(self) -> Dict[str, int]:
        total: Dict[str, int] = {}
        for demand in self.installed.values():
            for resource, units in demand.items():
                total[resource] = total.get(resource, 0) + units
        return total

    def _sense(self) -> None:
        reading = self.sensor.sense()
        if self.role == NodeRole.NODE:
            self.producer.publish(reading)
        else:
            self.send(self.actor_id, reading)
        self.schedule(self.spec.sensor.period, SenseTick())

    def _on_install(self, install: Install, manager: str) -> None:
        # installs complete immediately
        self.installed[install.app] = dict(install.demand)
        self.send(manager, InstallAck(install.request_id, install.app, self.actor_id, domain=install.domain))

    # -- manager -------------------------------------------------------------

    def _sweep(self) -> None:
        self.discovery.sweep(self.now)
        self.schedule(self.spec.heartbeat.sweep_interval, SweepTick())

    def _discover(self) -> None:
        self.consumer.discover()
        self.schedule(self.settings.registration_refresh, DiscoveryTick())

    def _on_detach(self, node: str) -> None:
        released = self.deployer.detach(node)
        self.discovery.forget(node)
        self.send(node, Unsubscribe(consumer=self.actor_id))
        self.emit("node-detached", node=node, manager=self.actor_id, released=released)

    def _on_lifecycle(self, event: LifecycleEvent) -> None:
        self.emit(event.kind, node=event.node, manager=event.manager)
        self._act(self.reactor.react(event, event.kind, self.rule_context()))

    def _on_reservation(self, node: str, reserved: Dict[str, int]) -> None:
        self.emit("reservation", manager=self.actor_id, node=node, reserved=reserved)

    def _on_metric(self, event: MetricEvent) -> None:
        self.republisher.accept(event, self.now)
        self._act(self.reactor.react(event, "metric", self.rule_context()))

    def _on_window(self, close: int) -> None:
        self.summarize_up(close)
        self.schedule(self.spec.aggregation.window, WindowTick(close + self.spec.aggregation.window))

    def summarize_up(self, window_close: int) -> List[MetricEvent]:
        """Publish this window's summaries to subscribers (the parent's monitor) and react to them."""
        aggregation = self.spec.aggregation
        events = self.republisher.republish(window_close)
        for event in events:
            self.producer.publish(event)
        self.emit("republish", manager=self.actor_id, window_start=window_close - aggregation.window,
                  window_end=window_close, functions=aggregation.functions, metrics=self.republisher.metrics,
                  group_by=aggregation.group_by, events=[e.summary() for e in events])
        for event in events:
            self._act(self.reactor.react(event, "window", self.rule_context()))
        return events

    def rule_context(self) -> RuleContext:
        return RuleContext(manager=self.actor_id, now=self.now, representation=self.representation,
                           allocator=self.allocator, discovery=self.discovery, deployer=self.deployer)

    def _act(self, actions) -> None:
        for action in actions:
            self.actuator.execute(action)
