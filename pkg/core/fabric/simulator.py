import heapq
import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Set, Tuple, Union

import numpy as np

from core.config import DEFAULT_DROP_RATE, DEFAULT_LATENCY
from core.errors import ConfigurationError
from core.fabric.actor import Actor
from core.fabric.trace import describe, make_record, to_jsonable
from core.fabric.types import ActorId, Envelope, FaultSpec, LinkConfig, SimTime, TimerId, TraceRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _Delivery:
    envelope: Envelope


@dataclass(frozen=True)
class _Timer:
    actor: ActorId
    payload: Any
    timer_id: TimerId
    incarnation: int


@dataclass(frozen=True)
class _Fault:
    spec: FaultSpec


_Queued = Union[_Delivery, _Timer, _Fault]

# queue phases within one instant: regular work first, then crash/restart faults
_WORK, _FAULTS = 0, 1


class Fabric:
    """
    Deterministic discrete-event substrate.

    Events are processed in ``(time, sequence)`` order where the sequence number
    is assigned when the event is queued, so same-time events run in the order
    they were created and zero-delay work lands after everything already queued
    for the current instant. Crash and restart faults take effect at the end
    of their instant, after all other work due then. The fabric owns the only
    random generator.
    """

    def __init__(
            self,
            seed: int = 0,
            latency: int = DEFAULT_LATENCY,
            drop_rate: float = DEFAULT_DROP_RATE
    ):
        if latency < 0:
            raise ConfigurationError(f"latency must be >= 0, got {latency}")
        _check_probability(drop_rate)
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.now: SimTime = 0
        self.default_link = LinkConfig(latency=latency, drop_rate=drop_rate)
        self.trace: List[TraceRecord] = []

        self._actors: Dict[ActorId, Actor] = {}
        self._colocated: Dict[ActorId, List[ActorId]] = {}
        self._links: Dict[Tuple[ActorId, ActorId], LinkConfig] = {}
        self._partitions: List[FaultSpec] = []
        self._crashed: Set[ActorId] = set()
        self._incarnation: Dict[ActorId, int] = {}
        self._pending_timers: Set[TimerId] = set()
        self._cancelled: Set[TimerId] = set()
        self._last_delivery: Dict[Tuple[ActorId, ActorId], SimTime] = {}
        self._queue: List[Tuple[SimTime, int, int, _Queued]] = []
        self._seq = itertools.count()

    # -- actors -----------------------------------------------------------

    def register(self, actor: Actor, colocated_with: Optional[ActorId] = None) -> Actor:
        """Add an actor. A co-located actor crashes and restarts with its host."""
        if actor.actor_id in self._actors:
            raise ConfigurationError(f"Actor '{actor.actor_id}' is already registered")
        if colocated_with is not None:
            self._require(colocated_with)
            self._colocated.setdefault(colocated_with, []).append(actor.actor_id)
        self._actors[actor.actor_id] = actor
        self._incarnation[actor.actor_id] = 0
        actor.attach(self)
        return actor

    def has_actor(self, actor_id: ActorId) -> bool:
        return actor_id in self._actors

    def actor(self, actor_id: ActorId) -> Actor:
        return self._require(actor_id)

    @property
    def actor_ids(self) -> List[ActorId]:
        return list(self._actors)

    def is_crashed(self, actor_id: ActorId) -> bool:
        return actor_id in self._crashed

    def _require(self, actor_id: ActorId) -> Actor:
        if actor_id not in self._actors:
            raise ConfigurationError(f"Unknown actor '{actor_id}'")
        return self._actors[actor_id]

    # -- links and faults -------------------------------------------------

    def set_link(
            self,
            a: ActorId,
            b: ActorId,
            latency: Optional[int] = None,
            drop_rate: Optional[float] = None
    ) -> None:
        """Override latency and/or loss on the link between a and b (both directions)."""
        for key in ((a, b), (b, a)):
            current = self._links.get(key, self.default_link)
            new_rate = current.drop_rate if drop_rate is None else drop_rate
            _check_probability(new_rate)
            new_latency = current.latency if latency is None else latency
            if new_latency < 0:
                raise ConfigurationError(f"latency must be >= 0, got {new_latency}")
            self._links[key] = LinkConfig(latency=new_latency, drop_rate=new_rate)

    def link(self, a: ActorId, b: ActorId) -> LinkConfig:
        return self._links.get((a, b), self.default_link)

    @property
    def max_latency(self) -> int:
        return max([self.default_link.latency, *(c.latency for c in self._links.values())])

    def inject(self, fault: FaultSpec) -> None:
        """Install a fault. Crash and restart are queued events; the others apply now."""
        if fault.kind in ("crash", "restart"):
            self._require(fault.actor)
            if fault.at < self.now:
                raise ConfigurationError(f"Fault at {fault.at} is in the past (now={self.now})")
            self._push(fault.at, _Fault(fault), _FAULTS)
        elif fault.kind == "drop_rate":
            if not fault.link or len(fault.link) != 2:
                raise ConfigurationError("drop_rate fault needs a link of two actors")
            self.set_link(fault.link[0], fault.link[1], drop_rate=fault.probability)
        elif fault.kind == "partition":
            if fault.until < fault.start:
                raise ConfigurationError(f"Partition ends before it starts: {fault.start}..{fault.until}")
            self._partitions.append(fault)
        else:
            raise ConfigurationError(f"Unknown fault kind '{fault.kind}'")

    def _partitioned(self, a: ActorId, b: ActorId) -> bool:
        for p in self._partitions:
            if not (p.start <= self.now < p.until):
                continue
            if (a in p.group_a and b in p.group_b) or (a in p.group_b and b in p.group_a):
                return True
        return False

    # -- operations -------------------------------------------------------

    def schedule(self, actor: ActorId, delay: int, payload: Any) -> TimerId:
        """Fire ``payload`` at ``actor`` after ``delay`` ms of virtual time."""
        if delay < 0:
            raise ConfigurationError(f"delay must be >= 0, got {delay}")
        self._require(actor)
        timer_id = next(self._seq)
        timer = _Timer(actor, payload, timer_id, self._incarnation[actor])
        self._pending_timers.add(timer_id)
        heapq.heappush(self._queue, (self.now + delay, _WORK, timer_id, timer))
        return timer_id

    def cancel(self, timer_id: TimerId) -> None:
        """Drop a timer that has not fired yet. Unknown or already fired ids are ignored."""
        if timer_id in self._pending_timers:
            self._cancelled.add(timer_id)

    def send(self, sender: ActorId, recipient: ActorId, payload: Any) -> None:
        """Queue an envelope, unless the fault model drops it first."""
        self._require(sender)
        summary = describe(payload)
        if recipient not in self._actors:
            logger.warning(f"Undeliverable envelope {summary.get('type')} from {sender} to {recipient}")
            self.trace.append(make_record(self.now, "drop", sender, recipient, summary, "undeliverable"))
            return
        if recipient == sender:
            # local hand-off, no link involved
            self._push(self.now, _Delivery(Envelope(sender, recipient, payload, self.now, self.now)))
            return
        if self._partitioned(sender, recipient):
            self.trace.append(make_record(self.now, "drop", sender, recipient, summary, "partition"))
            return
        link = self.link(sender, recipient)
        if link.drop_rate > 0 and self.rng.random() < link.drop_rate:
            self.trace.append(make_record(self.now, "drop", sender, recipient, summary, "loss"))
            return
        # a link never reorders: a latency cut cannot overtake earlier traffic
        deliver_time = max(self.now + link.latency, self._last_delivery.get((sender, recipient), 0))
        self._last_delivery[(sender, recipient)] = deliver_time
        envelope = Envelope(sender, recipient, payload, self.now, deliver_time)
        self._push(envelope.deliver_time, _Delivery(envelope))

    def record_event(self, actor: ActorId, event_type: str, **data: Any) -> None:
        payload = {"type": event_type, **to_jsonable(data)}
        self.trace.append(make_record(self.now, "event", actor, None, payload))

    def run_until(self, t: SimTime) -> List[TraceRecord]:
        """Process every event with time <= t. Returns the records added by this call."""
        if t < self.now:
            raise ConfigurationError(f"Cannot run backwards: now={self.now}, requested {t}")
        mark = len(self.trace)
        while self._queue and self._queue[0][0] <= t:
            time, _, _, item = heapq.heappop(self._queue)
            self.now = time
            self._process(item)
        self.now = t
        return self.trace[mark:]

    def run_for(self, duration: int) -> List[TraceRecord]:
        return self.run_until(self.now + duration)

    @property
    def pending(self) -> int:
        return len(self._queue)

    # -- internals --------------------------------------------------------

    def _push(self, time: SimTime, item: _Queued, phase: int = _WORK) -> None:
        heapq.heappush(self._queue, (time, phase, next(self._seq), item))

    def _process(self, item: _Queued) -> None:
        if isinstance(item, _Delivery):
            env = item.envelope
            summary = describe(env.payload)
            if env.recipient in self._crashed:
                self.trace.append(make_record(self.now, "drop", env.sender, env.recipient, summary, "crashed"))
                return
            self.trace.append(make_record(self.now, "deliver", env.sender, env.recipient, summary))
            self._actors[env.recipient].receive(env)
        elif isinstance(item, _Timer):
            self._pending_timers.discard(item.timer_id)
            if item.timer_id in self._cancelled:
                self._cancelled.discard(item.timer_id)
                return
            # timers of a crashed actor, or of a previous incarnation, vanish silently
            if item.actor in self._crashed or item.incarnation != self._incarnation[item.actor]:
                return
            self.trace.append(make_record(self.now, "timer", item.actor, item.actor, describe(item.payload)))
            self._actors[item.actor].on_timer(item.payload)
        else:
            self._apply(item.spec)

    def _apply(self, fault: FaultSpec) -> None:
        targets = [fault.actor, *self._colocated.get(fault.actor, [])]
        if fault.kind == "crash":
            for actor in targets:
                if actor not in self._crashed:
                    self._crashed.add(actor)
                    self.trace.append(make_record(self.now, "crash", actor, actor, {"type": "Crash"}))
                    logger.info(f"[t={self.now}] crashed {actor}")
        else:
            for actor in targets:
                if actor not in self._crashed:
                    continue
                self._crashed.discard(actor)
                self._incarnation[actor] += 1
                self.trace.append(make_record(self.now, "restart", actor, actor, {"type": "Restart"}))
                logger.info(f"[t={self.now}] restarted {actor}")
                self._actors[actor].restart()


def _check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ConfigurationError(f"drop rate must be in [0, 1], got {p}")
