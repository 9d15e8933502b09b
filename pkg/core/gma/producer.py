"""
Producer and consumer halves of the monitoring pipeline.

Event data travels producer to subscriber directly; the directory only tells a
consumer where producers are.
"""
import itertools
import logging
from typing import TYPE_CHECKING, Callable, List, Optional, Tuple

from core.gma.directory import directory_id
from core.gma.types import MetricEvent, RegistrationKind
from core.messages import Lookup, LookupReply, Query, QueryReply, Register, Subscribe

if TYPE_CHECKING:
    from core.hierarchy.host import Host

logger = logging.getLogger(__name__)


class Producer:
    def __init__(self, host: "Host", offered: Tuple[str, ...], ttl: int):
        self.host = host
        self.offered = tuple(offered)
        self.ttl = ttl
        self.subscribers: List[str] = []
        self.latest: Optional[MetricEvent] = None

    def registration(self) -> Register:
        return Register(subject=self.host.actor_id, kind=RegistrationKind.PRODUCER.value,
                        properties=self.offered, ttl=self.ttl)

    def subscribe(self, consumer: str) -> None:
        if consumer not in self.subscribers:
            self.subscribers.append(consumer)
            logger.debug(f"{self.host.actor_id}: {consumer} subscribed")

    def unsubscribe(self, consumer: str) -> None:
        if consumer in self.subscribers:
            self.subscribers.remove(consumer)

    def publish(self, event: MetricEvent) -> int:
        """One-way push to every current subscriber. Returns the number of envelopes sent."""
        self.latest = event
        for consumer in self.subscribers:
            self.host.send(consumer, event)
        return len(self.subscribers)

    def answer(self, query: Query) -> None:
        self.host.send(query.reply_to, QueryReply(producer=self.host.actor_id, event=self.latest))

    def reset(self) -> None:
        self.subscribers = []
        self.latest = None


class Consumer:
    """Periodically looks producers up in its own directory and subscribes to them."""

    def __init__(self, host: "Host", wanted: Tuple[str, ...], ttl: int,
                 accept: Optional[Callable[[str], bool]] = None):
        self.host = host
        self.wanted = tuple(wanted)
        self.ttl = ttl
        self._accept = accept or (lambda producer: True)
        self.producers: List[str] = []
        self._ids = itertools.count(1)

    def discover(self) -> str:
        own_directory = directory_id(self.host.actor_id)
        request_id = f"{self.host.actor_id}?{next(self._ids)}"
        self.host.send(own_directory, Register(subject=self.host.actor_id, kind=RegistrationKind.CONSUMER.value,
                                               properties=self.wanted, ttl=self.ttl))
        self.host.send(own_directory, Lookup(request_id=request_id, wanted=self.wanted,
                                             reply_to=self.host.actor_id))
        return request_id

    def on_lookup_reply(self, reply: LookupReply) -> None:
        # subscribing is idempotent; re-sending covers producers that restarted
        found = [p for p in reply.producers if p != self.host.actor_id and self._accept(p)]
        for producer in found:
            self.host.send(producer, Subscribe(consumer=self.host.actor_id))
        gone = [p for p in self.producers if p not in found]
        if gone:
            logger.debug(f"{self.host.actor_id}: producers expired {gone}")
        self.producers = found
