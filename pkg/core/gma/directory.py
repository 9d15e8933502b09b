"""
Directory Service: locates producers, never carries event data.
"""
import logging
from typing import Dict, Iterable, List, Optional, Tuple

from core.errors import ConfigurationError
from core.fabric.actor import Actor
from core.fabric.types import Envelope, SimTime
from core.gma.types import MetricEvent, Registration, RegistrationKind
from core.messages import Lookup, LookupReply, Register

logger = logging.getLogger(__name__)

RegistrationId = str


class Directory:
    """
    Soft-state registration table.

    Entries stay in first-registration order so lookups are deterministic.
    A refresh keeps the entry's position and resets its clock.
    """

    def __init__(self):
        self._entries: Dict[Tuple[str, RegistrationKind], Registration] = {}

    def register(self, reg: Registration) -> RegistrationId:
        if reg.ttl <= 0:
            raise ConfigurationError(f"Registration ttl must be > 0, got {reg.ttl}")
        self._entries[(reg.subject, reg.kind)] = reg
        return f"{reg.subject}/{reg.kind.value}"

    def lookup(self, wanted: Iterable[str], now: SimTime) -> List[str]:
        """Unexpired producers whose offered set intersects ``wanted``."""
        wanted = set(wanted)
        return [
            reg.subject for (_, kind), reg in self._entries.items()
            if kind == RegistrationKind.PRODUCER and reg.visible(now) and reg.matches(wanted)
        ]

    def registrations(self, now: Optional[SimTime] = None) -> List[Registration]:
        return [r for r in self._entries.values() if now is None or r.visible(now)]


def directory_id(host_id: str) -> str:
    return f"{host_id}.dir"


class DirectoryActor(Actor):
    """A manager's directory as its own fabric endpoint."""

    def __init__(self, host_id: str, parent_directory: Optional[str] = None):
        super().__init__(directory_id(host_id))
        self.host_id = host_id
        self.parent_directory = parent_directory
        self.directory = Directory()

    def restart(self) -> None:
        self.directory = Directory()

    def receive(self, envelope: Envelope) -> None:
        payload = envelope.payload
        if isinstance(payload, Register):
            if payload.ttl <= 0 or payload.kind not in {k.value for k in RegistrationKind}:
                logger.warning(f"{self.actor_id} rejected registration of {payload.subject} from "
                               f"{envelope.sender}: kind={payload.kind} ttl={payload.ttl}")
                return
            reg = Registration(
                subject=payload.subject,
                kind=RegistrationKind(payload.kind),
                properties=tuple(payload.properties),
                registered_at=self.now,
                ttl=payload.ttl,
            )
            self.directory.register(reg)
        elif isinstance(payload, Lookup):
            self._lookup(payload)
        elif isinstance(payload, MetricEvent):
            logger.error(f"{self.actor_id} refused event data from {envelope.sender}")
        else:
            logger.warning(f"{self.actor_id} ignored {type(payload).__name__} from {envelope.sender}")

    def _lookup(self, request: Lookup) -> None:
        found = self.directory.lookup(request.wanted, self.now)
        if not found and request.forward_on_miss and self.parent_directory:
            logger.debug(f"{self.actor_id} forwarding lookup {request.request_id} to {self.parent_directory}")
            self.send(self.parent_directory, request)
            return
        self.send(request.reply_to, LookupReply(request_id=request.request_id, producers=tuple(found)))
