import logging
from typing import TYPE_CHECKING, Any, Optional

from core.fabric.types import ActorId, Envelope, SimTime, TimerId

if TYPE_CHECKING:
    from core.fabric.simulator import Fabric

logger = logging.getLogger(__name__)


class Actor:
    """
    Something the fabric can deliver envelopes and timers to.

    Handlers run one at a time and must not block; all interaction with other
    actors goes through ``send`` and ``schedule``.
    """

    def __init__(self, actor_id: ActorId):
        self.actor_id = actor_id
        self.fabric: Optional["Fabric"] = None

    def attach(self, fabric: "Fabric") -> None:
        self.fabric = fabric

    @property
    def now(self) -> SimTime:
        return self.fabric.now

    def send(self, to: ActorId, payload: Any) -> None:
        self.fabric.send(self.actor_id, to, payload)

    def schedule(self, delay: int, payload: Any) -> TimerId:
        return self.fabric.schedule(self.actor_id, delay, payload)

    def cancel(self, timer_id: TimerId) -> None:
        self.fabric.cancel(timer_id)

    def emit(self, event_type: str, **data: Any) -> None:
        """Append a structured audit record to the trace."""
        self.fabric.record_event(self.actor_id, event_type, **data)

    def start(self) -> None:
        """Called once when the actor goes live. Override to arm timers."""

    def restart(self) -> None:
        """Called after a restart fault. Volatile state is gone; arm timers again."""
        self.start()

    def receive(self, envelope: Envelope) -> None:
        raise NotImplementedError

    def on_timer(self, payload: Any) -> None:
        logger.warning(f"{self.actor_id} ignored timer {type(payload).__name__}")
