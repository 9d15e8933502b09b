from dataclasses import dataclass
from typing import Any, Literal, Optional, Tuple, TypedDict

SimTime = int
ActorId = str
TimerId = int

FaultKind = Literal["crash", "restart", "drop_rate", "partition"]
TraceKind = Literal["deliver", "drop", "timer", "crash", "restart", "event"]


# One line of the event trace. Field order is part of the file format.
TraceRecord = TypedDict("TraceRecord", {
    "time": SimTime,
    "kind": TraceKind,
    "from": Optional[ActorId],
    "to": Optional[ActorId],
    "payload": dict,
    "reason": Optional[str],
})


TRACE_FIELDS = ("time", "kind", "from", "to", "payload", "reason")


@dataclass(frozen=True)
class Envelope:
    sender: ActorId
    recipient: ActorId
    payload: Any
    send_time: SimTime
    deliver_time: SimTime


@dataclass(frozen=True)
class LinkConfig:
    latency: int
    drop_rate: float = 0.0


@dataclass(frozen=True)
class FaultSpec:
    """A scheduled fault. Only the fields relevant to ``kind`` are read."""
    kind: FaultKind
    actor: Optional[ActorId] = None
    at: SimTime = 0
    link: Optional[Tuple[ActorId, ActorId]] = None
    probability: float = 0.0
    group_a: Tuple[ActorId, ...] = ()
    group_b: Tuple[ActorId, ...] = ()
    start: SimTime = 0
    until: SimTime = 0

    @classmethod
    def crash(cls, actor: ActorId, at: SimTime) -> "FaultSpec":
        return cls(kind="crash", actor=actor, at=at)

    @classmethod
    def restart(cls, actor: ActorId, at: SimTime) -> "FaultSpec":
        return cls(kind="restart", actor=actor, at=at)

    @classmethod
    def drop_rate(cls, link: Tuple[ActorId, ActorId], probability: float) -> "FaultSpec":
        return cls(kind="drop_rate", link=tuple(link), probability=probability)

    @classmethod
    def partition(cls, group_a, group_b, start: SimTime, until: SimTime) -> "FaultSpec":
        return cls(kind="partition", group_a=tuple(group_a), group_b=tuple(group_b),
                   start=start, until=until)
