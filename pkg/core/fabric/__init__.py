from core.fabric.actor import Actor
from core.fabric.simulator import Fabric
from core.fabric.trace import describe, read_trace, write_trace
from core.fabric.types import ActorId, Envelope, FaultSpec, LinkConfig, SimTime, TimerId, TraceRecord

__all__ = [
    'Actor', 'ActorId', 'Envelope', 'Fabric', 'FaultSpec', 'LinkConfig', 'SimTime', 'TimerId',
    'TraceRecord', 'describe', 'read_trace', 'write_trace',
]
