import logging
from typing import Dict, List, Tuple

from core.fabric.types import SimTime
from core.gma.aggregation import summarize
from core.gma.types import AggregationSpec, MetricEvent

logger = logging.getLogger(__name__)


class Republisher:
    """
    Consumer on one side, producer on the other.

    Buffers every event delivered to its host and, at each aligned window
    close, turns the events delivered in ``[close - window, close)`` into one
    summary per group. Raw inputs are never passed on.
    """

    def __init__(self, owner: str, spec: AggregationSpec, metrics: Tuple[str, ...], tier_level: int = 1):
        self.owner = owner
        self.spec = spec
        self.metrics = tuple(metrics)
        self.tier_level = tier_level
        self._buffer: List[Tuple[SimTime, MetricEvent]] = []

    def accept(self, event: MetricEvent, at: SimTime) -> None:
        self._buffer.append((at, event))

    def next_close(self, now: SimTime) -> SimTime:
        return (now // self.spec.window + 1) * self.spec.window

    def republish(self, window_close: SimTime) -> List[MetricEvent]:
        start = window_close - self.spec.window
        inside = [e for t, e in self._buffer if start <= t < window_close]
        self._buffer = [(t, e) for t, e in self._buffer if t >= window_close]

        if self.spec.group_by == "source" and inside:
            groups: Dict[str, List[MetricEvent]] = {}
            for event in inside:
                groups.setdefault(event.source, []).append(event)
            return [self._summary(source, groups[source], window_close) for source in sorted(groups)]
        return [self._summary(self.owner, inside, window_close)]

    def _summary(self, source: str, events: List[MetricEvent], window_close: SimTime) -> MetricEvent:
        level = max(e.level for e in events) + 1 if events else self.tier_level
        properties = summarize(events, self.metrics, self.spec)
        logger.debug(f"{self.owner} window@{window_close}: {len(events)} input(s) -> {dict(properties)}")
        return MetricEvent(source=source, timestamp=window_close, properties=properties, level=level)

    def reset(self) -> None:
        self._buffer = []
