"""
Window rollups for republishers.

Raw (level 0) events contribute one sample per metric. Summaries from a lower
tier contribute their ``<metric>_count`` samples at once: means are weighted by
count, max/min take the extreme of extremes and last keeps the newest value,
so a boot-level mean equals the mean over every raw reading below it.
"""
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from core.fabric.types import SimTime
from core.gma.types import AggregationSpec, MetricEvent


@dataclass(frozen=True)
class _Sample:
    count: float
    mean: Optional[float]
    max: Optional[float]
    min: Optional[float]
    last: Optional[float]
    timestamp: SimTime


def _sample(event: MetricEvent, metric: str) -> Optional[_Sample]:
    if event.level == 0:
        value = event.get(metric)
        if value is None:
            return None
        return _Sample(1.0, value, value, value, value, event.timestamp)

    count = event.get(f"{metric}_count")
    if count is None:
        return None
    return _Sample(
        count,
        event.get(f"{metric}_mean"),
        event.get(f"{metric}_max"),
        event.get(f"{metric}_min"),
        event.get(f"{metric}_last"),
        event.timestamp,
    )


def summarize(events: Sequence[MetricEvent], metrics: Iterable[str], spec: AggregationSpec) -> Tuple[Tuple[str, float], ...]:
    """Aggregate properties for one group; ``<metric>_count`` always comes first."""
    properties: List[Tuple[str, float]] = []
    for metric in metrics:
        samples = [s for s in (_sample(e, metric) for e in events) if s is not None and s.count > 0]
        properties.append((f"{metric}_count", float(sum(s.count for s in samples))))
        if not samples:
            continue

        for fn in spec.functions:
            if fn == "count":
                continue
            value = _apply(fn, samples)
            if value is not None:
                properties.append((f"{metric}_{fn}", value))
    return tuple(properties)


def _apply(fn: str, samples: List[_Sample]) -> Optional[float]:
    if fn == "mean":
        weighted = [s for s in samples if s.mean is not None]
        if not weighted:
            return None
        return float(np.average([s.mean for s in weighted], weights=[s.count for s in weighted]))
    if fn in ("max", "min"):
        values = [getattr(s, fn) for s in samples if getattr(s, fn) is not None]
        if not values:
            return None
        return float(np.max(values) if fn == "max" else np.min(values))
    if fn == "last":
        # newest timestamp wins; ties keep the later delivery
        latest = None
        for s in samples:
            if s.last is not None and (latest is None or s.timestamp >= latest.timestamp):
                latest = s
        return None if latest is None else float(latest.last)
    raise ValueError(f"Unknown aggregate function '{fn}'")
