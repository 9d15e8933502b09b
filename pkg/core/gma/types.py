from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Optional, Tuple

from core.config import FUNCTIONS, GROUP_BY, WINDOW
from core.errors import ConfigurationError
from core.fabric.types import SimTime
from core.messages import MONITORING

AGGREGATE_FUNCTIONS = ("mean", "max", "min", "count", "last")
GROUPINGS = ("source", "property")


@dataclass(frozen=True)
class MetricEvent:
    """Timestamped property list. Level 0 is a raw sensor reading."""
    source: str
    timestamp: SimTime
    properties: Tuple[Tuple[str, float], ...]
    level: int = 0

    def __post_init__(self):
        names = [name for name, _ in self.properties]
        if len(names) != len(set(names)):
            raise ConfigurationError(f"Duplicate property names in event from {self.source}: {names}")
        if self.level < 0:
            raise ConfigurationError(f"Event level must be >= 0, got {self.level}")

    @classmethod
    def of(cls, source: str, timestamp: SimTime, level: int = 0, **properties: float) -> "MetricEvent":
        return cls(source, timestamp, tuple((k, float(v)) for k, v in properties.items()), level)

    def get(self, name: str, default: Optional[float] = None) -> Optional[float]:
        for key, value in self.properties:
            if key == name:
                return value
        return default

    def as_dict(self) -> Dict[str, float]:
        return dict(self.properties)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.properties)

    def summary(self) -> dict:
        return {
            "type": "MetricEvent",
            "domain": MONITORING,
            "source": self.source,
            "timestamp": int(self.timestamp),
            "properties": [[name, float(value)] for name, value in self.properties],
            "level": int(self.level),
        }


class RegistrationKind(str, Enum):
    PRODUCER = "Producer"
    CONSUMER = "Consumer"


@dataclass(frozen=True)
class Registration:
    subject: str
    kind: RegistrationKind
    properties: Tuple[str, ...]
    registered_at: SimTime
    ttl: int

    def visible(self, now: SimTime) -> bool:
        """Soft state: visible while a refresh happened in (now - ttl, now]."""
        return now - self.registered_at < self.ttl

    def matches(self, wanted: Iterable[str]) -> bool:
        return bool(set(self.properties) & set(wanted))


@dataclass(frozen=True)
class AggregationSpec:
    window: int = WINDOW
    functions: Tuple[str, ...] = FUNCTIONS
    group_by: str = GROUP_BY

    def __post_init__(self):
        if self.window <= 0:
            raise ConfigurationError(f"Aggregation window must be > 0, got {self.window}")
        if not self.functions:
            raise ConfigurationError("Aggregation needs at least one function")
        unknown = [f for f in self.functions if f not in AGGREGATE_FUNCTIONS]
        if unknown:
            raise ConfigurationError(f"Unknown aggregate function(s): {unknown}")
        if self.group_by not in GROUPINGS:
            raise ConfigurationError(f"group_by must be one of {GROUPINGS}, got '{self.group_by}'")

    def offered(self, metrics: Iterable[str]) -> Tuple[str, ...]:
        """Property names a republisher with this spec publishes."""
        names = []
        for metric in metrics:
            names.append(f"{metric}_count")
            names.extend(f"{metric}_{fn}" for fn in self.functions if fn != "count")
        return tuple(names)
