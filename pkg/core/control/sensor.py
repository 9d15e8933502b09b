from typing import TYPE_CHECKING, Callable, Dict

from core.control.types import SensorSpec
from core.gma.types import MetricEvent

if TYPE_CHECKING:
    from core.hierarchy.host import Host


class Sensor:
    """
    Synthetic LocalSensor.

    Utilization is reserved over total capacity for the sensed resource. With
    a positive noise amplitude one uniform draw from the fabric generator is
    added per reading, and the result is clamped to [0, 1].
    """

    def __init__(self, host: "Host", spec: SensorSpec, capacity: Dict[str, int],
                 load: Callable[[], Dict[str, int]]):
        self.host = host
        self.spec = spec
        self.capacity = dict(capacity)
        self._load = load

    def read(self) -> float:
        total = self.capacity.get(self.spec.metric, 0)
        used = self._load().get(self.spec.metric, 0)
        value = used / total if total > 0 else 0.0
        if self.spec.noise > 0:
            value += float(self.host.fabric.rng.uniform(-self.spec.noise, self.spec.noise))
        return min(1.0, max(0.0, value))

    def sense(self) -> MetricEvent:
        return MetricEvent(source=self.host.actor_id, timestamp=self.host.now,
                           properties=((self.spec.metric, self.read()),))
