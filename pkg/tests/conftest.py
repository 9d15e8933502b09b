from pathlib import Path

import pytest

from core.fabric import Actor, Fabric
from core.hierarchy import HierarchyTopology

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"
DESCRIPTORS = ROOT / "descriptors"


class Recorder(Actor):
    """Remembers every delivery and timer as ``(time, payload)``."""

    def __init__(self, actor_id: str):
        super().__init__(actor_id)
        self.seen = []
        self.restarts = 0

    def receive(self, envelope):
        self.seen.append((self.now, envelope.payload))

    def on_timer(self, payload):
        self.seen.append((self.now, payload))

    def restart(self):
        self.restarts += 1


@pytest.fixture
def make_fabric():
    def factory(seed=0, latency=10, drop_rate=0.0):
        return Fabric(seed=seed, latency=latency, drop_rate=drop_rate)

    return factory


@pytest.fixture
def recorders():
    """Register recorders on a fabric: ``recorders(fabric, "a", "b")``."""

    def factory(fabric, *ids, colocated_with=None):
        return [fabric.register(Recorder(actor_id), colocated_with=colocated_with) for actor_id in ids]

    return factory


@pytest.fixture
def seven_node_topology():
    return HierarchyTopology.seven_node()


@pytest.fixture
def scenario_path():
    def factory(name):
        return SCENARIOS / f"{name}.yaml"

    return factory


@pytest.fixture
def grid_descriptor():
    return DESCRIPTORS / "grid.desc"
