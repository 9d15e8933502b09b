import pytest

from core.errors import TopologyError
from core.fabric import Fabric
from core.hierarchy import Deployment, HierarchyTopology, NodeRole
from core.hierarchy.representation import SystemRepresentation


def test_seven_node_topology_shape(seven_node_topology):
    assert seven_node_topology.root == "boot"
    assert seven_node_topology.children("boot") == ["m1", "m2"]
    assert seven_node_topology.children("m1") == ["n3", "n4"]
    assert seven_node_topology.role("m2") == NodeRole.MIRROR
    assert seven_node_topology.role("n6") == NodeRole.NODE
    assert seven_node_topology.depth() == 2


@pytest.mark.parametrize("fanouts, mirrors, nodes", [
    ([2, 2], 2, 4),
    ([4, 4], 4, 16),
    ([2, 2, 2], 6, 8),
])
def test_balanced_topology_counts(fanouts, mirrors, nodes):
    topology = HierarchyTopology.balanced(fanouts)
    roles = [topology.role(n) for n in topology.hosts]
    assert roles.count(NodeRole.BOOT) == 1
    assert roles.count(NodeRole.MIRROR) == mirrors
    assert roles.count(NodeRole.NODE) == nodes
    assert topology.depth() == len(fanouts)


def test_height_counts_levels_below():
    topology = HierarchyTopology.balanced([2, 2, 2])
    assert topology.height("boot") == 3
    assert topology.height("m1") == 2
    assert topology.height("n1") == 0


@pytest.mark.parametrize("parents, roles, message", [
    ({"boot": None, "other": None}, {"other": NodeRole.MIRROR}, "multiple roots"),
    ({"boot": None, "n1": "ghost"}, None, "unknown parent"),
    ({"boot": None, "m1": "boot", "n1": "m1", "n2": "n1"}, {"n1": NodeRole.NODE}, "as parent"),
])
def test_invalid_trees_rejected(parents, roles, message):
    with pytest.raises(TopologyError, match=message):
        HierarchyTopology.from_parents(parents, roles=roles).validate()


def test_cycle_reported():
    topology = HierarchyTopology.from_parents(
        {"boot": None, "a": "b", "b": "a"}, roles={"a": NodeRole.MIRROR, "b": NodeRole.MIRROR})
    assert any("cycle" in p for p in topology.violations())


def test_duplicate_host_rejected(seven_node_topology):
    with pytest.raises(TopologyError):
        seven_node_topology.add(seven_node_topology.spec("n3"))


def test_merged_representation_contains_children():
    left, right = SystemRepresentation("m1"), SystemRepresentation("m2")
    left.place("A", "n3", {"cpu": 2}, 520)
    right.place("B", "n5", None, 700)
    merged = SystemRepresentation.merged("boot", [left, right])
    assert merged.mapping() == {"A": "n3", "B": "n5"}
    assert merged.last_updated == 700


def test_snapshot_at_boot_covers_the_whole_tree(seven_node_topology):
    deployment = Deployment.build(seven_node_topology, Fabric(seed=1))
    deployment.deploy("m1", "A", {"cpu": 2}, at=500)
    deployment.run_until(2000)
    assert deployment.snapshot("m1").mapping() == {"A": "n3"}
    assert deployment.snapshot("boot").mapping() == {"A": "n3"}
    assert deployment.snapshot("m2").mapping() == {}


def test_snapshot_of_a_node_is_refused(seven_node_topology):
    deployment = Deployment.build(seven_node_topology, Fabric())
    with pytest.raises(Exception, match="not a manager"):
        deployment.snapshot("n3")


def test_reattach_moves_a_node_under_a_new_manager(seven_node_topology):
    deployment = Deployment.build(seven_node_topology, Fabric(seed=1))
    deployment.run_until(2000)
    deployment.reattach("n4", "m2", at=3000)
    deployment.run_until(12000)

    assert deployment.topology.parent("n4") == "m2"
    assert deployment.host("n4").parent == "m2"
    assert deployment.host("m2").discovery.is_available("n4")
    assert not deployment.host("m1").discovery.is_available("n4")
    assert deployment.host("n4").producer.subscribers == ["m2"]
    failures = [r for r in deployment.fabric.trace
                if r["kind"] == "event" and r["payload"]["type"] == "node-failed"]
    assert failures == []


@pytest.mark.parametrize("node, parent", [("boot", "m1"), ("n3", "n4"), ("m1", "m1")])
def test_invalid_reattach_rejected(seven_node_topology, node, parent):
    deployment = Deployment.build(seven_node_topology, Fabric())
    with pytest.raises(TopologyError):
        deployment.reattach(node, parent)


def _boot_inputs_per_window(deployment):
    counts = {}
    for record in deployment.fabric.trace:
        payload = record["payload"]
        if record["kind"] == "deliver" and record["to"] == "boot" and payload.get("type") == "MetricEvent":
            close = (record["time"] // 5000 + 1) * 5000
            counts[close] = counts.get(close, 0) + 1
    return [counts.get(close, 0) for close in range(10000, 30001, 5000)]


@pytest.mark.parametrize("fanouts, expected", [([2, 2], 2), ([4, 4], 4)])
def test_boot_input_grows_with_mirrors_not_nodes(fanouts, expected):
    deployment = Deployment.build(HierarchyTopology.balanced(fanouts), Fabric(seed=3))
    deployment.run_until(30000)
    assert _boot_inputs_per_window(deployment) == [expected] * 5
