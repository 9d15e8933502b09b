from types import SimpleNamespace

import pytest

from core.config import Settings
from core.control import (Reactor, Rebind, RuleContext, RuleRegistry, Sensor, SensorSpec, StopNode, TuneParameter,
                          reactor_rule)
from core.errors import ConfigurationError
from core.fabric import Fabric, FaultSpec
from core.gma import MetricEvent
from core.hierarchy import Deployment
from core.membership import NODE_FAILED, LifecycleEvent
from rules import build_registry


def _events(deployment, kind, **match):
    return [(r["time"], r["payload"]) for r in deployment.fabric.trace
            if r["kind"] == "event" and r["payload"]["type"] == kind
            and all(r["payload"].get(k) == v for k, v in match.items())]


def _repairing(topology, settings=None):
    registry = build_registry()
    return Deployment.build(topology, Fabric(seed=1), settings,
                            rules=lambda: [registry.instantiate("replace_failed_node")])


# -- rules ---------------------------------------------------------------


def test_rule_decorator_rejects_unknown_domain_and_trigger():
    with pytest.raises(ConfigurationError):
        reactor_rule(domain="billing", trigger="window")
    with pytest.raises(ConfigurationError):
        reactor_rule(domain="repair", trigger="tick")


def test_rule_schema_comes_from_the_signature():
    schema = build_registry().get("cpu_threshold").rule
    assert schema["domain"] == "optimization"
    assert schema["trigger"] == "window"
    threshold = schema["parameters"]["properties"]["threshold"]
    assert threshold == {"type": "number", "description": "Utilization above which a window counts as hot",
                         "default": 0.9}
    assert schema["parameters"]["required"] == []


def test_registry_checks_parameters():
    registry = build_registry()
    assert registry.check("cpu_threshold", {"threshold": 0.5}) == []
    assert registry.check("cpu_threshold", {"bogus": 1}) == ["rule 'cpu_threshold': unknown parameter 'bogus'"]
    assert registry.check("nope") == ["unknown rule 'nope'"]
    with pytest.raises(ConfigurationError):
        registry.instantiate("cpu_threshold", {"bogus": 1})


def test_registry_refuses_undecorated_functions():
    with pytest.raises(ConfigurationError):
        RuleRegistry().register("plain", lambda event, ctx: [])


def _context(**loads):
    allocator = SimpleNamespace(hostable_children=lambda: sorted(loads),
                                reserved=lambda node: {"cpu": loads[node]},
                                candidates=lambda: [])
    discovery = SimpleNamespace(is_available=lambda node: True)
    return RuleContext(manager="m1", now=0, representation=None, allocator=allocator, discovery=discovery,
                       deployer=SimpleNamespace(records={}))


def test_reactor_skips_disabled_domains():
    rule = build_registry().instantiate("replace_failed_node")
    representation = SimpleNamespace(apps_on=lambda node: ["A"])
    ctx = RuleContext("m1", 0, representation, None, None, None)
    failed = LifecycleEvent(NODE_FAILED, "n3", "m1", 24000)

    assert [a.kind for a in Reactor("m1", [rule]).react(failed, NODE_FAILED, ctx)] == ["ReplaceNode"]
    assert Reactor("m1", [rule], disabled_domains=["repair"]).react(failed, NODE_FAILED, ctx) == []
    assert Reactor("m1", [rule]).react(failed, "window", ctx) == []


def test_threshold_fires_once_per_hot_streak():
    rule = build_registry().instantiate("cpu_threshold", {"threshold": 0.8, "windows": 2, "response": "tune"})
    ctx = _context(n3=1, n4=3)

    def window(mean):
        return rule.evaluate(MetricEvent.of("m1", 0, level=1, cpu_count=8, cpu_mean=mean), ctx)

    assert window(0.9) == []
    assert window(0.95) == [TuneParameter(node="n4", name="pool_size", value=8)]
    assert window(0.95) == []
    assert window(0.5) == []
    assert window(0.9) == []
    assert window(0.9) == [TuneParameter(node="n4", name="pool_size", value=8)]


def test_threshold_stop_picks_the_busiest_lowest_id():
    rule = build_registry().instantiate("cpu_threshold", {"windows": 1, "response": "stop"})
    event = MetricEvent.of("m1", 0, level=1, cpu_count=8, cpu_mean=1.0)
    assert rule.evaluate(event, _context(n3=2, n4=2)) == [StopNode(node="n3")]


# -- sensor --------------------------------------------------------------


@pytest.mark.parametrize("load, noise, expected", [
    ({}, 0.0, 0.0),
    ({"cpu": 2}, 0.0, 0.5),
    ({"cpu": 4}, 0.0, 1.0),
])
def test_sensor_reads_reserved_over_capacity(load, noise, expected):
    host = SimpleNamespace(actor_id="n3", now=1000, fabric=Fabric())
    sensor = Sensor(host, SensorSpec(noise=noise), {"cpu": 4}, lambda: load)
    event = sensor.sense()
    assert event.properties == (("cpu", expected),)
    assert (event.source, event.timestamp, event.level) == ("n3", 1000, 0)


def test_noisy_sensor_stays_in_range():
    host = SimpleNamespace(actor_id="n3", now=0, fabric=Fabric(seed=5))
    sensor = Sensor(host, SensorSpec(noise=0.5), {"cpu": 4}, lambda: {"cpu": 4})
    readings = [sensor.read() for _ in range(200)]
    assert all(0.0 <= r <= 1.0 for r in readings)
    assert min(readings) < 1.0


def test_sensor_spec_validation():
    with pytest.raises(ConfigurationError):
        SensorSpec(period=0)
    with pytest.raises(ConfigurationError):
        SensorSpec(noise=-0.1)


# -- actuators -----------------------------------------------------------


@pytest.fixture
def running_a(seven_node_topology):
    deployment = Deployment.build(seven_node_topology, Fabric(seed=1))
    deployment.deploy("m1", "A", {"cpu": 2}, at=500)
    deployment.run_until(1000)
    return deployment


def test_tune_parameter_is_applied_by_the_node(running_a):
    result = running_a.host("m1").actuator.execute(TuneParameter(node="n3", name="pool_size", value=8))
    running_a.run_until(1100)
    assert running_a.host("n3").local_actuator.get("pool_size") == 8
    assert result.status.value == "Succeeded"
    assert [s["step"] for s in result.steps] == ["set-parameter", "ack"]


def test_rebind_moves_the_app_and_uninstalls_the_old_copy(running_a):
    result = running_a.host("m1").actuator.execute(Rebind(component="A", target="n4"))
    running_a.run_until(1100)
    assert result.status.value == "Succeeded"
    assert running_a.snapshot("m1").mapping() == {"A": "n4"}
    assert running_a.host("n3").installed == {}
    assert running_a.host("n4").installed == {"A": {"cpu": 2}}
    assert running_a.host("m1").allocator.reserved("n3") == {}


def test_rebind_to_the_same_node_fails(running_a):
    result = running_a.host("m1").actuator.execute(Rebind(component="A", target="n3"))
    assert (result.status.value, result.reason) == ("Failed", "same-node")
    _, finished = _events(running_a, "action-result")[-1]
    assert finished["status"] == "Failed"


def test_stop_node_halts_it_without_a_failure_report(running_a):
    result = running_a.host("m1").actuator.execute(StopNode(node="n3"))
    running_a.run_until(10000)
    assert result.status.value == "Succeeded"
    assert running_a.host("n3").halted
    assert running_a.snapshot("m1").mapping() == {}
    assert not running_a.host("m1").discovery.is_available("n3")
    assert _events(running_a, "node-failed") == []
    assert len(_events(running_a, "halted", node="n3")) == 1


def test_repair_replaces_a_crashed_node(seven_node_topology):
    deployment = _repairing(seven_node_topology)
    deployment.deploy("m1", "A", {"cpu": 2}, at=500)
    deployment.fabric.inject(FaultSpec.crash("n3", 20500))
    deployment.run_until(30000)

    (at, action), = _events(deployment, "action")
    assert (at, action["kind"], action["failed"], action["apps"]) == (24000, "ReplaceNode", "n3", ["A"])
    (_, result), = _events(deployment, "action-result")
    assert result["status"] == "Succeeded"
    running = [(t, e["node"]) for t, e in _events(deployment, "deployment", app="A", state="Running")]
    assert running == [(520, "n3"), (24020, "n4")]
    assert deployment.snapshot("boot").mapping() == {"A": "n4"}


def test_repair_at_the_hosting_mirror_keeps_the_origin_informed(seven_node_topology):
    deployment = _repairing(seven_node_topology)
    deployment.deploy("m1", "F1", {"cpu": 4}, at=500)
    deployment.deploy("m1", "F2", {"cpu": 4}, at=500)
    deployment.deploy("m1", "E", {"cpu": 2}, at=1000)
    deployment.fabric.inject(FaultSpec.crash("n5", 20500))
    deployment.run_until(30000)

    (_, action), = _events(deployment, "action")
    assert (action["action_id"].split("!")[0], action["failed"], action["apps"]) == ("m2", "n5", ["E"])
    (_, relocated), = _events(deployment, "relocated", app="E")
    assert (relocated["manager"], relocated["node"], relocated["state"]) == ("m2", "n6", "Running")
    owned = deployment.host("m1").deployer.owned["E"]
    assert (owned.manager, owned.node, owned.state) == ("m2", "n6", "Running")
    assert _events(deployment, "warning") == []


def test_disabled_repair_domain_leaves_the_failure_alone(seven_node_topology):
    deployment = _repairing(seven_node_topology, Settings(disabled_domains=("repair",)))
    deployment.deploy("m1", "A", {"cpu": 2}, at=500)
    deployment.fabric.inject(FaultSpec.crash("n3", 20500))
    deployment.run_until(30000)
    assert len(_events(deployment, "node-failed")) == 1
    assert _events(deployment, "action") == []


def test_unrepairable_failure_reaches_the_boot(seven_node_topology):
    deployment = _repairing(seven_node_topology)
    deployment.deploy("m1", "A", {"cpu": 4}, at=500)
    deployment.deploy("m1", "B", {"cpu": 4}, at=500)
    deployment.deploy("m2", "C", {"cpu": 4}, at=500)
    deployment.deploy("m2", "D", {"cpu": 4}, at=500)
    deployment.fabric.inject(FaultSpec.crash("n3", 20500))
    deployment.run_until(30000)

    (_, result), = _events(deployment, "action-result")
    assert (result["status"], result["reason"]) == ("Failed", "exhausted")
    (_, escalation), = _events(deployment, "repair-escalation")
    assert (escalation["origin"], escalation["node"], escalation["apps"]) == ("m1", "n3", ["A"])
    repair_outcome = [e for _, e in _events(deployment, "outcome", app="A") if e["domain"] == "repair"]
    assert [(e["outcome"], e["reason"]) for e in repair_outcome] == [("Denied", "exhausted")]
