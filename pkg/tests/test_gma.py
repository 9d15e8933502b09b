import pytest

from core.errors import ConfigurationError
from core.fabric import Fabric
from core.gma import (AggregationSpec, Directory, DirectoryActor, MetricEvent, Registration, RegistrationKind,
                      Republisher, summarize)
from core.hierarchy import Deployment, HierarchyTopology
from core.messages import Lookup, LookupReply, Register


def _producer(subject, at, ttl=5000, properties=("cpu",)):
    return Registration(subject, RegistrationKind.PRODUCER, tuple(properties), at, ttl)


def test_registration_expires_exactly_at_ttl():
    directory = Directory()
    directory.register(_producer("n3", 0))
    assert directory.lookup(["cpu"], 4999) == ["n3"]
    assert directory.lookup(["cpu"], 5000) == []


def test_refreshed_registration_never_expires():
    directory = Directory()
    for at in range(0, 20000, 1000):
        directory.register(_producer("n3", at))
        assert directory.lookup(["cpu"], at + 999) == ["n3"]
    assert directory.lookup(["cpu"], 23999) == ["n3"]


def test_lookup_matches_offered_properties_and_skips_consumers():
    directory = Directory()
    directory.register(_producer("n3", 0))
    directory.register(_producer("m1", 0, properties=("cpu_count", "cpu_mean")))
    directory.register(Registration("boot", RegistrationKind.CONSUMER, ("cpu",), 0, 5000))
    assert directory.lookup(["cpu"], 10) == ["n3"]
    assert directory.lookup(["cpu_mean", "disk"], 10) == ["m1"]


def test_refresh_keeps_first_registration_order():
    directory = Directory()
    directory.register(_producer("n4", 0))
    directory.register(_producer("n3", 0))
    directory.register(_producer("n4", 500))
    assert directory.lookup(["cpu"], 600) == ["n4", "n3"]


def test_zero_ttl_rejected():
    with pytest.raises(ConfigurationError):
        Directory().register(_producer("n3", 0, ttl=0))


def test_missed_lookup_is_forwarded_and_answered_directly(recorders):
    fabric = Fabric()
    requester, = recorders(fabric, "n9")
    fabric.register(DirectoryActor("boot"))
    fabric.register(DirectoryActor("m1", parent_directory="boot.dir"))
    fabric.send("n9", "boot.dir", Register(subject="m2", kind="Producer", properties=("cpu_mean",), ttl=5000))
    fabric.run_until(10)
    fabric.send("n9", "m1.dir", Lookup(request_id="q1", wanted=("cpu_mean",), reply_to="n9", forward_on_miss=True))
    fabric.run_until(100)
    assert requester.seen == [(40, LookupReply(request_id="q1", producers=("m2",)))]


def test_directory_never_stores_event_data(recorders):
    fabric = Fabric()
    recorders(fabric, "n3")
    directory = fabric.register(DirectoryActor("m1"))
    fabric.send("n3", "m1.dir", MetricEvent.of("n3", 0, cpu=0.5))
    fabric.run_until(100)
    assert directory.directory.registrations() == []


@pytest.mark.parametrize("kind, ttl", [("Producer", 0), ("Producer", -5), ("Broker", 5000)])
def test_directory_actor_drops_bad_registrations(recorders, caplog, kind, ttl):
    fabric = Fabric()
    recorders(fabric, "n3")
    directory = fabric.register(DirectoryActor("m1"))
    fabric.send("n3", "m1.dir", Register(subject="n3", kind=kind, properties=("cpu",), ttl=ttl))
    fabric.send("n3", "m1.dir", Register(subject="n4", kind="Producer", properties=("cpu",), ttl=5000))
    fabric.run_until(100)
    assert [r.subject for r in directory.directory.registrations()] == ["n4"]
    assert "rejected registration of n3" in caplog.text


def test_event_rejects_duplicate_property_names():
    with pytest.raises(ConfigurationError):
        MetricEvent("n3", 0, (("cpu", 0.1), ("cpu", 0.2)))


@pytest.mark.parametrize("spec", [
    {"window": 0},
    {"functions": ()},
    {"functions": ("median",)},
    {"group_by": "host"},
])
def test_invalid_aggregation_spec_rejected(spec):
    with pytest.raises(ConfigurationError):
        AggregationSpec(**spec)


def test_raw_events_roll_up_with_count_first():
    events = [MetricEvent.of(f"n{i}", 100 * i, cpu=v) for i, v in enumerate([0.2, 0.4, 0.9])]
    properties = summarize(events, ("cpu",), AggregationSpec())
    assert [name for name, _ in properties] == ["cpu_count", "cpu_mean", "cpu_max", "cpu_min"]
    values = dict(properties)
    assert values["cpu_count"] == 3
    assert values["cpu_mean"] == pytest.approx(0.5, rel=1e-9)
    assert values["cpu_max"] == 0.9
    assert values["cpu_min"] == 0.2


def test_tiered_mean_equals_flat_mean():
    spec = AggregationSpec(functions=("mean", "max", "min", "count", "last"))
    left = [MetricEvent.of("n3", t, cpu=v) for t, v in [(0, 0.1), (1000, 0.3)]]
    right = [MetricEvent.of("n5", t, cpu=v) for t, v in [(0, 0.8), (1000, 0.6), (2000, 0.7)]]
    tier = [MetricEvent("m1", 5000, summarize(left, ("cpu",), spec), 1),
            MetricEvent("m2", 5000, summarize(right, ("cpu",), spec), 1)]
    rolled = dict(summarize(tier, ("cpu",), spec))
    flat = dict(summarize(left + right, ("cpu",), spec))
    assert rolled["cpu_count"] == flat["cpu_count"] == 5
    assert rolled["cpu_mean"] == pytest.approx(flat["cpu_mean"], rel=1e-9)
    assert rolled["cpu_max"] == flat["cpu_max"]
    assert rolled["cpu_min"] == flat["cpu_min"]


def test_empty_window_only_counts():
    republisher = Republisher("boot", AggregationSpec(), ("cpu",), tier_level=2)
    summary, = republisher.republish(5000)
    assert summary.properties == (("cpu_count", 0.0),)
    assert summary.level == 2
    assert summary.source == "boot"


def test_window_membership_is_by_delivery_time():
    republisher = Republisher("m1", AggregationSpec(), ("cpu",))
    republisher.accept(MetricEvent.of("n3", 4000, cpu=0.2), at=4990)
    republisher.accept(MetricEvent.of("n4", 4000, cpu=0.4), at=5000)
    first, = republisher.republish(5000)
    second, = republisher.republish(10000)
    assert first.get("cpu_count") == 1
    assert second.get("cpu_count") == 1
    assert second.get("cpu_mean") == 0.4
    assert first.level == 1


def test_group_by_source_emits_one_summary_per_source():
    republisher = Republisher("m1", AggregationSpec(group_by="source"), ("cpu",))
    for t, source, value in [(100, "n4", 0.5), (200, "n3", 0.1), (300, "n4", 0.7)]:
        republisher.accept(MetricEvent.of(source, t, cpu=value), at=t + 10)
    summaries = republisher.republish(5000)
    assert [s.source for s in summaries] == ["n3", "n4"]
    assert summaries[1].get("cpu_mean") == pytest.approx(0.6, rel=1e-9)


def _deployment(until):
    fabric = Fabric(seed=1)
    deployment = Deployment.build(HierarchyTopology.seven_node(), fabric)
    deployment.run_until(until)
    return deployment


def test_subscriptions_follow_the_tree():
    deployment = _deployment(3000)
    assert deployment.host("n3").producer.subscribers == ["m1"]
    assert deployment.host("m1").producer.subscribers == ["boot"]
    assert deployment.host("boot").consumer.producers == ["m1", "m2"]


def test_query_pulls_the_latest_event():
    deployment = _deployment(6000)
    boot = deployment.host("boot")
    boot.query("m1")
    deployment.run_until(6100)
    pulled = boot.pulled["m1"]
    assert pulled.source == "m1"
    assert pulled.timestamp == 5000
    # four readings from each of n3, n4 and m1 itself
    assert pulled.get("cpu_count") == 12


def test_mirror_readings_feed_its_own_window():
    deployment = _deployment(6000)
    own = [(r["time"], r["payload"]) for r in deployment.fabric.trace
           if r["kind"] == "deliver" and r["from"] == "m1" and r["to"] == "m1"]
    assert [t for t, _ in own] == [1000, 2000, 3000, 4000, 5000]
    assert all(e["type"] == "MetricEvent" and e["level"] == 0 and e["source"] == "m1" for _, e in own)

    republish = next(r["payload"] for r in deployment.fabric.trace
                     if r["kind"] == "event" and r["payload"]["type"] == "republish"
                     and r["payload"]["manager"] == "m1" and r["payload"]["window_end"] == 5000)
    assert dict(republish["events"][0]["properties"])["cpu_count"] == 12
    assert not any(r["kind"] == "deliver" and r["from"] == "boot" and r["to"] == "boot"
                   for r in deployment.fabric.trace)


def test_boot_only_receives_mirror_summaries():
    deployment = _deployment(30000)
    to_boot = [r["payload"] for r in deployment.fabric.trace
               if r["kind"] == "deliver" and r["to"] == "boot" and r["payload"]["type"] == "MetricEvent"]
    assert to_boot
    assert {e["source"] for e in to_boot} == {"m1", "m2"}
    assert all(e["level"] >= 1 for e in to_boot)
