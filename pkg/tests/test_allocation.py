import pytest

from core.allocation import Candidate, DeploymentRecord, DeploymentState, get_policy, least_loaded, policy_names
from core.errors import ConfigurationError
from core.fabric import Fabric, FaultSpec
from core.hierarchy import Deployment


def _events(deployment, kind, **match):
    return [r["payload"] for r in deployment.fabric.trace
            if r["kind"] == "event" and r["payload"]["type"] == kind
            and all(r["payload"].get(k) == v for k, v in match.items())]


@pytest.fixture
def deployment(seven_node_topology):
    return Deployment.build(seven_node_topology, Fabric(seed=1))


def _fill_m1(deployment):
    deployment.deploy("m1", "F1", {"cpu": 4}, at=500)
    deployment.deploy("m1", "F2", {"cpu": 4}, at=500)


def test_policies_registered():
    assert policy_names() == ["first-fit", "most-free"]
    with pytest.raises(ConfigurationError):
        get_policy("random")


def test_most_free_breaks_ties_by_lowest_id():
    candidates = [Candidate("n4", {"cpu": 4}), Candidate("n3", {"cpu": 4}), Candidate("n5", {"cpu": 1})]
    assert get_policy("most-free")(candidates, {"cpu": 2}) == "n3"


def test_most_free_prefers_more_room():
    candidates = [Candidate("n3", {"cpu": 2}), Candidate("n4", {"cpu": 3})]
    assert get_policy("most-free")(candidates, {"cpu": 2}) == "n4"
    assert get_policy("first-fit")(candidates, {"cpu": 2}) == "n3"


def test_no_feasible_candidate():
    assert get_policy("first-fit")([Candidate("n3", {"cpu": 1})], {"cpu": 2}) is None
    assert get_policy("most-free")([Candidate("n3", {"gpu": 8})], {"cpu": 1}) is None


def test_least_loaded_skips_excluded_nodes():
    candidates = [Candidate("n3", {"cpu": 4}), Candidate("n4", {"cpu": 2})]
    assert least_loaded(candidates, {"cpu": 1}, exclude=["n3"]) == "n4"


def test_terminal_states_have_no_way_out():
    record = DeploymentRecord("A", "n3", DeploymentState.STOPPED, 0)
    with pytest.raises(ConfigurationError, match="Illegal transition"):
        record.move_to(DeploymentState.RUNNING)


def test_local_grant_runs_after_the_install_round_trip(deployment):
    deployment.deploy("m1", "A", {"cpu": 2}, at=500)
    deployment.run_until(2000)

    allocation, = _events(deployment, "allocation", app="A")
    assert (allocation["manager"], allocation["outcome"], allocation["node"]) == ("m1", "Granted", "n3")
    outcome, = _events(deployment, "outcome", app="A")
    assert (outcome["outcome"], outcome["state"], outcome["node"]) == ("Granted", "Running", "n3")
    running = [r["time"] for r in deployment.fabric.trace
               if r["kind"] == "event" and r["payload"]["type"] == "deployment" and r["payload"]["state"] == "Running"]
    assert running == [520]
    assert deployment.host("n3").installed == {"A": {"cpu": 2}}
    assert deployment.host("m1").allocator.free("n3") == {"cpu": 2}


def test_escalation_delegates_to_a_sibling_mirror(deployment):
    _fill_m1(deployment)
    deployment.deploy("m1", "E", {"cpu": 2}, at=1000)
    deployment.run_until(3000)

    steps = [(e["manager"], e["outcome"], e.get("to") or e.get("node"), e["hop_count"])
             for e in _events(deployment, "allocation", app="E")]
    assert steps == [("m1", "Escalated", "boot", 0), ("boot", "Delegated", "m2", 1), ("m2", "Granted", "n5", 1)]
    assert deployment.snapshot("m2").mapping() == {"E": "n5"}
    assert "E" not in deployment.snapshot("m1").mapping()

    owned = deployment.host("m1").deployer.owned["E"]
    assert (owned.manager, owned.node, owned.state) == ("m2", "n5", "Running")


def test_root_denies_when_the_tree_is_exhausted(deployment):
    _fill_m1(deployment)
    deployment.deploy("m1", "E", {"cpu": 2}, at=1000)
    deployment.deploy("m2", "F3", {"cpu": 4}, at=2000)
    deployment.deploy("m1", "G", {"cpu": 3}, at=3000)
    deployment.run_until(5000)

    outcome, = _events(deployment, "outcome", app="G")
    assert (outcome["outcome"], outcome["reason"]) == ("Denied", "exhausted")
    assert [e["outcome"] for e in _events(deployment, "allocation", app="G")] == [
        "Escalated", "Delegated", "Denied", "Denied"]
    assert _events(deployment, "deployment", app="G") == []


def test_mirrors_are_never_allocation_targets(deployment):
    deployment.run_until(2000)
    boot = deployment.host("boot")
    assert boot.allocator.candidates() == []
    assert boot.allocator.hostable_children() == []


def test_duplicate_deploy_is_a_warning(deployment):
    deployment.deploy("m1", "A", {"cpu": 1}, at=500)
    deployment.deploy("m1", "A", {"cpu": 1}, at=600)
    deployment.run_until(1000)
    warning, = _events(deployment, "warning")
    assert warning["warning"] == "duplicate-deploy"
    assert len(_events(deployment, "deployment", state="Deploying")) == 1


def test_release_of_unknown_app_is_a_warning(deployment):
    deployment.release("m1", "ghost", at=500)
    deployment.run_until(1000)
    warning, = _events(deployment, "warning")
    assert (warning["warning"], warning["app"]) == ("release-unknown", "ghost")


def test_release_frees_the_reservation(deployment):
    deployment.deploy("m1", "A", {"cpu": 4}, at=500)
    deployment.release("m1", "A", at=1000)
    deployment.run_until(2000)

    m1 = deployment.host("m1")
    assert m1.allocator.free("n3") == {"cpu": 4}
    assert m1.deployer.records == {}
    assert deployment.host("n3").installed == {}
    assert [e["reserved"] for e in _events(deployment, "reservation", node="n3")] == [{"cpu": 4}, {}]
    assert [e["state"] for e in _events(deployment, "deployment", app="A")] == ["Deploying", "Running", "Stopped"]


def test_release_before_the_outcome_is_deferred(deployment):
    _fill_m1(deployment)
    deployment.deploy("m1", "E", {"cpu": 2}, at=1000)
    deployment.release("m1", "E", at=1001)
    deployment.run_until(3000)

    deferred, = _events(deployment, "release-deferred")
    assert deferred["app"] == "E"
    assert [e["state"] for e in _events(deployment, "deployment", app="E")] == ["Deploying", "Running", "Stopped"]
    assert deployment.host("m2").deployer.records == {}
    assert deployment.host("n5").installed == {}


def test_install_to_a_dead_node_times_out_as_lost(deployment):
    deployment.deploy("m1", "A", {"cpu": 2}, at=500)
    deployment.fabric.inject(FaultSpec.crash("n3", 505))
    deployment.run_until(7000)

    outcome, = _events(deployment, "outcome", app="A")
    assert (outcome["outcome"], outcome["state"], outcome["reason"]) == ("Granted", "Lost", "install-timeout")
    lost = [r["time"] for r in deployment.fabric.trace
            if r["kind"] == "event" and r["payload"]["type"] == "deployment" and r["payload"]["state"] == "Lost"]
    assert lost == [5500]
    assert deployment.host("m1").allocator.reserved("n3") == {}


def _outcome_times(deployment, app):
    return [(r["time"], r["payload"]["outcome"], r["payload"]["reason"]) for r in deployment.fabric.trace
            if r["kind"] == "event" and r["payload"]["type"] == "outcome" and r["payload"]["app"] == app]


def test_delegation_to_a_crashed_mirror_times_out(deployment):
    _fill_m1(deployment)
    deployment.fabric.inject(FaultSpec.crash("m2", 900))
    deployment.deploy("m1", "E", {"cpu": 2}, at=1000)
    deployment.run_until(3000)

    assert [(e["manager"], e["outcome"]) for e in _events(deployment, "allocation", app="E")] == [
        ("m1", "Escalated"), ("boot", "Delegated"), ("boot", "Denied")]
    warning, = _events(deployment, "warning", warning="delegation-timeout")
    assert (warning["manager"], warning["mirror"]) == ("boot", "m2")
    assert _outcome_times(deployment, "E") == [(2020, "Denied", "timeout")]
    assert deployment.host("m1").deployer.owned["E"].state == "Denied"


def test_an_app_denied_by_timeout_can_be_deployed_again(deployment):
    _fill_m1(deployment)
    deployment.fabric.inject(FaultSpec.crash("m2", 900))
    deployment.deploy("m1", "E", {"cpu": 2}, at=1000)
    deployment.deploy("m1", "E", {"cpu": 2}, at=8000)
    deployment.run_until(12000)

    assert _events(deployment, "warning", warning="duplicate-deploy") == []
    assert [o for _, o, _ in _outcome_times(deployment, "E")] == ["Denied", "Denied"]
    assert deployment.host("boot").deployer.records == {}


def test_escalation_to_a_crashed_parent_times_out_at_the_origin(deployment):
    _fill_m1(deployment)
    deployment.fabric.inject(FaultSpec.crash("boot", 900))
    deployment.deploy("m1", "E", {"cpu": 2}, at=1000)
    deployment.run_until(12000)

    assert _outcome_times(deployment, "E") == [(11000, "Denied", "timeout")]
    outcome, = _events(deployment, "outcome", app="E")
    assert outcome["manager"] == "m1"
    warning, = _events(deployment, "warning", warning="request-timeout")
    assert warning["app"] == "E"
    assert not deployment.host("m1").deployer.owned["E"].live


def test_granted_request_leaves_no_pending_timer(deployment):
    deployment.deploy("m1", "A", {"cpu": 2}, at=500)
    deployment.run_until(20000)

    assert _events(deployment, "warning") == []
    assert deployment.host("m1").deployer.owned["A"].timer is None
    assert _outcome_times(deployment, "A") == [(520, "Granted", None)]


def test_lineage_names_the_remote_origin(deployment):
    _fill_m1(deployment)
    deployment.deploy("m1", "E", {"cpu": 2}, at=1000)
    deployment.run_until(3000)

    m2 = deployment.host("m2").deployer
    record = m2.records["E"]
    assert m2.lineage(record) == ("m1", record.request_id)
    assert deployment.host("m1").deployer.lineage(record) is None

