import json

import numpy as np
import pytest

from app import main
from core.errors import ConfigurationError, ScenarioError
from core.fabric import read_trace, write_trace
from core.scenario import ORACLES, execute, expand_random, load_scenario, run, verify
from core.scenario.loader import from_document
from core.scenario.types import RandomWorkload

BUNDLED = ["seven-node", "repair", "escalation", "random-workload", "shallow-4leaf", "deep-16leaf"]


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenario_passes(scenario_path, tmp_path, name):
    report, _ = run(load_scenario(scenario_path(name)), tmp_path)
    failed = [f"{a.kind}: {a.detail}" for a in report.assertions if not a.passed]
    assert report.assertions
    assert failed == []
    for artifact in ("trace.jsonl", "metrics.jsonl", "report.json", "report.txt"):
        assert (tmp_path / name / str(report.seed) / artifact).exists()


def test_same_seed_gives_byte_identical_traces(scenario_path, tmp_path):
    scenario = scenario_path("random-workload")
    first, _ = run(load_scenario(scenario), tmp_path / "a")
    second, _ = run(load_scenario(scenario), tmp_path / "b")
    a = (tmp_path / "a" / "random-workload" / "1" / "trace.jsonl").read_bytes()
    b = (tmp_path / "b" / "random-workload" / "1" / "trace.jsonl").read_bytes()
    assert a == b
    assert first.as_dict()["allocation"] == second.as_dict()["allocation"]


def test_report_json_is_stable(scenario_path, tmp_path):
    report, _ = run(load_scenario(scenario_path("repair")), tmp_path)
    written = json.loads((tmp_path / "repair" / "1" / "report.json").read_text())
    assert written["passed"] is True
    assert written["lifecycle"]["node-failed"] == 1
    assert [e["status"] for e in written["repair_episodes"]] == ["Succeeded"]
    assert written["received"]["boot"] == report.received["boot"]


def test_loader_reports_every_violation_at_once():
    document = {
        "name": "broken",
        "duration": -5,
        "colour": "blue",
        "defaults": {"latncy": 10, "policy": "random"},
        "topology": {"preset": "seven-node"},
        "faults": [{"crash": "n99", "at": 100}],
        "rules": [{"rule": "cpu_threshold", "params": {"bogus": 1}}],
        "assertions": [{"kind": "telepathy"}, {"kind": "lifecycle", "event": "node-failed"}],
    }
    with pytest.raises(ScenarioError) as error:
        from_document(document)
    violations = error.value.violations
    expected = ["unknown top-level key 'colour'", "duration must be", "unknown key 'defaults.latncy'",
                "Unknown allocation policy", "unknown host 'n99'", "unknown parameter 'bogus'",
                "unknown kind 'telepathy'", "missing parameter 'expected'"]
    for fragment in expected:
        assert any(fragment in v for v in violations), fragment


def test_explicit_hosts_infer_roles_and_take_per_host_keys():
    document = {
        "duration": 1000,
        "defaults": {"capacity": {"cpu": 8}},
        "topology": {"hosts": [
            {"id": "root"},
            {"id": "mid", "parent": "root"},
            {"id": "leaf", "parent": "mid", "capacity": {"cpu": 2}, "heartbeat": {"period": 500}},
            {"id": "other", "parent": "mid"},
        ]},
    }
    scenario = from_document(document)
    topology = scenario.topology
    assert [topology.role(h).value for h in topology.hosts] == ["Boot", "Mirror", "Node", "Node"]
    assert topology.spec("leaf").capacity == {"cpu": 2}
    assert topology.spec("other").capacity == {"cpu": 8}
    assert topology.spec("leaf").heartbeat.period == 500
    assert topology.spec("leaf").heartbeat.failure_timeout == 3000
    assert [r.name for r in scenario.rules] == ["replace_failed_node"]


def test_overrides_and_arguments_take_precedence(scenario_path):
    scenario = load_scenario(scenario_path("repair"), overrides=["defaults.heartbeat.period=500", "duration=30000"],
                             seed=7)
    assert scenario.topology.spec("n3").heartbeat.period == 500
    assert scenario.duration == 30000
    assert scenario.seed == 7


def test_malformed_override_rejected(scenario_path):
    with pytest.raises(ScenarioError):
        load_scenario(scenario_path("repair"), overrides=["duration"])


@pytest.mark.parametrize("name", ["paper-7node", "seven-node"])
def test_bundled_scenarios_resolve_by_name(name):
    scenario = load_scenario(name)
    assert scenario.name == "seven-node"
    assert [scenario.topology.role(h).value for h in scenario.topology.hosts].count("Node") == 4
    assert len(scenario.topology) == 7


def test_preset_alias_builds_the_seven_node_tree():
    scenario = from_document({"duration": 1000, "topology": {"preset": "paper-7node"}})
    assert scenario.topology.children("boot") == ["m1", "m2"]
    assert scenario.topology.children("m2") == ["n5", "n6"]


def test_unknown_scenario_name_is_a_read_error():
    with pytest.raises(ScenarioError, match="cannot read scenario"):
        load_scenario("no-such-scenario")


def test_random_workload_is_seeded_and_well_formed():
    workload = RandomWorkload(commands=40, apps=5, demand=(1, 3), start=1000, end=9000, managers=("m1", "m2"))
    commands = expand_random(workload, np.random.default_rng(3))
    assert commands == expand_random(workload, np.random.default_rng(3))
    assert [c.at for c in commands] == sorted(c.at for c in commands)
    assert all(1000 <= c.at < 9000 for c in commands)

    live = {}
    for command in commands:
        if command.kind == "deploy":
            assert command.app not in live
            assert 1 <= command.demand["cpu"] <= 3
            live[command.app] = command.target
        else:
            assert live.pop(command.app) == command.target


def test_oracles_pass_on_a_written_trace(scenario_path, tmp_path):
    _, ctx = run(load_scenario(scenario_path("repair")), tmp_path)
    results = verify(ctx.trace_path)
    assert [r.name for r in results] == list(ORACLES)
    assert all(r.passed for r in results)
    assert all(r.checked > 0 for r in results)


def test_conservation_oracle_catches_a_leaked_reservation(scenario_path, tmp_path):
    _, ctx = run(load_scenario(scenario_path("escalation")), tmp_path)
    records = read_trace(ctx.trace_path)
    line = next(i for i, r in enumerate(records)
                if r["kind"] == "event" and r["payload"]["type"] == "reservation")
    records[line]["payload"]["reserved"] = {"cpu": 99}
    result, = verify(records, "conservation")
    assert not result.passed
    assert result.line == line + 1


def test_aggregation_oracle_catches_a_wrong_summary(scenario_path, tmp_path):
    _, ctx = run(load_scenario(scenario_path("shallow-4leaf")), tmp_path)
    records = read_trace(ctx.trace_path)
    for record in records:
        payload = record["payload"]
        if record["kind"] == "event" and payload["type"] == "republish" and payload["manager"] == "m1" \
                and payload["window_start"] >= 5000:
            payload["events"][0]["properties"][0][1] += 1
            break
    result, = verify(write_trace(records, tmp_path / "tampered.jsonl"), "aggregation")
    assert not result.passed


def test_aggregation_oracle_traces_summaries_back_to_raw_readings(scenario_path, tmp_path):
    _, ctx = run(load_scenario(scenario_path("shallow-4leaf")), tmp_path)
    records = read_trace(ctx.trace_path)
    reading = next(r for r in records if r["kind"] == "deliver" and r["to"] == "m1"
                   and r["payload"].get("type") == "MetricEvent" and r["payload"]["level"] == 0
                   and 5000 <= r["time"] < 10000)
    reading["payload"]["properties"][0][1] = 1.0
    # m1's own summary is rewritten to agree with the bad reading, so only the
    # Boot's summary one hop up disagrees with what lies beneath it.
    republish = next(r["payload"] for r in records if r["kind"] == "event"
                     and r["payload"]["type"] == "republish" and r["payload"]["manager"] == "m1"
                     and r["payload"]["window_start"] == 5000)
    props = republish["events"][0]["properties"]
    count = dict(props)["cpu_count"]
    for entry in props:
        if entry[0] == "cpu_mean":
            entry[1] = 1.0 / count
        elif entry[0] == "cpu_max":
            entry[1] = 1.0
    result, = verify(write_trace(records, tmp_path / "tampered.jsonl"), "aggregation")
    assert not result.passed
    assert "boot window 10000..15000" in result.message
    assert "raw reading" in result.message


def test_unknown_oracle_rejected():
    with pytest.raises(ConfigurationError):
        verify([], "liveness")


def _write(tmp_path, name, text):
    path = tmp_path / f"{name}.yaml"
    path.write_text(text, encoding="utf-8")
    return path


def test_cli_exit_codes(tmp_path, capsys):
    passing = _write(tmp_path, "ok", """\
duration: 8000
topology: {preset: seven-node}
assertions:
  - {kind: lifecycle, event: node-available, expected: 6}
""")
    failing = _write(tmp_path, "wrong", """\
duration: 8000
topology: {preset: seven-node}
assertions:
  - {kind: lifecycle, event: node-available, expected: 99}
""")
    invalid = _write(tmp_path, "invalid", "duration: 8000\ntopology: {preset: star}\n")
    out = str(tmp_path / "out")

    assert main(["run", str(passing), "--out", out]) == 0
    assert "ok" in capsys.readouterr().out
    assert main(["run", str(failing), "--out", out]) == 1
    assert main(["run", str(invalid), "--out", out]) == 2
    assert main(["run", str(tmp_path / "missing.yaml"), "--out", out]) == 2
    assert main(["verify", str(tmp_path / "out" / "ok" / "0" / "trace.jsonl")]) == 0


def test_cli_parse_descriptor(grid_descriptor, capsys):
    assert main(["parse-descriptor", str(grid_descriptor)]) == 0
    assert "process g5k launcher=ssh hostlist=\"${NODES}\"" in capsys.readouterr().out
    assert main(["parse-descriptor", str(grid_descriptor), "-D", "NODES=n3 n4"]) == 0
    plan = json.loads(capsys.readouterr().out)
    assert plan["targets"] == {"grid": ["n3", "n4"]}


@pytest.mark.parametrize("seed", range(1, 11))
def test_reservations_match_live_deployments_for_any_seed(scenario_path, seed):
    ctx = execute(load_scenario(scenario_path("random-workload"), seed=seed))
    result, = verify(ctx.trace, "conservation")
    assert result.passed, str(result)
    assert result.checked > 0
