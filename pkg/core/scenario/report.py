"""
Run reports, derived from the trace after the fabric stops.

``report.json`` is ``RunReport.as_dict()`` and ``report.txt`` is the same data
rendered for people.
"""
import json
import logging
from collections import Counter
from pathlib import Path
from typing import TYPE_CHECKING, Dict, List

from mako.template import Template

from core.scenario.types import RunReport

if TYPE_CHECKING:
    from core.hierarchy.deployment import Deployment
    from core.scenario.types import Scenario

logger = logging.getLogger(__name__)

LIFECYCLE = ("node-available", "node-failed", "node-recovered")

REPORT_TEMPLATE = Template("""\
Scenario ${report.scenario} (seed ${report.seed}, ${report.duration} ms)
Hosts: ${', '.join('%s=%d' % (role, n) for role, n in report.hosts.items())}

Monitoring events received per window:
% for manager, counts in report.received.items():
  ${manager}: ${' '.join(str(c) for c in counts)}
% endfor

Lifecycle: ${', '.join('%s=%d' % (k, v) for k, v in report.lifecycle.items()) or 'none'}
Allocation outcomes: ${', '.join('%s=%d' % (k, v) for k, v in report.allocation.items()) or 'none'}

Repair episodes: ${len(report.repair_episodes)}
% for episode in report.repair_episodes:
  t=${episode['time']} ${episode['manager']} replaced ${episode['failed']} ${list(episode['apps'])}: ${episode['status']}${' (%s)' % episode['reason'] if episode['reason'] else ''}
% endfor

System representation:
% for manager, records in report.representation.items():
  ${manager}: ${', '.join('%s->%s' % (r['component'], r['node']) for r in records) or '-'}
% endfor
% if report.assertions:

Assertions:
% for outcome in report.assertions:
  [${'PASS' if outcome.passed else 'FAIL'}] ${outcome.kind}: ${outcome.detail}
% endfor
% endif
""")


def windows_by_manager(trace: List[dict]) -> Dict[str, List[dict]]:
    windows: Dict[str, List[dict]] = {}
    for record in trace:
        payload = record["payload"]
        if record["kind"] == "event" and payload["type"] == "republish":
            windows.setdefault(payload["manager"], []).append({
                "window_start": payload["window_start"],
                "window_end": payload["window_end"],
                "events": payload["events"],
            })
    return windows


def received_per_window(trace: List[dict], windows: Dict[str, List[dict]]) -> Dict[str, List[int]]:
    """MetricEvents delivered to each manager inside each of its windows."""
    deliveries: Dict[str, List[int]] = {}
    for record in trace:
        if record["kind"] == "deliver" and record["payload"].get("type") == "MetricEvent":
            deliveries.setdefault(record["to"], []).append(record["time"])
    return {
        manager: [sum(1 for t in deliveries.get(manager, []) if w["window_start"] <= t < w["window_end"])
                  for w in manager_windows]
        for manager, manager_windows in windows.items()
    }


def repair_episodes(trace: List[dict]) -> List[dict]:
    episodes: Dict[str, dict] = {}
    for record in trace:
        payload = record["payload"]
        if record["kind"] != "event":
            continue
        if payload["type"] == "action" and payload["kind"] == "ReplaceNode":
            episodes[payload["action_id"]] = {
                "action_id": payload["action_id"], "time": record["time"], "manager": record["from"],
                "failed": payload["failed"], "apps": payload["apps"], "status": "Pending", "reason": None,
                "finished_at": None,
            }
        elif payload["type"] == "action-result" and payload["action_id"] in episodes:
            episodes[payload["action_id"]].update(status=payload["status"], reason=payload["reason"],
                                                  finished_at=record["time"])
    return list(episodes.values())


def build_report(scenario: "Scenario", deployment: "Deployment", trace: List[dict]) -> RunReport:
    events = [r["payload"] for r in trace if r["kind"] == "event"]
    hosts = Counter(deployment.topology.spec(n).role.value for n in deployment.hosts)
    windows = windows_by_manager(trace)
    lifecycle = Counter(e["type"] for e in events if e["type"] in LIFECYCLE)
    allocation = Counter(e["outcome"] for e in events if e["type"] == "outcome")
    representation = {m: deployment.snapshot(m).as_records() for m in deployment.managers()}
    return RunReport(
        scenario=scenario.name,
        seed=scenario.seed,
        duration=scenario.duration,
        hosts={role: hosts[role] for role in ("Boot", "Mirror", "Node") if hosts[role]},
        windows=windows,
        received=received_per_window(trace, windows),
        lifecycle={kind: lifecycle[kind] for kind in LIFECYCLE if lifecycle[kind]},
        repair_episodes=repair_episodes(trace),
        allocation=dict(sorted(allocation.items())),
        representation=representation,
    )


def render_text(report: RunReport) -> str:
    return REPORT_TEMPLATE.render(report=report)


def write_report(report: RunReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n",
                                         encoding="utf-8")
    (out_dir / "report.txt").write_text(render_text(report), encoding="utf-8")
    logger.info(f"Wrote report to {out_dir}")


def write_metrics(report: RunReport, out_dir: Path) -> Path:
    """One line per republished MetricEvent, in window order per manager."""
    path = out_dir / "metrics.jsonl"
    lines = []
    for manager in sorted(report.windows):
        for window in report.windows[manager]:
            for event in window["events"]:
                lines.append(json.dumps({"manager": manager, "window_start": window["window_start"],
                                         "window_end": window["window_end"], **event}, separators=(",", ":")))
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path
