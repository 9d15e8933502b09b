"""
Trace oracles.

Each oracle replays a finished trace and checks one system-wide property. They
read the JSON records only, so a trace written by an earlier run (or by
another implementation of the same format) can be verified on its own.
"""
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

from core.errors import ConfigurationError
from core.fabric.trace import read_trace

logger = logging.getLogger(__name__)

LIVE_STATES = ("Deploying", "Running")
REL_TOL = 1e-9

Records = List[dict]


@dataclass
class OracleResult:
    name: str
    passed: bool
    checked: int
    message: str = ""
    line: Optional[int] = None

    def __str__(self) -> str:
        status = "ok" if self.passed else "FAILED"
        where = f" (line {self.line})" if self.line is not None else ""
        return f"{self.name}: {status}, {self.checked} check(s){where} {self.message}".rstrip()


ORACLES: Dict[str, Callable[[Records], OracleResult]] = {}


def oracle(name: str):
    def decorate(func):
        ORACLES[name] = func
        return func

    return decorate


def verify(trace: Union[str, Path, Records], name: str = "all") -> List[OracleResult]:
    """Run one oracle, or every oracle for ``all``, over a trace file or list of records."""
    records = read_trace(trace) if isinstance(trace, (str, Path)) else list(trace)
    if name == "all":
        names = list(ORACLES)
    elif name in ORACLES:
        names = [name]
    else:
        raise ConfigurationError(f"Unknown oracle '{name}', expected one of {['all', *ORACLES]}")
    results = [ORACLES[n](records) for n in names]
    for result in results:
        logger.info(str(result))
    return results


def _events(records: Records) -> Iterable[Tuple[int, dict]]:
    for line, record in enumerate(records, start=1):
        yield line, record


def _restarted(record: dict) -> Optional[str]:
    return record["from"] if record["kind"] == "restart" else None


# -- aggregation ----------------------------------------------------------------

def _props(summary: dict) -> Dict[str, float]:
    return {name: value for name, value in summary["properties"]}


def _sample(summary: dict, metric: str) -> Optional[Tuple[float, Optional[float], Optional[float],
                                                           Optional[float], Optional[float], int]]:
    props = _props(summary)
    if summary["level"] == 0:
        value = props.get(metric)
        if value is None:
            return None
        return 1.0, value, value, value, value, summary["timestamp"]
    count = props.get(f"{metric}_count")
    if count is None:
        return None
    return (count, props.get(f"{metric}_mean"), props.get(f"{metric}_max"), props.get(f"{metric}_min"),
            props.get(f"{metric}_last"), summary["timestamp"])


def _rollup(inputs: List[dict], metrics: List[str], functions: List[str]) -> List[Tuple[str, float]]:
    out: List[Tuple[str, float]] = []
    for metric in metrics:
        samples = [s for s in (_sample(e, metric) for e in inputs) if s is not None and s[0] > 0]
        out.append((f"{metric}_count", float(sum(s[0] for s in samples))))
        if not samples:
            continue
        for fn in functions:
            if fn == "count":
                continue
            if fn == "mean":
                weighted = [s for s in samples if s[1] is not None]
                if weighted:
                    total = sum(s[0] for s in weighted)
                    out.append((f"{metric}_mean", sum(s[0] * s[1] for s in weighted) / total))
            elif fn in ("max", "min"):
                index = 2 if fn == "max" else 3
                values = [s[index] for s in samples if s[index] is not None]
                if values:
                    out.append((f"{metric}_{fn}", max(values) if fn == "max" else min(values)))
            elif fn == "last":
                latest = None
                for s in samples:
                    if s[4] is not None and (latest is None or s[5] >= latest[5]):
                        latest = s
                if latest is not None:
                    out.append((f"{metric}_last", latest[4]))
    return out


def _expected_summaries(manager: str, inputs: List[dict], event: dict) -> List[Tuple[str, List[Tuple[str, float]]]]:
    if event["group_by"] == "source" and inputs:
        groups: Dict[str, List[dict]] = {}
        for summary in inputs:
            groups.setdefault(summary["source"], []).append(summary)
        return [(source, _rollup(groups[source], event["metrics"], event["functions"])) for source in sorted(groups)]
    return [(manager, _rollup(inputs, event["metrics"], event["functions"]))]


def _same(expected: List[Tuple[str, float]], actual: List[List]) -> bool:
    if [n for n, _ in expected] != [n for n, _ in actual]:
        return False
    return all(math.isclose(e, a, rel_tol=REL_TOL, abs_tol=1e-12) for (_, e), (_, a) in zip(expected, actual))


@oracle("aggregation")
def aggregation_oracle(records: Records) -> OracleResult:
    """
    Every republished summary equals a fresh aggregation of the inputs its
    manager received in that window, and also equals plain statistics over
    the raw readings it descends from, traced back hop by hop.
    """
    buffers: Dict[str, List[Tuple[int, str, dict]]] = {}
    provenance: Dict[Tuple[str, int, str], Optional[List[dict]]] = {}
    halted = set()
    checked = 0
    for line, record in _events(records):
        restarted = _restarted(record)
        if restarted is not None:
            buffers.pop(restarted, None)
            halted.discard(restarted)
            continue
        payload = record["payload"]
        if record["kind"] == "deliver" and payload.get("type") == "MetricEvent":
            if record["to"] not in halted:
                buffers.setdefault(record["to"], []).append((record["time"], record["from"], payload))
            continue
        if record["kind"] != "event":
            continue
        if payload["type"] == "halted":
            halted.add(payload["node"])
            continue
        if payload["type"] != "republish":
            continue

        manager = payload["manager"]
        start, close = payload["window_start"], payload["window_end"]
        buffer = buffers.get(manager, [])
        received = [(sender, p) for t, sender, p in buffer if start <= t < close]
        buffers[manager] = [(t, sender, p) for t, sender, p in buffer if t >= close]
        inputs = [p for _, p in received]
        expected = _expected_summaries(manager, inputs, payload)
        actual = payload["events"]
        checked += 1
        if len(expected) != len(actual):
            return OracleResult("aggregation", False, checked,
                                f"{manager} window {start}..{close}: expected {len(expected)} summaries, "
                                f"got {len(actual)}", line)
        for (source, props), summary in zip(expected, actual):
            if summary["source"] != source or not _same(props, summary["properties"]):
                return OracleResult("aggregation", False, checked,
                                    f"{manager} window {start}..{close}: expected {source} {props}, "
                                    f"got {summary['source']} {summary['properties']}", line)

        for summary in actual:
            group = [(sender, p) for sender, p in received
                     if payload["group_by"] != "source" or p["source"] == summary["source"]]
            readings = _readings(group, provenance)
            provenance[(manager, close, summary["source"])] = readings
            if readings is None:
                continue
            mismatch = _flat_mismatch(summary, readings, payload["metrics"])
            if mismatch:
                return OracleResult("aggregation", False, checked,
                                    f"{manager} window {start}..{close}: {summary['source']} {mismatch} "
                                    f"over {len(readings)} raw reading(s) below it", line)
    return OracleResult("aggregation", True, checked)


def _readings(group: List[Tuple[str, dict]],
              provenance: Dict[Tuple[str, int, str], Optional[List[dict]]]) -> Optional[List[dict]]:
    """Raw readings under a group of inputs, or None when some input's history is not in the trace."""
    readings: List[dict] = []
    for sender, event in group:
        if event["level"] == 0:
            readings.append(event)
            continue
        below = provenance.get((sender, event["timestamp"], event["source"]))
        if below is None:
            return None
        readings.extend(below)
    return readings


def _flat_mismatch(summary: dict, readings: List[dict], metrics: List[str]) -> Optional[str]:
    props = _props(summary)
    for metric in metrics:
        values = [v for v in (_props(r).get(metric) for r in readings) if v is not None]
        flat = {f"{metric}_count": float(len(values))}
        if values:
            flat.update({f"{metric}_mean": math.fsum(values) / len(values),
                         f"{metric}_max": max(values), f"{metric}_min": min(values)})
        for name, value in flat.items():
            if name not in props:
                continue
            if not math.isclose(props[name], value, rel_tol=REL_TOL, abs_tol=1e-12):
                return f"has {name}={props[name]}, raw readings give {value}"
    return None


# -- resource conservation ------------------------------------------------------

def _add(total: Dict[str, int], demand: Dict[str, int]) -> None:
    for resource, units in demand.items():
        total[resource] = total.get(resource, 0) + units


@oracle("conservation")
def conservation_oracle(records: Records) -> OracleResult:
    """Reservations on a node always equal the demand of the live deployments placed on it."""
    live: Dict[Tuple[str, str, str], Dict[str, int]] = {}
    checked = 0
    for line, record in _events(records):
        restarted = _restarted(record)
        if restarted is not None:
            live = {k: v for k, v in live.items() if k[0] != restarted}
            continue
        if record["kind"] != "event":
            continue
        payload = record["payload"]
        if payload["type"] == "deployment":
            key = (payload["manager"], payload["node"], payload["app"])
            if payload["state"] in LIVE_STATES:
                live[key] = dict(payload["demand"])
            else:
                live.pop(key, None)
        elif payload["type"] == "reservation":
            manager, node = payload["manager"], payload["node"]
            expected: Dict[str, int] = {}
            for (m, n, _), demand in live.items():
                if m == manager and n == node:
                    _add(expected, demand)
            reserved = {r: u for r, u in payload["reserved"].items() if u}
            expected = {r: u for r, u in expected.items() if u}
            checked += 1
            if reserved != expected or any(u < 0 for u in reserved.values()):
                return OracleResult("conservation", False, checked,
                                    f"{manager} reserves {reserved} on {node}, live deployments need {expected}",
                                    line)
    return OracleResult("conservation", True, checked)


# -- repair -----------------------------------------------------------------------

@dataclass
class _Episode:
    manager: str
    node: str
    apps: Tuple[str, ...]
    line: int
    actions: List[str]


@oracle("repair")
def repair_oracle(records: Records) -> OracleResult:
    """
    A node failure with apps Running on it leads to exactly one ReplaceNode at
    its manager, and each of those apps next runs somewhere else unless the
    repair was exhausted.
    """
    running: Dict[Tuple[str, str], str] = {}
    episodes: List[_Episode] = []
    open_episodes: Dict[Tuple[str, str], _Episode] = {}
    results: Dict[str, dict] = {}
    next_running: Dict[Tuple[int, str], Tuple[str, int]] = {}
    for line, record in _events(records):
        restarted = _restarted(record)
        if restarted is not None:
            running = {k: v for k, v in running.items() if k[0] != restarted}
            continue
        if record["kind"] != "event":
            continue
        payload, kind = record["payload"], record["payload"]["type"]
        if kind == "deployment":
            key = (payload["manager"], payload["app"])
            if payload["state"] == "Running":
                running[key] = payload["node"]
                for episode in episodes:
                    if payload["app"] in episode.apps and (episode.line, payload["app"]) not in next_running \
                            and line > episode.line:
                        next_running[(episode.line, payload["app"])] = (payload["node"], line)
            elif running.get(key) == payload["node"]:
                del running[key]
        elif kind == "node-failed":
            manager = payload["manager"]
            apps = tuple(sorted(a for (m, a), n in running.items() if m == manager and n == payload["node"]))
            episode = _Episode(manager, payload["node"], apps, line, [])
            episodes.append(episode)
            open_episodes[(manager, payload["node"])] = episode
        elif kind in ("node-recovered", "node-available"):
            open_episodes.pop((payload["manager"], payload["node"]), None)
        elif kind == "action" and payload["kind"] == "ReplaceNode":
            episode = open_episodes.get((record["from"], payload["failed"]))
            if episode is None:
                return OracleResult("repair", False, len(episodes),
                                    f"ReplaceNode for {payload['failed']} at {record['from']} without a failure", line)
            episode.actions.append(payload["action_id"])
        elif kind == "action-result":
            results[payload["action_id"]] = payload

    for episode in episodes:
        expected = 1 if episode.apps else 0
        if len(episode.actions) != expected:
            return OracleResult("repair", False, len(episodes),
                                f"{episode.manager} issued {len(episode.actions)} ReplaceNode for {episode.node}, "
                                f"expected {expected}", episode.line)
        if not episode.actions:
            continue
        result = results.get(episode.actions[0])
        if result is not None and result["status"] == "Failed" and result["reason"] == "exhausted":
            continue
        for app in episode.apps:
            landed = next_running.get((episode.line, app))
            if landed is not None and landed[0] == episode.node:
                return OracleResult("repair", False, len(episodes),
                                    f"{app} came back on failed node {episode.node}", landed[1])
    return OracleResult("repair", True, len(episodes))
