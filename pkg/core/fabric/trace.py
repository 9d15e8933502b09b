"""
Trace records and their line-delimited JSON form.

Each line is one object with the fields ``time, kind, from, to, payload,
reason`` in exactly that order. Payload dictionaries keep their insertion
order, which is dataclass field order for messages, so two runs over the same
scenario and seed produce byte-identical files.
"""
import dataclasses
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, List, Optional, Union

import numpy as np

from core.fabric.types import ActorId, SimTime, TraceKind, TraceRecord

logger = logging.getLogger(__name__)


def to_jsonable(value: Any) -> Any:
    """Convert message fields into plain JSON values with a stable order."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.generic):
        return value.item()
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return sorted(to_jsonable(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def describe(payload: Any) -> dict:
    """Payload summary used in trace records."""
    summary = getattr(payload, "summary", None)
    if callable(summary):
        return summary()
    if dataclasses.is_dataclass(payload) and not isinstance(payload, type):
        return {"type": type(payload).__name__, **to_jsonable(payload)}
    return {"type": type(payload).__name__, "value": to_jsonable(payload)}


def make_record(
        time: SimTime,
        kind: TraceKind,
        sender: Optional[ActorId],
        recipient: Optional[ActorId],
        payload: dict,
        reason: Optional[str] = None
) -> TraceRecord:
    return {
        "time": int(time),
        "kind": kind,
        "from": sender,
        "to": recipient,
        "payload": payload,
        "reason": reason,
    }


def dumps(record: TraceRecord) -> str:
    return json.dumps(record, separators=(",", ":"))


def write_trace(records: Iterable[TraceRecord], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(dumps(record))
            fh.write("\n")
    logger.debug(f"Wrote trace to {path}")
    return path


def read_trace(path: Union[str, Path]) -> List[TraceRecord]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
