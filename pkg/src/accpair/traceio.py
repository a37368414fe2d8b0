"""Trace file and experiment configuration I/O.

Traces are UTF-8 CSV with LF line endings and a mandatory header::

    time_s,acc_hex,crc_ok,meter_id,true_acc_hex

``time_s`` carries nine fractional digits (slot widths are milliseconds,
so microsecond rounding would corrupt boundary decisions), ``acc_hex`` is
two hex digits, ``crc_ok`` is 0 or 1, and the ground-truth columns may be
empty.  Experiment configurations are JSON documents mirroring SimConfig;
unknown keys are rejected.
"""

from __future__ import annotations

import csv
import json
from dataclasses import fields as dataclass_fields
from typing import IO, Iterable, List, Optional, Tuple

from .slots import PacketArrival
from .timing import ProtocolParams

TRACE_HEADER = ["time_s", "acc_hex", "crc_ok", "meter_id", "true_acc_hex"]


class TraceFormatError(ValueError):
    """Malformed trace file; carries the offending line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConfigError(ValueError):
    """Invalid experiment configuration document."""


def format_trace_row(pkt: PacketArrival) -> List[str]:
    return [
        f"{pkt.time:.9f}",
        f"{pkt.acc:02x}",
        "0" if pkt.erroneous else "1",
        pkt.meter_id or "",
        "" if pkt.true_acc is None else f"{pkt.true_acc:02x}",
    ]


def write_trace(out: IO[str], trace: Iterable[PacketArrival]) -> int:
    """Write trace rows; returns the number of rows written."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    count = 0
    for pkt in trace:
        writer.writerow(format_trace_row(pkt))
        count += 1
    return count


def _parse_byte(text: str, line: int, column: str) -> int:
    if len(text) != 2:
        raise TraceFormatError(line, f"{column} must be two hex digits, got {text!r}")
    try:
        return int(text, 16)
    except ValueError:
        raise TraceFormatError(line, f"{column} is not valid hex: {text!r}") from None


def read_trace(inp: IO[str]) -> List[PacketArrival]:
    """Parse and validate a trace stream into time-sorted arrivals."""
    reader = csv.reader(inp)
    try:
        header = next(reader)
    except StopIteration:
        raise TraceFormatError(1, "missing header row") from None
    if header != TRACE_HEADER:
        raise TraceFormatError(1, f"bad header {header!r}, expected {TRACE_HEADER!r}")
    trace: List[PacketArrival] = []
    prev_time = None
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(TRACE_HEADER):
            raise TraceFormatError(line, f"expected {len(TRACE_HEADER)} fields, got {len(row)}")
        time_s, acc_hex, crc_ok, meter_id, true_acc_hex = row
        try:
            time = float(time_s)
        except ValueError:
            raise TraceFormatError(line, f"bad time {time_s!r}") from None
        if prev_time is not None and time < prev_time:
            raise TraceFormatError(line, f"time {time_s} precedes previous row ({prev_time:.9f})")
        prev_time = time
        acc = _parse_byte(acc_hex, line, "acc_hex")
        if crc_ok not in ("0", "1"):
            raise TraceFormatError(line, f"crc_ok must be 0 or 1, got {crc_ok!r}")
        if true_acc_hex and not meter_id:
            raise TraceFormatError(line, "true_acc_hex given without meter_id")
        trace.append(
            PacketArrival(
                time=time,
                acc=acc,
                erroneous=crc_ok == "0",
                meter_id=meter_id or None,
                true_acc=_parse_byte(true_acc_hex, line, "true_acc_hex") if true_acc_hex else None,
            )
        )
    return trace


_PARAM_KEYS = {f.name for f in dataclass_fields(ProtocolParams)}


def load_experiment_config(inp: IO[str]):
    """Build a SimConfig from a JSON experiment document.

    Returns ``(config, out_path)`` where ``out_path`` is the optional
    "out" entry of the document.
    """
    from .simulate import SimConfig  # local import to avoid a cycle

    try:
        doc = json.load(inp)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")

    sim_keys = {f.name for f in dataclass_fields(SimConfig)} - {"params"}
    known = sim_keys | {"params", "out"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

    params_doc = doc.get("params", {})
    if not isinstance(params_doc, dict):
        raise ConfigError("params must be a JSON object")
    bad = sorted(set(params_doc) - (_PARAM_KEYS - {"delta_map"}))
    if bad:
        raise ConfigError(f"unknown params keys: {', '.join(bad)}")

    try:
        params = ProtocolParams(**params_doc)
        cfg = SimConfig(params=params, **{k: doc[k] for k in sim_keys if k in doc})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    return cfg, doc.get("out")
