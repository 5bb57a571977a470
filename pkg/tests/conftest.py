from __future__ import annotations

import copy
import json
from fractions import Fraction

from frer.config import ScenarioConfig
from frer.scenarios import builtin_path


def builtin_doc(name: str) -> dict:
    return json.loads(builtin_path(name).read_text())


def bed_doc(count: int = 10, interval_ns: int = 1_000_000, t_end_ns: int | None = None, **traffic) -> dict:
    doc = copy.deepcopy(builtin_doc("rtt-baseline"))
    flow = doc["traffic"][0]
    flow.update(count=count, interval_ns=interval_ns, **traffic)
    doc["run"]["t_end_ns"] = t_end_ns if t_end_ns is not None else count * interval_ns + 1_000_000_000
    return doc


def config(doc: dict) -> ScenarioConfig:
    return ScenarioConfig.from_dict(doc)


def link(doc: dict, link_id: str) -> dict:
    return next(lk for lk in doc["topology"]["links"] if lk["id"] == link_id)


def hop_ns(length: int, lk: dict) -> Fraction:
    """One hop, analytically: 8L/rate seconds plus propagation, in exact nanoseconds."""
    return Fraction(8 * length * 10**9, lk["rate_bps"]) + lk["delay_ns"]


# one line per acceptance criterion, echoed at the end of the pytest run
ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
