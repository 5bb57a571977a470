"""Loading, running and emitting scenario files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import cache
from importlib import resources
from pathlib import Path

import jsonschema

from .config import ConfigError, ParseError, ScenarioConfig, ValidationError
from .netsim import MeasurementRecord, Simulation
from .stats import StatsSummary, ps_to_ns, summarize

CSV_COLUMNS = ("index", "send_ns", "reply_ns", "rtt_ns")
SUMMARY_FILE = "summary.json"


@cache
def schema() -> dict:
    return json.loads(resources.files("frer.data").joinpath("scenario.schema.json").read_text())


def list_builtin() -> list[str]:
    root = resources.files("frer.data").joinpath("scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def builtin_path(name: str) -> Path:
    p = resources.files("frer.data").joinpath("scenarios", f"{name}.json")
    if not p.is_file():
        raise FileNotFoundError(f"no builtin scenario {name!r}; have {', '.join(list_builtin())}")
    return Path(str(p))


def _json_path(parts) -> str:
    out = ""
    for part in parts:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def validate_document(doc: object) -> ScenarioConfig:
    """Schema-check a decoded document, then build it once to catch topology errors."""
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        where = _json_path(err.absolute_path)
        if err.validator == "required":
            missing = [k for k in err.validator_value if k not in err.instance]
            where = _json_path([*err.absolute_path, missing[0]])
        elif err.validator == "additionalProperties":
            extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
            where = _json_path([*err.absolute_path, extra[0]])
        raise ValidationError(where, err.message)
    config = ScenarioConfig.from_dict(doc)
    try:
        Simulation(config)
    except ConfigError as e:
        raise ValidationError("", str(e)) from None
    return config


def load_scenario(path: str | Path) -> ScenarioConfig:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg}", e.lineno, e.colno) from None
    return validate_document(doc)


def dump_scenario(config: ScenarioConfig) -> str:
    return json.dumps(config.to_dict(), indent=2) + "\n"


@dataclass
class RunResult:
    config: ScenarioConfig
    records: dict[str, list[MeasurementRecord]]
    flows: list[StatsSummary]
    eliminations: list[dict]
    drops: dict[str, int] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "scenario": self.config.name,
            "seed": self.config.run.seed,
            "t_end_ns": self.config.run.t_end_ns,
            "flows": [f.to_dict() for f in self.flows],
            "eliminations": self.eliminations,
            "drops": dict(sorted(self.drops.items())),
        }

    def flow(self, name: str) -> StatsSummary:
        return next(f for f in self.flows if f.flow == name)


def run(config: ScenarioConfig) -> RunResult:
    sim = Simulation(config)
    sim.run()
    return RunResult(
        config,
        {name: sink.records for name, sink in sim.sinks.items()},
        [summarize(name, sink.records, sink.duplicate_replies) for name, sink in sim.sinks.items()],
        sim.elimination_counters(),
        dict(sim.drops),
    )


def write_records_csv(records: list[MeasurementRecord], path: Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            reply = "" if r.reply_time is None else ps_to_ns(r.reply_time)
            rtt = "" if r.rtt is None else ps_to_ns(r.rtt)
            w.writerow((r.request_seq, ps_to_ns(r.send_time), reply, rtt))


def emit(result: RunResult, out_dir: str | Path, fmt: str = "both") -> list[Path]:
    """Write ``<flow>.csv`` per flow and/or ``summary.json`` into ``out_dir``."""
    if fmt not in ("csv", "summary", "both"):
        raise ValueError(f"unknown format {fmt!r}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        if fmt in ("csv", "both"):
            for name, records in result.records.items():
                p = out / f"{name}.csv"
                write_records_csv(records, p)
                written.append(p)
        if fmt in ("summary", "both"):
            p = out / SUMMARY_FILE
            p.write_text(json.dumps(result.summary(), indent=2) + "\n")
            written.append(p)
    except OSError as e:
        raise OSError(f"writing results to {out}: {e.strerror or e}") from e
    return written
