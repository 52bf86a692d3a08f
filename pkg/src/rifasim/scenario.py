"""Scenario configuration: flat key-value files, validation, sweep expansion,
and CSV results persistence.

The file format is INI-style sections with `key = value` pairs; unknown
sections or keys are rejected. `serialize_scenario` emits every key with its
unit in a comment, and `parse_scenario(serialize_scenario(s)) == s` for any
valid scenario.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, replace

from .mobility import AreaSpec

PROTOCOL_NAMES = ("rifa", "baseline-flood", "baseline-minhop")
TRAFFIC_KINDS = ("cbr", "filesize")
SWEEP_AXES = ("node_count", "pause_time", "file_size_kb")


class ScenarioError(ValueError):
    """Invalid scenario content (bad value, unknown key, bad structure)."""


class ScenarioParseError(ScenarioError):
    """Malformed scenario text; message carries the offending line number."""


@dataclass(frozen=True)
class Scenario:
    """One fully-specified simulation run (before the seed picks the details)."""

    node_count: int = 50
    area_m: float = 1200.0
    sim_duration_s: float = 600.0
    seed: int = 1
    speed_range: tuple = (20.0, 25.0)
    pause_range: tuple = (10.0, 10.0)
    range_m: float = 200.0
    per_hop_latency_s: float = 0.002
    loss_probability: float = 0.01
    tx_cost_j: float = 0.02
    rx_cost_j: float = 0.01
    idle_cost_j_per_s: float = 0.001
    control_packet_bytes: int = 64
    initial_energy_j: float = 45.0
    danger_threshold_fraction: float = 0.2
    danger_fraction: float = 0.0
    traffic_kind: str = "cbr"
    packet_size_bytes: int = 512
    cbr_rate_pps: float = 2.0
    flow_count: int | None = None  # None = auto: max(1, node_count // 10)
    file_size_kb: float = 0.0
    traffic_start_s: float = 5.0
    protocol: str = "rifa"
    hello_interval_s: float = 1.0
    prediction_enabled: bool = True
    opi_weights: tuple = (0.4, 0.4, 0.2)
    deposit_quantum: float = 1.0
    initial_pheromone: float = 1.0
    warning_margin_s: float | None = None  # None = auto: hello interval + 0.5 s

    def area(self) -> AreaSpec:
        return AreaSpec(self.area_m, self.area_m)


def resolved_flow_count(s: Scenario) -> int:
    return s.flow_count if s.flow_count is not None else max(1, s.node_count // 10)


def _parse_auto_int(raw):
    return None if raw.strip() == "auto" else int(raw)


def _parse_auto_float(raw):
    return None if raw.strip() == "auto" else float(raw)


def _parse_bool(raw):
    v = raw.strip().lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


# (section, key) -> (scenario field or (field, tuple index), parser, unit comment)
SCHEMA = {
    ("simulation", "node_count"): ("node_count", int, "nodes"),
    ("simulation", "area_m"): ("area_m", float, "meters, square side"),
    ("simulation", "sim_duration_s"): ("sim_duration_s", float, "seconds"),
    ("simulation", "seed"): ("seed", int, "64-bit run seed"),
    ("mobility", "speed_min_mps"): (("speed_range", 0), float, "m/s"),
    ("mobility", "speed_max_mps"): (("speed_range", 1), float, "m/s"),
    ("mobility", "pause_min_s"): (("pause_range", 0), float, "seconds"),
    ("mobility", "pause_max_s"): (("pause_range", 1), float, "seconds"),
    ("radio", "range_m"): ("range_m", float, "meters"),
    ("radio", "per_hop_latency_s"): ("per_hop_latency_s", float, "seconds"),
    ("radio", "loss_probability"): ("loss_probability", float, "per-hop, in [0,1]"),
    ("radio", "tx_cost_j"): ("tx_cost_j", float, "joules per 512-byte packet"),
    ("radio", "rx_cost_j"): ("rx_cost_j", float, "joules per 512-byte packet"),
    ("radio", "idle_cost_j_per_s"): ("idle_cost_j_per_s", float, "joules/second"),
    ("radio", "control_packet_bytes"): ("control_packet_bytes", int, "bytes per control frame"),
    ("energy", "initial_j"): ("initial_energy_j", float, "joules per node"),
    ("energy", "danger_threshold_fraction"): ("danger_threshold_fraction", float, "of initial_j"),
    ("energy", "danger_fraction"): ("danger_fraction", float, "nodes starting below threshold"),
    ("traffic", "kind"): ("traffic_kind", str, "cbr | filesize"),
    ("traffic", "packet_size_bytes"): ("packet_size_bytes", int, "bytes"),
    ("traffic", "cbr_rate_pps"): ("cbr_rate_pps", float, "packets/second per flow"),
    ("traffic", "flow_count"): ("flow_count", _parse_auto_int, "flows, or auto"),
    ("traffic", "file_size_kb"): ("file_size_kb", float, "KB burst per flow (filesize kind)"),
    ("traffic", "start_s"): ("traffic_start_s", float, "seconds"),
    ("protocol", "name"): ("protocol", str, "rifa | baseline-flood | baseline-minhop"),
    ("protocol", "hello_interval_s"): ("hello_interval_s", float, "seconds"),
    ("protocol", "prediction_enabled"): ("prediction_enabled", _parse_bool, "link-failure prediction"),
    ("protocol", "opi_w_lifetime"): (("opi_weights", 0), float, "route score weight"),
    ("protocol", "opi_w_energy"): (("opi_weights", 1), float, "route score weight"),
    ("protocol", "opi_w_hops"): (("opi_weights", 2), float, "route score weight"),
    ("protocol", "deposit_quantum"): ("deposit_quantum", float, "pheromone units per reply"),
    ("protocol", "initial_pheromone"): ("initial_pheromone", float, "pheromone units"),
    ("protocol", "warning_margin_s"): ("warning_margin_s", _parse_auto_float, "seconds, or auto"),
}


def validate(s: Scenario) -> Scenario:
    """Raise ScenarioError naming the offending key; return s when sound."""
    def bad(key, why):
        raise ScenarioError(f"invalid {key}: {why}")

    if not isinstance(s.node_count, int) or not 2 <= s.node_count <= 10000:
        bad("node_count", f"must be an integer in [2, 10000], got {s.node_count}")
    if s.area_m <= 0:
        bad("area_m", f"must be positive, got {s.area_m}")
    if s.sim_duration_s <= 0:
        bad("sim_duration_s", f"must be positive, got {s.sim_duration_s}")
    if not 0 <= s.seed < 2 ** 64:
        bad("seed", f"must fit in 64 bits, got {s.seed}")
    lo, hi = s.speed_range
    if lo < 0 or hi < lo:
        bad("speed_min_mps/speed_max_mps", f"need 0 <= min <= max, got ({lo}, {hi})")
    lo, hi = s.pause_range
    if lo < 0 or hi < lo:
        bad("pause_min_s/pause_max_s", f"need 0 <= min <= max, got ({lo}, {hi})")
    if s.range_m <= 0:
        bad("range_m", f"must be positive, got {s.range_m}")
    if s.per_hop_latency_s < 0:
        bad("per_hop_latency_s", "must be non-negative")
    if not 0 <= s.loss_probability <= 1:
        bad("loss_probability", f"must lie in [0, 1], got {s.loss_probability}")
    if min(s.tx_cost_j, s.rx_cost_j, s.idle_cost_j_per_s) < 0:
        bad("tx_cost_j/rx_cost_j/idle_cost_j_per_s", "costs must be non-negative")
    if s.control_packet_bytes < 1:
        bad("control_packet_bytes", "must be at least 1")
    if s.initial_energy_j <= 0:
        bad("initial_j", "must be positive")
    if not 0 < s.danger_threshold_fraction <= 1:
        bad("danger_threshold_fraction", f"must lie in (0, 1], got {s.danger_threshold_fraction}")
    if not 0 <= s.danger_fraction <= 1:
        bad("danger_fraction", f"must lie in [0, 1], got {s.danger_fraction}")
    if s.traffic_kind not in TRAFFIC_KINDS:
        bad("kind", f"must be one of {TRAFFIC_KINDS}, got {s.traffic_kind!r}")
    if s.packet_size_bytes < 1:
        bad("packet_size_bytes", "must be at least 1")
    if s.cbr_rate_pps <= 0:
        bad("cbr_rate_pps", "must be positive")
    if s.flow_count is not None and s.flow_count < 0:
        bad("flow_count", "must be non-negative or auto")
    if s.file_size_kb < 0:
        bad("file_size_kb", "must be non-negative")
    if s.traffic_kind == "filesize" and s.file_size_kb <= 0:
        bad("file_size_kb", "filesize traffic needs a positive size")
    if s.traffic_start_s < 0:
        bad("start_s", "must be non-negative")
    if s.protocol not in PROTOCOL_NAMES:
        bad("name", f"must be one of {PROTOCOL_NAMES}, got {s.protocol!r}")
    if s.hello_interval_s <= 0:
        bad("hello_interval_s", "must be positive")
    w = s.opi_weights
    if len(w) != 3 or min(w) < 0 or abs(sum(w) - 1.0) > 1e-9:
        bad("opi_w_*", f"weights must be non-negative and sum to 1, got {w}")
    if s.deposit_quantum <= 0:
        bad("deposit_quantum", "must be positive")
    if s.initial_pheromone <= 0:
        bad("initial_pheromone", "must be positive")
    if s.warning_margin_s is not None and s.warning_margin_s < 0:
        bad("warning_margin_s", "must be non-negative or auto")
    return s


def parse_scenario(text: str) -> Scenario:
    """Parse and validate scenario text; an empty file yields all defaults."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        where = f" (line {lineno})" if lineno else ""
        raise ScenarioParseError(f"malformed scenario{where}: {exc}") from exc

    values: dict[str, object] = {}
    tuples: dict[str, dict[int, object]] = {}
    for section in cp.sections():
        for key, raw in cp.items(section):
            spec = SCHEMA.get((section, key))
            if spec is None:
                raise ScenarioError(f"unknown key [{section}] {key}")
            target, parser, _ = spec
            try:
                value = parser(raw)
            except ValueError as exc:
                raise ScenarioError(f"invalid {key}: {exc}") from exc
            if isinstance(target, tuple):
                tuples.setdefault(target[0], {})[target[1]] = value
            else:
                values[target] = value

    scenario = Scenario(**values)
    for field_name, parts in tuples.items():
        current = list(getattr(scenario, field_name))
        for idx, value in parts.items():
            current[idx] = value
        scenario = replace(scenario, **{field_name: tuple(current)})
    return validate(scenario)


def parse_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def serialize_scenario(s: Scenario) -> str:
    """Canonical scenario text: every key, grouped by section, units in comments."""
    out = io.StringIO()
    last_section = None
    for (section, key), (target, _, unit) in SCHEMA.items():
        if section != last_section:
            if last_section is not None:
                out.write("\n")
            out.write(f"[{section}]\n")
            last_section = section
        if isinstance(target, tuple):
            value = getattr(s, target[0])[target[1]]
        else:
            value = getattr(s, target)
        if value is None:
            rendered = "auto"
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        else:
            rendered = repr(value) if isinstance(value, float) else str(value)
        out.write(f"{key} = {rendered}  # {unit}\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepSpec:
    """Cross product of one axis against a seed list, over a base scenario."""

    base: Scenario
    axis: str
    values: tuple
    seeds: tuple

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ScenarioError(f"unknown sweep axis {self.axis!r}, pick from {SWEEP_AXES}")


def apply_axis(base: Scenario, axis: str, value) -> Scenario:
    if axis == "node_count":
        return replace(base, node_count=int(value))
    if axis == "pause_time":
        return replace(base, pause_range=(float(value), float(value)))
    if axis == "file_size_kb":
        return replace(base, traffic_kind="filesize", file_size_kb=float(value))
    raise ScenarioError(f"unknown sweep axis {axis!r}")


def expand_sweep(spec: SweepSpec) -> list[Scenario]:
    """values x seeds, value-major then seed order; each differs from base
    only on the axis and the seed."""
    if not spec.values:
        raise ScenarioError("sweep needs at least one axis value")
    if not spec.seeds:
        raise ScenarioError("sweep needs at least one seed")
    out = []
    for value in spec.values:
        per_value = apply_axis(spec.base, spec.axis, value)
        for seed in spec.seeds:
            out.append(validate(replace(per_value, seed=int(seed))))
    return out


# ---------------------------------------------------------------------------
# results persistence

RESULT_COLUMNS = ("protocol", "axis_value", "seed", "pdr_percent", "e2ed_ms",
                  "econs_joules", "routes_discovered", "warnings_emitted",
                  "packets_sent", "packets_received")

AGGREGATE_COLUMNS = ("protocol", "axis_value", "runs", "pdr_mean", "pdr_std",
                     "e2ed_mean", "e2ed_std", "econs_mean", "econs_std")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_result_row(report) -> str:
    values = (report.protocol, report.axis_value, report.seed, report.pdr_percent,
              report.e2ed_ms, report.econs_joules, report.routes_discovered,
              report.warnings_emitted, report.packets_sent, report.packets_received)
    return ",".join(_cell(v) for v in values)


def _mean_std(values):
    got = [v for v in values if v is not None]
    if not got:
        return None, None
    mean = sum(got) / len(got)
    var = sum((v - mean) ** 2 for v in got) / len(got)
    return mean, math.sqrt(var)


def aggregate_rows(reports) -> list[str]:
    """Per-(protocol, axis value) means and population standard deviations."""
    groups: dict[tuple, list] = {}
    order = []
    for r in reports:
        key = (r.protocol, r.axis_value)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    rows = []
    for key in order:
        batch = groups[key]
        pdr_m, pdr_s = _mean_std([r.pdr_percent for r in batch])
        e2e_m, e2e_s = _mean_std([r.e2ed_ms for r in batch])
        eco_m, eco_s = _mean_std([r.econs_joules for r in batch])
        cells = (key[0], key[1], len(batch), pdr_m, pdr_s, e2e_m, e2e_s, eco_m, eco_s)
        rows.append(",".join(_cell(v) for v in cells))
    return rows


def write_results(reports, runs_path, aggregate_path=None):
    """One CSV row per run plus a per-(protocol, axis value) aggregate file."""
    if not reports:
        raise ScenarioError("no reports to write")
    with open(runs_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for r in reports:
            fh.write(format_result_row(r) + "\n")
    if aggregate_path is not None:
        with open(aggregate_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(AGGREGATE_COLUMNS) + "\n")
            for row in aggregate_rows(reports):
                fh.write(row + "\n")


def write_comparison(reports, path):
    """Side-by-side per-axis-value means for each protocol present."""
    protocols = []
    axis_values = []
    groups: dict[tuple, list] = {}
    for r in reports:
        if r.protocol not in protocols:
            protocols.append(r.protocol)
        if r.axis_value not in axis_values:
            axis_values.append(r.axis_value)
        groups.setdefault((r.protocol, r.axis_value), []).append(r)
    header = ["axis_value"]
    for p in protocols:
        header += [f"{p}_pdr_mean", f"{p}_e2ed_mean", f"{p}_econs_mean"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for v in axis_values:
            cells = [_cell(v)]
            for p in protocols:
                batch = groups.get((p, v), [])
                pdr_m, _ = _mean_std([r.pdr_percent for r in batch])
                e2e_m, _ = _mean_std([r.e2ed_ms for r in batch])
                eco_m, _ = _mean_std([r.econs_joules for r in batch])
                cells += [_cell(pdr_m), _cell(e2e_m), _cell(eco_m)]
            fh.write(",".join(cells) + "\n")
