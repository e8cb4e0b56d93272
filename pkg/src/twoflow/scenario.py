"""Declarative scenario description and its JSON-compatible schema.

A scenario names the model (macro or multiscale), the network (roads, lane
counts, junctions, paths), the fundamental-diagram and truck parameters, the
initial and boundary data, and what to write out.  Parsing validates the
whole tree and reports every problem found, not just the first one.

Times in scenario files are in seconds; the solvers run on hours internally.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

from .errors import ConfigError, ScenarioError
from .fd import FdConfig
from .macro import BoundaryCondition, ClassBc
from .micro import LeaderProtocol, MicroConfig
from .network import Junction

QUANTITIES = ("density", "velocity", "flux")


def evaluate_piecewise(blocks, centers_km):
    """Density at each cell center from piecewise-constant blocks (0 elsewhere)."""
    import numpy as np

    centers = np.asarray(centers_km, dtype=float)
    rho = np.zeros_like(centers)
    for blk in blocks:
        rho[(centers >= blk.from_km) & (centers < blk.to_km)] = blk.density
    return rho


def road_fd_config(road: "RoadSpec", base: FdConfig) -> FdConfig:
    """Fundamental diagrams for one road, rescaled when its lane counts differ."""
    from .network import lane_generalization

    if (road.lanes, road.lanes_heavy) == (
        base.light.lanes_usable,
        base.heavy.lanes_usable,
    ):
        return base
    return lane_generalization(base, road.lanes, road.lanes_heavy)


def _centers(road: "RoadSpec"):
    import numpy as np

    n = int(round(road.length_km / road.dx_km))
    return (np.arange(max(n, 1)) + 0.5) * road.dx_km


@dataclass(frozen=True)
class PiecewiseBlock:
    from_km: float
    to_km: float
    density: float


@dataclass(frozen=True)
class TruckBlock:
    """Initial trucks: explicit positions, or a uniformly spaced range."""

    positions_km: tuple[float, ...] = ()
    from_km: float = 0.0
    to_km: float = 0.0
    spacing_km: float = 0.0
    v_kmh: float = 0.0
    path: int = -1

    def positions(self) -> list[float]:
        if self.positions_km:
            return sorted(self.positions_km)
        n = int(math.floor((self.to_km - self.from_km) / self.spacing_km)) + 1
        return [self.from_km + i * self.spacing_km for i in range(n)]


@dataclass(frozen=True)
class SourceSpec:
    """Entry of new trucks at a road start at a fixed cadence."""

    every_s: float
    start_s: float = 0.0
    end_s: float = math.inf
    v_kmh: float = 90.0
    path: int = -1


@dataclass(frozen=True)
class RoadSpec:
    id: str
    length_km: float
    dx_km: float = 0.1
    lanes: int = 2
    lanes_heavy: int = 1
    initial_light: tuple[PiecewiseBlock, ...] = ()
    initial_heavy: tuple[PiecewiseBlock, ...] = ()
    left_bc: BoundaryCondition = field(default_factory=BoundaryCondition.free)
    right_bc: BoundaryCondition = field(default_factory=BoundaryCondition.free)
    trucks: TruckBlock | None = None
    leader: LeaderProtocol = LeaderProtocol()
    truck_source: SourceSpec | None = None


@dataclass(frozen=True)
class OutputSpec:
    interval_s: float = 26.0
    quantities: tuple[str, ...] = QUANTITIES


@dataclass(frozen=True)
class Scenario:
    name: str
    model: str
    horizon_s: float
    dt_s: float
    roads: tuple[RoadSpec, ...]
    junctions: tuple[Junction, ...] = ()
    paths: tuple[tuple[str, ...], ...] = ()
    fd: FdConfig = field(default_factory=FdConfig.defaults)
    micro: MicroConfig = field(default_factory=MicroConfig)
    output: OutputSpec = field(default_factory=OutputSpec)


# -- parsing --------------------------------------------------------------------


class _Collector:
    def __init__(self):
        self.errors: list[str] = []

    def add(self, path: str, message: str):
        self.errors.append(f"{path}: {message}")

    def check_keys(self, path: str, data: dict, allowed: set[str], required: set[str] = frozenset()):
        for key in data:
            if key not in allowed:
                self.add(path, f"unknown key '{key}'")
        for key in required:
            if key not in data:
                self.add(path, f"missing required key '{key}'")


def _num(col, path, data, key, default=None, minimum=None, strict_min=False):
    if key not in data:
        return default
    value = data[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        col.add(f"{path}.{key}", f"expected a number, got {value!r}")
        return default
    value = float(value)
    if minimum is not None:
        if strict_min and not value > minimum:
            col.add(f"{path}.{key}", f"must be > {minimum}, got {value}")
        if not strict_min and not value >= minimum:
            col.add(f"{path}.{key}", f"must be >= {minimum}, got {value}")
    return value


def _parse_class_bc(col, path, data) -> tuple:
    """One class's boundary behaviour, possibly a schedule of entries."""
    if not isinstance(data, dict):
        col.add(path, "expected an object")
        return ((math.inf, ClassBc("free")),)
    if "schedule" in data:
        col.check_keys(path, data, {"schedule"})
        entries = data["schedule"]
        if not isinstance(entries, list) or not entries:
            col.add(f"{path}.schedule", "expected a non-empty list")
            return ((math.inf, ClassBc("free")),)
        out = []
        for i, entry in enumerate(entries):
            until_s = _num(col, f"{path}.schedule[{i}]", entry, "until_s", default=None, minimum=0.0)
            sub = {k: v for k, v in entry.items() if k != "until_s"}
            bc = _parse_single_bc(col, f"{path}.schedule[{i}]", sub)
            out.append((math.inf if until_s is None else until_s / 3600.0, bc))
        if out[-1][0] != math.inf:
            col.add(f"{path}.schedule", "last entry must have no 'until_s'")
            out.append((math.inf, out[-1][1]))
        return tuple(out)
    return ((math.inf, _parse_single_bc(col, path, data)),)


def _parse_single_bc(col, path, data) -> ClassBc:
    col.check_keys(path, data, {"kind", "density", "flux", "amplitude", "period_s"}, {"kind"})
    kind = data.get("kind")
    if kind not in ("dirichlet", "inflow", "free", "closed"):
        col.add(f"{path}.kind", f"unknown boundary kind {kind!r}")
        return ClassBc("free")
    if kind == "dirichlet":
        density = _num(col, path, data, "density", default=0.0, minimum=0.0)
        amplitude = _num(col, path, data, "amplitude", default=0.0, minimum=0.0)
        period_s = _num(col, path, data, "period_s", default=0.0, minimum=0.0)
        if amplitude and not period_s:
            col.add(path, "oscillating boundary needs 'period_s'")
            return ClassBc("dirichlet", density)
        try:
            return ClassBc("dirichlet", density, osc_amplitude=amplitude, osc_period_s=period_s)
        except ConfigError as exc:
            col.add(path, str(exc))
            return ClassBc("dirichlet", density)
    if kind == "inflow":
        flux = _num(col, path, data, "flux", default=0.0, minimum=0.0)
        return ClassBc("inflow", flux)
    return ClassBc(kind)


def _parse_bc(col, path, data) -> BoundaryCondition:
    if not isinstance(data, dict):
        col.add(path, "expected an object with 'light' and 'heavy'")
        return BoundaryCondition.free()
    col.check_keys(path, data, {"light", "heavy"}, {"light", "heavy"})
    light = _parse_class_bc(col, f"{path}.light", data.get("light", {"kind": "free"}))
    heavy = _parse_class_bc(col, f"{path}.heavy", data.get("heavy", {"kind": "free"}))
    return BoundaryCondition(light=light, heavy=heavy)


def _parse_piecewise(col, path, data, road_length) -> tuple:
    if data is None:
        return ()
    if not isinstance(data, list):
        col.add(path, "expected a list of blocks")
        return ()
    blocks = []
    for i, blk in enumerate(data):
        p = f"{path}[{i}]"
        if not isinstance(blk, dict):
            col.add(p, "expected an object")
            continue
        col.check_keys(p, blk, {"from_km", "to_km", "density"}, {"from_km", "to_km", "density"})
        from_km = _num(col, p, blk, "from_km", default=0.0, minimum=0.0)
        to_km = _num(col, p, blk, "to_km", default=0.0, minimum=0.0)
        density = _num(col, p, blk, "density", default=0.0, minimum=0.0)
        if to_km is not None and from_km is not None and to_km <= from_km:
            col.add(p, f"to_km ({to_km}) must exceed from_km ({from_km})")
        if to_km is not None and road_length is not None and to_km > road_length + 1e-9:
            col.add(p, f"to_km ({to_km}) beyond road length {road_length}")
        blocks.append(PiecewiseBlock(from_km or 0.0, to_km or 0.0, density or 0.0))
    return tuple(blocks)


def _parse_leader(col, path, data) -> LeaderProtocol:
    if data is None:
        return LeaderProtocol()
    col.check_keys(path, data, {"kind", "v_kmh", "segments"}, {"kind"})
    kind = data.get("kind")
    if kind == "free":
        return LeaderProtocol()
    if kind == "constant":
        v = _num(col, path, data, "v_kmh", default=0.0, minimum=0.0)
        return LeaderProtocol("constant", v_kmh=v)
    if kind == "script":
        segments = data.get("segments")
        if not isinstance(segments, list) or not segments:
            col.add(f"{path}.segments", "expected a non-empty list")
            return LeaderProtocol()
        out = []
        for i, seg in enumerate(segments):
            p = f"{path}.segments[{i}]"
            col.check_keys(p, seg, {"until_s", "v_kmh"}, {"v_kmh"})
            until_s = _num(col, p, seg, "until_s", default=None, minimum=0.0)
            v = _num(col, p, seg, "v_kmh", default=0.0, minimum=0.0)
            out.append((math.inf if until_s is None else until_s / 3600.0, v))
        if out[-1][0] != math.inf:
            out.append((math.inf, out[-1][1]))
        try:
            return LeaderProtocol("script", segments=tuple(out))
        except ConfigError as exc:
            col.add(path, str(exc))
            return LeaderProtocol()
    col.add(f"{path}.kind", f"unknown leader kind {kind!r}")
    return LeaderProtocol()


def _parse_trucks(col, path, data, road_length) -> TruckBlock | None:
    if data is None:
        return None
    col.check_keys(
        path, data, {"positions_km", "from_km", "to_km", "spacing_km", "v_kmh", "path"}
    )
    v = _num(col, path, data, "v_kmh", default=0.0, minimum=0.0)
    path_id = data.get("path", -1)
    if not isinstance(path_id, int):
        col.add(f"{path}.path", "expected an integer path index")
        path_id = -1
    if "positions_km" in data:
        pos = data["positions_km"]
        if not isinstance(pos, list) or not all(
            isinstance(x, (int, float)) for x in pos
        ):
            col.add(f"{path}.positions_km", "expected a list of numbers")
            return None
        if any(x < 0 or x > road_length for x in pos):
            col.add(f"{path}.positions_km", "positions must lie on the road")
        return TruckBlock(positions_km=tuple(float(x) for x in sorted(pos)), v_kmh=v, path=path_id)
    spacing = _num(col, path, data, "spacing_km", default=None, minimum=0.0, strict_min=True)
    from_km = _num(col, path, data, "from_km", default=0.0, minimum=0.0)
    to_km = _num(col, path, data, "to_km", default=None, minimum=0.0)
    if spacing is None or to_km is None:
        col.add(path, "need either 'positions_km' or 'from_km'/'to_km'/'spacing_km'")
        return None
    if to_km > road_length + 1e-9:
        col.add(f"{path}.to_km", f"beyond road length {road_length}")
    return TruckBlock(from_km=from_km, to_km=to_km, spacing_km=spacing, v_kmh=v, path=path_id)


def _parse_source(col, path, data) -> SourceSpec | None:
    if data is None:
        return None
    col.check_keys(path, data, {"every_s", "start_s", "end_s", "v_kmh", "path"}, {"every_s"})
    every = _num(col, path, data, "every_s", default=None, minimum=0.0, strict_min=True)
    if every is None:
        return None
    start = _num(col, path, data, "start_s", default=0.0, minimum=0.0)
    end = _num(col, path, data, "end_s", default=None, minimum=0.0)
    v = _num(col, path, data, "v_kmh", default=90.0, minimum=0.0)
    path_id = data.get("path", -1)
    if not isinstance(path_id, int):
        col.add(f"{path}.path", "expected an integer path index")
        path_id = -1
    return SourceSpec(
        every_s=every,
        start_s=start,
        end_s=math.inf if end is None else end,
        v_kmh=v,
        path=path_id,
    )


_ROAD_KEYS = {
    "id", "length_km", "dx_km", "lanes", "lanes_heavy", "initial_light",
    "initial_heavy", "left_bc", "right_bc", "trucks", "leader", "truck_source",
}


def _parse_road(col, path, data, model) -> RoadSpec | None:
    if not isinstance(data, dict):
        col.add(path, "expected an object")
        return None
    col.check_keys(path, data, _ROAD_KEYS, {"id", "length_km"})
    rid = data.get("id")
    if not isinstance(rid, str) or not rid:
        col.add(f"{path}.id", "expected a non-empty string")
        rid = f"road{path}"
    length = _num(col, path, data, "length_km", default=1.0, minimum=0.0, strict_min=True)
    dx = _num(col, path, data, "dx_km", default=0.1, minimum=1e-6)
    lanes = data.get("lanes", 2)
    lanes_heavy = data.get("lanes_heavy", 1)
    if not isinstance(lanes, int) or not isinstance(lanes_heavy, int):
        col.add(path, "'lanes' and 'lanes_heavy' must be integers")
        lanes, lanes_heavy = 2, 1
    if not 1 <= lanes_heavy < lanes:
        col.add(path, f"need 1 <= lanes_heavy < lanes, got ({lanes}, {lanes_heavy})")
    trucks = _parse_trucks(col, f"{path}.trucks", data.get("trucks"), length)
    source = _parse_source(col, f"{path}.truck_source", data.get("truck_source"))
    if model == "macro" and (trucks is not None or source is not None):
        col.add(path, "microscopic trucks are only available in the multiscale model")
    if model == "multiscale" and data.get("initial_heavy"):
        col.add(path, "multiscale roads carry trucks individually; drop 'initial_heavy'")
    return RoadSpec(
        id=rid,
        length_km=length,
        dx_km=dx,
        lanes=lanes,
        lanes_heavy=lanes_heavy,
        initial_light=_parse_piecewise(col, f"{path}.initial_light", data.get("initial_light"), length),
        initial_heavy=_parse_piecewise(col, f"{path}.initial_heavy", data.get("initial_heavy"), length),
        left_bc=_parse_bc(col, f"{path}.left_bc", data.get("left_bc", {"light": {"kind": "free"}, "heavy": {"kind": "free"}})),
        right_bc=_parse_bc(col, f"{path}.right_bc", data.get("right_bc", {"light": {"kind": "free"}, "heavy": {"kind": "free"}})),
        trucks=trucks,
        leader=_parse_leader(col, f"{path}.leader", data.get("leader")),
        truck_source=source,
    )


def _parse_junction(col, path, data, road_ids) -> Junction | None:
    if not isinstance(data, dict):
        col.add(path, "expected an object")
        return None
    col.check_keys(
        path, data,
        {"kind", "incoming", "outgoing", "priority", "split_light", "split_heavy", "split"},
        {"kind", "incoming", "outgoing"},
    )
    kind = data.get("kind")
    if kind not in ("merge", "diverge"):
        col.add(f"{path}.kind", f"unknown junction kind {kind!r}")
        return None
    incoming = data.get("incoming", [])
    outgoing = data.get("outgoing", [])
    for rid in list(incoming) + list(outgoing):
        if rid not in road_ids:
            col.add(path, f"references unknown road '{rid}'")
    priority = _num(col, path, data, "priority", default=0.5, minimum=0.0)
    if priority is not None and priority > 1.0:
        col.add(f"{path}.priority", f"must be <= 1, got {priority}")
    split = data.get("split")
    split_light = data.get("split_light", split)
    split_heavy = data.get("split_heavy", split)
    if kind == "diverge":
        for name, value in (("split_light", split_light), ("split_heavy", split_heavy)):
            if not isinstance(value, list) or len(value) != 2:
                col.add(f"{path}.{name}", "expected two fractions")
            elif abs(sum(value) - 1.0) > 1e-9 or any(v < 0 for v in value):
                col.add(f"{path}.{name}", f"fractions must be >= 0 and sum to 1, got {value}")
    try:
        return Junction(
            kind=kind,
            incoming=tuple(incoming),
            outgoing=tuple(outgoing),
            priority=priority if priority is not None else 0.5,
            split_light=tuple(split_light) if kind == "diverge" and isinstance(split_light, list) else (),
            split_heavy=tuple(split_heavy) if kind == "diverge" and isinstance(split_heavy, list) else (),
        )
    except ConfigError as exc:
        col.add(path, str(exc))
        return None


_TOP_KEYS = {
    "name", "model", "horizon_s", "dt_s", "fd", "micro", "roads", "junctions",
    "paths", "output",
}


def parse_scenario(source: str | dict) -> Scenario:
    """Validate scenario text (JSON) or an already-loaded object tree.

    Raises ScenarioError carrying every validation problem found.
    """
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ScenarioError([f"invalid JSON: {exc}"]) from exc
    else:
        data = source
    col = _Collector()
    if not isinstance(data, dict):
        raise ScenarioError(["scenario must be a JSON object"])
    col.check_keys("scenario", data, _TOP_KEYS, {"model", "roads", "horizon_s"})

    name = data.get("name", "scenario")
    model = data.get("model")
    if model not in ("macro", "multiscale"):
        col.add("scenario.model", f"must be 'macro' or 'multiscale', got {model!r}")
        model = "macro"
    horizon_s = _num(col, "scenario", data, "horizon_s", default=0.0, minimum=0.0, strict_min=True)
    dt_s = _num(col, "scenario", data, "dt_s",
                default=2.6 if model == "macro" else 2.0, minimum=0.0, strict_min=True)

    fcfg = FdConfig.defaults()
    if "fd" in data:
        try:
            fcfg = FdConfig.from_dict(data["fd"])
        except (ConfigError, TypeError) as exc:
            col.add("scenario.fd", str(exc))
    mcfg = MicroConfig()
    if "micro" in data:
        micro_data = data["micro"]
        allowed = {f for f in MicroConfig.__dataclass_fields__}
        col.check_keys("scenario.micro", micro_data, allowed)
        try:
            mcfg = MicroConfig(**{k: v for k, v in micro_data.items() if k in allowed})
        except (ConfigError, TypeError) as exc:
            col.add("scenario.micro", str(exc))

    roads_data = data.get("roads", [])
    if not isinstance(roads_data, list) or not roads_data:
        col.add("scenario.roads", "at least one road is required")
        roads_data = []
    roads = []
    for i, rd in enumerate(roads_data):
        spec = _parse_road(col, f"scenario.roads[{i}]", rd, model)
        if spec is not None:
            roads.append(spec)
    ids = [r.id for r in roads]
    if len(set(ids)) != len(ids):
        col.add("scenario.roads", "road ids must be unique")

    junctions = []
    for i, jd in enumerate(data.get("junctions", [])):
        j = _parse_junction(col, f"scenario.junctions[{i}]", jd, set(ids))
        if j is not None:
            junctions.append(j)

    paths = []
    for i, pd in enumerate(data.get("paths", [])):
        if not isinstance(pd, list) or not all(isinstance(x, str) for x in pd):
            col.add(f"scenario.paths[{i}]", "expected a list of road ids")
            continue
        for rid in pd:
            if rid not in set(ids):
                col.add(f"scenario.paths[{i}]", f"references unknown road '{rid}'")
        paths.append(tuple(pd))

    output = OutputSpec()
    if "output" in data:
        od = data["output"]
        col.check_keys("scenario.output", od, {"interval_s", "quantities"})
        interval = _num(col, "scenario.output", od, "interval_s", default=26.0, minimum=0.0, strict_min=True)
        quantities = od.get("quantities", list(QUANTITIES))
        if not isinstance(quantities, list) or not set(quantities) <= set(QUANTITIES):
            col.add("scenario.output.quantities", f"must be a subset of {QUANTITIES}")
            quantities = list(QUANTITIES)
        output = OutputSpec(interval_s=interval, quantities=tuple(quantities))

    # Initial states must be admissible for each road's lane configuration.
    from .fd import in_domain
    from .network import lane_generalization

    for i, road in enumerate(roads):
        try:
            cfg_i = road_fd_config(road, fcfg)
        except ConfigError as exc:
            col.add(f"scenario.roads[{i}]", str(exc))
            continue
        centers = _centers(road)
        rho_l = evaluate_piecewise(road.initial_light, centers)
        rho_h = evaluate_piecewise(road.initial_heavy, centers)
        bad = ~in_domain(rho_l, rho_h, cfg_i)
        if bad.any():
            k = int(bad.argmax())
            col.add(
                f"scenario.roads[{i}]",
                f"initial state ({rho_l[k]}, {rho_h[k]}) at km {centers[k]:.2f} inadmissible",
            )

    if col.errors:
        raise ScenarioError(col.errors)
    return Scenario(
        name=name,
        model=model,
        horizon_s=horizon_s,
        dt_s=dt_s,
        roads=tuple(roads),
        junctions=tuple(junctions),
        paths=tuple(paths),
        fd=fcfg,
        micro=mcfg,
        output=output,
    )


# -- printing -------------------------------------------------------------------


def _bc_to_dict(entries: tuple) -> dict:
    def one(bc: ClassBc) -> dict:
        out = {"kind": bc.kind}
        if bc.kind == "dirichlet":
            out["density"] = bc.value
            if bc.osc_amplitude:
                out["amplitude"] = bc.osc_amplitude
                out["period_s"] = bc.osc_period_s
        elif bc.kind == "inflow":
            out["flux"] = bc.value
        return out

    if len(entries) == 1:
        return one(entries[0][1])
    schedule = []
    for until_h, bc in entries:
        entry = one(bc)
        if until_h != math.inf:
            entry["until_s"] = until_h * 3600.0
        schedule.append(entry)
    return {"schedule": schedule}


def print_scenario(scenario: Scenario) -> dict:
    """Canonical JSON-compatible form; parse_scenario(print_scenario(s)) == s."""
    roads = []
    for road in scenario.roads:
        rd: dict = {
            "id": road.id,
            "length_km": road.length_km,
            "dx_km": road.dx_km,
            "lanes": road.lanes,
            "lanes_heavy": road.lanes_heavy,
            "left_bc": {
                "light": _bc_to_dict(road.left_bc.light),
                "heavy": _bc_to_dict(road.left_bc.heavy),
            },
            "right_bc": {
                "light": _bc_to_dict(road.right_bc.light),
                "heavy": _bc_to_dict(road.right_bc.heavy),
            },
        }
        if road.initial_light:
            rd["initial_light"] = [asdict(b) for b in road.initial_light]
        if road.initial_heavy:
            rd["initial_heavy"] = [asdict(b) for b in road.initial_heavy]
        if road.trucks is not None:
            tb: dict = {"v_kmh": road.trucks.v_kmh}
            if road.trucks.path != -1:
                tb["path"] = road.trucks.path
            if road.trucks.positions_km:
                tb["positions_km"] = list(road.trucks.positions_km)
            else:
                tb.update(
                    from_km=road.trucks.from_km,
                    to_km=road.trucks.to_km,
                    spacing_km=road.trucks.spacing_km,
                )
            rd["trucks"] = tb
        if road.leader.kind != "free":
            if road.leader.kind == "constant":
                rd["leader"] = {"kind": "constant", "v_kmh": road.leader.v_kmh}
            else:
                segments = []
                for until_h, v in road.leader.segments:
                    seg = {"v_kmh": v}
                    if until_h != math.inf:
                        seg["until_s"] = until_h * 3600.0
                    segments.append(seg)
                rd["leader"] = {"kind": "script", "segments": segments}
        if road.truck_source is not None:
            src = {
                "every_s": road.truck_source.every_s,
                "start_s": road.truck_source.start_s,
                "v_kmh": road.truck_source.v_kmh,
            }
            if road.truck_source.end_s != math.inf:
                src["end_s"] = road.truck_source.end_s
            if road.truck_source.path != -1:
                src["path"] = road.truck_source.path
            rd["truck_source"] = src
        roads.append(rd)

    out: dict = {
        "name": scenario.name,
        "model": scenario.model,
        "horizon_s": scenario.horizon_s,
        "dt_s": scenario.dt_s,
        "fd": scenario.fd.to_dict(),
        "roads": roads,
        "output": {
            "interval_s": scenario.output.interval_s,
            "quantities": list(scenario.output.quantities),
        },
    }
    if scenario.model == "multiscale":
        out["micro"] = {
            k: getattr(scenario.micro, k) for k in MicroConfig.__dataclass_fields__
        }
    if scenario.junctions:
        out["junctions"] = [
            {
                "kind": j.kind,
                "incoming": list(j.incoming),
                "outgoing": list(j.outgoing),
                "priority": j.priority,
                **(
                    {"split_light": list(j.split_light), "split_heavy": list(j.split_heavy)}
                    if j.kind == "diverge"
                    else {}
                ),
            }
            for j in scenario.junctions
        ]
    if scenario.paths:
        out["paths"] = [list(p) for p in scenario.paths]
    return out
