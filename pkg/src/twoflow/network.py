"""Roads joined by merges (2 in, 1 out) and diverges (1 in, 2 out).

Macroscopic junction fluxes follow the standard demand/supply rules: a merge
allocates the outgoing supply by priority with redistribution of any unused
share; a diverge throttles the incoming demand so that every branch respects
its supply given the turning fractions.  Microscopic trucks change road
explicitly according to their destination path, subject to a headway check
and the cell-entry gate of the target road.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fd, multiscale
from .errors import ConfigError
from .macro import RoadGrid, sending_receiving_heavy, sending_receiving_light
from .micro import Fleet


@dataclass(frozen=True)
class Junction:
    """A merge (two incoming, one outgoing) or diverge (one in, two out).

    ``priority`` shares the outgoing supply between the incoming roads of a
    merge.  ``split_light``/``split_heavy`` are the per-class turning
    fractions of a diverge, aligned with ``outgoing``.
    """

    kind: str
    incoming: tuple[str, ...]
    outgoing: tuple[str, ...]
    priority: float = 0.5
    split_light: tuple[float, ...] = ()
    split_heavy: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("merge", "diverge"):
            raise ConfigError(f"unknown junction kind '{self.kind}'")
        if self.kind == "merge" and (len(self.incoming), len(self.outgoing)) != (2, 1):
            raise ConfigError("a merge needs 2 incoming roads and 1 outgoing road")
        if self.kind == "diverge" and (len(self.incoming), len(self.outgoing)) != (1, 2):
            raise ConfigError("a diverge needs 1 incoming road and 2 outgoing roads")
        if not 0.0 <= self.priority <= 1.0:
            raise ConfigError("merge priority must lie in [0, 1]")
        if self.kind == "diverge":
            for name, split in (("split_light", self.split_light), ("split_heavy", self.split_heavy)):
                if len(split) != 2:
                    raise ConfigError(f"{name} needs one fraction per outgoing road")
                if any(s < 0 for s in split) or abs(sum(split) - 1.0) > 1e-9:
                    raise ConfigError(f"{name} fractions must be >= 0 and sum to 1")


@dataclass
class Network:
    """Roads with per-road lane counts, junctions, and destination paths."""

    roads: dict[str, RoadGrid]
    junctions: list[Junction] = field(default_factory=list)
    paths: list[tuple[str, ...]] = field(default_factory=list)

    def __post_init__(self):
        for j in self.junctions:
            for rid in (*j.incoming, *j.outgoing):
                if rid not in self.roads:
                    raise ConfigError(f"junction references unknown road '{rid}'")
        for path in self.paths:
            for rid in path:
                if rid not in self.roads:
                    raise ConfigError(f"path references unknown road '{rid}'")


def lane_generalization(cfg: fd.FdConfig, n_lanes: int, n_heavy: int) -> fd.FdConfig:
    """Fundamental diagrams for a road with n lanes, n_heavy usable by trucks.

    Jam densities follow from the lane counts; peak fluxes scale per lane
    (free car peak with all lanes, jammed car peak with the truck-free lanes,
    truck peak with the truck lanes).  Trucks must be confined to a strict
    subset of the lanes, otherwise creeping is impossible.
    """
    if not 1 <= n_heavy < n_lanes:
        raise ConfigError(
            f"need 1 <= truck lanes < total lanes, got ({n_lanes}, {n_heavy})"
        )
    base_light = cfg.light.lanes_usable
    base_heavy = cfg.heavy.lanes_usable
    out = fd.FdConfig(
        light=fd.ClassParams(cfg.light.vehicle_length_km, n_lanes, cfg.light.v_max_kmh),
        heavy=fd.ClassParams(cfg.heavy.vehicle_length_km, n_heavy, cfg.heavy.v_max_kmh),
        peak_flux_light_free=cfg.peak_flux_light_free * n_lanes / base_light,
        peak_flux_light_jammed=cfg.peak_flux_light_jammed
        * (n_lanes - n_heavy)
        / max(base_light - base_heavy, 1),
        peak_flux_heavy_free=cfg.peak_flux_heavy_free * n_heavy / base_heavy,
        free_speed_light_jammed=cfg.free_speed_light_jammed,
    )
    expected = (n_lanes - n_heavy) / n_lanes * out.rho_max_light
    if abs(out.transition_level - expected) > 1e-9 * out.rho_max_light:
        raise ConfigError("transition level does not match the lane-share form")
    return out


# -- macroscopic junction fluxes ----------------------------------------------------


def _merge_allocate(demand_1: float, demand_2: float, supply: float, priority: float):
    """Split the supply between two demands; unused priority share is handed over."""
    if demand_1 + demand_2 <= supply:
        return demand_1, demand_2
    q1 = min(demand_1, priority * supply)
    q2 = min(demand_2, (1.0 - priority) * supply)
    leftover = supply - q1 - q2
    if leftover > 0:
        extra1 = min(demand_1 - q1, leftover)
        q1 += extra1
        q2 += min(demand_2 - q2, leftover - extra1)
    return q1, q2


def junction_fluxes(
    junction: Junction,
    upstream: dict[str, fd.TwoClassState],
    downstream: dict[str, fd.TwoClassState],
    cfg,
) -> dict[str, tuple[float, float]]:
    """Per-road, per-class fluxes across a junction.

    ``upstream`` maps each incoming road to the state of its last cell,
    ``downstream`` each outgoing road to the state of its first cell.
    ``cfg`` is one FdConfig, or a mapping road id -> FdConfig when lane
    counts differ between the joined roads.  Returns road id ->
    (light flux, heavy flux); incoming fluxes leave their road, outgoing
    fluxes enter theirs, and they balance exactly per class.
    """
    cfg_for = (lambda rid: cfg[rid]) if isinstance(cfg, dict) else (lambda rid: cfg)
    demands = {}
    for rid in junction.incoming:
        s = upstream[rid]
        s_l, _ = sending_receiving_light(s.rho_light, s.rho_heavy, cfg_for(rid))
        s_h, _ = sending_receiving_heavy(s.rho_light, s.rho_heavy, cfg_for(rid))
        demands[rid] = (s_l, s_h)
    supplies = {}
    for rid in junction.outgoing:
        s = downstream[rid]
        _, r_l = sending_receiving_light(s.rho_light, s.rho_heavy, cfg_for(rid))
        _, r_h = sending_receiving_heavy(s.rho_light, s.rho_heavy, cfg_for(rid))
        supplies[rid] = (r_l, r_h)

    result: dict[str, tuple[float, float]] = {}
    if junction.kind == "merge":
        in1, in2 = junction.incoming
        out = junction.outgoing[0]
        q1l, q2l = _merge_allocate(
            demands[in1][0], demands[in2][0], supplies[out][0], junction.priority
        )
        q1h, q2h = _merge_allocate(
            demands[in1][1], demands[in2][1], supplies[out][1], junction.priority
        )
        result[in1] = (q1l, q1h)
        result[in2] = (q2l, q2h)
        result[out] = (q1l + q2l, q1h + q2h)
    else:
        inr = junction.incoming[0]
        out1, out2 = junction.outgoing
        total = []
        for cls_idx, split in ((0, junction.split_light), (1, junction.split_heavy)):
            demand = demands[inr][cls_idx]
            q = demand
            for frac, rid in zip(split, junction.outgoing):
                if frac > 0:
                    q = min(q, supplies[rid][cls_idx] / frac)
            total.append(q)
        result[inr] = (total[0], total[1])
        result[out1] = (junction.split_light[0] * total[0], junction.split_heavy[0] * total[1])
        result[out2] = (junction.split_light[1] * total[0], junction.split_heavy[1] * total[1])
    return result


# -- path decomposition ---------------------------------------------------------------


def decompose_paths(network: Network, cfg: fd.FdConfig) -> dict[int, dict[str, np.ndarray]]:
    """Split each road's car density over the destination paths.

    Roads upstream of a diverge are split by the turning fractions; elsewhere
    a road's mass belongs entirely to the paths that traverse it.  Summing
    the pieces recovers the original field exactly.
    """
    if not network.paths:
        raise ConfigError("no paths defined")
    diverges = [j for j in network.junctions if j.kind == "diverge"]
    result: dict[int, dict[str, np.ndarray]] = {
        p: {} for p in range(len(network.paths))
    }
    for rid, grid in network.roads.items():
        shares = [0.0] * len(network.paths)
        for p_idx, path in enumerate(network.paths):
            if rid in path:
                shares[p_idx] = 1.0
        for j in diverges:
            if rid == j.incoming[0]:
                for out_idx, out_rid in enumerate(j.outgoing):
                    for p_idx, path in enumerate(network.paths):
                        if out_rid in path and rid in path:
                            shares[p_idx] = j.split_light[out_idx]
        total = sum(shares)
        if total <= 0:
            continue
        for p_idx in range(len(network.paths)):
            frac = shares[p_idx] / total
            if frac > 0:
                result[p_idx][rid] = grid.rho_light * frac
    return result


def recombine_paths(network: Network, per_path: dict[int, dict[str, np.ndarray]]) -> dict[str, np.ndarray]:
    """Sum per-path densities back to one field per road."""
    out: dict[str, np.ndarray] = {}
    for parts in per_path.values():
        for rid, rho in parts.items():
            if rid in out:
                out[rid] = out[rid] + rho
            else:
                out[rid] = rho.copy()
    return out


# -- microscopic truck transfer ----------------------------------------------------------


def next_road_on_path(network: Network, path_id: int, current: str) -> str | None:
    """Road after ``current`` on the given path, or None at the path's end."""
    if not 0 <= path_id < len(network.paths):
        return None
    path = network.paths[path_id]
    if current not in path:
        return None
    idx = path.index(current)
    return path[idx + 1] if idx + 1 < len(path) else None


def try_transfer(
    truck: tuple[int, float, float, int],
    source_grid: RoadGrid,
    dest_grid: RoadGrid,
    dest_fleet: Fleet,
    mcfg,
    dest_cfg: fd.FdConfig,
) -> bool:
    """Move a truck to the start of its next road if headway and gate allow.

    The truck enters at position zero keeping its speed.  It must stay at
    least one close-gap behind the destination road's rearmost truck, and the
    first cell's cars must still fit once it is counted.
    """
    tid, _, v, path_id = truck
    if len(dest_fleet) and float(dest_fleet.x[0]) < mcfg.delta_close_km:
        return False
    center = 0.5 * dest_grid.dx_km
    count = multiscale._window_count(dest_fleet.x, center, mcfg.coupling_window_km) + 1
    if not multiscale.entry_gate(
        float(dest_grid.rho_light[0]), count, mcfg.coupling_window_km, dest_cfg
    ):
        return False
    dest_fleet.append_back(tid, 0.0, v, path_id)
    multiscale.register_truck(dest_grid, tid, 0.0)
    return True
