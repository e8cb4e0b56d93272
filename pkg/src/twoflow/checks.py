"""Measurements extracted from demo runs.

Each demo has a summary function that distills the run into the handful of
numbers its scenario is about (creeping speed, queue extent, capacity drop,
...).  The command line prints them after a demo; the acceptance suite
asserts against them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fd
from .engine import RunResult

STOPPED_KMH = 0.5  # below this a truck counts as standing


def _trajectory_table(result: RunResult):
    """trajectories grouped by record time: {t_s: [(id, road, x, v)]}"""
    byt: dict[float, list] = {}
    for t_s, tid, rid, x, v in result.trajectories:
        byt.setdefault(t_s, []).append((tid, rid, x, v))
    return byt


@dataclass
class CreepingSummary:
    jam_cells: int
    car_speed_min_kmh: float
    car_speed_max_kmh: float
    truck_speed_max_kmh: float
    car_flux_min_veh_h: float
    partial_coupling_everywhere: bool


def creeping_macro(result: RunResult, road: str = "road0") -> CreepingSummary:
    """Final-time look at the truck-jam region of the macro creeping run."""
    cfg = result.scenario.fd
    hist = result.roads[road].as_arrays()
    rho_l = hist["density_light"]
    rho_h = hist["density_heavy"][-1]
    v_l = hist["velocity_light"][-1]
    v_h = hist["velocity_heavy"][-1]
    f_l = hist["flux_light"][-1]
    jam = rho_h >= 0.99 * cfg.rho_max_heavy
    return CreepingSummary(
        jam_cells=int(jam.sum()),
        car_speed_min_kmh=float(v_l[jam].min()) if jam.any() else float("nan"),
        car_speed_max_kmh=float(v_l[jam].max()) if jam.any() else float("nan"),
        truck_speed_max_kmh=float(v_h[jam].max()) if jam.any() else float("nan"),
        car_flux_min_veh_h=float(f_l[jam].min()) if jam.any() else float("nan"),
        partial_coupling_everywhere=bool((rho_l <= cfg.transition_level).all()),
    )


def creeping_multiscale(result: RunResult, road: str = "road0") -> CreepingSummary:
    """Final-time look at the saturated part of the microscopic truck queue."""
    cfg = result.scenario.fd
    hist = result.roads[road].as_arrays()
    eff = hist["effective_heavy"][-1]
    v_l = hist["velocity_light"][-1]
    f_l = hist["flux_light"][-1]
    sat = eff >= 0.95 * cfg.rho_max_heavy
    byt = _trajectory_table(result)
    last = byt[max(byt)] if byt else []
    centers = result.roads[road].centers_km
    sat_cells = set(np.nonzero(sat)[0])
    v_trucks = [
        v for _, rid, x, v in last
        if rid == road and int(x / (centers[1] - centers[0])) in sat_cells
    ]
    return CreepingSummary(
        jam_cells=int(sat.sum()),
        car_speed_min_kmh=float(v_l[sat].min()) if sat.any() else float("nan"),
        car_speed_max_kmh=float(v_l[sat].max()) if sat.any() else float("nan"),
        truck_speed_max_kmh=float(max(v_trucks)) if v_trucks else float("nan"),
        car_flux_min_veh_h=float(f_l[sat].min()) if sat.any() else float("nan"),
        partial_coupling_everywhere=bool(
            (hist["density_light"] <= cfg.transition_level).all()
        ),
    )


@dataclass
class SqueezeSummary:
    car_speed_min_kmh: float
    truck_speed_min_kmh: float
    congested_reach_km: float          # how far upstream the truck slowdown reaches
    car_density_up_max: float          # car density away from the forcing boundary
    transition_level: float


def squeeze_macro(result: RunResult, road: str = "road0", boundary_cells: int = 5) -> SqueezeSummary:
    """Final-time look at the car-plug run: both classes slow but keep moving;
    the wave travelling upstream stays below the transition level."""
    hist = result.roads[road].as_arrays()
    v_l = hist["velocity_light"][-1]
    v_h = hist["velocity_heavy"][-1]
    rho_h = hist["density_heavy"][-1]
    rho_l = hist["density_light"][-1]
    x = result.roads[road].centers_km
    slow = rho_h > 1.5 * hist["density_heavy"][0].max()
    reach = float(x[-1] - x[slow].min()) if slow.any() else 0.0
    return SqueezeSummary(
        car_speed_min_kmh=float(v_l.min()),
        truck_speed_min_kmh=float(v_h.min()),
        congested_reach_km=reach,
        car_density_up_max=float(rho_l[:-boundary_cells].max()),
        transition_level=result.scenario.fd.transition_level,
    )


@dataclass
class WaveSummary:
    amplitude_initial: float
    amplitude_final: float
    peak_x_initial_km: float
    peak_x_final_km: float


def truck_wave(result: RunResult, road: str = "road0", margin_cells: int = 5) -> WaveSummary:
    """Amplitude and position of the truck-density perturbation (interior cells)."""
    hist = result.roads[road].as_arrays()
    x = result.roads[road].centers_km
    inner = slice(margin_cells, len(x) - margin_cells)
    first = hist["density_heavy"][0][inner]
    lastrow = hist["density_heavy"][-1][inner]
    return WaveSummary(
        amplitude_initial=float(first.max() - first.min()),
        amplitude_final=float(lastrow.max() - lastrow.min()),
        peak_x_initial_km=float(x[inner][first.argmax()]),
        peak_x_final_km=float(x[inner][lastrow.argmax()]),
    )


@dataclass
class StopRecoverSummary:
    ever_stopped: int
    peak_stopped: int
    stopped_at_end: int
    min_speed_end_kmh: float
    first_stop_t_s: float


def stop_and_recover(result: RunResult, road: str | None = None) -> StopRecoverSummary:
    """Did trucks come to a standstill and move again by the end of the run?"""
    byt = _trajectory_table(result)
    times = sorted(byt)
    stopped_ids: set[int] = set()
    peak = 0
    first_t = float("inf")
    for t in times:
        rows = [r for r in byt[t] if road is None or r[1] == road]
        now = [tid for tid, _, _, v in rows if v < STOPPED_KMH]
        stopped_ids.update(now)
        peak = max(peak, len(now))
        if now and t < first_t:
            first_t = t
    last_rows = [r for r in byt[times[-1]] if road is None or r[1] == road] if times else []
    stopped_end = sum(1 for _, _, _, v in last_rows if v < STOPPED_KMH)
    min_v_end = min((v for _, _, _, v in last_rows), default=float("nan"))
    return StopRecoverSummary(
        ever_stopped=len(stopped_ids),
        peak_stopped=peak,
        stopped_at_end=stopped_end,
        min_speed_end_kmh=float(min_v_end),
        first_stop_t_s=first_t,
    )


@dataclass
class BackwardWaveSummary:
    n_slowed: int
    first_stop_x_km: float
    first_stop_t_s: float
    last_stop_x_km: float
    last_stop_t_s: float
    extent_km: float


def backward_wave(result: RunResult, road: str = "road0", threshold_kmh: float = 1.0) -> BackwardWaveSummary:
    """First slowdown per truck: where and when each truck first crawled."""
    byid: dict[int, tuple[float, float]] = {}
    for t_s, tid, rid, x, v in result.trajectories:
        if rid == road and v < threshold_kmh and tid not in byid:
            byid[tid] = (t_s, x)
    if not byid:
        return BackwardWaveSummary(0, float("nan"), float("nan"), float("nan"), float("nan"), 0.0)
    ordered = sorted(byid.values())
    first_t, first_x = ordered[0]
    last_t, last_x = ordered[-1]
    xs = [x for _, x in ordered]
    return BackwardWaveSummary(
        n_slowed=len(byid),
        first_stop_x_km=first_x,
        first_stop_t_s=first_t,
        last_stop_x_km=last_x,
        last_stop_t_s=last_t,
        extent_km=float(max(xs) - min(xs)),
    )


@dataclass
class MergeSummary:
    peak_stopped_in1: int
    peak_stopped_in2: int
    clear_t_in1_s: float
    clear_t_in2_s: float
    post_release_outflow_veh_h: float
    out_car_density_max: float
    out_car_freeflow: bool
    transition_level: float


def merge_capacity(result: RunResult, release_t_s: float, window_s: float = 300.0) -> MergeSummary:
    """Queue asymmetry and post-release throughput of the merge run."""
    byt = _trajectory_table(result)
    times = sorted(byt)
    peaks = {"in1": 0, "in2": 0}
    clears = {"in1": 0.0, "in2": 0.0}
    for t in times:
        for rid in ("in1", "in2"):
            stopped = sum(1 for _, r, _, v in byt[t] if r == rid and v < STOPPED_KMH)
            peaks[rid] = max(peaks[rid], stopped)
            if stopped:
                clears[rid] = t
    transfer_t = np.array([ev.t_s for ev in result.transfers if ev.to_road == "out"])
    best = 0.0
    t0 = release_t_s
    while t0 + window_s <= (times[-1] if times else 0.0):
        count = int(((transfer_t >= t0) & (transfer_t < t0 + window_s)).sum())
        best = max(best, count * 3600.0 / window_s)
        t0 += 60.0
    cfg = result.scenario.fd
    out = result.roads["out"].as_arrays()
    rho_l = out["density_light"]
    eff = out["effective_heavy"]
    crit = np.asarray(fd.critical_density_light(eff, cfg))
    return MergeSummary(
        peak_stopped_in1=peaks["in1"],
        peak_stopped_in2=peaks["in2"],
        clear_t_in1_s=clears["in1"],
        clear_t_in2_s=clears["in2"],
        post_release_outflow_veh_h=best,
        out_car_density_max=float(rho_l.max()),
        out_car_freeflow=bool((rho_l <= crit + 1.0).all()),
        transition_level=cfg.transition_level,
    )


# -- per-demo textual summaries ------------------------------------------------


def demo_summary(name: str, result: RunResult) -> str:
    lines = [f"demo {name}: {result.effective_horizon_s:.0f} s simulated, "
             f"{len(result.times_s)} records"]
    if name == "test1a":
        s = creeping_macro(result)
        lines += [
            f"  truck-jam cells at final time: {s.jam_cells}",
            f"  car speed through the jam: {s.car_speed_min_kmh:.2f}..{s.car_speed_max_kmh:.2f} km/h (creeping)",
            f"  truck speed in the jam: <= {s.truck_speed_max_kmh:.3f} km/h",
            f"  car flux through the jam: >= {s.car_flux_min_veh_h:.0f} veh/h",
            f"  car density stayed below the transition level: {s.partial_coupling_everywhere}",
        ]
    elif name == "test2a":
        s = squeeze_macro(result)
        lines += [
            f"  slowest cars {s.car_speed_min_kmh:.1f} km/h, slowest trucks {s.truck_speed_min_kmh:.1f} km/h (both moving)",
            f"  truck slowdown reaches {s.congested_reach_km:.1f} km upstream",
            f"  car density away from the plug: <= {s.car_density_up_max:.1f} veh/km "
            f"(transition level {s.transition_level:.1f})",
        ]
    elif name == "test3a":
        s = truck_wave(result)
        lines += [
            f"  truck perturbation amplitude: {s.amplitude_initial:.1f} -> {s.amplitude_final:.1f} veh/km "
            f"({100 * s.amplitude_final / s.amplitude_initial:.0f}% kept)",
            f"  perturbation peak moved {s.peak_x_initial_km:.1f} -> {s.peak_x_final_km:.1f} km (backward)",
        ]
    elif name == "test1b":
        s = creeping_multiscale(result)
        lines += [
            f"  saturated queue cells: {s.jam_cells}",
            f"  car speed through the saturated queue: {s.car_speed_min_kmh:.2f} km/h (creeping)",
            f"  truck speed in the queue: <= {s.truck_speed_max_kmh:.3f} km/h",
            f"  car flux through the queue: >= {s.car_flux_min_veh_h:.0f} veh/h",
        ]
    elif name == "test2b":
        s = stop_and_recover(result)
        lines += [
            f"  trucks that came to a standstill: {s.ever_stopped} (first at t={s.first_stop_t_s:.0f} s)",
            f"  simultaneous peak: {s.peak_stopped}, still standing at the end: {s.stopped_at_end}",
            f"  slowest truck at the end: {s.min_speed_end_kmh:.1f} km/h (queue dissolved)",
        ]
    elif name == "test3b":
        s = merge_capacity(result, release_t_s=240.0)
        lines += [
            f"  peak standing trucks: {s.peak_stopped_in1} on in1, {s.peak_stopped_in2} on in2",
            f"  queues cleared at t={s.clear_t_in1_s:.0f} s (in1) vs t={s.clear_t_in2_s:.0f} s (in2, cars present)",
            f"  best 5-minute outflow after demand ends: {s.post_release_outflow_veh_h:.0f} veh/h "
            f"(capacity drop vs 1500 veh/h)",
            f"  outgoing road cars stayed free-flowing: {s.out_car_freeflow} "
            f"(max {s.out_car_density_max:.1f} veh/km)",
        ]
    elif name == "stopgo":
        s = backward_wave(result)
        lines += [
            f"  trucks that crawled below 1 km/h: {s.n_slowed}",
            f"  queue head: km {s.first_stop_x_km:.2f} at t={s.first_stop_t_s:.0f} s; "
            f"tail: km {s.last_stop_x_km:.2f} at t={s.last_stop_t_s:.0f} s",
            f"  backward extent: {s.extent_km:.2f} km over {s.last_stop_t_s - s.first_stop_t_s:.0f} s",
        ]
    if result.collisions:
        lines.append(f"  note: {len(result.collisions)} truck ordering violation(s) reported")
    return "\n".join(lines)
