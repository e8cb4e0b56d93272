"""Coupling of macroscopic cars with microscopic trucks on one road.

Cars see trucks through a windowed count converted to an effective density;
trucks see cars through the gap thresholds and through a cell-entry gate: a
truck may not enter a cell if the car density there would exceed the maximum
admissible value once the truck is counted.  A blocked truck waits at the
cell boundary with zero speed.

Updates are asynchronous: one car step with the truck field frozen, then a
fixed number of truck sub-steps, each reading the frozen post-step car field.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import micro
from .errors import ConfigError
from .fd import FdConfig
from .macro import RoadGrid, step_light
from .micro import Fleet, MicroConfig

_HOLD_BACKOFF_KM = 1e-9  # a held truck parks this far short of the boundary


@dataclass(frozen=True)
class CouplingSchedule:
    """Asynchronous step sizes: the macro step must be a multiple of the micro one."""

    macro_dt_h: float = 2.0 / 3600.0
    micro_dt_h: float = 0.1 / 3600.0

    def __post_init__(self):
        if self.macro_dt_h <= 0 or self.micro_dt_h <= 0:
            raise ConfigError("time steps must be > 0")
        ratio = self.macro_dt_h / self.micro_dt_h
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError(
                f"macro_dt/micro_dt = {ratio} must be a positive integer"
            )

    @property
    def substeps(self) -> int:
        return int(round(self.macro_dt_h / self.micro_dt_h))


@dataclass
class MultiscaleState:
    """One road: car grid, truck fleet, and the derived truck-density field."""

    grid: RoadGrid
    fleet: Fleet
    effective_rho_heavy: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if len(self.effective_rho_heavy) != self.grid.n_cells:
            self.effective_rho_heavy = np.zeros(self.grid.n_cells)
        register_fleet(self.grid, self.fleet)


@dataclass
class StepEvents:
    """What happened to trucks during one macro step."""

    collisions: list = field(default_factory=list)
    gate_holds: int = 0
    exited_ids: list = field(default_factory=list)


def effective_density(fleet: Fleet, grid: RoadGrid, delta_km: float, cfg: FdConfig) -> np.ndarray:
    """Windowed truck count per cell center, as a density clamped to the jam value."""
    if delta_km <= 0:
        raise ConfigError("delta_km must be > 0")
    centers = grid.cell_centers()
    lo = np.searchsorted(fleet.x, centers - delta_km, side="left")
    hi = np.searchsorted(fleet.x, centers + delta_km, side="left")
    raw = (hi - lo) / (2.0 * delta_km)
    return np.clip(raw, 0.0, cfg.rho_max_heavy)


def admissible_car_density(effective_rho_heavy, cfg: FdConfig):
    """Car capacity left by the trucks; may go negative for pathological counts."""
    return cfg.rho_max_light - np.asarray(effective_rho_heavy, dtype=float) / cfg.beta


def entry_gate(
    rho_light_cell: float,
    window_count_with_truck: int,
    delta_km: float,
    cfg: FdConfig,
) -> bool:
    """True iff a truck may enter: the cell's cars still fit once it is counted."""
    eff = window_count_with_truck / (2.0 * delta_km)
    return rho_light_cell <= float(admissible_car_density(eff, cfg)) + 1e-12


def _window_count(x_positions: np.ndarray, center: float, delta_km: float) -> int:
    lo = np.searchsorted(x_positions, center - delta_km, side="left")
    hi = np.searchsorted(x_positions, center + delta_km, side="left")
    return int(hi - lo)


def apply_gates(
    fleet: Fleet,
    new_x: np.ndarray,
    new_v: np.ndarray,
    grid: RoadGrid,
    delta_km: float,
    cfg: FdConfig,
) -> int:
    """Veto forward cell crossings that would overload the target cell.

    Trucks are processed front to back so that each check sees the moves
    already granted ahead of it.  Held trucks park just short of the boundary
    with zero speed.  Returns the number of holds.  new_x/new_v are edited in
    place.
    """
    if len(fleet) == 0:
        return 0
    dx = grid.dx_km
    old_cell = (fleet.x / dx).astype(int)
    tentative_cell = np.clip((new_x / dx).astype(int), 0, grid.n_cells - 1)
    crossers = np.nonzero((tentative_cell > old_cell) & (new_x < grid.length_km))[0]
    if len(crossers) == 0:
        return 0
    holds = 0
    work_x = new_x  # edited as we go; trucks behind see granted moves
    for k in crossers[::-1]:
        cell = int(tentative_cell[k])
        center = (cell + 0.5) * dx
        others = np.concatenate((work_x[:k], work_x[k + 1:]))
        count = _window_count(np.sort(others), center, delta_km) + 1
        if not entry_gate(float(grid.rho_light[cell]), count, delta_km, cfg):
            work_x[k] = cell * dx - _HOLD_BACKOFF_KM
            new_v[k] = 0.0
            holds += 1
    return holds


def refresh_effective(state: MultiscaleState, mcfg: MicroConfig, fcfg: FdConfig) -> np.ndarray:
    state.effective_rho_heavy = effective_density(
        state.fleet, state.grid, mcfg.coupling_window_km, fcfg
    )
    return state.effective_rho_heavy


def truck_substep(
    state: MultiscaleState,
    mcfg: MicroConfig,
    fcfg: FdConfig,
    t_h: float,
    events: StepEvents,
    end_handler=None,
    spawner=None,
    strict_collisions: bool = False,
):
    """Advance the trucks of one road by one Euler sub-step.

    Reads the car field currently stored on the grid (frozen for the whole
    macro step by the caller).  ``end_handler(state, truck, t_h)`` decides
    what happens to a truck reaching the road end (default: it exits); truck
    is (id, x, v, path) and a False return holds it at the end with zero
    speed.  ``spawner(state, t_h)`` may inject trucks at the road start.
    """
    grid, fleet = state.grid, state.fleet
    new_x, new_v = micro.propose_step(fleet, grid.rho_light, grid.dx_km, mcfg, fcfg, t_h)
    # Road-end handling first (front to back), then entry gates.
    while len(fleet) and new_x[-1] >= grid.length_km:
        truck = (int(fleet.ids[-1]), float(new_x[-1]), float(new_v[-1]), int(fleet.path[-1]))
        accepted = True if end_handler is None else end_handler(state, truck, t_h)
        if accepted:
            fleet.pop_front()
            _unregister(grid, truck[0])
            if end_handler is None:
                events.exited_ids.append(truck[0])
            new_x, new_v = new_x[:-1], new_v[:-1]
        else:
            new_x[-1] = grid.length_km - _HOLD_BACKOFF_KM
            new_v[-1] = 0.0
            break
    events.gate_holds += apply_gates(
        fleet, new_x, new_v, grid, mcfg.coupling_window_km, fcfg
    )
    _commit_moves(grid, fleet, new_x, new_v)
    collisions = micro.detect_collisions(fleet, t_h + mcfg.euler_dt_h)
    if collisions:
        events.collisions.extend(collisions)
        if strict_collisions:
            from .errors import CollisionError

            raise CollisionError(f"{len(collisions)} truck collision(s)", collisions)
    if spawner is not None:
        spawner(state, t_h + mcfg.euler_dt_h)


def multiscale_step(
    state: MultiscaleState,
    schedule: CouplingSchedule,
    mcfg: MicroConfig,
    fcfg: FdConfig,
    t_h: float = 0.0,
    left_flux: float | None = None,
    right_flux: float | None = None,
    end_handler=None,
    spawner=None,
    strict_collisions: bool = False,
) -> StepEvents:
    """One macro step of a single road: cars first against the frozen truck
    field, then truck sub-steps against the frozen post-step car field."""
    events = StepEvents()
    refresh_effective(state, mcfg, fcfg)
    step_light(
        state.grid,
        state.effective_rho_heavy,
        schedule.macro_dt_h,
        fcfg,
        t_h=t_h,
        left_flux=left_flux,
        right_flux=right_flux,
    )
    t = t_h
    for _ in range(schedule.substeps):
        truck_substep(
            state, mcfg, fcfg, t, events,
            end_handler=end_handler, spawner=spawner,
            strict_collisions=strict_collisions,
        )
        t += schedule.micro_dt_h
    return events


def _commit_moves(grid: RoadGrid, fleet: Fleet, new_x: np.ndarray, new_v: np.ndarray):
    if len(fleet) == 0:
        fleet.x, fleet.v = new_x, new_v
        return
    dx = grid.dx_km
    old_cell = np.clip((fleet.x / dx).astype(int), 0, grid.n_cells - 1)
    new_cell = np.clip((new_x / dx).astype(int), 0, grid.n_cells - 1)
    moved = np.nonzero(old_cell != new_cell)[0]
    for k in moved:
        tid = int(fleet.ids[k])
        grid.truck_registry[int(old_cell[k])].remove(tid)
        grid.truck_registry[int(new_cell[k])].append(tid)
    fleet.x, fleet.v = new_x, new_v


def register_fleet(grid: RoadGrid, fleet: Fleet):
    """(Re)build the per-cell truck id registry from scratch."""
    grid.truck_registry = [[] for _ in range(grid.n_cells)]
    for tid, x in zip(fleet.ids, fleet.x):
        grid.truck_registry[grid.cell_of(float(x))].append(int(tid))


def register_truck(grid: RoadGrid, truck_id: int, x_km: float):
    grid.truck_registry[grid.cell_of(x_km)].append(int(truck_id))


def _unregister(grid: RoadGrid, truck_id: int):
    for cell in grid.truck_registry:
        if truck_id in cell:
            cell.remove(truck_id)
            return
