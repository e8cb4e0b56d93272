"""Scenario execution: builds the runtime objects and drives the time loop.

One simulation owns every road of the scenario.  Roads connected through
junctions exchange boundary fluxes (cars, and truck densities in the macro
model) once per macro step; microscopic trucks change road individually.
Within a macro step, truck sub-steps are interleaved across roads in a fixed
downstream-first order, so a transferred truck is never advanced twice in the
same sub-step and runs stay reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fd, macro, multiscale, network
from .errors import CflError, ConfigError
from .fd import FdConfig, TwoClassState
from .macro import RoadGrid
from .micro import Fleet, MicroConfig
from .multiscale import CouplingSchedule, MultiscaleState, StepEvents
from .scenario import Scenario, RoadSpec, evaluate_piecewise, road_fd_config


@dataclass
class RoadHistory:
    """Recorded space-time fields of one road (rows = record times)."""

    road_id: str
    centers_km: np.ndarray
    density_light: list = field(default_factory=list)
    density_heavy: list = field(default_factory=list)
    velocity_light: list = field(default_factory=list)
    velocity_heavy: list = field(default_factory=list)
    flux_light: list = field(default_factory=list)
    flux_heavy: list = field(default_factory=list)
    effective_heavy: list = field(default_factory=list)
    admissible_light: list = field(default_factory=list)

    def as_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for name in (
            "density_light", "density_heavy", "velocity_light", "velocity_heavy",
            "flux_light", "flux_heavy", "effective_heavy", "admissible_light",
        ):
            rows = getattr(self, name)
            if rows:
                out[name] = np.vstack(rows)
        return out


@dataclass
class TransferEvent:
    t_s: float
    truck_id: int
    from_road: str
    to_road: str


@dataclass
class RunResult:
    scenario: Scenario
    times_s: np.ndarray
    roads: dict[str, RoadHistory]
    trajectories: list  # (t_s, truck_id, road_id, x_km, v_kmh)
    mass_light: np.ndarray
    mass_heavy: np.ndarray
    collisions: list
    transfers: list
    exited: list
    gate_holds: int
    effective_dt_s: float
    effective_horizon_s: float


class _Source:
    """Metered truck entry at a road start; blocked entries stay pending."""

    def __init__(self, spec, id_allocator):
        self.spec = spec
        self.next_t_h = spec.start_s / 3600.0
        self.end_t_h = spec.end_s / 3600.0
        self._allocate = id_allocator
        self.spawned: list[int] = []

    def __call__(self, state: MultiscaleState, t_h: float, mcfg: MicroConfig, fcfg: FdConfig):
        if t_h < self.next_t_h or self.next_t_h > self.end_t_h:
            return
        fleet, grid = state.fleet, state.grid
        if len(fleet) and float(fleet.x[0]) < mcfg.delta_close_km:
            return  # retry next sub-step, cadence debt is preserved
        count = multiscale._window_count(fleet.x, 0.5 * grid.dx_km, mcfg.coupling_window_km) + 1
        if not multiscale.entry_gate(
            float(grid.rho_light[0]), count, mcfg.coupling_window_km, fcfg
        ):
            return
        tid = self._allocate()
        fleet.append_back(tid, 0.0, self.spec.v_kmh, self.spec.path)
        multiscale.register_truck(grid, tid, 0.0)
        self.spawned.append(tid)
        self.next_t_h += self.spec.every_s / 3600.0


class Simulation:
    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.fcfg = scenario.fd
        self.mcfg = scenario.micro
        self.dt_h = scenario.dt_s / 3600.0
        self.n_steps = max(1, int(round(scenario.horizon_s / scenario.dt_s)))
        self.record_every = max(1, int(round(scenario.output.interval_s / scenario.dt_s)))
        self._next_id = 0

        self.roads: dict[str, RoadSpec] = {r.id: r for r in scenario.roads}
        self.cfgs: dict[str, FdConfig] = {
            r.id: road_fd_config(r, self.fcfg) for r in scenario.roads
        }
        self.grids: dict[str, RoadGrid] = {}
        self.states: dict[str, MultiscaleState] = {}
        self.sources: dict[str, _Source] = {}
        self.events = StepEvents()
        self.transfers: list[TransferEvent] = []

        for spec in scenario.roads:
            grid = self._build_grid(spec)
            self.grids[spec.id] = grid
            if scenario.model == "multiscale":
                fleet = self._build_fleet(spec)
                self.states[spec.id] = MultiscaleState(grid=grid, fleet=fleet)
                if spec.truck_source is not None:
                    self.sources[spec.id] = _Source(spec.truck_source, self._allocate_id)

        # Junction wiring: which junction closes each road end.
        self.right_junction: dict[str, network.Junction] = {}
        self.left_junction: dict[str, network.Junction] = {}
        for j in scenario.junctions:
            for rid in j.incoming:
                self.right_junction[rid] = j
            for rid in j.outgoing:
                self.left_junction[rid] = j

        self.net = network.Network(
            roads=self.grids,
            junctions=list(scenario.junctions),
            paths=list(scenario.paths),
        )
        self.order = self._downstream_first_order()

        for rid, grid in self.grids.items():
            if not macro.cfl_check(grid, self.dt_h, self.cfgs[rid]):
                bound = macro.cfl_bound_h(grid, self.cfgs[rid])
                raise CflError(
                    f"road '{rid}': dt={scenario.dt_s} s exceeds the stability bound "
                    f"{bound * 3600:.4f} s",
                    self.dt_h,
                    bound,
                )
        if scenario.model == "multiscale":
            self.schedule = CouplingSchedule(
                macro_dt_h=self.dt_h, micro_dt_h=self.mcfg.euler_dt_h
            )

    # -- construction ----------------------------------------------------------

    def _allocate_id(self) -> int:
        tid = self._next_id
        self._next_id += 1
        return tid

    def _build_grid(self, spec: RoadSpec) -> RoadGrid:
        n = int(round(spec.length_km / spec.dx_km))
        centers = (np.arange(n) + 0.5) * spec.dx_km
        grid = RoadGrid(
            length_km=spec.length_km,
            dx_km=spec.dx_km,
            n_cells=n,
            rho_light=evaluate_piecewise(spec.initial_light, centers),
            rho_heavy=evaluate_piecewise(spec.initial_heavy, centers),
            left_bc=spec.left_bc,
            right_bc=spec.right_bc,
        )
        grid.require_admissible(self.cfgs[spec.id])
        return grid

    def _build_fleet(self, spec: RoadSpec) -> Fleet:
        if spec.trucks is None:
            return Fleet(protocol=spec.leader)
        positions = spec.trucks.positions()
        fleet = Fleet.from_positions(
            positions,
            spec.trucks.v_kmh,
            protocol=spec.leader,
            first_id=self._next_id,
            path_id=spec.trucks.path,
        )
        self._next_id += len(positions)
        return fleet

    def _downstream_first_order(self) -> list[str]:
        """Roads sorted so that every junction's outgoing roads come first."""
        order: list[str] = []
        visiting: set[str] = set()

        def visit(rid: str):
            if rid in order or rid in visiting:
                return
            visiting.add(rid)
            j = self.right_junction.get(rid)
            if j is not None:
                for out in j.outgoing:
                    visit(out)
            visiting.discard(rid)
            order.append(rid)

        for rid in sorted(self.grids):
            visit(rid)
        return order

    # -- junction coupling ------------------------------------------------------

    def _junction_fluxes(self) -> dict[str, dict[str, tuple[float, float]]]:
        """Per junction: road id -> (light, heavy) flux across the junction."""
        out = {}
        multiscale_model = self.scenario.model == "multiscale"
        for j in self.scenario.junctions:
            upstream = {}
            for rid in j.incoming:
                grid = self.grids[rid]
                heavy = (
                    self.states[rid].effective_rho_heavy[-1]
                    if multiscale_model
                    else grid.rho_heavy[-1]
                )
                upstream[rid] = TwoClassState(float(grid.rho_light[-1]), float(heavy))
            downstream = {}
            for rid in j.outgoing:
                grid = self.grids[rid]
                heavy = (
                    self.states[rid].effective_rho_heavy[0]
                    if multiscale_model
                    else grid.rho_heavy[0]
                )
                downstream[rid] = TwoClassState(float(grid.rho_light[0]), float(heavy))
            out[id(j)] = network.junction_fluxes(j, upstream, downstream, self.cfgs)
        return out

    def _forced_fluxes(self, rid: str, jflux) -> tuple:
        left = right = None
        j = self.left_junction.get(rid)
        if j is not None:
            left = jflux[id(j)][rid]
        j = self.right_junction.get(rid)
        if j is not None:
            right = jflux[id(j)][rid]
        return left, right

    def _make_end_handler(self, rid: str):
        j = self.right_junction.get(rid)
        if j is None:
            return None  # free end: trucks exit the network

        def handler(state: MultiscaleState, truck, t_h: float) -> bool:
            tid, _, v, path_id = truck
            if j.kind == "merge":
                dest = j.outgoing[0]
            else:
                dest = network.next_road_on_path(self.net, path_id, rid)
                if dest is None:
                    raise ConfigError(
                        f"truck {tid} reached diverge at end of '{rid}' without a valid path"
                    )
            ok = network.try_transfer(
                (tid, 0.0, v, path_id),
                state.grid,
                self.grids[dest],
                self.states[dest].fleet,
                self.mcfg,
                self.cfgs[dest],
            )
            if ok:
                self.transfers.append(TransferEvent(t_h * 3600.0, tid, rid, dest))
            return ok

        return handler

    # -- main loop -----------------------------------------------------------------

    def run(self) -> RunResult:
        histories = {
            rid: RoadHistory(road_id=rid, centers_km=grid.cell_centers())
            for rid, grid in self.grids.items()
        }
        times_s: list[float] = []
        trajectories: list = []
        mass_l: list[float] = []
        mass_h: list[float] = []

        multiscale_model = self.scenario.model == "multiscale"
        if multiscale_model:
            for rid in self.order:
                multiscale.refresh_effective(self.states[rid], self.mcfg, self.fcfg)
        self._record(0.0, histories, times_s, trajectories, mass_l, mass_h)

        end_handlers = {rid: self._make_end_handler(rid) for rid in self.order}
        t_h = 0.0
        for step in range(1, self.n_steps + 1):
            if multiscale_model:
                for rid in self.order:
                    multiscale.refresh_effective(self.states[rid], self.mcfg, self.fcfg)
                jflux = self._junction_fluxes() if self.scenario.junctions else {}
                for rid in self.order:
                    left, right = self._forced_fluxes(rid, jflux) if jflux else (None, None)
                    macro.step_light(
                        self.grids[rid],
                        self.states[rid].effective_rho_heavy,
                        self.dt_h,
                        self.cfgs[rid],
                        t_h=t_h,
                        left_flux=None if left is None else left[0],
                        right_flux=None if right is None else right[0],
                    )
                t_sub = t_h
                for _ in range(self.schedule.substeps):
                    for rid in self.order:
                        state = self.states[rid]
                        source = self.sources.get(rid)
                        spawner = (
                            (lambda s, t, src=source: src(s, t, self.mcfg, self.fcfg))
                            if source is not None
                            else None
                        )
                        multiscale.truck_substep(
                            state,
                            self.mcfg,
                            self.fcfg,
                            t_sub,
                            self.events,
                            end_handler=end_handlers[rid],
                            spawner=spawner,
                        )
                    t_sub += self.schedule.micro_dt_h
            else:
                jflux = self._junction_fluxes() if self.scenario.junctions else {}
                for rid in self.order:
                    left, right = self._forced_fluxes(rid, jflux) if jflux else (None, None)
                    macro.macro_step(
                        self.grids[rid],
                        self.dt_h,
                        self.cfgs[rid],
                        t_h=t_h,
                        left_flux=left,
                        right_flux=right,
                        check_cfl=False,
                    )
            t_h += self.dt_h
            if step % self.record_every == 0 or step == self.n_steps:
                if multiscale_model:
                    for rid in self.order:
                        multiscale.refresh_effective(self.states[rid], self.mcfg, self.fcfg)
                self._record(t_h, histories, times_s, trajectories, mass_l, mass_h)

        return RunResult(
            scenario=self.scenario,
            times_s=np.asarray(times_s),
            roads=histories,
            trajectories=trajectories,
            mass_light=np.asarray(mass_l),
            mass_heavy=np.asarray(mass_h),
            collisions=self.events.collisions,
            transfers=self.transfers,
            exited=self.events.exited_ids,
            gate_holds=self.events.gate_holds,
            effective_dt_s=self.dt_h * 3600.0,
            effective_horizon_s=self.n_steps * self.dt_h * 3600.0,
        )

    def _record(self, t_h, histories, times_s, trajectories, mass_l, mass_h):
        t_s = t_h * 3600.0
        times_s.append(t_s)
        total_l = 0.0
        total_h = 0.0
        multiscale_model = self.scenario.model == "multiscale"
        for rid in sorted(self.grids):
            grid = self.grids[rid]
            cfg = self.cfgs[rid]
            hist = histories[rid]
            rho_l = grid.rho_light.copy()
            if multiscale_model:
                eff = self.states[rid].effective_rho_heavy.copy()
                v_l = np.asarray(fd.speed_light(rho_l, eff, cfg))
                hist.effective_heavy.append(eff)
                hist.admissible_light.append(
                    np.asarray(multiscale.admissible_car_density(eff, cfg))
                )
                total_h += len(self.states[rid].fleet)  # vehicles, not veh km
                fleet = self.states[rid].fleet
                for k in range(len(fleet)):
                    trajectories.append(
                        (t_s, int(fleet.ids[k]), rid, float(fleet.x[k]), float(fleet.v[k]))
                    )
            else:
                rho_h = grid.rho_heavy.copy()
                v_h = np.asarray(fd.speed_heavy(rho_l, rho_h, cfg))
                v_l = np.asarray(fd.speed_light(rho_l, rho_h, cfg))
                hist.density_heavy.append(rho_h)
                hist.velocity_heavy.append(v_h)
                hist.flux_heavy.append(rho_h * v_h)
                total_h += grid.mass_heavy()
            hist.density_light.append(rho_l)
            hist.velocity_light.append(v_l)
            hist.flux_light.append(rho_l * v_l)
            total_l += grid.mass_light()
        mass_l.append(total_l)
        mass_h.append(total_h)


def run_scenario(scenario: Scenario) -> RunResult:
    return Simulation(scenario).run()
