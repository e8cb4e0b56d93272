"""Finite-volume (cell transmission) solver for the coupled two-class system.

One road is a row of cells of width dx.  Interface fluxes are the classic
min(sending upstream, receiving downstream) per class; the coupling between
classes enters only through the dependence of the sending/receiving values on
both densities.  Boundary conditions are per class and may vary in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fd
from .errors import CflError, ConfigError, SchemeError

# Guard against absurd discretizations before allocating anything.
MIN_DX_KM = 1e-6
MAX_CELLS = 2_000_000

_POST_TOL = 1e-7  # relative admissibility slack for post-step states


@dataclass(frozen=True)
class ClassBc:
    """Boundary condition for one vehicle class at one road end.

    kind:
      dirichlet -- ghost density ``value`` (optionally oscillating in time)
      inflow    -- demand clamped to what the edge cell can receive
      free      -- zero-gradient: boundary flux equals the edge cell's flux
      closed    -- wall, zero flux
    """

    kind: str
    value: float = 0.0
    osc_amplitude: float = 0.0
    osc_period_s: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "inflow", "free", "closed"):
            raise ConfigError(f"unknown boundary kind '{self.kind}'")
        if self.kind == "inflow" and self.value < 0:
            raise ConfigError("inflow flux must be >= 0")
        if self.osc_amplitude and self.osc_period_s <= 0:
            raise ConfigError("oscillating boundary needs a positive period")

    def density_at(self, t_h: float) -> float:
        if self.osc_amplitude:
            return self.value + self.osc_amplitude * math.sin(
                2.0 * math.pi * t_h * 3600.0 / self.osc_period_s
            )
        return self.value


@dataclass(frozen=True)
class BoundaryCondition:
    """Per-class boundary behaviour with an optional time schedule.

    ``light``/``heavy`` are sequences of (until_h, ClassBc); an entry applies
    while t < until_h, the last entry (until_h = inf) applies forever.
    """

    light: tuple = ()
    heavy: tuple = ()

    @staticmethod
    def _normalize(entries) -> tuple:
        if isinstance(entries, ClassBc):
            return ((math.inf, entries),)
        out = []
        for until_h, bc in entries:
            out.append((math.inf if until_h is None else float(until_h), bc))
        if not out or out[-1][0] != math.inf:
            raise ConfigError("boundary schedule must end with an open-ended entry")
        return tuple(out)

    @classmethod
    def per_class(cls, light, heavy) -> "BoundaryCondition":
        return cls(light=cls._normalize(light), heavy=cls._normalize(heavy))

    @classmethod
    def dirichlet(cls, rho_light: float, rho_heavy: float) -> "BoundaryCondition":
        return cls.per_class(
            ClassBc("dirichlet", rho_light), ClassBc("dirichlet", rho_heavy)
        )

    @classmethod
    def inflow(cls, flux_light: float, flux_heavy: float) -> "BoundaryCondition":
        return cls.per_class(ClassBc("inflow", flux_light), ClassBc("inflow", flux_heavy))

    @classmethod
    def free(cls) -> "BoundaryCondition":
        return cls.per_class(ClassBc("free"), ClassBc("free"))

    @classmethod
    def closed(cls) -> "BoundaryCondition":
        return cls.per_class(ClassBc("closed"), ClassBc("closed"))

    def light_at(self, t_h: float) -> ClassBc:
        for until_h, bc in self.light:
            if t_h < until_h:
                return bc
        return self.light[-1][1]

    def heavy_at(self, t_h: float) -> ClassBc:
        for until_h, bc in self.heavy:
            if t_h < until_h:
                return bc
        return self.heavy[-1][1]


@dataclass
class RoadGrid:
    """Discretized road: densities per cell plus boundary conditions.

    ``truck_registry`` keeps, for each cell, the ids of the microscopic trucks
    currently inside it (used by the multi-scale model and by networks).
    """

    length_km: float
    dx_km: float
    n_cells: int
    rho_light: np.ndarray
    rho_heavy: np.ndarray
    left_bc: BoundaryCondition
    right_bc: BoundaryCondition
    truck_registry: list = field(default_factory=list)

    def __post_init__(self):
        if self.dx_km < MIN_DX_KM:
            raise ConfigError(f"dx_km={self.dx_km} below the {MIN_DX_KM} km guard")
        if self.n_cells > MAX_CELLS:
            raise ConfigError(f"{self.n_cells} cells exceed the {MAX_CELLS} guard")
        if abs(self.n_cells * self.dx_km - self.length_km) > 0.5 * self.dx_km:
            raise ConfigError(
                f"n_cells*dx ({self.n_cells * self.dx_km}) does not match length {self.length_km}"
            )
        if len(self.rho_light) != self.n_cells or len(self.rho_heavy) != self.n_cells:
            raise ConfigError("density arrays must have one entry per cell")
        if not self.truck_registry:
            self.truck_registry = [[] for _ in range(self.n_cells)]

    @classmethod
    def uniform(
        cls,
        length_km: float,
        dx_km: float,
        rho_light: float,
        rho_heavy: float,
        left_bc: BoundaryCondition,
        right_bc: BoundaryCondition,
        cfg: fd.FdConfig,
    ) -> "RoadGrid":
        n = int(round(length_km / dx_km))
        grid = cls(
            length_km=length_km,
            dx_km=dx_km,
            n_cells=n,
            rho_light=np.full(n, float(rho_light)),
            rho_heavy=np.full(n, float(rho_heavy)),
            left_bc=left_bc,
            right_bc=right_bc,
        )
        grid.require_admissible(cfg)
        return grid

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx_km

    def cell_of(self, x_km: float) -> int:
        return min(max(int(x_km / self.dx_km), 0), self.n_cells - 1)

    def require_admissible(self, cfg: fd.FdConfig, tol: float = fd.DOMAIN_TOL):
        ok = fd.in_domain(self.rho_light, self.rho_heavy, cfg, tol=tol)
        if not np.all(ok):
            i = int(np.argwhere(~ok)[0])
            raise ConfigError(
                f"cell {i} state ({self.rho_light[i]}, {self.rho_heavy[i]}) inadmissible"
            )

    def mass_light(self) -> float:
        return float(np.sum(self.rho_light) * self.dx_km)

    def mass_heavy(self) -> float:
        return float(np.sum(self.rho_heavy) * self.dx_km)


@dataclass(frozen=True)
class MacroStepReport:
    t_h: float
    total_mass_light: float
    total_mass_heavy: float
    max_flux_light: float
    max_flux_heavy: float


# -- sending / receiving ---------------------------------------------------------


def sending_receiving_light(rho_light, rho_heavy, cfg: fd.FdConfig):
    """Demand (sending) and supply (receiving) of the car class.

    Sending saturates at the peak flux once the state is congested; receiving
    mirrors it: peak flux while free-flowing, own flux once congested.
    """
    crit = np.asarray(fd.critical_density_light(rho_heavy, cfg))
    peak = np.asarray(fd.flux_light(crit, rho_heavy, cfg))
    f = np.asarray(fd.flux_light(rho_light, rho_heavy, cfg))
    free = np.asarray(rho_light) <= crit
    sending = np.where(free, f, peak)
    receiving = np.where(free, peak, f)
    if np.ndim(rho_light) == 0 and np.ndim(rho_heavy) == 0:
        return float(sending), float(receiving)
    return sending, receiving


def sending_receiving_heavy(rho_light, rho_heavy, cfg: fd.FdConfig):
    """Demand and supply of the truck class (breakpoint in the truck density)."""
    crit = np.asarray(fd.critical_density_heavy(rho_light, cfg))
    peak = np.asarray(fd.flux_heavy(rho_light, crit, cfg))
    f = np.asarray(fd.flux_heavy(rho_light, rho_heavy, cfg))
    free = np.asarray(rho_heavy) <= crit
    sending = np.where(free, f, peak)
    receiving = np.where(free, peak, f)
    if np.ndim(rho_light) == 0 and np.ndim(rho_heavy) == 0:
        return float(sending), float(receiving)
    return sending, receiving


def interface_flux(left: fd.TwoClassState, right: fd.TwoClassState, cfg: fd.FdConfig):
    """Per-class flux across one interface: min(sending left, receiving right)."""
    s_l, _ = sending_receiving_light(left.rho_light, left.rho_heavy, cfg)
    _, r_l = sending_receiving_light(right.rho_light, right.rho_heavy, cfg)
    s_h, _ = sending_receiving_heavy(left.rho_light, left.rho_heavy, cfg)
    _, r_h = sending_receiving_heavy(right.rho_light, right.rho_heavy, cfg)
    return min(s_l, r_l), min(s_h, r_h)


# -- boundary handling -------------------------------------------------------------


def _project_ghost(rho_light: float, rho_heavy: float, cfg: fd.FdConfig):
    """Clip a composed ghost state into the admissible set (heavy yields)."""
    gl = min(max(rho_light, 0.0), cfg.rho_max_light)
    gh = min(max(rho_heavy, 0.0), cfg.rho_max_heavy, cfg.beta * (cfg.rho_max_light - gl))
    return gl, gh


def boundary_fluxes(
    grid: RoadGrid, cfg: fd.FdConfig, t_h: float
) -> tuple[tuple[float, float], tuple[float, float]]:
    """Boundary fluxes ((FL_left, FH_left), (FL_right, FH_right)) at time t."""
    out = []
    for side in ("left", "right"):
        bc = grid.left_bc if side == "left" else grid.right_bc
        edge = 0 if side == "left" else grid.n_cells - 1
        rl_edge = float(grid.rho_light[edge])
        rh_edge = float(grid.rho_heavy[edge])
        bcl = bc.light_at(t_h)
        bch = bc.heavy_at(t_h)
        ghost_l = bcl.density_at(t_h) if bcl.kind == "dirichlet" else rl_edge
        ghost_h = bch.density_at(t_h) if bch.kind == "dirichlet" else rh_edge
        ghost_l, ghost_h = _project_ghost(ghost_l, ghost_h, cfg)

        fluxes = []
        for cls_bc, sr in (
            (bcl, sending_receiving_light),
            (bch, sending_receiving_heavy),
        ):
            if cls_bc.kind == "closed":
                fluxes.append(0.0)
            elif cls_bc.kind == "free":
                f = fd.flux_light if sr is sending_receiving_light else fd.flux_heavy
                fluxes.append(float(f(rl_edge, rh_edge, cfg)))
            elif cls_bc.kind == "inflow":
                if side == "left":
                    _, receiving = sr(rl_edge, rh_edge, cfg)
                    fluxes.append(min(cls_bc.value, receiving))
                else:
                    sending, _ = sr(rl_edge, rh_edge, cfg)
                    fluxes.append(min(sending, cls_bc.value))
            else:  # dirichlet
                if side == "left":
                    s, _ = sr(ghost_l, ghost_h, cfg)
                    _, r = sr(rl_edge, rh_edge, cfg)
                else:
                    s, _ = sr(rl_edge, rh_edge, cfg)
                    _, r = sr(ghost_l, ghost_h, cfg)
                fluxes.append(min(s, r))
        out.append((fluxes[0], fluxes[1]))
    return out[0], out[1]


# -- stability ----------------------------------------------------------------------


def max_wave_speed(cfg: fd.FdConfig, n_samples: int = 200, sample: bool = True) -> float:
    """Largest characteristic speed over the admissible set.

    Both flux families are piecewise linear in the own density, so the wave
    speeds are the free speeds and the congested-branch slopes, sampled over
    the cross density.  With sampling disabled, fall back to the free speeds,
    which dominate for every sane parameter set.
    """
    fallback = max(cfg.light.v_max_kmh, cfg.heavy.v_max_kmh)
    if not sample:
        return fallback
    rh = np.linspace(0.0, cfg.rho_max_heavy, n_samples)
    crit_l = np.asarray(fd.critical_density_light(rh, cfg))
    vfree_l = np.asarray(fd.free_speed_light(rh, cfg))
    rmax_l = np.asarray(fd.max_density_light(rh, cfg))
    cong_l = vfree_l * crit_l / (rmax_l - crit_l)
    rl = np.linspace(0.0, cfg.rho_max_light, n_samples)
    crit_h = np.asarray(fd.critical_density_heavy(rl, cfg))
    vfree_h = np.asarray(fd.free_speed_heavy(rl, cfg))
    rmax_h = np.asarray(fd.max_density_heavy(rl, cfg))
    with np.errstate(divide="ignore", invalid="ignore"):
        cong_h = np.where(
            rmax_h > crit_h, vfree_h * crit_h / np.maximum(rmax_h - crit_h, 1e-300), 0.0
        )
    speeds = [vfree_l.max(), cong_l.max(), vfree_h.max(), cong_h.max()]
    return max(fallback, float(max(speeds)))


def cfl_bound_h(grid: RoadGrid, cfg: fd.FdConfig, sample: bool = True) -> float:
    return grid.dx_km / max_wave_speed(cfg, sample=sample)


def cfl_check(grid: RoadGrid, dt_h: float, cfg: fd.FdConfig, sample: bool = True) -> bool:
    """True iff dt respects dx / (max characteristic speed)."""
    return dt_h <= cfl_bound_h(grid, cfg, sample=sample) * (1.0 + 1e-12)


# -- the update -----------------------------------------------------------------------


def interior_interface_fluxes(rho_light, rho_heavy, cfg: fd.FdConfig):
    """Fluxes across the n-1 interior interfaces of a cell row."""
    s_l, r_l = sending_receiving_light(rho_light, rho_heavy, cfg)
    s_h, r_h = sending_receiving_heavy(rho_light, rho_heavy, cfg)
    return np.minimum(s_l[:-1], r_l[1:]), np.minimum(s_h[:-1], r_h[1:])


def _advect(rho: np.ndarray, flux: np.ndarray, dt_over_dx: float) -> np.ndarray:
    return rho + dt_over_dx * (flux[:-1] - flux[1:])


def step_light(
    grid: RoadGrid,
    effective_rho_heavy: np.ndarray,
    dt_h: float,
    cfg: fd.FdConfig,
    t_h: float = 0.0,
    left_flux: float | None = None,
    right_flux: float | None = None,
) -> float:
    """Advance only the car field against a frozen truck field.

    Used by the multi-scale model, where ``effective_rho_heavy`` is derived
    from microscopic truck positions and is not a conserved quantity.
    Returns the car mass after the step.  Forced fluxes (from junctions)
    override the boundary conditions when given.
    """
    rh = effective_rho_heavy
    s_l, r_l = sending_receiving_light(grid.rho_light, rh, cfg)
    flux = np.empty(grid.n_cells + 1)
    flux[1:-1] = np.minimum(s_l[:-1], r_l[1:])

    saved = grid.rho_heavy
    grid.rho_heavy = np.asarray(rh, dtype=float)
    try:
        (fl_left, _), (fl_right, _) = boundary_fluxes(grid, cfg, t_h)
    finally:
        grid.rho_heavy = saved
    flux[0] = fl_left if left_flux is None else left_flux
    flux[-1] = fl_right if right_flux is None else right_flux

    grid.rho_light = _advect(grid.rho_light, flux, dt_h / grid.dx_km)
    ok = fd.in_domain(grid.rho_light, rh, cfg, tol=_POST_TOL)
    if not np.all(ok):
        i = int(np.argwhere(~ok)[0])
        raise SchemeError(
            f"car update left cell {i} at ({grid.rho_light[i]}, {rh[i]}): solver bug"
        )
    return grid.mass_light()


def macro_step(
    grid: RoadGrid,
    dt_h: float,
    cfg: fd.FdConfig,
    t_h: float = 0.0,
    left_flux: tuple[float, float] | None = None,
    right_flux: tuple[float, float] | None = None,
    check_cfl: bool = True,
) -> MacroStepReport:
    """Advance both classes by one time step.

    Forced boundary fluxes, when given as (light, heavy) pairs, replace the
    boundary-condition fluxes (used at junction-connected road ends).
    """
    if check_cfl and not cfl_check(grid, dt_h, cfg):
        bound = cfl_bound_h(grid, cfg)
        raise CflError(
            f"dt={dt_h * 3600:.4f} s exceeds the stability bound "
            f"{bound * 3600:.4f} s for dx={grid.dx_km} km",
            dt_h,
            bound,
        )
    f_l = np.empty(grid.n_cells + 1)
    f_h = np.empty(grid.n_cells + 1)
    f_l[1:-1], f_h[1:-1] = interior_interface_fluxes(grid.rho_light, grid.rho_heavy, cfg)
    (left_l, left_h), (right_l, right_h) = boundary_fluxes(grid, cfg, t_h)
    f_l[0], f_h[0] = (left_l, left_h) if left_flux is None else left_flux
    f_l[-1], f_h[-1] = (right_l, right_h) if right_flux is None else right_flux

    dt_over_dx = dt_h / grid.dx_km
    grid.rho_light = _advect(grid.rho_light, f_l, dt_over_dx)
    grid.rho_heavy = _advect(grid.rho_heavy, f_h, dt_over_dx)

    ok = fd.in_domain(grid.rho_light, grid.rho_heavy, cfg, tol=_POST_TOL)
    if not np.all(ok):
        i = int(np.argwhere(~ok)[0])
        raise SchemeError(
            f"step left cell {i} at ({grid.rho_light[i]}, {grid.rho_heavy[i]}): solver bug"
        )
    return MacroStepReport(
        t_h=t_h + dt_h,
        total_mass_light=grid.mass_light(),
        total_mass_heavy=grid.mass_heavy(),
        max_flux_light=float(np.max(f_l)),
        max_flux_heavy=float(np.max(f_h)),
    )
