"""Second-order follow-the-leader dynamics for trucks.

Each truck relaxes its speed toward an equilibrium value that depends on the
gap to the truck in front: zero below a close distance, the maximum speed
beyond a far distance, linear in between.  Acceleration and braking use
separate relaxation times; braking power is bounded, so collisions are
possible in principle and are reported rather than prevented.

When the local car density exceeds the transition level, cars occupy part of
the slow lane: both gap thresholds then grow linearly with the average number
of cars sitting between two trucks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CollisionError, ConfigError
from .fd import FdConfig


@dataclass(frozen=True)
class MicroConfig:
    """Parameters of the truck-following model (km, h)."""

    delta_close_km: float = 25e-3
    delta_far_km: float = 50e-3
    v_max_kmh: float = 90.0
    tau_acc_h: float = 1.4e-2
    tau_dec_h: float = 2e-4
    euler_dt_h: float = 0.1 / 3600.0
    coupling_window_km: float = 50e-3
    # km of extra headway per car squeezed between two trucks; the default 0
    # keeps trucks blind to cars (the coupled regime is hard to calibrate).
    coupling_slope: float = 0.0

    def __post_init__(self):
        if not 0 < self.delta_close_km < self.delta_far_km:
            raise ConfigError("need 0 < delta_close_km < delta_far_km")
        if self.tau_acc_h <= 0 or self.tau_dec_h <= 0:
            raise ConfigError("relaxation times must be > 0")
        if self.euler_dt_h <= 0:
            raise ConfigError("euler_dt_h must be > 0")
        if self.coupling_window_km <= 0:
            raise ConfigError("coupling_window_km must be > 0")
        if self.v_max_kmh <= 0:
            raise ConfigError("v_max_kmh must be > 0")
        if self.coupling_slope < 0:
            raise ConfigError("coupling_slope must be >= 0")


@dataclass(frozen=True)
class Truck:
    """One microscopic truck (scenario-level view)."""

    id: int
    x_km: float
    v_kmh: float
    road_id: str
    path_id: int = -1


@dataclass(frozen=True)
class LeaderProtocol:
    """Behaviour of the front truck of a road.

    free     -- relax toward v_max with tau_acc (no vehicle ahead)
    constant -- hold the given speed
    script   -- piecewise-constant speed over time segments
    """

    kind: str = "free"
    v_kmh: float = 0.0
    segments: tuple = ()  # ((until_h, v_kmh), ...) last entry until_h = inf

    def __post_init__(self):
        if self.kind not in ("free", "constant", "script"):
            raise ConfigError(f"unknown leader protocol '{self.kind}'")
        if self.kind == "script":
            if not self.segments or self.segments[-1][0] != math.inf:
                raise ConfigError("script protocol needs an open-ended final segment")

    def target_speed(self, t_h: float) -> float | None:
        """Prescribed speed at time t, or None for the free protocol."""
        if self.kind == "free":
            return None
        if self.kind == "constant":
            return self.v_kmh
        for until_h, v in self.segments:
            if t_h < until_h:
                return v
        return self.segments[-1][1]


@dataclass
class Fleet:
    """Ordered trucks of one road: ascending positions, front truck last."""

    ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    x: np.ndarray = field(default_factory=lambda: np.empty(0))
    v: np.ndarray = field(default_factory=lambda: np.empty(0))
    path: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    protocol: LeaderProtocol = LeaderProtocol()

    def __post_init__(self):
        if len(self.x) > 1 and not np.all(np.diff(self.x) > 0):
            raise ConfigError("fleet positions must be strictly increasing")
        if len(self.v) and np.any(self.v < 0):
            raise ConfigError("truck velocities must be >= 0")

    def __len__(self) -> int:
        return len(self.x)

    @classmethod
    def from_positions(cls, positions_km, v_kmh, protocol=LeaderProtocol(),
                       first_id: int = 0, path_id: int = -1) -> "Fleet":
        x = np.sort(np.asarray(positions_km, dtype=float))
        n = len(x)
        v = np.full(n, float(v_kmh)) if np.ndim(v_kmh) == 0 else np.asarray(v_kmh, float)
        return cls(
            ids=np.arange(first_id, first_id + n, dtype=np.int64),
            x=x,
            v=v,
            path=np.full(n, path_id, dtype=np.int64),
            protocol=protocol,
        )

    def gaps(self) -> np.ndarray:
        return np.diff(self.x)

    def mean_gap(self) -> float:
        g = self.gaps()
        return float(g.mean()) if len(g) else 0.0

    def append_front(self, truck_id: int, x_km: float, v_kmh: float, path_id: int = -1):
        self.ids = np.append(self.ids, np.int64(truck_id))
        self.x = np.append(self.x, x_km)
        self.v = np.append(self.v, max(0.0, v_kmh))
        self.path = np.append(self.path, np.int64(path_id))

    def append_back(self, truck_id: int, x_km: float, v_kmh: float, path_id: int = -1):
        self.ids = np.insert(self.ids, 0, np.int64(truck_id))
        self.x = np.insert(self.x, 0, x_km)
        self.v = np.insert(self.v, 0, max(0.0, v_kmh))
        self.path = np.insert(self.path, 0, np.int64(path_id))

    def pop_front(self) -> tuple[int, float, float, int]:
        front = (int(self.ids[-1]), float(self.x[-1]), float(self.v[-1]), int(self.path[-1]))
        self.ids = self.ids[:-1]
        self.x = self.x[:-1]
        self.v = self.v[:-1]
        self.path = self.path[:-1]
        return front


@dataclass(frozen=True)
class CollisionEvent:
    t_h: float
    rear_id: int
    front_id: int
    x_km: float


# -- model pieces -----------------------------------------------------------------


def equilibrium_speed(gap_km, close_km, far_km, v_max_kmh):
    """Desired speed for a given gap: 0 / linear ramp / v_max plateau."""
    gap = np.asarray(gap_km, dtype=float)
    ramp = v_max_kmh * (gap - close_km) / (far_km - close_km)
    out = np.where(gap <= close_km, 0.0, np.where(gap >= far_km, v_max_kmh, ramp))
    return float(out) if np.ndim(gap_km) == 0 else out


def coupled_gaps(rho_light, mean_gap_km: float, mcfg: MicroConfig, fcfg: FdConfig):
    """Gap thresholds adjusted for cars in the slow lane.

    Below the transition level the base thresholds apply.  Above it, both
    thresholds grow by coupling_slope times the average car count per
    inter-truck gap (rho_light * mean gap, vehicles assumed uniformly spread).
    """
    rl = np.asarray(rho_light, dtype=float)
    extra = np.where(
        rl > fcfg.transition_level,
        mcfg.coupling_slope * rl * max(mean_gap_km, 0.0),
        0.0,
    )
    close = mcfg.delta_close_km + extra
    far = mcfg.delta_far_km + extra
    if np.ndim(rho_light) == 0:
        return float(close), float(far)
    return close, far


def acceleration(
    x_rear, x_front, v_rear, rho_light_local, mcfg: MicroConfig, fcfg: FdConfig,
    mean_gap_km: float = 0.0,
):
    """Relaxation toward the equilibrium speed of the current (coupled) gap.

    Speeding up uses tau_acc, braking tau_dec.  The front truck's velocity
    does not enter; it acts only through the evolution of the gap.
    """
    gap = np.asarray(x_front, dtype=float) - np.asarray(x_rear, dtype=float)
    if np.any(gap <= 0):
        raise CollisionError("non-positive gap", events=[])
    close, far = coupled_gaps(rho_light_local, mean_gap_km, mcfg, fcfg)
    v_eq = equilibrium_speed(gap, close, far, mcfg.v_max_kmh)
    v = np.asarray(v_rear, dtype=float)
    tau = np.where(v_eq >= v, mcfg.tau_acc_h, mcfg.tau_dec_h)
    out = (v_eq - v) / tau
    return float(out) if np.ndim(out) == 0 else out


def count_window(fleet: Fleet, x_km: float, delta_km: float) -> int:
    """Number of trucks in the half-open interval [x - delta, x + delta)."""
    if delta_km <= 0:
        raise ConfigError("delta_km must be > 0")
    lo = np.searchsorted(fleet.x, x_km - delta_km, side="left")
    hi = np.searchsorted(fleet.x, x_km + delta_km, side="left")
    return int(hi - lo)


# -- time stepping -----------------------------------------------------------------


def propose_step(
    fleet: Fleet,
    rho_light_field: np.ndarray,
    dx_km: float,
    mcfg: MicroConfig,
    fcfg: FdConfig,
    t_h: float,
) -> tuple[np.ndarray, np.ndarray]:
    """One explicit Euler step computed from a frozen snapshot.

    Returns proposed positions and velocities without mutating the fleet;
    callers may veto individual moves (cell-entry gates, road ends) before
    committing.  rho_light_field gives the car density per cell of width
    dx_km; each follower samples it at its own position.
    """
    n = len(fleet)
    if n == 0:
        return fleet.x.copy(), fleet.v.copy()
    x, v = fleet.x, fleet.v
    new_v = v.copy()

    if n > 1:
        idx = np.clip((x[:-1] / dx_km).astype(int), 0, len(rho_light_field) - 1)
        rho_here = rho_light_field[idx]
        mean_gap = fleet.mean_gap()
        close, far = coupled_gaps(rho_here, mean_gap, mcfg, fcfg)
        gap = np.diff(x)
        v_eq = equilibrium_speed(gap, close, far, mcfg.v_max_kmh)
        tau = np.where(v_eq >= v[:-1], mcfg.tau_acc_h, mcfg.tau_dec_h)
        accel = (v_eq - v[:-1]) / tau
        new_v[:-1] = np.maximum(0.0, v[:-1] + mcfg.euler_dt_h * accel)

    target = fleet.protocol.target_speed(t_h)
    if target is None:
        new_v[-1] = max(
            0.0, v[-1] + mcfg.euler_dt_h * (mcfg.v_max_kmh - v[-1]) / mcfg.tau_acc_h
        )
    else:
        new_v[-1] = max(0.0, target)

    new_x = x + mcfg.euler_dt_h * v
    return new_x, new_v


def detect_collisions(fleet: Fleet, t_h: float) -> list[CollisionEvent]:
    events = []
    bad = np.nonzero(np.diff(fleet.x) <= 0)[0]
    for i in bad:
        events.append(
            CollisionEvent(
                t_h=t_h,
                rear_id=int(fleet.ids[i]),
                front_id=int(fleet.ids[i + 1]),
                x_km=float(fleet.x[i]),
            )
        )
    return events


def euler_step(
    fleet: Fleet,
    rho_light_field: np.ndarray,
    dx_km: float,
    mcfg: MicroConfig,
    fcfg: FdConfig,
    t_h: float = 0.0,
    strict_collisions: bool = False,
) -> list[CollisionEvent]:
    """Propose and commit one Euler step for a single road without gates.

    Ordering violations are reported (the scheme continues) unless
    strict_collisions is set, in which case a CollisionError is raised.
    """
    new_x, new_v = propose_step(fleet, rho_light_field, dx_km, mcfg, fcfg, t_h)
    fleet.x = new_x
    fleet.v = new_v
    events = detect_collisions(fleet, t_h + mcfg.euler_dt_h)
    if events and strict_collisions:
        raise CollisionError(f"{len(events)} truck collision(s)", events)
    return events
