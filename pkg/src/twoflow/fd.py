"""Two-phase fundamental diagrams for a two-class (cars/trucks) road.

Cars may use every lane while trucks are confined to the slow lane and cannot
overtake.  Each class gets a family of triangular flux-density curves
parameterized by the density of the other class:

* cars always feel trucks: their free speed and critical density shrink
  linearly as trucks accumulate, but car flux stays positive even against a
  fully jammed slow lane (creeping);
* trucks ignore cars while the car density stays below the ``transition
  level`` (cars fit in the fast lane); above it cars spill into the slow lane
  and truck free speed and capacity fall linearly, reaching zero when cars
  fill the whole road.

All quantities use km, hours, veh/km and veh/h.  Every function accepts
scalars or numpy arrays and is pure, so concurrent use is safe.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError

# Relative tolerance (w.r.t. the car jam density) for admissibility tests.
DOMAIN_TOL = 1e-9

# Tolerance used by evaluation-path checks; looser than DOMAIN_TOL so that
# accumulated floating-point drift near jam states does not abort a run.
_EVAL_TOL = 1e-6

_TINY = 1e-300


@dataclass(frozen=True)
class ClassParams:
    """Per-class physical parameters.

    vehicle_length_km includes the safety distance, so 1/vehicle_length_km is
    the jam density of one lane filled with this class only.
    """

    vehicle_length_km: float
    lanes_usable: int
    v_max_kmh: float

    def __post_init__(self):
        if not self.vehicle_length_km > 0:
            raise ConfigError(f"vehicle_length_km must be > 0, got {self.vehicle_length_km}")
        if self.lanes_usable < 1:
            raise ConfigError(f"lanes_usable must be >= 1, got {self.lanes_usable}")
        if not self.v_max_kmh > 0:
            raise ConfigError(f"v_max_kmh must be > 0, got {self.v_max_kmh}")


@dataclass(frozen=True)
class TwoClassState:
    """A pair of densities (cars, trucks) in veh/km."""

    rho_light: float
    rho_heavy: float


class Phase(enum.Enum):
    PARTIAL_COUPLING = "partial"
    FULL_COUPLING = "full"


@dataclass(frozen=True)
class FdConfig:
    """All fundamental-diagram parameters plus derived quantities.

    The jam densities are never stored rounded: they are defined as
    lanes/vehicle_length per class, and the creeping condition
    ``transition_level > 0`` must hold exactly.
    """

    light: ClassParams
    heavy: ClassParams
    peak_flux_light_free: float = 4200.0
    peak_flux_light_jammed: float = 1200.0
    peak_flux_heavy_free: float = 1500.0
    free_speed_light_jammed: float = 65.0

    def __post_init__(self):
        if not self.beta < 1:
            raise ConfigError(f"light/heavy length ratio must be < 1, got {self.beta}")
        if not self.transition_level > 0:
            raise ConfigError(
                "creeping condition violated: rho_max_light - rho_max_heavy/beta "
                f"= {self.transition_level} must be strictly positive"
            )
        for name in ("peak_flux_light_free", "peak_flux_light_jammed", "peak_flux_heavy_free"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if not 0 < self.free_speed_light_jammed <= self.light.v_max_kmh:
            raise ConfigError("free_speed_light_jammed must lie in (0, v_max_light]")
        if not self.peak_flux_light_jammed <= self.peak_flux_light_free:
            raise ConfigError("jammed car peak flux cannot exceed the free one")
        # Critical densities must stay strictly below the matching jam densities,
        # otherwise the congested branch degenerates.
        if not self.peak_flux_light_free / self.light.v_max_kmh < self.rho_max_light:
            raise ConfigError("car critical density at zero trucks >= car jam density")
        if not self.peak_flux_light_jammed / self.free_speed_light_jammed < self.transition_level:
            raise ConfigError("car critical density at jammed trucks >= residual car capacity")
        if not self.peak_flux_heavy_free / self.heavy.v_max_kmh < self.rho_max_heavy:
            raise ConfigError("truck critical density >= truck jam density")

    @property
    def beta(self) -> float:
        return self.light.vehicle_length_km / self.heavy.vehicle_length_km

    @property
    def rho_max_light(self) -> float:
        return self.light.lanes_usable / self.light.vehicle_length_km

    @property
    def rho_max_heavy(self) -> float:
        return self.heavy.lanes_usable / self.heavy.vehicle_length_km

    @property
    def transition_level(self) -> float:
        """Car density above which trucks start feeling cars."""
        return self.rho_max_light - self.rho_max_heavy / self.beta

    @classmethod
    def defaults(cls) -> "FdConfig":
        """Calibrated two-lane motorway parameters (one slow lane for trucks)."""
        return cls(
            light=ClassParams(vehicle_length_km=7.5e-3, lanes_usable=2, v_max_kmh=130.0),
            heavy=ClassParams(vehicle_length_km=18e-3, lanes_usable=1, v_max_kmh=90.0),
        )

    # -- flat file form (fd.json artifact) -----------------------------------

    def to_dict(self) -> dict:
        return {
            "light_vehicle_length_km": self.light.vehicle_length_km,
            "light_lanes_usable": self.light.lanes_usable,
            "light_v_max_kmh": self.light.v_max_kmh,
            "heavy_vehicle_length_km": self.heavy.vehicle_length_km,
            "heavy_lanes_usable": self.heavy.lanes_usable,
            "heavy_v_max_kmh": self.heavy.v_max_kmh,
            "beta": self.beta,
            "rho_L_max": self.rho_max_light,
            "rho_H_max": self.rho_max_heavy,
            "f_L_peak_free": self.peak_flux_light_free,
            "f_L_peak_jammed": self.peak_flux_light_jammed,
            "f_H_peak_free": self.peak_flux_heavy_free,
            "v_L_star_jammed": self.free_speed_light_jammed,
            "transition_level": self.transition_level,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FdConfig":
        try:
            cfg = cls(
                light=ClassParams(
                    vehicle_length_km=float(data["light_vehicle_length_km"]),
                    lanes_usable=int(data["light_lanes_usable"]),
                    v_max_kmh=float(data["light_v_max_kmh"]),
                ),
                heavy=ClassParams(
                    vehicle_length_km=float(data["heavy_vehicle_length_km"]),
                    lanes_usable=int(data["heavy_lanes_usable"]),
                    v_max_kmh=float(data["heavy_v_max_kmh"]),
                ),
                peak_flux_light_free=float(data["f_L_peak_free"]),
                peak_flux_light_jammed=float(data["f_L_peak_jammed"]),
                peak_flux_heavy_free=float(data["f_H_peak_free"]),
                free_speed_light_jammed=float(data["v_L_star_jammed"]),
            )
        except KeyError as exc:
            raise ConfigError(f"missing fundamental-diagram key: {exc}") from exc
        # Derived keys, when present, must agree with the defining parameters.
        for key, value in (
            ("beta", cfg.beta),
            ("rho_L_max", cfg.rho_max_light),
            ("rho_H_max", cfg.rho_max_heavy),
            ("transition_level", cfg.transition_level),
        ):
            if key in data and not math.isclose(float(data[key]), value, rel_tol=1e-9):
                raise ConfigError(
                    f"inconsistent '{key}': file says {data[key]}, parameters give {value}"
                )
        return cfg


# -- helpers ------------------------------------------------------------------


def _prepare(*values):
    """Broadcast inputs to float arrays; remember whether all were scalars."""
    scalar = all(np.ndim(v) == 0 for v in values)
    arrays = np.broadcast_arrays(*[np.asarray(v, dtype=float) for v in values])
    return scalar, arrays


def _ret(scalar: bool, value: np.ndarray):
    return float(value) if scalar else value


def _check_range(value, lo, hi, what: str, tol: float):
    arr = np.asarray(value, dtype=float)
    if np.any(arr < lo - tol) or np.any(arr > hi + tol):
        bad = arr[(arr < lo - tol) | (arr > hi + tol)]
        raise DomainError(f"{what}={bad.flat[0]} outside [{lo}, {hi}]")


# -- admissibility and phase ---------------------------------------------------


def in_domain(rho_light, rho_heavy, cfg: FdConfig, tol: float = DOMAIN_TOL):
    """True where (rho_light, rho_heavy) is physically admissible.

    The test allows a slack of ``tol`` relative to the car jam density so that
    floating-point drift at jam states does not flip the verdict.
    """
    scalar, (rl, rh) = _prepare(rho_light, rho_heavy)
    eps = tol * cfg.rho_max_light
    ok = (
        (rl >= -eps)
        & (rl <= cfg.rho_max_light + eps)
        & (rh >= -eps)
        & (rh <= cfg.rho_max_heavy + eps)
        & (rl + rh / cfg.beta <= cfg.rho_max_light + eps)
    )
    return bool(ok) if scalar else ok


def phase(rho_light, rho_heavy, cfg: FdConfig):
    """Coupling phase of an admissible state.

    Partial coupling (trucks independent of cars) holds up to and including
    the transition level; beyond it the classes are fully coupled.
    """
    _require_domain(rho_light, rho_heavy, cfg)
    if np.ndim(rho_light) == 0:
        return Phase.PARTIAL_COUPLING if rho_light <= cfg.transition_level else Phase.FULL_COUPLING
    rl = np.asarray(rho_light, dtype=float)
    return np.where(rl <= cfg.transition_level, Phase.PARTIAL_COUPLING, Phase.FULL_COUPLING)


def _require_domain(rho_light, rho_heavy, cfg: FdConfig, tol: float = _EVAL_TOL):
    ok = in_domain(rho_light, rho_heavy, cfg, tol=tol)
    if not np.all(ok):
        rl = np.broadcast_to(np.asarray(rho_light, dtype=float), np.shape(ok))
        rh = np.broadcast_to(np.asarray(rho_heavy, dtype=float), np.shape(ok))
        if np.ndim(ok) == 0:
            raise DomainError(f"state ({float(rl)}, {float(rh)}) outside admissible set")
        bad = np.argwhere(~np.asarray(ok))[0]
        raise DomainError(
            f"state ({rl[tuple(bad)]}, {rh[tuple(bad)]}) outside admissible set"
        )


# -- car (light) family ---------------------------------------------------------


def max_density_light(rho_heavy, cfg: FdConfig):
    """Largest admissible car density given the truck density."""
    _check_range(rho_heavy, 0.0, cfg.rho_max_heavy, "rho_heavy", _EVAL_TOL * cfg.rho_max_heavy)
    scalar, (rh,) = _prepare(rho_heavy)
    return _ret(scalar, cfg.rho_max_light - rh / cfg.beta)


def free_speed_light(rho_heavy, cfg: FdConfig):
    """Car free-flow speed, linearly degraded by the truck density."""
    _check_range(rho_heavy, 0.0, cfg.rho_max_heavy, "rho_heavy", _EVAL_TOL * cfg.rho_max_heavy)
    scalar, (rh,) = _prepare(rho_heavy)
    v0 = cfg.light.v_max_kmh
    v1 = cfg.free_speed_light_jammed
    return _ret(scalar, v0 + (v1 - v0) * rh / cfg.rho_max_heavy)


def critical_density_light(rho_heavy, cfg: FdConfig):
    """Car density separating free flow from congestion, given trucks."""
    _check_range(rho_heavy, 0.0, cfg.rho_max_heavy, "rho_heavy", _EVAL_TOL * cfg.rho_max_heavy)
    scalar, (rh,) = _prepare(rho_heavy)
    s0 = cfg.peak_flux_light_free / cfg.light.v_max_kmh
    s1 = cfg.peak_flux_light_jammed / cfg.free_speed_light_jammed
    return _ret(scalar, s0 + (s1 - s0) * rh / cfg.rho_max_heavy)


def speed_light(rho_light, rho_heavy, cfg: FdConfig):
    """Car speed: free-flow plateau, then a hyperbolic congested branch that
    vanishes exactly at the admissible maximum density."""
    _require_domain(rho_light, rho_heavy, cfg)
    scalar, (rl, rh) = _prepare(rho_light, rho_heavy)
    vfree = np.asarray(free_speed_light(rh, cfg))
    crit = np.asarray(critical_density_light(rh, cfg))
    rmax = np.asarray(max_density_light(rh, cfg))
    congested = vfree * crit / (rmax - crit) * (rmax / np.maximum(rl, _TINY) - 1.0)
    out = np.where(rl <= crit, vfree, np.maximum(congested, 0.0))
    return _ret(scalar, out)


def flux_light(rho_light, rho_heavy, cfg: FdConfig):
    """Car flux rho * v; zero at zero density and at the jam density."""
    scalar, (rl, rh) = _prepare(rho_light, rho_heavy)
    return _ret(scalar, rl * np.asarray(speed_light(rl, rh, cfg)))


# -- truck (heavy) family --------------------------------------------------------


def max_density_heavy(rho_light, cfg: FdConfig):
    """Largest admissible truck density given the car density."""
    _check_range(rho_light, 0.0, cfg.rho_max_light, "rho_light", _EVAL_TOL * cfg.rho_max_light)
    scalar, (rl,) = _prepare(rho_light)
    return _ret(scalar, np.minimum(cfg.rho_max_heavy, cfg.beta * (cfg.rho_max_light - rl)))


def free_speed_heavy(rho_light, cfg: FdConfig):
    """Truck free-flow speed: constant below the transition level, then
    linearly decreasing to zero at the car jam density."""
    _check_range(rho_light, 0.0, cfg.rho_max_light, "rho_light", _EVAL_TOL * cfg.rho_max_light)
    scalar, (rl,) = _prepare(rho_light)
    span = cfg.rho_max_light - cfg.transition_level
    factor = np.clip((cfg.rho_max_light - rl) / span, 0.0, 1.0)
    return _ret(scalar, cfg.heavy.v_max_kmh * factor)


def critical_density_heavy(rho_light, cfg: FdConfig):
    """Truck density separating free flow from congestion, given cars."""
    _check_range(rho_light, 0.0, cfg.rho_max_light, "rho_light", _EVAL_TOL * cfg.rho_max_light)
    scalar, (rl,) = _prepare(rho_light)
    s0 = cfg.peak_flux_heavy_free / cfg.heavy.v_max_kmh
    span = cfg.rho_max_light - cfg.transition_level
    factor = np.clip((cfg.rho_max_light - rl) / span, 0.0, 1.0)
    return _ret(scalar, s0 * factor)


def speed_heavy(rho_light, rho_heavy, cfg: FdConfig):
    """Truck speed: triangular in the truck density, with free speed, critical
    density and jam density all shrinking once cars pass the transition level."""
    _require_domain(rho_light, rho_heavy, cfg)
    scalar, (rl, rh) = _prepare(rho_light, rho_heavy)
    vfree = np.asarray(free_speed_heavy(rl, cfg))
    crit = np.asarray(critical_density_heavy(rl, cfg))
    rmax = np.asarray(max_density_heavy(rl, cfg))
    congested = (
        vfree * crit / np.maximum(rmax - crit, _TINY)
        * (rmax / np.maximum(rh, _TINY) - 1.0)
    )
    out = np.where(rh <= crit, vfree, np.maximum(congested, 0.0))
    return _ret(scalar, out)


def flux_heavy(rho_light, rho_heavy, cfg: FdConfig):
    """Truck flux rho * v; zero at zero density and at the jam density."""
    scalar, (rl, rh) = _prepare(rho_light, rho_heavy)
    return _ret(scalar, rh * np.asarray(speed_heavy(rl, rh, cfg)))
