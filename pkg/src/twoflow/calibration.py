"""Loop-detector ingestion and fundamental-diagram fitting.

Sensors report per-minute flux and speed per lane and vehicle class.  Light
vehicles are aggregated over all lanes; heavy vehicles use the slow lane
(lane 1) only.  Densities come from the hydrodynamic relation rho = flux /
speed, so rows with zero speed carry no density information and are skipped
for fitting.

Jam densities are never fitted: stationary vehicles produce no sensor data,
so the jam density is the lane count divided by the configured vehicle
length.  The free speed is a constrained regression through the origin over
the low-density samples; the capacity is a high quantile of the observed
flux (quantiles resist outliers better than the maximum).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .errors import ConfigError
from .fd import ClassParams, FdConfig

SLOW_LANE = 1
CLASSES = ("light", "heavy")

DEFAULT_VEHICLE_LENGTH_KM = {"light": 7.5e-3, "heavy": 18e-3}
DEFAULT_V_MAX = {"light": 130.0, "heavy": 90.0}


@dataclass(frozen=True)
class SensorRecord:
    timestamp: str
    station_id: str
    lane: int
    vehicle_class: str
    flux_veh_h: float
    speed_kmh: float


@dataclass
class IngestResult:
    records: list
    warnings: list = field(default_factory=list)
    errors: list = field(default_factory=list)

    def require_clean(self):
        if self.errors:
            raise ConfigError("; ".join(self.errors))
        return self


@dataclass(frozen=True)
class AggregateSample:
    """One (timestamp, station) sample after the per-class lane aggregation."""

    timestamp: str
    station_id: str
    flux_veh_h: float
    speed_kmh: float
    density_veh_km: float | None  # None where the speed is zero


EXPECTED_HEADER = ["timestamp", "station_id", "lane", "class", "flux", "speed"]


def ingest_sensors(text: str) -> IngestResult:
    """Parse and validate sensor CSV text.

    Flux values that are not multiples of 60 only warn (per-minute counters
    can only produce multiples of 60 when expressed in veh/h); malformed rows
    are reported with their line number and skipped.
    """
    reader = csv.reader(io.StringIO(text))
    result = IngestResult(records=[])
    try:
        header = next(reader)
    except StopIteration:
        result.errors.append("line 1: empty file")
        return result
    if [h.strip() for h in header] != EXPECTED_HEADER:
        result.errors.append(
            f"line 1: expected header {','.join(EXPECTED_HEADER)}, got {','.join(header)}"
        )
        return result
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 6:
            result.errors.append(f"line {line_no}: expected 6 fields, got {len(row)}")
            continue
        timestamp, station, lane_s, cls, flux_s, speed_s = (cell.strip() for cell in row)
        if cls not in CLASSES:
            result.errors.append(f"line {line_no}: unknown class '{cls}'")
            continue
        try:
            lane = int(lane_s)
            flux = float(flux_s)
            speed = float(speed_s)
        except ValueError as exc:
            result.errors.append(f"line {line_no}: {exc}")
            continue
        if flux < 0 or speed < 0 or lane < 1:
            result.errors.append(
                f"line {line_no}: lane/flux/speed must be non-negative (lane >= 1)"
            )
            continue
        if abs(flux / 60.0 - round(flux / 60.0)) > 1e-9:
            result.warnings.append(
                f"line {line_no}: flux {flux} is not a multiple of 60 veh/h"
            )
        result.records.append(SensorRecord(timestamp, station, lane, cls, flux, speed))
    return result


def aggregate(records, vehicle_class: str) -> list[AggregateSample]:
    """Collapse lanes per (timestamp, station): light vehicles are summed over
    all lanes with flux-weighted speed; heavy vehicles keep the slow lane."""
    if vehicle_class not in CLASSES:
        raise ConfigError(f"unknown vehicle class '{vehicle_class}'")
    groups: dict[tuple[str, str], list[SensorRecord]] = {}
    for rec in records:
        if rec.vehicle_class != vehicle_class:
            continue
        if vehicle_class == "heavy" and rec.lane != SLOW_LANE:
            continue
        groups.setdefault((rec.timestamp, rec.station_id), []).append(rec)
    samples = []
    for (timestamp, station), rows in sorted(groups.items()):
        flux = sum(r.flux_veh_h for r in rows)
        if flux > 0:
            speed = sum(r.flux_veh_h * r.speed_kmh for r in rows) / flux
        else:
            speed = float(np.mean([r.speed_kmh for r in rows]))
        density = flux / speed if speed > 0 else None
        samples.append(AggregateSample(timestamp, station, flux, speed, density))
    return samples


def smooth_flux(values, window_minutes: int = 5, sigma_minutes: float = 1.0) -> np.ndarray:
    """Gaussian smoothing of a per-minute series; a display aid only, never
    an input to calibration."""
    arr = np.asarray(values, dtype=float)
    if len(arr) == 0:
        return arr
    return gaussian_filter1d(arr, sigma=sigma_minutes, truncate=window_minutes / (2.0 * sigma_minutes))


@dataclass(frozen=True)
class FdFitReport:
    vehicle_class: str
    lanes: int
    vehicle_length_km: float
    v_max_kmh: float
    peak_flux_veh_h: float
    rho_max_veh_km: float
    critical_density_veh_km: float
    n_samples: int
    n_low_density: int
    residual_rms_veh_h: float
    bin_counts: tuple
    bin_edges: tuple
    all_freeflow: bool

    def as_dict(self) -> dict:
        return {
            "vehicle_class": self.vehicle_class,
            "lanes": self.lanes,
            "vehicle_length_km": self.vehicle_length_km,
            "v_max_kmh": self.v_max_kmh,
            "peak_flux_veh_h": self.peak_flux_veh_h,
            "rho_max_veh_km": self.rho_max_veh_km,
            "critical_density_veh_km": self.critical_density_veh_km,
            "n_samples": self.n_samples,
            "n_low_density": self.n_low_density,
            "residual_rms_veh_h": self.residual_rms_veh_h,
            "bin_counts": list(self.bin_counts),
            "bin_edges": list(self.bin_edges),
            "all_freeflow": self.all_freeflow,
        }


MIN_SAMPLES = 100


def fit_fd(
    records,
    vehicle_class: str,
    lanes: int,
    vehicle_length_km: float | None = None,
    peak_quantile: float = 0.98,
    low_density_quantile: float = 0.25,
) -> FdFitReport:
    """Triangular-diagram fit from sensor records of one class.

    records may be SensorRecord or AggregateSample instances; SensorRecords
    are aggregated first.
    """
    if lanes < 1:
        raise ConfigError("lanes must be >= 1")
    if vehicle_length_km is None:
        vehicle_length_km = DEFAULT_VEHICLE_LENGTH_KM[vehicle_class]
    if records and isinstance(records[0], SensorRecord):
        records = aggregate(records, vehicle_class)
    pairs = [
        (s.density_veh_km, s.flux_veh_h) for s in records if s.density_veh_km is not None
    ]
    if len(pairs) < MIN_SAMPLES:
        raise ConfigError(
            f"need at least {MIN_SAMPLES} usable (density, flux) samples, got {len(pairs)}"
        )
    rho = np.array([p[0] for p in pairs])
    flux = np.array([p[1] for p in pairs])

    rho_max = lanes / vehicle_length_km
    cutoff = np.quantile(rho, low_density_quantile)
    low = rho <= cutoff
    if not np.any(low) or float(np.sum(rho[low] ** 2)) == 0.0:
        raise ConfigError("no usable low-density samples for the free-speed fit")
    v_max = float(np.sum(flux[low] * rho[low]) / np.sum(rho[low] ** 2))
    peak = float(np.quantile(flux, peak_quantile))
    critical = peak / v_max
    if critical >= rho_max:
        raise ConfigError(
            f"degenerate fit: critical density {critical:.1f} >= jam density {rho_max:.1f}"
        )
    all_freeflow = bool(np.all(rho <= critical * 1.02))

    congested_slope = peak / (rho_max - critical)
    predicted = np.minimum(v_max * rho, congested_slope * (rho_max - rho))
    residual_rms = float(np.sqrt(np.mean((flux - predicted) ** 2)))
    counts, edges = np.histogram(rho, bins=np.arange(0.0, rho_max + 10.0, 10.0))
    return FdFitReport(
        vehicle_class=vehicle_class,
        lanes=lanes,
        vehicle_length_km=vehicle_length_km,
        v_max_kmh=v_max,
        peak_flux_veh_h=peak,
        rho_max_veh_km=rho_max,
        critical_density_veh_km=critical,
        n_samples=len(pairs),
        n_low_density=int(np.sum(low)),
        residual_rms_veh_h=residual_rms,
        bin_counts=tuple(int(c) for c in counts),
        bin_edges=tuple(float(e) for e in edges),
        all_freeflow=all_freeflow,
    )


def config_with_fit(report: FdFitReport, base: FdConfig | None = None) -> FdConfig:
    """Fold one class's fit into a full parameter set.

    The other class and the jammed-family values keep the base (default)
    calibration; fitting them needs data from both classes and from creeping
    episodes.
    """
    base = base or FdConfig.defaults()
    params = ClassParams(
        vehicle_length_km=report.vehicle_length_km,
        lanes_usable=report.lanes,
        v_max_kmh=report.v_max_kmh,
    )
    if report.vehicle_class == "light":
        return FdConfig(
            light=params,
            heavy=base.heavy,
            peak_flux_light_free=report.peak_flux_veh_h,
            peak_flux_light_jammed=base.peak_flux_light_jammed,
            peak_flux_heavy_free=base.peak_flux_heavy_free,
            free_speed_light_jammed=base.free_speed_light_jammed,
        )
    return FdConfig(
        light=base.light,
        heavy=params,
        peak_flux_light_free=base.peak_flux_light_free,
        peak_flux_light_jammed=base.peak_flux_light_jammed,
        peak_flux_heavy_free=report.peak_flux_veh_h,
        free_speed_light_jammed=base.free_speed_light_jammed,
    )
