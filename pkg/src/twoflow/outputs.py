"""File emitters: space-time field CSVs, truck trajectories, run manifest.

Field files are one matrix per (road, class, quantity): the header row carries
the cell centers in km, the first column the time in seconds.  All files are
UTF-8 with '.' decimals; numbers are written with repr-stable formatting so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import subprocess
from pathlib import Path

from .engine import RunResult
from .scenario import print_scenario


def _fmt(value: float) -> str:
    return format(float(value), ".10g")


def write_field_csv(path: Path, times_s, centers_km, matrix) -> None:
    lines = ["t_s," + ",".join(_fmt(c) for c in centers_km)]
    for t, row in zip(times_s, matrix):
        lines.append(_fmt(t) + "," + ",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_trajectories_csv(path: Path, trajectories) -> None:
    lines = ["t_s,truck_id,road_id,x_km,v_kmh"]
    for t_s, truck_id, road_id, x_km, v_kmh in trajectories:
        lines.append(f"{_fmt(t_s)},{truck_id},{road_id},{_fmt(x_km)},{_fmt(v_kmh)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


_FIELD_FILES = {
    "density_light": ("light", "density"),
    "velocity_light": ("light", "velocity"),
    "flux_light": ("light", "flux"),
    "density_heavy": ("heavy", "density"),
    "velocity_heavy": ("heavy", "velocity"),
    "flux_heavy": ("heavy", "flux"),
}


def config_hash(scenario) -> str:
    canonical = json.dumps(print_scenario(scenario), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return "unknown"


def write_outputs(result: RunResult, out_dir: str | Path, seed: int | None = None,
                  wall_time_s: float | None = None) -> dict:
    """Write every output file of a run and the manifest; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = result.scenario
    quantities = set(scenario.output.quantities)
    written: list[Path] = []

    for rid in sorted(result.roads):
        hist = result.roads[rid]
        arrays = hist.as_arrays()
        for key, (cls, quantity) in _FIELD_FILES.items():
            if quantity not in quantities or key not in arrays:
                continue
            path = out / f"{rid}_{cls}_{quantity}.csv"
            write_field_csv(path, result.times_s, hist.centers_km, arrays[key])
            written.append(path)
        if "effective_heavy" in arrays:
            path = out / f"{rid}_heavy_effective_density.csv"
            write_field_csv(path, result.times_s, hist.centers_km, arrays["effective_heavy"])
            written.append(path)
            path = out / f"{rid}_light_max_density.csv"
            write_field_csv(path, result.times_s, hist.centers_km, arrays["admissible_light"])
            written.append(path)

    if scenario.model == "multiscale":
        path = out / "trucks.csv"
        write_trajectories_csv(path, result.trajectories)
        written.append(path)

    hashes = {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(written)
    }
    manifest = {
        "scenario": print_scenario(scenario),
        "config_hash": config_hash(scenario),
        "effective_dt_s": result.effective_dt_s,
        "effective_horizon_s": result.effective_horizon_s,
        "records": len(result.times_s),
        "seed": seed,
        "outputs": hashes,
        "git": _git_describe(),
        "wall_time_s": 0.0 if wall_time_s is None else wall_time_s,
        "collisions": len(result.collisions),
        "gate_holds": result.gate_holds,
        "transfers": len(result.transfers),
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return manifest
