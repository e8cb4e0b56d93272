"""Built-in demonstration scenarios.

Each builder returns a plain JSON-compatible dict that goes through the
regular scenario parser, so the demos double as schema fixtures.  The three
macro demos exercise creeping, car congestion acting on trucks, and a
persistent stop & go wave; the multiscale demos replay the first two with
microscopic trucks and add a merge with capacity drop; ``stopgo`` triggers a
backward queue from a scripted slowdown of the lead truck.
"""

from __future__ import annotations

from .scenario import Scenario, parse_scenario

RHO_HEAVY_JAM = 1000.0 / 18.0  # trucks per km when the slow lane is full

BUILTIN_NAMES = ("test1a", "test2a", "test3a", "test1b", "test2b", "test3b", "stopgo")


def _free():
    return {"kind": "free"}


def _dirichlet(density, **extra):
    return {"kind": "dirichlet", "density": density, **extra}


def test1a() -> dict:
    """Creeping: a truck wall at the right end jams the slow lane while cars
    keep flowing through at the reduced free speed."""
    return {
        "name": "test1a",
        "model": "macro",
        "horizon_s": 1079.0,
        "dt_s": 2.6,
        "roads": [
            {
                "id": "road0",
                "length_km": 10.0,
                "dx_km": 0.1,
                "initial_light": [{"from_km": 0.0, "to_km": 10.0, "density": 10.0}],
                "initial_heavy": [{"from_km": 0.0, "to_km": 10.0, "density": 13.0}],
                "left_bc": {"light": _dirichlet(10.0), "heavy": _dirichlet(13.0)},
                "right_bc": {"light": _free(), "heavy": _dirichlet(RHO_HEAVY_JAM)},
            }
        ],
        "output": {"interval_s": 26.0},
    }


def test2a() -> dict:
    """A dense car plug at the right end squeezes the trucks: both classes
    slow down but keep moving, and the car wave travelling upstream stays
    below the transition level."""
    return {
        "name": "test2a",
        "model": "macro",
        "horizon_s": 1079.0,
        "dt_s": 2.6,
        "roads": [
            {
                "id": "road0",
                "length_km": 10.0,
                "dx_km": 0.1,
                "initial_light": [{"from_km": 0.0, "to_km": 10.0, "density": 10.0}],
                "initial_heavy": [{"from_km": 0.0, "to_km": 10.0, "density": 8.0}],
                "left_bc": {"light": _dirichlet(10.0), "heavy": _dirichlet(8.0)},
                "right_bc": {"light": _dirichlet(186.0), "heavy": _free()},
            }
        ],
        "output": {"interval_s": 26.0},
    }


def test3a() -> dict:
    """Stop & go: a truck-density bump rides on car traffic oscillating above
    the transition level; the sweeping truck capacity keeps regenerating the
    wave, which travels upstream without flattening out."""
    import math

    base, amplitude, wavelength_km = 155.0, 20.0, 1.5
    light_blocks = [
        {
            "from_km": round(i * 0.1, 4),
            "to_km": round((i + 1) * 0.1, 4),
            "density": round(
                base + amplitude * math.sin(2.0 * math.pi * ((i + 0.5) * 0.1) / wavelength_km), 6
            ),
        }
        for i in range(100)
    ]
    return {
        "name": "test3a",
        "model": "macro",
        "horizon_s": 899.6,
        "dt_s": 2.6,
        "roads": [
            {
                "id": "road0",
                "length_km": 10.0,
                "dx_km": 0.1,
                "initial_light": light_blocks,
                "initial_heavy": [
                    {"from_km": 0.0, "to_km": 8.5, "density": 12.0},
                    {"from_km": 8.5, "to_km": 9.5, "density": 30.0},
                    {"from_km": 9.5, "to_km": 10.0, "density": 12.0},
                ],
                "left_bc": {"light": _dirichlet(base), "heavy": _dirichlet(12.0)},
                "right_bc": {
                    "light": _dirichlet(base, amplitude=amplitude, period_s=330.0),
                    "heavy": _free(),
                },
            }
        ],
        "output": {"interval_s": 26.0},
    }


def test1b() -> dict:
    """Creeping, multiscale: the lead truck stops, the queue behind saturates
    the slow lane, cars keep creeping through at the reduced free speed."""
    return {
        "name": "test1b",
        "model": "multiscale",
        "horizon_s": 720.0,
        "dt_s": 2.0,
        "roads": [
            {
                "id": "road0",
                "length_km": 10.0,
                "dx_km": 0.1,
                "initial_light": [{"from_km": 0.0, "to_km": 10.0, "density": 10.0}],
                "left_bc": {"light": _dirichlet(10.0), "heavy": _free()},
                "right_bc": {"light": _free(), "heavy": _free()},
                "trucks": {"from_km": 0.4, "to_km": 8.0, "spacing_km": 0.08, "v_kmh": 90.0},
                "leader": {"kind": "script", "segments": [{"v_kmh": 0.0}]},
            }
        ],
        "output": {"interval_s": 20.0},
    }


def test2b() -> dict:
    """Car congestion stops the trucks, multiscale: a car plug at the right
    end holds until t=600 s; trucks arriving from the left brake to a
    standstill inside it and restart once the plug drains."""
    return {
        "name": "test2b",
        "model": "multiscale",
        "horizon_s": 1600.0,
        "dt_s": 2.0,
        "micro": {"coupling_slope": 7.5e-3},
        "roads": [
            {
                "id": "road0",
                "length_km": 10.0,
                "dx_km": 0.1,
                "initial_light": [{"from_km": 0.0, "to_km": 10.0, "density": 20.0}],
                "left_bc": {"light": _dirichlet(20.0), "heavy": _free()},
                "right_bc": {
                    "light": {
                        "schedule": [
                            {"until_s": 400.0, "kind": "dirichlet", "density": 220.0},
                            {"kind": "dirichlet", "density": 0.0},
                        ]
                    },
                    "heavy": _free(),
                },
                "trucks": {"from_km": 0.5, "to_km": 9.0, "spacing_km": 0.125, "v_kmh": 90.0},
                "truck_source": {"every_s": 5.0, "start_s": 5.0, "end_s": 400.0, "v_kmh": 90.0},
                "leader": {"kind": "free"},
            }
        ],
        "output": {"interval_s": 20.0},
    }


def test3b() -> dict:
    """Merge, multiscale: both incoming roads feed one truck every 4 s against
    a 1500 veh/h outgoing capacity; queues build on both and dissolve with a
    visible capacity drop.  Cars run on the second incoming road only."""
    def in_road(rid, cars):
        road = {
            "id": rid,
            "length_km": 5.0,
            "dx_km": 0.1,
            "left_bc": {"light": _dirichlet(cars), "heavy": _free()},
            "right_bc": {"light": _free(), "heavy": _free()},
            "truck_source": {
                "every_s": 4.0,
                "start_s": 0.0,
                "end_s": 240.0,
                "v_kmh": 90.0,
                "path": 0 if rid == "in1" else 1,
            },
        }
        if cars:
            road["initial_light"] = [{"from_km": 0.0, "to_km": 5.0, "density": cars}]
        return road

    return {
        "name": "test3b",
        "model": "multiscale",
        "horizon_s": 1500.0,
        "dt_s": 2.0,
        "micro": {"coupling_slope": 7.5e-3},
        "roads": [
            in_road("in1", 0.0),
            in_road("in2", 20.0),
            {
                "id": "out",
                "length_km": 5.0,
                "dx_km": 0.1,
                "left_bc": {"light": _free(), "heavy": _free()},
                "right_bc": {"light": _free(), "heavy": _free()},
            },
        ],
        "junctions": [
            {"kind": "merge", "incoming": ["in1", "in2"], "outgoing": ["out"], "priority": 0.5}
        ],
        "paths": [["in1", "out"], ["in2", "out"]],
        "output": {"interval_s": 30.0},
    }


def stopgo() -> dict:
    """A transient slowdown of the lead truck in a dense inflow triggers a
    stop & go wave that travels backward through the platoon."""
    return {
        "name": "stopgo",
        "model": "multiscale",
        "horizon_s": 900.0,
        "dt_s": 2.0,
        "roads": [
            {
                "id": "road0",
                "length_km": 10.0,
                "dx_km": 0.1,
                "left_bc": {"light": _dirichlet(0.0), "heavy": _free()},
                "right_bc": {"light": _free(), "heavy": _free()},
                "truck_source": {
                    "every_s": 3.0,
                    "start_s": 0.0,
                    "end_s": 600.0,
                    "v_kmh": 90.0,
                },
                "leader": {
                    "kind": "script",
                    "segments": [
                        {"until_s": 280.0, "v_kmh": 90.0},
                        {"until_s": 340.0, "v_kmh": 8.0},
                        {"v_kmh": 90.0},
                    ],
                },
            }
        ],
        "output": {"interval_s": 10.0},
    }


_BUILDERS = {
    "test1a": test1a,
    "test2a": test2a,
    "test3a": test3a,
    "test1b": test1b,
    "test2b": test2b,
    "test3b": test3b,
    "stopgo": stopgo,
}


def builtin_scenario(name: str) -> Scenario:
    """Parsed built-in scenario; raises KeyError for unknown names."""
    return parse_scenario(_BUILDERS[name]())


def builtin_dict(name: str) -> dict:
    return _BUILDERS[name]()
