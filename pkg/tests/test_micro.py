"""Follow-the-leader tests: equilibrium speed, relaxation, queues, waves."""

import math

import numpy as np
import pytest

from twoflow import fd, micro
from twoflow.errors import CollisionError, ConfigError

CFG = fd.FdConfig.defaults()
MCFG = micro.MicroConfig()
NO_CARS = np.zeros(1)


def run_steps(fleet, n, mcfg=MCFG, field=NO_CARS, dx=1e9, strict=False):
    events = []
    for k in range(n):
        events += micro.euler_step(fleet, field, dx, mcfg, CFG, k * mcfg.euler_dt_h,
                                   strict_collisions=strict)
    return events


def test_config_validation():
    with pytest.raises(ConfigError):
        micro.MicroConfig(tau_dec_h=-1.0)
    with pytest.raises(ConfigError):
        micro.MicroConfig(delta_close_km=0.06, delta_far_km=0.05)
    with pytest.raises(ConfigError):
        micro.MicroConfig(euler_dt_h=0.0)


def test_equilibrium_speed_shape():
    assert micro.equilibrium_speed(0.020, 0.025, 0.050, 90.0) == 0.0
    assert micro.equilibrium_speed(0.025, 0.025, 0.050, 90.0) == 0.0
    # midpoint of the ramp
    assert micro.equilibrium_speed(0.0375, 0.025, 0.050, 90.0) == pytest.approx(45.0)
    assert micro.equilibrium_speed(0.100, 0.025, 0.050, 90.0) == pytest.approx(90.0)
    assert micro.equilibrium_speed(0.050, 0.025, 0.050, 90.0) == pytest.approx(90.0)


def test_acceleration_examples():
    # at equilibrium nothing happens
    assert micro.acceleration(0.0, 1.0, 90.0, 0.0, MCFG, CFG) == pytest.approx(0.0)
    # hard braking when the gap closes below the close threshold
    a = micro.acceleration(0.0, 0.020, 90.0, 0.0, MCFG, CFG)
    assert a == pytest.approx(-90.0 / 2e-4)
    # pulling away from standstill with a clear road ahead
    a = micro.acceleration(0.0, 1.0, 0.0, 0.0, MCFG, CFG)
    assert a == pytest.approx(90.0 / 1.4e-2)
    with pytest.raises(CollisionError):
        micro.acceleration(1.0, 0.5, 50.0, 0.0, MCFG, CFG)


def test_coupled_gaps():
    assert micro.coupled_gaps(50.0, 0.05, MCFG, CFG) == (0.025, 0.050)
    assert micro.coupled_gaps(0.0, 0.05, MCFG, CFG) == (0.025, 0.050)
    m = micro.MicroConfig(coupling_slope=2e-3)
    close, far = micro.coupled_gaps(200.0, 0.05, m, CFG)
    # ten cars sit in an average gap: both thresholds grow by slope * 10
    assert close == pytest.approx(0.025 + 2e-3 * 10.0)
    assert far == pytest.approx(0.050 + 2e-3 * 10.0)
    assert close < far


def test_count_window_half_open():
    fleet = micro.Fleet.from_positions([1.00, 1.03, 1.08], 90.0)
    assert micro.count_window(fleet, 1.02, 0.05) == 2
    assert micro.count_window(fleet, 0.0, 0.05) == 0
    empty = micro.Fleet()
    assert micro.count_window(empty, 1.0, 0.05) == 0
    # a truck exactly at the right edge is excluded
    fleet = micro.Fleet.from_positions([1.07], 90.0)
    assert micro.count_window(fleet, 1.02, 0.05) == 0
    fleet = micro.Fleet.from_positions([0.97], 90.0)
    assert micro.count_window(fleet, 1.02, 0.05) == 1


def test_single_truck_advances_at_protocol_speed():
    fleet = micro.Fleet.from_positions([0.0], 90.0,
                                       protocol=micro.LeaderProtocol("constant", v_kmh=90.0))
    run_steps(fleet, 1)
    assert fleet.x[0] == pytest.approx(90.0 * MCFG.euler_dt_h)
    assert fleet.v[0] == 90.0


def test_follower_relaxation_matches_exponential():
    # leader far ahead at constant speed: the follower solves dv/dt=(V-v)/tau
    fleet = micro.Fleet.from_positions([0.0, 50.0], [0.0, 90.0],
                                       protocol=micro.LeaderProtocol("constant", v_kmh=90.0))
    t_end = 3.0 * MCFG.tau_acc_h
    steps = int(round(t_end / MCFG.euler_dt_h))
    run_steps(fleet, steps)
    exact = 90.0 * (1.0 - math.exp(-3.0))
    assert fleet.v[0] == pytest.approx(exact, rel=0.02)


def test_relaxation_error_halves_with_dt():
    def error(dt_h):
        mcfg = micro.MicroConfig(euler_dt_h=dt_h)
        fleet = micro.Fleet.from_positions([0.0, 50.0], [0.0, 90.0],
                                           protocol=micro.LeaderProtocol("constant", v_kmh=90.0))
        t_end = 5.0 * mcfg.tau_acc_h
        run_steps(fleet, int(round(t_end / dt_h)), mcfg=mcfg)
        return abs(fleet.v[0] - 90.0 * (1.0 - math.exp(-5.0)))

    e1 = error(0.1 / 3600.0)
    e2 = error(0.05 / 3600.0)
    assert 0.35 <= e2 / e1 <= 0.65


def test_uniform_fast_platoon_is_fixed_point():
    # spacing beyond the far threshold at top speed: nothing changes but position
    fleet = micro.Fleet.from_positions(np.arange(10) * 0.06, 90.0,
                                       protocol=micro.LeaderProtocol("constant", v_kmh=90.0))
    gaps0 = fleet.gaps().copy()
    run_steps(fleet, 100)
    assert np.abs(fleet.v - 90.0).max() <= 1e-9
    assert np.abs(fleet.gaps() - gaps0).max() <= 1e-12


def test_velocity_bounds():
    fleet = micro.Fleet.from_positions(np.arange(30) * 0.03, 70.0,
                                       protocol=micro.LeaderProtocol("constant", v_kmh=90.0))
    for _ in range(2000):
        micro.euler_step(fleet, NO_CARS, 1e9, MCFG, CFG, 0.0)
        assert fleet.v.min() >= 0.0
        assert fleet.v.max() <= 90.0 + 1e-9


def test_jam_spacing_behind_stopped_leader():
    # followers arriving at full speed pack to at most the close threshold
    positions = np.append(np.arange(0.5, 8.0, 1.0 / 13.0), 8.0)
    fleet = micro.Fleet.from_positions(
        positions, 90.0, protocol=micro.LeaderProtocol("script", segments=((math.inf, 0.0),))
    )
    fleet.v[-1] = 0.0
    steps = int(round(0.2 / MCFG.euler_dt_h))
    run_steps(fleet, steps)
    gaps = fleet.gaps()
    assert gaps.max() <= MCFG.delta_close_km + 1e-4
    assert fleet.v.max() <= 1e-6
    # the packed queue meets the calibrated jam density
    assert 1.0 / gaps.mean() >= 40.0
    # positions stay strictly ordered: dense, but not colliding
    assert (gaps > 0).all()


def test_stop_and_go_trigger():
    # a transient slowdown of the leader sends a stopping wave backward
    spacing = 0.06
    positions = np.arange(40) * spacing
    slowdown_start = 60.0 / 3600.0
    slowdown_end = 90.0 / 3600.0
    fleet = micro.Fleet.from_positions(
        positions, 90.0,
        protocol=micro.LeaderProtocol(
            "script",
            segments=((slowdown_start, 90.0), (slowdown_end, 0.0), (math.inf, 90.0)),
        ),
    )
    leader_x_at_slowdown = positions[-1] + 90.0 * slowdown_start
    mcfg = MCFG
    t = 0.0
    stops = []  # (t, x) first time each truck goes below 1 km/h
    seen = set()
    for _ in range(int(round(600.0 / 3600.0 / mcfg.euler_dt_h))):
        micro.euler_step(fleet, NO_CARS, 1e9, mcfg, CFG, t)
        t += mcfg.euler_dt_h
        slow = np.nonzero(fleet.v < 1.0)[0]
        for k in slow:
            tid = int(fleet.ids[k])
            if tid not in seen:
                seen.add(tid)
                stops.append((t, float(fleet.x[k])))
    assert stops, "no truck ever stopped"
    later_upstream = [
        (t, x) for t, x in stops if t > slowdown_end and x < leader_x_at_slowdown - 0.05
    ]
    assert later_upstream, "the stopping wave did not travel backward"


def test_collision_reported_not_fatal():
    # follower thrown at a stopped leader from close range: ordering breaks
    fleet = micro.Fleet.from_positions([0.0, 0.001], [90.0, 0.0],
                                       protocol=micro.LeaderProtocol("script",
                                                                     segments=((math.inf, 0.0),)))
    events = run_steps(fleet, 2)
    assert events
    assert events[0].rear_id == 0 and events[0].front_id == 1
    fleet = micro.Fleet.from_positions([0.0, 0.001], [90.0, 0.0],
                                       protocol=micro.LeaderProtocol("script",
                                                                     segments=((math.inf, 0.0),)))
    with pytest.raises(CollisionError):
        run_steps(fleet, 2, strict=True)


def test_leader_protocol_script_lookup():
    proto = micro.LeaderProtocol(
        "script", segments=((10.0 / 3600.0, 90.0), (20.0 / 3600.0, 10.0), (math.inf, 90.0))
    )
    assert proto.target_speed(0.0) == 90.0
    assert proto.target_speed(15.0 / 3600.0) == 10.0
    assert proto.target_speed(25.0 / 3600.0) == 90.0
    assert micro.LeaderProtocol().target_speed(0.0) is None
    with pytest.raises(ConfigError):
        micro.LeaderProtocol("script", segments=((10.0, 90.0),))


def test_fleet_ordering_validation():
    with pytest.raises(ConfigError):
        micro.Fleet(ids=np.array([0, 1]), x=np.array([1.0, 0.5]), v=np.zeros(2),
                    path=np.array([-1, -1]))


def test_followers_sample_cars_at_own_position():
    # car field high only in the follower's cell: with a coupling slope the
    # follower must brake even though its gap alone would let it cruise
    m = micro.MicroConfig(coupling_slope=7.5e-3)
    field = np.array([200.0, 0.0])
    fleet = micro.Fleet.from_positions([0.05, 0.15], 90.0,
                                       protocol=micro.LeaderProtocol("constant", v_kmh=90.0))
    micro.euler_step(fleet, field, 0.1, m, CFG, 0.0)
    assert fleet.v[0] < 90.0
    # same setup without cars: the follower keeps cruising
    fleet2 = micro.Fleet.from_positions([0.05, 0.15], 90.0,
                                        protocol=micro.LeaderProtocol("constant", v_kmh=90.0))
    micro.euler_step(fleet2, np.zeros(2), 0.1, m, CFG, 0.0)
    assert fleet2.v[0] == pytest.approx(90.0)
