"""Fundamental-diagram unit tests: endpoints, examples, shape properties."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twoflow import fd
from twoflow.errors import ConfigError, DomainError

CFG = fd.FdConfig.defaults()
RHO_L_MAX = 800.0 / 3.0          # 2 / 0.0075
RHO_H_MAX = 1000.0 / 18.0        # 1 / 0.018
TRANSITION = RHO_L_MAX / 2.0


def test_defaults_derived_quantities():
    assert CFG.beta == pytest.approx(7.5 / 18.0)
    assert CFG.rho_max_light == pytest.approx(RHO_L_MAX)
    assert CFG.rho_max_heavy == pytest.approx(RHO_H_MAX)
    assert CFG.transition_level == pytest.approx(TRANSITION)
    # the two-lane/one-lane identity holds exactly, without rounding
    assert CFG.transition_level == pytest.approx(CFG.rho_max_light / 2.0, abs=1e-12)


def test_config_rejects_broken_parameters():
    with pytest.raises(ConfigError):
        fd.ClassParams(vehicle_length_km=-1.0, lanes_usable=2, v_max_kmh=130.0)
    with pytest.raises(ConfigError):
        fd.ClassParams(vehicle_length_km=7.5e-3, lanes_usable=0, v_max_kmh=130.0)
    # equal lengths break the strict length-ratio requirement
    with pytest.raises(ConfigError):
        fd.FdConfig(
            light=fd.ClassParams(18e-3, 2, 130.0),
            heavy=fd.ClassParams(18e-3, 1, 90.0),
        )
    # trucks on every lane: no creeping possible
    with pytest.raises(ConfigError):
        fd.FdConfig(
            light=fd.ClassParams(7.5e-3, 1, 130.0),
            heavy=fd.ClassParams(18e-3, 1, 90.0),
        )


def test_in_domain_examples():
    assert fd.in_domain(0.0, 0.0, CFG)
    assert fd.in_domain(10.0, 13.0, CFG)
    assert not fd.in_domain(266.67, 55.56, CFG)  # occupancy sum exceeds the road
    assert fd.in_domain(RHO_L_MAX, 0.0, CFG)
    assert fd.in_domain(0.0, RHO_H_MAX, CFG)
    assert not fd.in_domain(-1.0, 0.0, CFG)
    assert not fd.in_domain(0.0, RHO_H_MAX + 1.0, CFG)


def test_max_density_light_examples():
    assert fd.max_density_light(0.0, CFG) == pytest.approx(RHO_L_MAX)
    assert abs(fd.max_density_light(0.0, CFG) - 267.0) <= 1.0
    assert fd.max_density_light(RHO_H_MAX, CFG) == pytest.approx(TRANSITION)
    assert abs(fd.max_density_light(RHO_H_MAX, CFG) - 133.0) <= 1.0
    # halfway trucks leave exactly 200 veh/km of car capacity
    assert fd.max_density_light(RHO_H_MAX / 2.0, CFG) == pytest.approx(200.0)
    with pytest.raises(DomainError):
        fd.max_density_light(RHO_H_MAX + 1.0, CFG)


def test_max_density_heavy_examples():
    assert fd.max_density_heavy(0.0, CFG) == pytest.approx(RHO_H_MAX)
    assert fd.max_density_heavy(RHO_L_MAX, CFG) == pytest.approx(0.0)
    # the cap stays at the slow-lane jam value exactly down to the transition level
    assert fd.max_density_heavy(TRANSITION, CFG) == pytest.approx(RHO_H_MAX)
    with pytest.raises(DomainError):
        fd.max_density_heavy(-5.0, CFG)


def test_car_breakpoints_and_free_speed():
    assert fd.free_speed_light(0.0, CFG) == pytest.approx(130.0)
    assert fd.free_speed_light(RHO_H_MAX, CFG) == pytest.approx(65.0)
    assert fd.critical_density_light(0.0, CFG) == pytest.approx(4200.0 / 130.0)
    assert fd.critical_density_light(RHO_H_MAX, CFG) == pytest.approx(1200.0 / 65.0)


def test_car_critical_density_maximizes_flux():
    # independent oracle: brute-force maximization over the admissible axis
    for rho_h in (0.0, 20.0, RHO_H_MAX):
        axis = np.linspace(0.0, fd.max_density_light(rho_h, CFG), 20001)
        flux = np.asarray(fd.flux_light(axis, np.full_like(axis, rho_h), CFG))
        k = flux.argmax()
        assert axis[k] == pytest.approx(fd.critical_density_light(rho_h, CFG), abs=0.05)
        # the sampled maximum can miss the kink by one grid step
        assert flux[k] == pytest.approx(
            fd.flux_light(fd.critical_density_light(rho_h, CFG), rho_h, CFG), abs=0.5
        )


def test_truck_critical_density_maximizes_flux():
    for rho_l in (0.0, 100.0, 200.0):
        axis = np.linspace(0.0, fd.max_density_heavy(rho_l, CFG), 20001)
        flux = np.asarray(fd.flux_heavy(np.full_like(axis, rho_l), axis, CFG))
        k = flux.argmax()
        assert axis[k] == pytest.approx(fd.critical_density_heavy(rho_l, CFG), abs=0.02)


def test_car_speed_and_flux_examples():
    assert fd.speed_light(20.0, 0.0, CFG) == pytest.approx(130.0)
    assert fd.flux_light(20.0, 0.0, CFG) == pytest.approx(2600.0)
    # congested branch with the jammed family: direct substitution
    crit = 1200.0 / 65.0
    expected = 65.0 * crit / (TRANSITION - crit) * (TRANSITION / 100.0 - 1.0)
    assert expected == pytest.approx(3.4821428571, rel=1e-9)
    assert fd.speed_light(100.0, RHO_H_MAX, CFG) == pytest.approx(expected)
    # jam states carry no flux, whatever the truck density
    for rho_h in (0.0, 13.0, 30.0, RHO_H_MAX):
        jam = fd.max_density_light(rho_h, CFG)
        assert fd.speed_light(jam, rho_h, CFG) == pytest.approx(0.0, abs=1e-9)
        assert fd.flux_light(jam, rho_h, CFG) == pytest.approx(0.0, abs=1e-9)


def test_congested_car_flux_value():
    # frozen from the congested-branch formula at (200, 0)
    crit = 4200.0 / 130.0
    slope = 4200.0 / (RHO_L_MAX - crit)
    assert fd.flux_light(200.0, 0.0, CFG) == pytest.approx(slope * (RHO_L_MAX - 200.0))
    assert fd.flux_light(200.0, 0.0, CFG) == pytest.approx(1194.748, abs=1e-3)


def test_truck_speed_examples():
    assert fd.speed_heavy(10.0, 8.0, CFG) == pytest.approx(90.0)
    assert fd.free_speed_heavy(100.0, CFG) == pytest.approx(90.0)
    assert fd.free_speed_heavy(RHO_L_MAX, CFG) == pytest.approx(0.0)
    # linear between (transition, 90) and (jam, 0)
    assert fd.free_speed_heavy(200.0, CFG) == pytest.approx(45.0)
    assert fd.critical_density_heavy(0.0, CFG) == pytest.approx(1500.0 / 90.0)
    for rho_l in (0.0, 50.0, 150.0, 250.0):
        jam = fd.max_density_heavy(rho_l, CFG)
        assert fd.speed_heavy(rho_l, jam, CFG) == pytest.approx(0.0, abs=1e-9)


def test_phase_examples():
    assert fd.phase(10.0, 13.0, CFG) is fd.Phase.PARTIAL_COUPLING
    assert fd.phase(186.0, 8.0, CFG) is fd.Phase.FULL_COUPLING
    # the boundary belongs to the partial-coupling region
    assert fd.phase(TRANSITION, 10.0, CFG) is fd.Phase.PARTIAL_COUPLING
    assert fd.phase(TRANSITION + 1e-6, 10.0, CFG) is fd.Phase.FULL_COUPLING


def _domain_grid(n=100):
    rows_l, rows_h = [], []
    for rho_h in np.linspace(0.0, RHO_H_MAX, n):
        rows_l.append(np.linspace(0.0, fd.max_density_light(rho_h, CFG), n))
        rows_h.append(np.full(n, rho_h))
    return np.vstack(rows_l), np.vstack(rows_h)


def test_car_monotonicity_and_concavity_on_grid():
    grid_l, grid_h = _domain_grid()
    v = np.asarray(fd.speed_light(grid_l, grid_h, CFG))
    f = grid_l * v
    assert (np.diff(v, axis=1) <= 1e-9).all(), "car speed must not increase with car density"
    assert (np.diff(f, 2, axis=1) <= 1e-9).all(), "car flux must stay concave"
    assert np.abs(f[:, 0]).max() <= 1e-9 and np.abs(f[:, -1]).max() <= 1e-9


def test_car_cross_monotonicity():
    # fixed car density, increasing trucks: speed and flux must not rise
    rho_h = np.linspace(0.0, RHO_H_MAX, 200)
    for rho_l in (5.0, 30.0, 80.0, 120.0):
        if rho_l > fd.max_density_light(RHO_H_MAX, CFG):
            continue
        v = np.asarray(fd.speed_light(np.full_like(rho_h, rho_l), rho_h, CFG))
        assert (np.diff(v) <= 1e-9).all()


def test_truck_monotonicity_concavity_zeroflux():
    for rho_l in np.linspace(0.0, RHO_L_MAX, 50):
        jam = fd.max_density_heavy(rho_l, CFG)
        axis = np.linspace(0.0, jam, 100)
        v = np.asarray(fd.speed_heavy(np.full_like(axis, rho_l), axis, CFG))
        f = axis * v
        assert (np.diff(v) <= 1e-9).all()
        assert (np.diff(f, 2) <= 1e-9).all()
        assert abs(f[0]) <= 1e-9 and abs(f[-1]) <= 1e-9


def test_truck_cross_monotonicity_and_decoupling():
    rho_l = np.linspace(0.0, fd.max_density_light(5.0, CFG), 300)
    v = np.asarray(fd.speed_heavy(rho_l, np.full_like(rho_l, 5.0), CFG))
    assert (np.diff(v) <= 1e-9).all()
    # below the transition level trucks ignore cars entirely
    below = rho_l <= TRANSITION
    assert np.ptp(v[below]) <= 1e-12


def test_continuity_across_transition_level():
    eps = 1e-8
    for rho_h in (0.0, 5.0, 12.0, 20.0):
        for func in (fd.speed_heavy, fd.flux_heavy, fd.speed_light, fd.flux_light):
            left = func(TRANSITION - eps, rho_h, CFG)
            right = func(TRANSITION + eps, rho_h, CFG)
            assert abs(left - right) <= 1e-6


def test_speed_raises_outside_domain():
    with pytest.raises(DomainError):
        fd.speed_light(260.0, 40.0, CFG)
    with pytest.raises(DomainError):
        fd.speed_heavy(260.0, 40.0, CFG)


def test_serialization_roundtrip():
    data = CFG.to_dict()
    assert data["rho_L_max"] == pytest.approx(RHO_L_MAX)
    assert data["transition_level"] == pytest.approx(TRANSITION)
    again = fd.FdConfig.from_dict(data)
    assert again == CFG
    # tampered derived value must be rejected
    data["transition_level"] = 99.0
    with pytest.raises(ConfigError):
        fd.FdConfig.from_dict(data)


@settings(max_examples=200, deadline=None)
@given(
    rho_h=st.floats(0.0, RHO_H_MAX),
    frac=st.floats(0.0, 1.0),
)
def test_admissible_states_have_admissible_speeds(rho_h, frac):
    rho_l = frac * fd.max_density_light(rho_h, CFG)
    assert fd.in_domain(rho_l, rho_h, CFG)
    v_l = fd.speed_light(rho_l, rho_h, CFG)
    v_h = fd.speed_heavy(rho_l, rho_h, CFG)
    assert 0.0 <= v_l <= 130.0 + 1e-9
    assert 0.0 <= v_h <= 90.0 + 1e-9
    assert fd.flux_light(rho_l, rho_h, CFG) == pytest.approx(rho_l * v_l)
    assert fd.flux_heavy(rho_l, rho_h, CFG) == pytest.approx(rho_h * v_h)
