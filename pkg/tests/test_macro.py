"""Cell-transmission solver tests: sending/receiving, boundaries, waves."""

import numpy as np
import pytest

from twoflow import fd, macro
from twoflow.errors import CflError, ConfigError, DomainError, SchemeError

CFG = fd.FdConfig.defaults()
DT = 2.6 / 3600.0
RHO_L_MAX = CFG.rho_max_light
RHO_H_MAX = CFG.rho_max_heavy


def uniform_grid(rho_l, rho_h, left=None, right=None, length=10.0, dx=0.1):
    return macro.RoadGrid.uniform(
        length, dx, rho_l, rho_h,
        left or macro.BoundaryCondition.dirichlet(rho_l, rho_h),
        right or macro.BoundaryCondition.dirichlet(rho_l, rho_h),
        CFG,
    )


def test_sending_receiving_examples():
    s, r = macro.sending_receiving_light(20.0, 0.0, CFG)
    assert s == pytest.approx(2600.0)
    assert r == pytest.approx(4200.0)
    # both branches meet at the peak
    crit = fd.critical_density_light(0.0, CFG)
    s, r = macro.sending_receiving_light(crit, 0.0, CFG)
    assert s == pytest.approx(4200.0)
    assert r == pytest.approx(4200.0)
    s, r = macro.sending_receiving_light(200.0, 0.0, CFG)
    assert s == pytest.approx(4200.0)
    assert r == pytest.approx(fd.flux_light(200.0, 0.0, CFG))
    s, r = macro.sending_receiving_heavy(0.0, 10.0, CFG)
    assert s == pytest.approx(900.0)
    assert r == pytest.approx(1500.0)


def test_interface_flux_examples():
    state = fd.TwoClassState(10.0, 13.0)
    f_l, f_h = macro.interface_flux(state, state, CFG)
    assert f_l == pytest.approx(fd.flux_light(10.0, 13.0, CFG))
    assert f_h == pytest.approx(fd.flux_heavy(10.0, 13.0, CFG))
    # a jammed downstream cell accepts nothing
    jam = fd.TwoClassState(fd.max_density_light(0.0, CFG), 0.0)
    f_l, _ = macro.interface_flux(fd.TwoClassState(20.0, 0.0), jam, CFG)
    assert f_l == pytest.approx(0.0, abs=1e-9)
    f_l, _ = macro.interface_flux(
        fd.TwoClassState(20.0, 0.0), fd.TwoClassState(200.0, 0.0), CFG
    )
    assert f_l == pytest.approx(fd.flux_light(200.0, 0.0, CFG))


def test_uniform_state_is_fixed_point():
    for rho_l, rho_h in ((10.0, 13.0), (150.0, 20.0), (200.0, 10.0)):
        grid = uniform_grid(rho_l, rho_h)
        macro.macro_step(grid, DT, CFG)
        assert np.abs(grid.rho_light - rho_l).max() <= 1e-12
        assert np.abs(grid.rho_heavy - rho_h).max() <= 1e-12
    # zero-gradient boundaries preserve uniform states as well
    grid = uniform_grid(
        120.0, 30.0, left=macro.BoundaryCondition.free(), right=macro.BoundaryCondition.free()
    )
    macro.macro_step(grid, DT, CFG)
    assert np.abs(grid.rho_light - 120.0).max() <= 1e-12
    assert np.abs(grid.rho_heavy - 30.0).max() <= 1e-12


def test_cfl_check_examples():
    grid = uniform_grid(10.0, 13.0)
    assert macro.cfl_bound_h(grid, CFG) * 3600.0 == pytest.approx(0.1 / 130.0 * 3600.0)
    assert macro.cfl_check(grid, 2.6 / 3600.0, CFG)
    assert not macro.cfl_check(grid, 3.0 / 3600.0, CFG)
    assert macro.cfl_check(grid, 0.0, CFG)
    with pytest.raises(CflError):
        macro.macro_step(grid, 3.0 / 3600.0, CFG)


def test_conservation_closed_short():
    x = (np.arange(100) + 0.5) * 0.1
    grid = macro.RoadGrid(
        10.0, 0.1, 100,
        60.0 + 40.0 * np.sin(2 * np.pi * x / 3.0),
        10.0 + 8.0 * np.cos(2 * np.pi * x / 5.0),
        macro.BoundaryCondition.closed(),
        macro.BoundaryCondition.closed(),
    )
    grid.require_admissible(CFG)
    m_l, m_h = grid.mass_light(), grid.mass_heavy()
    t = 0.0
    for _ in range(1000):
        macro.macro_step(grid, DT, CFG, t_h=t, check_cfl=False)
        t += DT
    assert grid.mass_light() == pytest.approx(m_l, rel=1e-11)
    assert grid.mass_heavy() == pytest.approx(m_h, rel=1e-11)
    grid.require_admissible(CFG)


def test_inflow_boundary_clamps_to_supply():
    # demand above what the first cell can receive gets clamped
    grid = uniform_grid(
        200.0, 0.0,
        left=macro.BoundaryCondition.inflow(4200.0, 0.0),
        right=macro.BoundaryCondition.dirichlet(200.0, 0.0),
    )
    (fl, fh), _ = macro.boundary_fluxes(grid, CFG, 0.0)
    assert fl == pytest.approx(fd.flux_light(200.0, 0.0, CFG))
    assert fh == 0.0
    # with a free-flowing first cell the requested flux passes through
    grid = uniform_grid(
        10.0, 0.0,
        left=macro.BoundaryCondition.inflow(900.0, 0.0),
        right=macro.BoundaryCondition.free(),
    )
    (fl, _), _ = macro.boundary_fluxes(grid, CFG, 0.0)
    assert fl == pytest.approx(900.0)


def test_closed_boundary_blocks_everything():
    grid = uniform_grid(
        50.0, 10.0,
        left=macro.BoundaryCondition.closed(),
        right=macro.BoundaryCondition.closed(),
    )
    (fl, fh), (gl, gh) = macro.boundary_fluxes(grid, CFG, 0.0)
    assert fl == fh == gl == gh == 0.0


def test_boundary_schedule_switches_in_time():
    bc = macro.BoundaryCondition.per_class(
        [(360.0 / 3600.0, macro.ClassBc("dirichlet", 186.0)), (None, macro.ClassBc("dirichlet", 0.0))],
        macro.ClassBc("free"),
    )
    assert bc.light_at(0.05).value == 186.0
    assert bc.light_at(0.2).value == 0.0
    assert bc.heavy_at(123.0).kind == "free"


def test_oscillating_dirichlet_value():
    bc = macro.ClassBc("dirichlet", 150.0, osc_amplitude=10.0, osc_period_s=220.0)
    assert bc.density_at(0.0) == pytest.approx(150.0)
    quarter = 220.0 / 4.0 / 3600.0
    assert bc.density_at(quarter) == pytest.approx(160.0)
    with pytest.raises(ConfigError):
        macro.ClassBc("dirichlet", 150.0, osc_amplitude=10.0)


def test_riemann_shock_position():
    n = 200
    x = (np.arange(n) + 0.5) * 0.1
    grid = macro.RoadGrid(
        20.0, 0.1, n,
        np.where(x < 5.0, 20.0, 200.0), np.zeros(n),
        macro.BoundaryCondition.free(), macro.BoundaryCondition.free(),
    )
    t = 0.0
    while t < 0.1 - 1e-12:
        macro.macro_step(grid, DT, CFG, t_h=t, check_cfl=False)
        t += DT
    f20 = fd.flux_light(20.0, 0.0, CFG)
    f200 = fd.flux_light(200.0, 0.0, CFG)
    speed = (f200 - f20) / (200.0 - 20.0)
    assert speed == pytest.approx(-7.807, abs=0.01)
    crossing = x[np.argmax(grid.rho_light > 110.0)]
    assert crossing == pytest.approx(5.0 + speed * t, abs=0.1)


def test_single_class_reduction_matches_scalar_solution():
    # with no trucks the car equation is a plain scalar conservation law:
    # check that the truck field stays identically zero and cars stay exact
    n = 100
    x = (np.arange(n) + 0.5) * 0.1
    grid = macro.RoadGrid(
        10.0, 0.1, n,
        np.where(x < 5.0, 30.0, 10.0), np.zeros(n),
        macro.BoundaryCondition.free(), macro.BoundaryCondition.free(),
    )
    t = 0.0
    for _ in range(40):
        macro.macro_step(grid, DT, CFG, t_h=t, check_cfl=False)
        t += DT
    assert np.all(grid.rho_heavy == 0.0)
    # free-flow data moves at exactly the free speed: both states below crit
    assert grid.rho_light.max() <= 30.0 + 1e-9
    front = x[np.argmax(grid.rho_light < 20.0)]
    assert front == pytest.approx(5.0 + 130.0 * t, abs=0.25)


def test_creeping_through_truck_wall():
    left = macro.BoundaryCondition.dirichlet(10.0, 13.0)
    right = macro.BoundaryCondition.per_class(
        macro.ClassBc("free"), macro.ClassBc("dirichlet", RHO_H_MAX)
    )
    grid = macro.RoadGrid.uniform(10.0, 0.1, 10.0, 13.0, left, right, CFG)
    t = 0.0
    for _ in range(int(0.25 / DT)):
        macro.macro_step(grid, DT, CFG, t_h=t, check_cfl=False)
        t += DT
    jam = grid.rho_heavy >= 0.99 * RHO_H_MAX
    assert jam.sum() > 20
    v_l = np.asarray(fd.speed_light(grid.rho_light, grid.rho_heavy, CFG))
    v_h = np.asarray(fd.speed_heavy(grid.rho_light, grid.rho_heavy, CFG))
    f_l = np.asarray(fd.flux_light(grid.rho_light, grid.rho_heavy, CFG))
    assert v_l[jam].min() == pytest.approx(65.0, abs=1.0)
    assert v_h[jam].max() <= 0.5
    assert f_l[jam].min() > 100.0
    assert grid.rho_light.max() < CFG.transition_level


def test_post_step_domain_check_catches_corruption():
    grid = uniform_grid(10.0, 13.0)
    grid.rho_light = np.full(grid.n_cells, 400.0)  # inadmissible by construction
    with pytest.raises((SchemeError, DomainError)):
        macro.macro_step(grid, DT, CFG)


def test_grid_guards():
    with pytest.raises(ConfigError):
        macro.RoadGrid(
            1.0, 1e-9, 10 ** 9, np.zeros(2), np.zeros(2),
            macro.BoundaryCondition.free(), macro.BoundaryCondition.free(),
        )
    with pytest.raises(ConfigError):
        macro.RoadGrid(
            10.0, 0.1, 42, np.zeros(42), np.zeros(42),
            macro.BoundaryCondition.free(), macro.BoundaryCondition.free(),
        )


def test_step_report_contents():
    grid = uniform_grid(10.0, 13.0)
    report = macro.macro_step(grid, DT, CFG, t_h=0.0)
    assert report.total_mass_light == pytest.approx(10.0 * 10.0)
    assert report.total_mass_heavy == pytest.approx(13.0 * 10.0)
    assert report.max_flux_light == pytest.approx(fd.flux_light(10.0, 13.0, CFG))
    assert report.t_h == pytest.approx(DT)
