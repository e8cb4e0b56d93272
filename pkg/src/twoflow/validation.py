"""Self-contained invariant checks behind the ``validate`` command.

Each check returns (name, passed, detail).  They are quick, deterministic
versions of the model's defining properties: diagram endpoints and shape,
conservation, wave speeds against closed-form solutions, and the micro
model's relaxation behaviour.
"""

from __future__ import annotations

import numpy as np

from . import fd, macro, micro
from .errors import ConfigError


def domain_grid(cfg: fd.FdConfig, n: int = 100):
    """n x n grid covering the admissible set (rows: trucks, cols: cars)."""
    rho_h = np.linspace(0.0, cfg.rho_max_heavy, n)
    rows_l = []
    rows_h = []
    for rh in rho_h:
        rmax = fd.max_density_light(rh, cfg)
        rows_l.append(np.linspace(0.0, rmax, n))
        rows_h.append(np.full(n, rh))
    return np.vstack(rows_l), np.vstack(rows_h)


def check_endpoints(cfg: fd.FdConfig | None = None):
    cfg = cfg or fd.FdConfig.defaults()
    checks = [
        abs(fd.max_density_light(0.0, cfg) - 267) <= 1.0,
        abs(fd.max_density_light(cfg.rho_max_heavy, cfg) - 133) <= 1.0,
        abs(fd.speed_light(0.0, 0.0, cfg) - 130.0) < 1e-9,
        abs(fd.speed_light(0.0, cfg.rho_max_heavy, cfg) - 65.0) < 1e-9,
        abs(fd.speed_heavy(0.0, 0.0, cfg) - 90.0) < 1e-9,
        abs(fd.speed_heavy(cfg.rho_max_light, 0.0, cfg)) < 1e-9,
        abs(fd.flux_light(fd.critical_density_light(0.0, cfg), 0.0, cfg) - 4200.0) < 1e-6,
        abs(
            fd.flux_light(
                fd.critical_density_light(cfg.rho_max_heavy, cfg), cfg.rho_max_heavy, cfg
            )
            - 1200.0
        )
        < 1e-6,
        abs(fd.flux_heavy(0.0, fd.critical_density_heavy(0.0, cfg), cfg) - 1500.0) < 1e-6,
        abs(fd.flux_heavy(cfg.rho_max_light, 0.0, cfg)) < 1e-9,
        abs(cfg.transition_level - cfg.rho_max_light / 2.0) < 1e-9,
    ]
    return "diagram endpoints", all(checks), f"{sum(checks)}/{len(checks)} endpoint identities"


def check_fd_properties(cfg: fd.FdConfig | None = None, n: int = 100):
    """Monotonicity, concavity, zero-flux boundaries, continuity, decoupling."""
    cfg = cfg or fd.FdConfig.defaults()
    tol = 1e-9
    grid_l, grid_h = domain_grid(cfg, n)
    failures = []

    v_l = np.asarray(fd.speed_light(grid_l, grid_h, cfg))
    f_l = grid_l * v_l
    if np.any(np.diff(v_l, axis=1) > tol):
        failures.append("car speed not non-increasing in car density")
    if np.any(np.diff(f_l, 2, axis=1) > tol):
        failures.append("car flux not concave in car density")
    if np.any(np.abs(f_l[:, 0]) > tol) or np.any(np.abs(f_l[:, -1]) > tol):
        failures.append("car flux not zero at the density endpoints")

    rho_h_grid = np.linspace(0.0, cfg.rho_max_heavy, n)
    rows_h = []
    for rl in np.linspace(0.0, cfg.transition_level, n):
        rmax_h = fd.max_density_heavy(rl, cfg)
        span = np.linspace(0.0, rmax_h, n)
        rows_h.append(np.asarray(fd.speed_heavy(np.full(n, rl), span, cfg)))
    rows_h = np.vstack(rows_h)
    if np.any(np.abs(rows_h - rows_h[0]) > 1e-9):
        failures.append("truck speed depends on cars below the transition level")

    for rl in np.linspace(0.0, cfg.rho_max_light, 13):
        rmax_h = fd.max_density_heavy(rl, cfg)
        span = np.linspace(0.0, rmax_h, n)
        f_h = np.asarray(fd.flux_heavy(np.full(n, rl), span, cfg))
        if np.any(np.diff(f_h, 2) > tol):
            failures.append("truck flux not concave in truck density")
            break
        if abs(f_h[0]) > tol or abs(f_h[-1]) > tol:
            failures.append("truck flux not zero at its density endpoints")
            break

    # Fixed cross density, increasing own-cross dependence must not raise speeds.
    rho_l_axis = np.linspace(0.0, cfg.transition_level, n)
    v_h_cross = np.asarray(fd.speed_heavy(rho_l_axis, np.full(n, 5.0), cfg))
    if np.any(np.diff(v_h_cross) > tol):
        failures.append("truck speed not non-increasing in car density")

    eps = 1e-8
    t = cfg.transition_level
    for rh in np.linspace(0.0, 20.0, 5):
        left = fd.speed_heavy(t - eps, rh, cfg)
        right = fd.speed_heavy(t + eps, rh, cfg)
        if abs(left - right) > 1e-6:
            failures.append("truck speed discontinuous at the transition level")
            break
    return (
        "diagram shape properties",
        not failures,
        "; ".join(failures) if failures else f"all shape properties hold on a {n}x{n} grid",
    )


def check_conservation(cfg: fd.FdConfig | None = None, n_steps: int = 10_000):
    cfg = cfg or fd.FdConfig.defaults()
    n = 100
    x = (np.arange(n) + 0.5) * 0.1
    rho_l = 60.0 + 40.0 * np.sin(2 * np.pi * x / 3.0)
    rho_h = 10.0 + 8.0 * np.cos(2 * np.pi * x / 5.0)
    grid = macro.RoadGrid(
        10.0, 0.1, n, rho_l, rho_h, macro.BoundaryCondition.closed(), macro.BoundaryCondition.closed()
    )
    grid.require_admissible(cfg)
    m0_l, m0_h = grid.mass_light(), grid.mass_heavy()
    dt = 2.6 / 3600.0
    t = 0.0
    for _ in range(n_steps):
        macro.macro_step(grid, dt, cfg, t_h=t, check_cfl=False)
        t += dt
    drift_l = abs(grid.mass_light() - m0_l) / m0_l
    drift_h = abs(grid.mass_heavy() - m0_h) / m0_h
    ok = drift_l < 1e-10 and drift_h < 1e-10
    return (
        "closed-road conservation",
        ok,
        f"relative drift over {n_steps} steps: light {drift_l:.2e}, heavy {drift_h:.2e}",
    )


def front_position(x, rho, level) -> float:
    """Interpolated position where the profile crosses the given level."""
    above = rho > level
    if not above.any() or above.all():
        return float("nan")
    i = int(np.nonzero(above[:-1] != above[1:])[0][0])
    f = (level - rho[i]) / (rho[i + 1] - rho[i])
    return float(x[i] + f * (x[i + 1] - x[i]))


def riemann_shock(cfg: fd.FdConfig | None = None):
    """Single-class shock 20|200 against the jump-speed formula."""
    cfg = cfg or fd.FdConfig.defaults()
    n = 200
    x = (np.arange(n) + 0.5) * 0.1
    x0 = 5.0
    rho_l = np.where(x < x0, 20.0, 200.0)
    grid = macro.RoadGrid(
        20.0, 0.1, n, rho_l, np.zeros(n), macro.BoundaryCondition.free(), macro.BoundaryCondition.free()
    )
    dt = 2.6 / 3600.0
    horizon = 0.1
    t = 0.0
    while t < horizon - 1e-12:
        macro.macro_step(grid, dt, cfg, t_h=t, check_cfl=False)
        t += dt
    f20 = fd.flux_light(20.0, 0.0, cfg)
    f200 = fd.flux_light(200.0, 0.0, cfg)
    expected = x0 + (f200 - f20) / (200.0 - 20.0) * t
    measured = front_position(x, grid.rho_light, 110.0)
    err = abs(measured - expected)
    return (
        "riemann shock speed",
        err <= 0.1,
        f"front at {measured:.3f} km, jump-condition prediction {expected:.3f} km (err {err * 1000:.0f} m)",
    )


def riemann_rarefaction(cfg: fd.FdConfig | None = None):
    """Single-class 200|20 fan: both edge speeds from the flux slopes."""
    cfg = cfg or fd.FdConfig.defaults()
    n = 250
    x = (np.arange(n) + 0.5) * 0.1
    x0 = 5.0
    rho_l = np.where(x < x0, 200.0, 20.0)
    grid = macro.RoadGrid(
        25.0, 0.1, n, rho_l, np.zeros(n), macro.BoundaryCondition.free(), macro.BoundaryCondition.free()
    )
    dt = 2.6 / 3600.0
    t = 0.0
    while t < 0.1 - 1e-12:
        macro.macro_step(grid, dt, cfg, t_h=t, check_cfl=False)
        t += dt
    crit = fd.critical_density_light(0.0, cfg)
    vfree = cfg.light.v_max_kmh
    cong_slope = (
        fd.flux_light(200.0, 0.0, cfg) - fd.flux_light(crit, 0.0, cfg)
    ) / (200.0 - crit)
    tail_expected = x0 + cong_slope * t          # upstream edge (negative speed)
    head_expected = x0 + vfree * t               # downstream edge
    tail = front_position(x, grid.rho_light, (200.0 + crit) / 2.0)
    head = front_position(x, grid.rho_light, (crit + 20.0) / 2.0)
    err = max(abs(tail - tail_expected), abs(head - head_expected))
    return (
        "riemann rarefaction edges",
        err <= 0.1,
        f"tail {tail:.2f} vs {tail_expected:.2f}, head {head:.2f} vs {head_expected:.2f} (err {err * 1000:.0f} m)",
    )


def check_relaxation(mcfg: micro.MicroConfig | None = None):
    """Follower speed against the closed-form exponential approach."""
    mcfg = mcfg or micro.MicroConfig()
    cfg = fd.FdConfig.defaults()

    def run(dt_h: float, t_end_h: float) -> float:
        m = micro.MicroConfig(
            delta_close_km=mcfg.delta_close_km,
            delta_far_km=mcfg.delta_far_km,
            v_max_kmh=mcfg.v_max_kmh,
            tau_acc_h=mcfg.tau_acc_h,
            tau_dec_h=mcfg.tau_dec_h,
            euler_dt_h=dt_h,
            coupling_window_km=mcfg.coupling_window_km,
        )
        fleet = micro.Fleet.from_positions(
            [0.0, 5.0], [0.0, mcfg.v_max_kmh], protocol=micro.LeaderProtocol("constant", v_kmh=mcfg.v_max_kmh)
        )
        field = np.zeros(1)
        steps = int(round(t_end_h / dt_h))
        for k in range(steps):
            micro.euler_step(fleet, field, 1e9, m, cfg, k * dt_h)
        return float(fleet.v[0])

    t3 = 3.0 * mcfg.tau_acc_h
    exact = mcfg.v_max_kmh * (1.0 - np.exp(-3.0))
    v = run(mcfg.euler_dt_h, t3)
    rel = abs(v - exact) / exact

    t5 = 5.0 * mcfg.tau_acc_h
    exact5 = mcfg.v_max_kmh * (1.0 - np.exp(-5.0))
    e1 = abs(run(mcfg.euler_dt_h, t5) - exact5)
    e2 = abs(run(mcfg.euler_dt_h / 2.0, t5) - exact5)
    ratio = e2 / e1 if e1 > 0 else 0.5
    ok = rel < 0.02 and 0.35 <= ratio <= 0.65
    return (
        "follower relaxation",
        ok,
        f"error at 3 tau: {100 * rel:.3f}% (< 2%); halving dt scales the error by {ratio:.2f}",
    )


def check_config_rejection():
    try:
        micro.MicroConfig(tau_dec_h=-1.0)
        return "bad config rejected", False, "negative relaxation time was accepted"
    except ConfigError:
        pass
    try:
        macro.RoadGrid(
            1.0, 1e-9, int(1.0 / 1e-9), np.zeros(2), np.zeros(2),
            macro.BoundaryCondition.free(), macro.BoundaryCondition.free(),
        )
        return "bad config rejected", False, "degenerate 1e-9 km grid was accepted"
    except (ConfigError, MemoryError, OverflowError):
        return "bad config rejected", True, "negative relaxation time and degenerate grid both refused"


ALL_CHECKS = (
    check_endpoints,
    check_fd_properties,
    check_conservation,
    riemann_shock,
    riemann_rarefaction,
    check_relaxation,
    check_config_rejection,
)


def run_all():
    return [check() for check in ALL_CHECKS]
