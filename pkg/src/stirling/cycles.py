"""Rotational limit cycle: detection, period BVP, work and power maps.

The cycle (at most one exists, and it is sign definite) is found in two
stages.  A transient launched along the saddle's unstable manifold either
settles into repeated revolutions with a stabilizing lap time, or falls
into a sink.  A positive pre-check seeds single-shooting Newton on the
rescaled boundary value problem

    dz1/dtau = T z2,   dz2/dtau = T (-k_f z2 + tau(z1)) / I,  tau in [0, 1]

with unknowns ``(z2(0), T)`` and residuals
``(z1(1) - z1(0) - s*2pi, z2(1) - z2(0))`` where ``s = -sign(U(2pi))``.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .core import (
    TWO_PI,
    EngineParams,
    _scalar_torque,
    crank_gain,
    potential,
    pressure,
)
from .bifurcations import shooting_setup, SetupError

__all__ = [
    "LimitCycle",
    "PowerRecord",
    "CycleSolverError",
    "find_limit_cycle",
    "cycle_integral_check",
    "cycle_work",
    "average_power",
    "power_map",
    "ridge_locus",
    "write_cycle_csv",
    "write_cycle_json",
    "write_power_csv",
    "write_ridge_csv",
]

N_SAMPLES = 512
BVP_TOL = 1e-9
_U2PI_FLOOR = 1e-10  # |U(2pi)| below this: no preferred direction, no cycle
_TRANSIENT_TIME = 200.0
_TRANSIENT_CHUNK = 25.0


class CycleSolverError(RuntimeError):
    """Newton failed although the transient pre-check found rotation.

    Carries the lap data the pre-check produced: ``lap_time`` (s) and
    ``z2_section`` (rad/s at the anchor crossing).
    """

    def __init__(self, message: str, lap_time: float, z2_section: float):
        super().__init__(message)
        self.lap_time = lap_time
        self.z2_section = z2_section


@dataclass(frozen=True)
class LimitCycle:
    """Converged rotational cycle sampled at uniform normalized times."""

    samples: np.ndarray  # shape (N_SAMPLES, 3): tau, z1, z2
    period: float
    direction_sign: float
    work: float
    avg_power: float

    @property
    def tau(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def z1(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def z2(self) -> np.ndarray:
        return self.samples[:, 2]


@dataclass(frozen=True)
class PowerRecord:
    """One power-map grid point; numeric fields are None without a cycle."""

    alpha: float
    t_h: float
    has_cycle: bool
    period: float | None = None
    work: float | None = None
    avg_power: float | None = None
    note: str | None = None


def _rescaled_rhs(params: EngineParams, period: float):
    tau_of = _scalar_torque(params)
    kf, inertia = params.k_f, params.inertia

    def rhs(t, z):
        return (period * z[1], period * (-kf * z[1] + tau_of(z[0])) / inertia)

    return rhs


def _shoot(params, w0, period, s, anchor, dense=False):
    sol = solve_ivp(
        _rescaled_rhs(params, period), (0.0, 1.0), [anchor, w0],
        method="RK45", rtol=1e-11, atol=1e-13, dense_output=dense,
    )
    res = np.array([sol.y[0, -1] - anchor - s * TWO_PI, sol.y[1, -1] - w0])
    return res, sol


def _lap_tail(z1s, s):
    """Start index of the trailing run of crossings advancing s*2pi each."""
    k = len(z1s) - 1
    while k > 0 and abs(z1s[k] - z1s[k - 1] - s * TWO_PI) < 1.0:
        k -= 1
    return k


def _transient_laps(params, state0, s, anchor, tol):
    """Full-revolution section crossings of a free transient.

    Integrates in chunks up to 200 s total, stopping early once the lap
    time has stabilized.  A crossing counts as a lap only when the
    unwrapped angle advanced a full 2*pi since the previous one; a decaying
    oscillation that straddles the section line crosses it periodically
    with the travelling sign but advances nothing, and must not look like
    rotation.  Returns (times, z2s) arrays of the trailing run of laps.
    """
    from .core import _scalar_rhs

    def section(t, y):
        return math.sin(0.5 * (y[0] - anchor))

    section.terminal = False
    section.direction = 0.0

    rhs = _scalar_rhs(params)
    rtol = 1e-9 if tol is None else tol
    times, z2s, z1s = [], [], []
    t0, y0 = 0.0, list(state0)
    n_chunks = int(round(_TRANSIENT_TIME / _TRANSIENT_CHUNK))
    for _ in range(n_chunks):
        sol = solve_ivp(rhs, (t0, t0 + _TRANSIENT_CHUNK), y0, method="RK45",
                        rtol=rtol, atol=rtol * 1e-2, events=[section])
        for te, ye in zip(sol.t_events[0], sol.y_events[0]):
            if s * ye[1] > 0.0:  # travelling, not turning around
                times.append(float(te))
                z2s.append(float(ye[1]))
                z1s.append(float(ye[0]))
        t0, y0 = float(sol.t[-1]), [float(sol.y[0, -1]), float(sol.y[1, -1])]
        k = _lap_tail(z1s, s)
        if len(times) - k >= 6:
            dts = np.diff(times[k:][-3:])
            if abs(dts[-1] - dts[-2]) <= 1e-3 * dts[-1]:
                break
    k = _lap_tail(z1s, s)
    return np.asarray(times[k:]), np.asarray(z2s[k:])


def find_limit_cycle(
    params: EngineParams,
    *,
    anchor: float = 0.0,
    seed_state: tuple[float, float] | None = None,
    epsilon: float = 1e-6,
    tol: float | None = None,
    max_newton: int = 40,
) -> LimitCycle | None:
    """The rotational limit cycle, or None when the transient finds a sink.

    The default transient starts just off the saddle nearest ``q = pi``
    along its unstable eigenvector (the same launch the homoclinic test
    uses); ``seed_state`` overrides it.  The returned cycle is anchored at
    ``z1(0) = anchor``.

    Raises :class:`CycleSolverError` if Newton fails to converge even
    though the transient showed sustained rotation.
    """
    u2 = potential(TWO_PI, params)
    if abs(u2) <= _U2PI_FLOOR:
        return None
    s = -math.copysign(1.0, u2)

    if seed_state is None:
        try:
            seed_state = shooting_setup(params, "homoclinic", epsilon).initial_state()
        except SetupError:
            return None
    times, z2s = _transient_laps(params, seed_state, s, anchor, tol)
    if len(times) < 4:
        return None
    dts = np.diff(times)
    if abs(dts[-1] - dts[-2]) > 0.05 * dts[-1]:
        return None  # lap time still wandering: treat as no cycle

    lap_time, w0 = float(dts[-1]), float(z2s[-1])
    x = np.array([w0, lap_time])
    res, _ = _shoot(params, x[0], x[1], s, anchor)
    for _ in range(max_newton):
        nr = float(np.linalg.norm(res))
        if nr <= BVP_TOL:
            break
        dw = 1e-7 * max(1.0, abs(x[0]))
        dT = 1e-7 * max(1.0, abs(x[1]))
        rw, _ = _shoot(params, x[0] + dw, x[1], s, anchor)
        rT, _ = _shoot(params, x[0], x[1] + dT, s, anchor)
        try:
            step = np.linalg.solve(
                np.column_stack([(rw - res) / dw, (rT - res) / dT]), res
            )
        except np.linalg.LinAlgError:
            raise CycleSolverError("singular shooting Jacobian", lap_time, w0)
        lam = 1.0
        for _ in range(10):
            xn = x - lam * step
            if xn[1] > 0.0:
                rn, _ = _shoot(params, xn[0], xn[1], s, anchor)
                if np.linalg.norm(rn) < nr:
                    x, res = xn, rn
                    break
            lam *= 0.5
        else:
            raise CycleSolverError(
                f"shooting Newton stalled with residual {nr:.3e}", lap_time, w0
            )
    else:
        raise CycleSolverError(
            f"shooting Newton did not reach {BVP_TOL} in {max_newton} iterations",
            lap_time, w0,
        )

    res, sol = _shoot(params, x[0], x[1], s, anchor, dense=True)
    if np.linalg.norm(res) > BVP_TOL:
        raise CycleSolverError("converged iterate lost under re-integration",
                              lap_time, w0)
    taus = np.linspace(0.0, 1.0, N_SAMPLES)
    z = sol.sol(taus)
    samples = np.column_stack([taus, z[0], z[1]])
    period = float(x[1])
    cycle = LimitCycle(samples=samples, period=period, direction_sign=s,
                       work=0.0, avg_power=0.0)
    work = cycle_work(cycle, params)
    return LimitCycle(samples=samples, period=period, direction_sign=s,
                      work=work, avg_power=work / period)


def _periodic_spline(taus, values):
    vals = np.array(values, dtype=float)
    vals[-1] = vals[0]  # enforce exact periodicity against roundoff
    return CubicSpline(taus, vals, bc_type="periodic")


def cycle_integral_check(cycle: LimitCycle, params: EngineParams) -> float:
    """Relative residual of k_f * (integral of z2 dz1 in +z1 orientation)
    against -U(2pi)."""
    u2 = potential(TWO_PI, params)
    # along the trajectory, z2 dz1 = T z2^2 dtau; +z1 orientation flips
    # the sign for clockwise (s = -1) cycles
    integral = cycle.direction_sign * cycle.period * float(
        _periodic_spline(cycle.tau, cycle.z2 ** 2).integrate(0.0, 1.0)
    )
    return abs(params.k_f * integral + u2) / abs(u2)


def cycle_work(cycle: LimitCycle, params: EngineParams) -> float:
    """Work per revolution, quadrature of (p - p_a) dV along the cycle."""
    q = cycle.z1
    dvdq = -(params.a_1 * crank_gain(q - params.alpha, params)
             + params.a_2 * crank_gain(q, params))
    gauge = pressure(q, params) - params.p_ambient
    integrand = cycle.period * gauge * dvdq * cycle.z2
    return float(_periodic_spline(cycle.tau, integrand).integrate(0.0, 1.0))


def average_power(params: EngineParams) -> PowerRecord:
    """Power record at one parameter point (None fields when no cycle)."""
    try:
        cycle = find_limit_cycle(params)
    except CycleSolverError as exc:
        warnings.warn(
            f"cycle solver failed at alpha={params.alpha:.4f}, "
            f"t_h={params.t_h:.2f}: {exc}"
        )
        return PowerRecord(alpha=params.alpha, t_h=params.t_h, has_cycle=False,
                           note=str(exc))
    if cycle is None:
        return PowerRecord(alpha=params.alpha, t_h=params.t_h, has_cycle=False)
    return PowerRecord(alpha=params.alpha, t_h=params.t_h, has_cycle=True,
                       period=cycle.period, work=cycle.work,
                       avg_power=cycle.avg_power)


def _power_point(job) -> PowerRecord:
    base, alpha, t_h = job
    return average_power(base.with_(alpha=alpha, t_h=t_h))


def default_alpha_grid() -> list[float]:
    return [round(0.1 * k, 10) for k in range(1, 32)]  # 0.1 .. 3.1


def default_t_h_grid() -> list[float]:
    return [float(t) for t in range(305, 501, 5)]


def power_map(
    alpha_grid=None,
    t_h_grid=None,
    params_base: EngineParams | None = None,
    *,
    workers: int = 1,
) -> list[PowerRecord]:
    """Power records over the (alpha, t_h) grid, in (alpha, t_h) order.

    Points are independent; with ``workers > 1`` they are evaluated in a
    process pool and merged back in grid order, so the output is identical
    to a serial run.
    """
    alphas = default_alpha_grid() if alpha_grid is None else [float(a) for a in alpha_grid]
    t_hs = default_t_h_grid() if t_h_grid is None else [float(t) for t in t_h_grid]
    if not alphas or not t_hs:
        raise ValueError("grids must be non-empty")
    base = params_base if params_base is not None else EngineParams()
    jobs = [(base, a, t) for a, t in itertools.product(alphas, t_hs)]
    if workers <= 1:
        return [_power_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_power_point, jobs, chunksize=4))


def ridge_locus(records) -> list[tuple[float, float, float]]:
    """Per-t_h argmax of average power: rows (t_h, alpha_star, power_star)."""
    by_t: dict[float, list[PowerRecord]] = {}
    order: list[float] = []
    for r in records:
        if r.t_h not in by_t:
            by_t[r.t_h] = []
            order.append(r.t_h)
        by_t[r.t_h].append(r)
    rows = []
    for t in order:
        live = [r for r in by_t[t] if r.has_cycle]
        if not live:
            continue
        best = max(live, key=lambda r: r.avg_power)
        rows.append((t, best.alpha, best.avg_power))
    return rows


def write_cycle_csv(path, cycle: LimitCycle, params: EngineParams) -> None:
    g = "%.17g"
    q = cycle.z1
    from .core import volumes

    v1, v2 = volumes(q, params)
    p = pressure(q, params)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("tau,q,qdot,p,v_total\n")
        for k in range(len(q)):
            fh.write(",".join(g % x for x in
                              (cycle.tau[k], q[k], cycle.z2[k], p[k],
                               v1[k] + v2[k])) + "\n")


def write_cycle_json(path, cycle: LimitCycle, params: EngineParams) -> None:
    doc = {
        "alpha": params.alpha,
        "t_h": params.t_h,
        "period": cycle.period,
        "work": cycle.work,
        "avg_power": cycle.avg_power,
        "direction": int(cycle.direction_sign),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_power_csv(path, records) -> None:
    g = "%.17g"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("alpha,t_h,has_cycle,period,work,avg_power\n")
        for r in records:
            if r.has_cycle:
                tail = f"true,{g % r.period},{g % r.work},{g % r.avg_power}"
            else:
                tail = "false,,,"
            fh.write(f"{g % r.alpha},{g % r.t_h},{tail}\n")


def write_ridge_csv(path, rows) -> None:
    g = "%.17g"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t_h,alpha_star,power_star\n")
        for t, a, p in rows:
            fh.write(f"{g % t},{g % a},{g % p}\n")
