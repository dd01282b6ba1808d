"""Homoclinic and heteroclinic bifurcations located by manifold shooting.

A trajectory launched a distance ``epsilon`` along the saddle's unstable
eigenvector either falls back onto the ``z2 = 0`` axis (the engine stalls
into a sink) or outruns it around the cylinder.  Which happens first flips
exactly at the global bifurcation, so the two-valued test functions below
feed a plain bisection in ``t_h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import TWO_PI, EngineParams
from .dynamics import EventSpec, integrate_until_event
from .equilibria import Equilibrium, find_equilibria

__all__ = [
    "ShootingSetup",
    "BifurcationCurve",
    "SetupError",
    "IndeterminateTest",
    "BracketError",
    "shooting_setup",
    "psi1",
    "psi2",
    "find_bifurcation_temperature",
    "continuation",
    "mirror_curve",
    "write_curve_csv",
    "write_failure_log",
]

DEFAULT_EPSILON = 1e-6
DEFAULT_T_MAX = 500.0
BISECTION_TOL = 0.01  # K
_MAX_BISECTIONS = 45

_KINDS = ("homoclinic", "heteroclinic")


class SetupError(RuntimeError):
    """The saddle structure required by the shooting target is absent."""


class IndeterminateTest(RuntimeError):
    """Neither shooting event fired before t_max."""


class BracketError(ValueError):
    """The test function does not change sign over the given bracket."""


@dataclass(frozen=True)
class ShootingSetup:
    """Initial data for a shot along the unstable manifold.

    ``v`` is the unit eigenvector of the positive eigenvalue, oriented with
    positive second component; the launch point is
    ``saddle + direction_sign * epsilon * v``.
    """

    saddle: Equilibrium
    second_saddle: Equilibrium | None
    v: tuple[float, float]
    epsilon: float
    direction_sign: float

    def initial_state(self) -> tuple[float, float]:
        d = self.direction_sign * self.epsilon
        return (self.saddle.q_star + d * self.v[0], d * self.v[1])


@dataclass
class BifurcationCurve:
    """One continued curve in the (alpha, t_h) plane.

    ``failures`` records grid points that produced no curve point, as
    (alpha, reason) pairs.
    """

    kind: str
    points: list[tuple[float, float]]
    failures: list[tuple[float, str]] = field(default_factory=list)


def _unstable_direction(saddle: Equilibrium, params: EngineParams) -> tuple[float, float]:
    lam = max(s.real for s in saddle.eigenvalues)
    if lam <= 0.0:
        raise SetupError(f"equilibrium at q={saddle.q_star:.6f} has no unstable eigenvalue")
    norm = math.hypot(1.0, lam)
    return (1.0 / norm, lam / norm)  # z2-component positive since lam > 0


def shooting_setup(
    params: EngineParams,
    target: str = "homoclinic",
    epsilon: float = DEFAULT_EPSILON,
) -> ShootingSetup:
    """Select the origin saddle, eigenvector and launch sign for ``target``.

    The origin is the saddle nearest ``q = pi``.  Homoclinic shots launch
    against the eigenvector for ``alpha < pi`` and along it otherwise;
    heteroclinic shots use the opposite sign, aiming at the companion saddle.
    """
    if target not in _KINDS:
        raise ValueError(f"target must be one of {_KINDS}")
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    eqs = find_equilibria(params)
    saddles = [e for e in eqs if e.kind == "saddle"]
    need = 1 if target == "homoclinic" else 2
    if len(saddles) < need:
        census = ", ".join(f"{e.kind}@{e.q_star:.4f}" for e in eqs) or "none"
        raise SetupError(
            f"{target} shooting needs {need} saddle(s); "
            f"equilibria at alpha={params.alpha:.4f}, t_h={params.t_h:.2f}: {census}"
        )
    origin = min(saddles, key=lambda e: abs(e.q_star - math.pi))
    second = None
    sign = -1.0 if params.alpha < math.pi else 1.0
    if target == "heteroclinic":
        sign = -sign
        second = next(e for e in saddles if e is not origin)
    return ShootingSetup(
        saddle=origin,
        second_saddle=second,
        v=_unstable_direction(origin, params),
        epsilon=float(epsilon),
        direction_sign=sign,
    )


def _shoot(params, setup, extra_event, t_max, tol):
    z0 = setup.initial_state()
    events = [EventSpec("fall", lambda t, s: s[1]), extra_event(z0)]
    return integrate_until_event(z0, params, events, t_max, tol)


def psi1(
    t_h: float,
    alpha: float,
    params_base: EngineParams | None = None,
    *,
    epsilon: float = DEFAULT_EPSILON,
    t_max: float = DEFAULT_T_MAX,
    tol: float | None = None,
) -> int:
    """Homoclinic test: +1 if the shot falls back onto z2 = 0 before it
    completes a full revolution, -1 if the revolution comes first."""
    base = params_base if params_base is not None else EngineParams()
    params = base.with_(alpha=float(alpha), t_h=float(t_h))
    setup = shooting_setup(params, "homoclinic", epsilon)

    def revolution(z0):
        q0 = z0[0]
        return EventSpec("wrap", lambda t, s: abs(s[0] - q0) - TWO_PI, "rising")

    hit, t_hit, _ = _shoot(params, setup, revolution, t_max, tol)
    if hit is None:
        raise IndeterminateTest(
            f"neither fall nor revolution within {t_max} s at "
            f"alpha={alpha}, t_h={t_h}"
        )
    return 1 if hit == "fall" else -1


def psi2(
    t_h: float,
    alpha: float,
    params_base: EngineParams | None = None,
    *,
    epsilon: float = DEFAULT_EPSILON,
    t_max: float = DEFAULT_T_MAX,
    tol: float | None = None,
) -> int:
    """Heteroclinic test: +1 if the shot falls onto z2 = 0 before reaching
    the companion saddle's angle (unwrapped in the direction of motion)."""
    base = params_base if params_base is not None else EngineParams()
    params = base.with_(alpha=float(alpha), t_h=float(t_h))
    setup = shooting_setup(params, "heteroclinic", epsilon)
    q_star = setup.saddle.q_star
    q_other = setup.second_saddle.q_star
    s = setup.direction_sign  # motion starts in this direction (v has z2 > 0)
    q_target = q_other if (q_other - q_star) * s > 0.0 else q_other + s * TWO_PI

    def crossing(z0):
        return EventSpec("reach", lambda t, st: st[0] - q_target)

    hit, t_hit, _ = _shoot(params, setup, crossing, t_max, tol)
    if hit is None:
        raise IndeterminateTest(
            f"neither fall nor saddle crossing within {t_max} s at "
            f"alpha={alpha}, t_h={t_h}"
        )
    return 1 if hit == "fall" else -1


_TESTS = {"homoclinic": psi1, "heteroclinic": psi2}


def find_bifurcation_temperature(
    alpha: float,
    kind: str,
    bracket: tuple[float, float],
    params_base: EngineParams | None = None,
    *,
    epsilon: float = DEFAULT_EPSILON,
    t_max: float = DEFAULT_T_MAX,
    tol_t_h: float = BISECTION_TOL,
) -> float:
    """Bisect the +-1 test function for ``kind`` down to ``tol_t_h`` kelvin."""
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    test = _TESTS[kind]
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise ValueError("bracket must be an increasing pair")
    f_lo = test(lo, alpha, params_base, epsilon=epsilon, t_max=t_max)
    f_hi = test(hi, alpha, params_base, epsilon=epsilon, t_max=t_max)
    if f_lo == f_hi:
        raise BracketError(
            f"{kind} test has the same sign ({f_lo:+d}) at both ends of "
            f"({lo}, {hi}) K for alpha={alpha}"
        )
    for _ in range(_MAX_BISECTIONS):
        if hi - lo <= tol_t_h:
            break
        mid = 0.5 * (lo + hi)
        if test(mid, alpha, params_base, epsilon=epsilon, t_max=t_max) == f_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def continuation(
    kind: str,
    alpha_grid,
    params_base: EngineParams | None = None,
    *,
    t_h_range: tuple[float, float] = (300.0, 500.0),
    warm_width: float = 20.0,
    epsilon: float = DEFAULT_EPSILON,
    t_max: float = DEFAULT_T_MAX,
) -> BifurcationCurve:
    """Trace ``t_h_star(alpha)`` over the grid, warm-starting from neighbors.

    Grid points whose bracket contains no sign change (or where the saddle
    structure is missing) are omitted and recorded in ``failures``.
    """
    if kind not in _KINDS:
        raise ValueError(f"kind must be one of {_KINDS}")
    alphas = [float(a) for a in alpha_grid]
    if not alphas:
        raise ValueError("alpha_grid must be non-empty")
    if any(not (0.0 <= a < math.pi) for a in alphas):
        raise ValueError("alpha_grid must lie in [0, pi); mirror the rest by symmetry")

    curve = BifurcationCurve(kind=kind, points=[])
    last: float | None = None
    for a in alphas:
        try:
            t_star = None
            if last is not None:
                lo = max(t_h_range[0], last - warm_width)
                hi = min(t_h_range[1], last + warm_width)
                try:
                    t_star = find_bifurcation_temperature(
                        a, kind, (lo, hi), params_base,
                        epsilon=epsilon, t_max=t_max,
                    )
                except BracketError:
                    t_star = None  # widen to the full range below
            if t_star is None:
                t_star = find_bifurcation_temperature(
                    a, kind, t_h_range, params_base,
                    epsilon=epsilon, t_max=t_max,
                )
        except BracketError:
            curve.failures.append((a, f"no sign change in {t_h_range}"))
            last = None
        except (SetupError, IndeterminateTest) as exc:
            curve.failures.append((a, str(exc)))
            last = None
        else:
            curve.points.append((a, t_star))
            last = t_star
    curve.points.sort(key=lambda p: p[0])
    return curve


def mirror_curve(curve: BifurcationCurve) -> BifurcationCurve:
    """The symmetric partner curve under (q, alpha) -> (2pi - q, 2pi - alpha)."""
    pts = sorted(((TWO_PI - a) % TWO_PI, t) for a, t in curve.points)
    return BifurcationCurve(kind=curve.kind, points=pts, failures=list(curve.failures))


def write_curve_csv(path, curves) -> None:
    g = "%.17g"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("kind,alpha,t_h\n")
        for curve in curves:
            for a, t in curve.points:
                fh.write(f"{curve.kind},{g % a},{g % t}\n")


def write_failure_log(path, curves) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("kind,alpha,reason\n")
        for curve in curves:
            for a, reason in curve.failures:
                safe = reason.replace('"', "'")
                fh.write(f'{curve.kind},{"%.17g" % a},"{safe}"\n')
