"""First-order dynamics on the cylinder and event-aware integration.

The model is a damped pendulum-like system driven by the engine torque:

    dz1/dt = z2
    dz2/dt = (-k_f z2 + tau(z1)) / I

with z1 the unwrapped crank angle and z2 its angular velocity.  Integration
uses an adaptive embedded Runge-Kutta 4(5) pair with cubic-or-better dense
output; events are localized inside a step by root bracketing on the dense
interpolant.  Wrapping to [0, 2*pi) is a presentation concern and never
happens here.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .core import EngineParams, torque, _scalar_rhs

__all__ = [
    "State",
    "Trajectory",
    "EventSpec",
    "IntegrationError",
    "vector_field",
    "integrate",
    "integrate_until_event",
]

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-11

_DIRECTIONS = {"rising": 1.0, "falling": -1.0, "any": 0.0}


State = tuple  # (z1, z2); kept structural on purpose, everything accepts pairs


class IntegrationError(RuntimeError):
    """Integration failed; carries the last valid (t, state) reached."""

    def __init__(self, message: str, t_last: float, state_last):
        super().__init__(message)
        self.t_last = t_last
        self.state_last = tuple(state_last)


@dataclass
class Trajectory:
    """Time-ordered samples (t, z1, z2) at the solver's accepted steps."""

    t: np.ndarray
    z: np.ndarray  # shape (n, 2)

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=float)
        self.z = np.asarray(self.z, dtype=float)
        if np.any(np.diff(self.t) <= 0.0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self):
        for k in range(len(self.t)):
            yield self.t[k], (self.z[k, 0], self.z[k, 1])

    @property
    def final_state(self) -> tuple[float, float]:
        return float(self.z[-1, 0]), float(self.z[-1, 1])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,q,qdot\n")
            for k in range(len(self.t)):
                fh.write(f"{self.t[k]:.17g},{self.z[k, 0]:.17g},{self.z[k, 1]:.17g}\n")


@dataclass
class EventSpec:
    """Scalar event g(t, state) with a triggering direction.

    direction 'rising' fires on g passing through zero from below, 'falling'
    from above, 'any' on either crossing.  g must be continuous along
    trajectories.
    """

    id: str
    g: Callable[[float, tuple], float]
    direction: str = "any"

    def __post_init__(self) -> None:
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"direction must be one of {sorted(_DIRECTIONS)}")


def vector_field(state, params: EngineParams):
    """(dz1/dt, dz2/dt) at the given state."""
    z1, z2 = state
    return (z2, (-params.k_f * z2 + torque(z1, params)) / params.inertia)


def _tolerances(tol, atol):
    rtol = DEFAULT_RTOL if tol is None else float(tol)
    if atol is None:
        atol = rtol * 1e-2
    return rtol, float(atol)


def integrate(state0, params: EngineParams, t_end: float, tol: float | None = None,
              *, atol: float | None = None, max_step: float | None = None,
              t0: float = 0.0) -> Trajectory:
    """Integrate for ``t_end - t0`` seconds, recording every accepted step.

    ``tol`` is the relative local error target per step (default 1e-9) with
    absolute floor ``atol`` (default tol/100).  ``max_step`` bounds the step
    size when dense plotting output is wanted.
    """
    if not t_end > t0:
        raise ValueError("t_end must exceed t0")
    rtol, atol_ = _tolerances(tol, atol)
    sol = solve_ivp(_scalar_rhs(params), (t0, t_end), np.asarray(state0, dtype=float),
                    method="RK45", rtol=rtol, atol=atol_,
                    max_step=np.inf if max_step is None else max_step)
    if not sol.success:
        raise IntegrationError(f"integration failed: {sol.message}",
                               float(sol.t[-1]), sol.y[:, -1])
    return Trajectory(sol.t, sol.y.T)


def integrate_until_event(state0, params: EngineParams, events: Sequence[EventSpec],
                          t_max: float, tol: float | None = None,
                          *, atol: float | None = None):
    """Integrate until the first event fires, or t_max.

    Returns ``(event_id, t_hit, state_hit)``; ``event_id`` is None and
    ``t_hit == t_max`` when nothing fires.  Events are localized within a
    step on the dense interpolant; with several candidate events the one
    with the smallest localized time wins.
    """
    if not t_max > 0.0:
        raise ValueError("t_max must be positive")
    if not events:
        raise ValueError("at least one event is required")
    state0 = np.asarray(state0, dtype=float)
    for spec in events:
        g0 = spec.g(0.0, (state0[0], state0[1]))
        if g0 == 0.0:
            raise ValueError(
                f"event {spec.id!r} is exactly zero at the initial state; "
                "offset the initial condition")

    def wrap(spec: EventSpec):
        def g(t, y):
            return spec.g(t, (y[0], y[1]))
        g.terminal = True
        g.direction = _DIRECTIONS[spec.direction]
        return g

    wrapped = [wrap(s) for s in events]
    sol = solve_ivp(_scalar_rhs(params), (0.0, t_max), state0, method="RK45",
                    rtol=_tolerances(tol, atol)[0], atol=_tolerances(tol, atol)[1],
                    events=wrapped, dense_output=False)
    if sol.status == -1:
        raise IntegrationError(f"integration failed: {sol.message}",
                               float(sol.t[-1]), sol.y[:, -1])
    hits = [(te[0], k) for k, te in enumerate(sol.t_events) if len(te)]
    if not hits:
        return None, float(t_max), (float(sol.y[0, -1]), float(sol.y[1, -1]))
    t_hit, k = min(hits)
    y_hit = sol.y_events[k][0]
    return events[k].id, float(t_hit), (float(y_hit[0]), float(y_hit[1]))
