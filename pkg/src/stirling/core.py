"""Thermo-mechanical core of the alpha Stirling engine.

Isothermal (Schmidt) gas model: each cylinder's gas is held at its bath
temperature, the regenerator dead volume is folded into both cylinders as an
augmentation term, and the crankshaft sees the net pressure torque minus
linear friction.  All angle arguments are in radians; angles are accepted
unwrapped and reduced internally only where the quantity is periodic.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict, replace

import numpy as np
from scipy.integrate import quad

__all__ = [
    "EngineParams",
    "piston_position",
    "crank_gain",
    "volumes",
    "mean_effective_temperature",
    "volume_augmentation",
    "pressure",
    "torque",
    "torque_prime",
    "potential",
    "energy",
]

TWO_PI = 2.0 * math.pi

# reference values used when a config omits a key (cold side at ambient lab
# temperature, two identical cylinders)
_DEFAULTS = dict(
    t_c=298.15,        # K
    t_h=298.15,        # K
    n_mol=0.03,        # mol
    p_ambient=100e3,   # Pa
    r_gas=8.314,       # J/(mol K)
    v_max_1=0.00046,   # m^3
    v_max_2=0.00046,   # m^3
    a_1=0.002,         # m^2
    a_2=0.002,         # m^2
    crank_r=0.1,       # m
    rod_l=0.3,         # m
    alpha=0.0,         # rad
    inertia=0.5,       # kg m^2
    k_f=0.1,           # N m s
    v_regen=0.0,       # m^3
)


@dataclass(frozen=True)
class EngineParams:
    """Physical and geometric parameters of the engine.

    Invariants enforced at construction: temperatures, amounts, areas and
    inertia strictly positive; ``rod_l > crank_r > 0`` so the piston position
    stays real; each cylinder keeps positive volume over the full stroke
    (``v_max_i - a_i * 2 * crank_r > 0``); ``alpha`` lies in ``[0, 2*pi)``.
    """

    t_c: float = _DEFAULTS["t_c"]
    t_h: float = _DEFAULTS["t_h"]
    n_mol: float = _DEFAULTS["n_mol"]
    p_ambient: float = _DEFAULTS["p_ambient"]
    r_gas: float = _DEFAULTS["r_gas"]
    v_max_1: float = _DEFAULTS["v_max_1"]
    v_max_2: float = _DEFAULTS["v_max_2"]
    a_1: float = _DEFAULTS["a_1"]
    a_2: float = _DEFAULTS["a_2"]
    crank_r: float = _DEFAULTS["crank_r"]
    rod_l: float = _DEFAULTS["rod_l"]
    alpha: float = _DEFAULTS["alpha"]
    inertia: float = _DEFAULTS["inertia"]
    k_f: float = _DEFAULTS["k_f"]
    v_regen: float = _DEFAULTS["v_regen"]

    def __post_init__(self) -> None:
        pos = ("t_c", "t_h", "n_mol", "p_ambient", "r_gas", "v_max_1",
               "v_max_2", "a_1", "a_2", "crank_r", "rod_l", "inertia", "k_f")
        for name in pos:
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.v_regen < 0.0:
            raise ValueError(f"v_regen must be >= 0, got {self.v_regen!r}")
        if not self.rod_l > self.crank_r:
            raise ValueError("rod_l must exceed crank_r (piston position must stay real)")
        stroke = 2.0 * self.crank_r
        if not self.v_max_1 - self.a_1 * stroke > 0.0:
            raise ValueError("cylinder 1 volume reaches zero within the stroke")
        if not self.v_max_2 - self.a_2 * stroke > 0.0:
            raise ValueError("cylinder 2 volume reaches zero within the stroke")
        if not (0.0 <= self.alpha < TWO_PI):
            raise ValueError(f"alpha must lie in [0, 2*pi), got {self.alpha!r}")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EngineParams":
        doc = json.loads(text)
        unknown = set(doc) - set(_DEFAULTS)
        if unknown:
            raise ValueError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{**_DEFAULTS, **doc})

    def with_(self, **kw) -> "EngineParams":
        """Copy with selected fields replaced."""
        return replace(self, **kw)


def piston_position(q, params: EngineParams):
    """Piston displacement x(q) from the crank center, meters.

    x(q) = -r cos q + sqrt(l^2 - r^2 sin^2 q); ranges over [l-r, l+r] and is
    2*pi-periodic.
    """
    r, l = params.crank_r, params.rod_l
    q = np.asarray(q, dtype=float)
    s = np.sin(q)
    out = -r * np.cos(q) + np.sqrt(l * l - r * r * s * s)
    return out if out.ndim else float(out)


def crank_gain(q, params: EngineParams):
    """dx/dq in meters per radian (the crank-slider velocity ratio)."""
    r, l = params.crank_r, params.rod_l
    q = np.asarray(q, dtype=float)
    s, c = np.sin(q), np.cos(q)
    w = np.sqrt(l * l - r * r * s * s)
    out = r * s - r * r * s * c / w
    return out if out.ndim else float(out)


def _crank_gain_prime(q, params: EngineParams):
    # d(phi)/dq, used for the analytic torque derivative
    r, l = params.crank_r, params.rod_l
    q = np.asarray(q, dtype=float)
    w2 = l * l - r * r * np.sin(q) ** 2
    w = np.sqrt(w2)
    s2 = np.sin(2.0 * q)
    out = r * np.cos(q) - r * r * np.cos(2.0 * q) / w - (r ** 4 / 4.0) * s2 * s2 / (w2 * w)
    return out if out.ndim else float(out)


def volumes(q, params: EngineParams):
    """Gas volumes (V1, V2) in m^3 at crank angle q.

    Piston 1 (hot side) leads the crank by the phase shift alpha:
    x1(q) = x(q - alpha), x2(q) = x(q).
    """
    x_min = params.rod_l - params.crank_r
    v1 = params.v_max_1 - params.a_1 * (piston_position(q - params.alpha, params) - x_min)
    v2 = params.v_max_2 - params.a_2 * (piston_position(q, params) - x_min)
    return v1, v2


def mean_effective_temperature(t_h: float, t_c: float) -> float:
    """Log-mean temperature (T_h - T_c)/(ln T_h - ln T_c).

    Continuous at t_h == t_c where the limit is the common temperature; the
    log-mean always lies strictly between the two temperatures otherwise.
    """
    if t_h <= 0.0 or t_c <= 0.0:
        raise ValueError("temperatures must be positive")
    if abs(t_h - t_c) <= 1e-12 * max(t_h, t_c):
        return t_c
    return (t_h - t_c) / (math.log(t_h) - math.log(t_c))


def volume_augmentation(params: EngineParams) -> float:
    """Half-share of the regenerator dead volume assigned to each cylinder.

    delta_V = T_h T_c V_r / ((T_h + T_c) T_r) with T_r the log-mean
    temperature; zero when there is no regenerator volume.
    """
    if params.v_regen == 0.0:
        return 0.0
    t_r = mean_effective_temperature(params.t_h, params.t_c)
    return params.t_h * params.t_c * params.v_regen / ((params.t_h + params.t_c) * t_r)


def pressure(q, params: EngineParams):
    """Common gas pressure in Pa at crank angle q.

    p = n R / ((V1 + dV)/T_h + (V2 + dV)/T_c) with dV the regenerator
    augmentation; strictly positive and 2*pi-periodic.
    """
    v1, v2 = volumes(q, params)
    dv = volume_augmentation(params)
    return params.n_mol * params.r_gas / ((v1 + dv) / params.t_h + (v2 + dv) / params.t_c)


def torque(q, params: EngineParams):
    """Net crankshaft torque in N m at angle q.

    tau(q) = -(a_1 phi(q - alpha) + a_2 phi(q)) (p(q) - p_a): each piston
    pushes against the ambient with force A_i (p - p_a) through its crank
    gain.  2*pi-periodic.
    """
    gain = params.a_1 * crank_gain(q - params.alpha, params) \
        + params.a_2 * crank_gain(q, params)
    return -gain * (pressure(q, params) - params.p_ambient)


def torque_prime(q, params: EngineParams):
    """Analytic d(tau)/dq, N m per radian."""
    a1, a2, al = params.a_1, params.a_2, params.alpha
    s = a1 * crank_gain(q - al, params) + a2 * crank_gain(q, params)
    sp = a1 * _crank_gain_prime(q - al, params) + a2 * _crank_gain_prime(q, params)
    p = pressure(q, params)
    # dp/dq = -p * D'/D with D the denominator of the pressure law
    v1, v2 = volumes(q, params)
    dv = volume_augmentation(params)
    denom = (v1 + dv) / params.t_h + (v2 + dv) / params.t_c
    dden = -(a1 * crank_gain(q - al, params) / params.t_h
             + a2 * crank_gain(q, params) / params.t_c)
    pprime = -p * dden / denom
    return -sp * (p - params.p_ambient) - s * pprime


def potential(q: float, params: EngineParams) -> float:
    """Potential U(q) = -int_0^q tau(s) ds, joules.

    ``q`` is treated as an unwrapped real number: U is smooth but not
    periodic, and U(q + 2*pi) - U(q) = U(2*pi) measures the net energy fed
    into one revolution.  Adaptive quadrature to 1e-10 J absolute.
    """
    tau_s = _scalar_torque(params)
    val, _ = quad(tau_s, 0.0, q, epsabs=1e-10, epsrel=1e-12, limit=400)
    return -val


def energy(state, params: EngineParams) -> float:
    """Total energy E = I qdot^2 / 2 + U(q) of a state (q, qdot), joules."""
    q, qdot = state
    return 0.5 * params.inertia * qdot * qdot + potential(q, params)


# -- scalar fast path -----------------------------------------------------
#
# Integrators and shooting loops evaluate the torque millions of times on
# scalars, where numpy's per-call overhead dominates.  These closures bind
# the parameters once and use plain math on floats; they agree with the
# array versions to the last bit (same operations, same order).

def _scalar_torque(params: EngineParams):
    r, l = params.crank_r, params.rod_l
    a1, a2, al = params.a_1, params.a_2, params.alpha
    th, tc = params.t_h, params.t_c
    nr = params.n_mol * params.r_gas
    pa = params.p_ambient
    vm1, vm2 = params.v_max_1, params.v_max_2
    dv = volume_augmentation(params)
    x_min = l - r
    r2 = r * r
    l2 = l * l

    def tau(q: float) -> float:
        q1 = q - al
        s1, c1 = math.sin(q1), math.cos(q1)
        s2, c2 = math.sin(q), math.cos(q)
        w1 = math.sqrt(l2 - r2 * s1 * s1)
        w2 = math.sqrt(l2 - r2 * s2 * s2)
        phi1 = r * s1 - r2 * s1 * c1 / w1
        phi2 = r * s2 - r2 * s2 * c2 / w2
        x1 = -r * c1 + w1
        x2 = -r * c2 + w2
        v1 = vm1 - a1 * (x1 - x_min) + dv
        v2 = vm2 - a2 * (x2 - x_min) + dv
        p = nr / (v1 / th + v2 / tc)
        return -(a1 * phi1 + a2 * phi2) * (p - pa)

    return tau


def _scalar_rhs(params: EngineParams):
    """Right-hand side f(t, (z1, z2)) of the cylinder dynamics, scalar-fast."""
    tau = _scalar_torque(params)
    k_f, inertia = params.k_f, params.inertia

    def rhs(t, z):
        return (z[1], (tau(z[0]) - k_f * z[1]) / inertia)

    return rhs
