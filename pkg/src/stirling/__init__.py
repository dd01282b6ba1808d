"""Thermo-mechanical model of an alpha Stirling engine on the cylinder.

Isothermal two-cylinder pressure model coupled to crank dynamics with
viscous friction, plus the numerical analysis built on it: equilibrium
census and classification, pitchfork/fold locus tracing, homoclinic and
heteroclinic bifurcation curves by manifold shooting, and the rotational
limit cycle with its work and average-power maps.
"""

__version__ = "0.1.0"

from .core import (
    EngineParams,
    TWO_PI,
    crank_gain,
    energy,
    mean_effective_temperature,
    piston_position,
    potential,
    pressure,
    torque,
    torque_prime,
    volume_augmentation,
    volumes,
)
from .dynamics import (
    EventSpec,
    IntegrationError,
    Trajectory,
    integrate,
    integrate_until_event,
    vector_field,
)
from .equilibria import (
    Equilibrium,
    GridResolutionError,
    PitchforkPoint,
    classify_equilibrium,
    find_equilibria,
    pitchfork_locus,
)
from .bifurcations import (
    BifurcationCurve,
    BracketError,
    IndeterminateTest,
    SetupError,
    ShootingSetup,
    continuation,
    find_bifurcation_temperature,
    mirror_curve,
    psi1,
    psi2,
    shooting_setup,
)
from .cycles import (
    CycleSolverError,
    LimitCycle,
    PowerRecord,
    average_power,
    cycle_integral_check,
    cycle_work,
    find_limit_cycle,
    power_map,
    ridge_locus,
)

__all__ = [
    "__version__",
    "EngineParams",
    "TWO_PI",
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
    "Trajectory",
    "EventSpec",
    "IntegrationError",
    "vector_field",
    "integrate",
    "integrate_until_event",
    "Equilibrium",
    "PitchforkPoint",
    "GridResolutionError",
    "classify_equilibrium",
    "find_equilibria",
    "pitchfork_locus",
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
    "LimitCycle",
    "PowerRecord",
    "CycleSolverError",
    "find_limit_cycle",
    "cycle_integral_check",
    "cycle_work",
    "average_power",
    "power_map",
    "ridge_locus",
]
