"""Equilibria of the crank dynamics and their linear classification.

Equilibria are the roots of the net torque on ``[0, 2*pi)``.  The Jacobian
of the first-order system at a root ``q*`` is ``[[0, 1], [tau'/I, -k_f/I]]``,
so the stability question reduces to the sign of ``tau'(q*)``: a positive
slope gives a saddle, a negative one a sink (focus or node depending on the
discriminant ``k_f**2 + 4*I*tau'``).  The friction term fixes the trace at
``-k_f/I < 0``, hence no unstable equilibria other than saddles can occur.

Degenerate roots (``tau = tau' = 0``) organize the bifurcation set in the
``(alpha, t_h)`` plane; :func:`pitchfork_locus` traces them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import TWO_PI, EngineParams, torque, torque_prime

__all__ = [
    "Equilibrium",
    "PitchforkPoint",
    "GridResolutionError",
    "classify_equilibrium",
    "find_equilibria",
    "pitchfork_locus",
    "write_equilibria_csv",
    "write_pitchfork_csv",
]

#: |tau'| below this is treated as a degenerate (non-hyperbolic) root.
NONHYPERBOLIC_TOL = 1e-7

_ROOT_XTOL = 1e-13
_GRID_MAX = 1 << 16


class GridResolutionError(RuntimeError):
    """Root scan stayed inconsistent at the maximum grid resolution."""


@dataclass(frozen=True)
class Equilibrium:
    """A root of the torque with its linearization.

    ``eigenvalues`` holds the two roots of ``I*s**2 + k_f*s - tau' = 0``;
    for a complex pair the positive-imaginary member comes first.
    """

    q_star: float
    tau_prime: float
    eigenvalues: tuple[complex, complex]
    kind: str

    @property
    def is_stable(self) -> bool:
        return self.kind in ("stable_focus", "stable_node")


@dataclass(frozen=True)
class PitchforkPoint:
    """Parameter-plane point with a degenerate equilibrium (tau = tau' = 0)."""

    alpha: float
    t_h: float
    q_star: float


def classify_equilibrium(q_star: float, params: EngineParams) -> Equilibrium:
    """Classify the equilibrium at ``q_star`` from the local torque slope.

    The characteristic polynomial of the Jacobian is
    ``I*s**2 + k_f*s - tau'(q*)``, so ``tau' > 0`` yields one positive root
    (saddle) and ``tau' < 0`` two roots with negative real part.
    """
    tp = float(torque_prime(q_star, params))
    i, kf = params.inertia, params.k_f
    disc = kf * kf + 4.0 * i * tp
    if disc >= 0.0:
        rt = math.sqrt(disc)
        eigs = (complex((-kf + rt) / (2.0 * i)), complex((-kf - rt) / (2.0 * i)))
    else:
        rt = math.sqrt(-disc)
        eigs = (
            complex(-kf / (2.0 * i), rt / (2.0 * i)),
            complex(-kf / (2.0 * i), -rt / (2.0 * i)),
        )
    if abs(tp) <= NONHYPERBOLIC_TOL:
        kind = "non_hyperbolic"
    elif tp > 0.0:
        kind = "saddle"
    elif disc < 0.0:
        kind = "stable_focus"
    else:
        kind = "stable_node"
    return Equilibrium(q_star=float(q_star), tau_prime=tp, eigenvalues=eigs, kind=kind)


def _scan_roots(params: EngineParams, n: int) -> list[float]:
    """One pass of the bracketed root scan on an ``n``-point uniform grid."""
    # refine with the same evaluation path the grid uses, so the bracket
    # signs seen by brentq match the scan exactly
    f = lambda q: float(torque(q, params))
    qs = np.linspace(0.0, TWO_PI, n, endpoint=False)
    h = TWO_PI / n
    tv = torque(qs, params)
    tpv = torque_prime(qs, params)

    # nodes this close to zero are roots already; their cell signs are noise
    tiny = 1e-13 * float(np.max(np.abs(tv)))
    node_root = np.abs(tv) <= tiny

    roots: list[float] = [float(qs[i]) for i in np.nonzero(node_root)[0]]
    for i in range(n):
        j = (i + 1) % n
        if node_root[i] or node_root[j]:
            continue
        a = float(qs[i])
        b = a + h
        if tv[i] * tv[j] < 0.0:
            roots.append(brentq(f, a, b, xtol=_ROOT_XTOL))
        elif tv[i] * tv[j] > 0.0 and tpv[i] * tpv[j] < 0.0:
            # interior extremum; if it overshoots zero the cell hides a
            # root pair that leaves no sign change at the nodes
            fp = lambda q: float(torque_prime(q, params))
            qe = brentq(fp, a, b, xtol=_ROOT_XTOL)
            if f(qe) * tv[i] < 0.0:
                roots.append(brentq(f, a, qe, xtol=_ROOT_XTOL))
                roots.append(brentq(f, qe, b, xtol=_ROOT_XTOL))

    roots = sorted(r % TWO_PI for r in roots)
    out: list[float] = []
    for r in roots:
        if not out or (r - out[-1] > 1e-10 and (TWO_PI - r + out[0]) % TWO_PI > 1e-10):
            out.append(r)
    return out


def find_equilibria(params: EngineParams, n_grid: int = 2048) -> list[Equilibrium]:
    """All equilibria for the given parameters, sorted by angle.

    Sign-change scan on a uniform grid with Brent refinement.  Cells whose
    endpoints agree in sign are probed at the interior torque extremum, which
    resolves root pairs born close together near a fold.  If the resulting
    root set is still inconsistent (odd count, or torque slopes that fail to
    alternate around the circle), the grid is doubled, up to ``2**16`` points.
    """
    n = n_grid
    while True:
        roots = _scan_roots(params, n)
        eqs = [classify_equilibrium(q, params) for q in roots]
        ok = len(eqs) % 2 == 0 and len(eqs) > 0
        if ok:
            m = len(eqs)
            ok = all(
                eqs[i].tau_prime * eqs[(i + 1) % m].tau_prime < 0.0 for i in range(m)
            )
        if ok:
            return eqs
        if n >= _GRID_MAX:
            raise GridResolutionError(
                f"equilibrium scan inconsistent at {n} grid points "
                f"(found {len(eqs)} roots); parameters may sit on a "
                "degenerate-root locus"
            )
        n *= 2


def _equilibrium_count(params: EngineParams, n_grid: int = 2048) -> int:
    return len(find_equilibria(params, n_grid))


def _newton_degenerate(
    params: EngineParams,
    q0: float,
    mu0: float,
    mu_name: str,
    max_iter: int = 50,
    tol: float = 1e-9,
) -> tuple[float, float] | None:
    """Damped Newton on ``(tau, tau') = 0`` in ``(q, mu)``.

    ``mu`` is one of the scalar parameters (``t_h`` or ``alpha``); the other
    parameters stay fixed.  Returns ``(q, mu)`` or None on non-convergence.
    """

    def residual(q: float, mu: float) -> np.ndarray:
        p = params.with_(**{mu_name: mu})
        return np.array([float(torque(q, p)), float(torque_prime(q, p))])

    x = np.array([q0, mu0])
    r = residual(*x)
    for _ in range(max_iter):
        nr = float(np.linalg.norm(r))
        if nr <= tol:
            return float(x[0] % TWO_PI), float(x[1])
        dq = 1e-7
        dm = 1e-7 * max(1.0, abs(x[1]))
        jq = (residual(x[0] + dq, x[1]) - r) / dq
        jm = (residual(x[0], x[1] + dm) - r) / dm
        try:
            step = np.linalg.solve(np.column_stack([jq, jm]), r)
        except np.linalg.LinAlgError:
            return None
        lam = 1.0
        for _ in range(10):
            xn = x - lam * step
            try:
                rn = residual(*xn)
            except ValueError:  # stepped outside the valid parameter domain
                lam *= 0.5
                continue
            if np.linalg.norm(rn) < nr:
                x, r = xn, rn
                break
            lam *= 0.5
        else:
            return None
    return None


def _closest_pair_midpoint(roots: list[float]) -> float:
    """Midpoint of the closest adjacent root pair on the circle."""
    m = len(roots)
    gaps = [(roots[(i + 1) % m] - roots[i]) % TWO_PI for i in range(m)]
    i = int(np.argmin(gaps))
    return (roots[i] + 0.5 * gaps[i]) % TWO_PI


def _count_or_none(params: EngineParams) -> int | None:
    try:
        return _equilibrium_count(params)
    except GridResolutionError:
        return None  # effectively on the degenerate locus


def pitchfork_locus(
    alpha_grid,
    t_h_range: tuple[float, float],
    params: EngineParams | None = None,
    n_t_samples: int = 21,
) -> list[PitchforkPoint]:
    """Degenerate-root locus over an ``alpha`` grid and a ``t_h`` range.

    Two passes.  First, at each ``alpha`` the equilibrium count is sampled
    over ``t_h`` and every count change is bisected, then polished by damped
    Newton on ``(tau, tau') = 0`` in ``(q, t_h)``.  Second, count changes
    between adjacent grid ``alpha`` values that persist across the whole
    temperature range reveal loci parallel to the ``t_h`` axis (these never
    intersect a fixed-``alpha`` temperature scan); each is bisected in
    ``alpha`` and polished in ``(q, alpha)`` at several temperatures.

    Points whose Newton polish fails are dropped with a warning.
    """
    if params is None:
        params = EngineParams()
    alphas = [float(a) for a in alpha_grid]
    if not alphas:
        raise ValueError("alpha_grid must be non-empty")
    t_lo, t_hi = map(float, t_h_range)
    if not (300.0 <= t_lo < t_hi <= 500.0):
        raise ValueError("t_h_range must be an increasing pair within [300, 500]")

    points: list[PitchforkPoint] = []
    ts = np.linspace(t_lo, t_hi, n_t_samples)

    # pass 1: temperature scans at fixed alpha
    for a in alphas:
        pa = params.with_(alpha=a)
        counts = [_count_or_none(pa.with_(t_h=float(t))) for t in ts]
        for i in range(len(ts) - 1):
            ca, cb = counts[i], counts[i + 1]
            if ca is None or cb is None or ca == cb:
                continue
            lo, hi, c_lo = float(ts[i]), float(ts[i + 1]), ca
            while hi - lo > 1e-3:
                mid = 0.5 * (lo + hi)
                cm = _count_or_none(pa.with_(t_h=mid))
                if cm is None:
                    break  # bisection pinned the degeneracy itself
                if cm == c_lo:
                    lo = mid
                else:
                    hi = mid
            rich = pa.with_(t_h=lo if c_lo > cb else hi)
            try:
                roots = [e.q_star for e in find_equilibria(rich)]
            except GridResolutionError:
                roots = []
            if not roots:
                warnings.warn(f"no seed for degenerate root near alpha={a}")
                continue
            sol = _newton_degenerate(
                pa, _closest_pair_midpoint(roots), 0.5 * (lo + hi), "t_h"
            )
            if sol is None:
                warnings.warn(
                    f"degenerate-root polish failed at alpha={a}, "
                    f"t_h~{0.5 * (lo + hi):.3f}"
                )
                continue
            q, th = sol
            if t_lo - 0.5 <= th <= t_hi + 0.5:
                points.append(PitchforkPoint(alpha=a, t_h=th, q_star=q))

    # pass 2: loci parallel to the t_h axis, invisible to pass 1
    probe_ts = [float(ts[0]), float(ts[len(ts) // 2]), float(ts[-1])]
    for a0, a1 in zip(alphas, alphas[1:]):
        changed = []
        for t in probe_ts:
            c0 = _count_or_none(params.with_(alpha=a0, t_h=t))
            c1 = _count_or_none(params.with_(alpha=a1, t_h=t))
            changed.append(c0 is not None and c1 is not None and c0 != c1)
        if not all(changed):
            continue
        t_mid = probe_ts[1]
        lo, hi = a0, a1
        c_lo = _equilibrium_count(params.with_(alpha=lo, t_h=t_mid))
        while hi - lo > 1e-9:
            mid = 0.5 * (lo + hi)
            cm = _count_or_none(params.with_(alpha=mid, t_h=t_mid))
            if cm is None:
                break
            if cm == c_lo:
                lo = mid
            else:
                hi = mid
        a_seed = 0.5 * (lo + hi)
        c_hi = _count_or_none(params.with_(alpha=hi, t_h=t_mid))
        rich_alpha = hi if (c_hi or 0) > c_lo else lo
        try:
            mid_roots = [
                e.q_star
                for e in find_equilibria(params.with_(alpha=rich_alpha, t_h=t_mid))
            ]
        except GridResolutionError:
            continue
        q_seed = _closest_pair_midpoint(mid_roots)
        for t in np.linspace(t_lo, t_hi, 9):
            pt = params.with_(t_h=float(t))
            sol = _newton_degenerate(pt, q_seed, a_seed, "alpha")
            if sol is None:
                warnings.warn(
                    f"degenerate-root polish failed at t_h={t}, alpha~{a_seed:.6f}"
                )
                continue
            q, astar = sol
            if a0 - 0.1 <= astar <= a1 + 0.1:
                points.append(PitchforkPoint(alpha=astar, t_h=float(t), q_star=q))

    points.sort(key=lambda p: (p.alpha, p.t_h))
    return points


def write_equilibria_csv(path, entries) -> None:
    """Write ``(alpha, t_h, Equilibrium)`` triples in the standard layout."""
    g = "%.17g"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("alpha,t_h,q_star,tau_prime,kind,eig_re_1,eig_im_1,eig_re_2,eig_im_2\n")
        for alpha, t_h, eq in entries:
            s1, s2 = eq.eigenvalues
            row = [g % alpha, g % t_h, g % eq.q_star, g % eq.tau_prime, eq.kind,
                   g % s1.real, g % s1.imag, g % s2.real, g % s2.imag]
            fh.write(",".join(row) + "\n")


def write_pitchfork_csv(path, points) -> None:
    g = "%.17g"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("alpha,t_h,q_star\n")
        for p in points:
            fh.write(f"{g % p.alpha},{g % p.t_h},{g % p.q_star}\n")
