"""Equilibrium census, classification, and the degenerate-root locus."""

import math
from unittest import mock

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stirling.core import TWO_PI, EngineParams, torque
from stirling.equilibria import (
    GridResolutionError,
    classify_equilibrium,
    find_equilibria,
    pitchfork_locus,
    write_equilibria_csv,
    write_pitchfork_csv,
)

P = EngineParams()


# -- classification ----------------------------------------------------------

def test_classify_negative_slope_is_stable_focus():
    # tau' = -1: eigenvalues -0.1 +- 1.4107 i
    e = _classify_with_slope(-1.0)
    assert e.kind == "stable_focus"
    s1, s2 = e.eigenvalues
    assert s1.real == pytest.approx(-0.1, rel=1e-12)
    assert s1.imag == pytest.approx(1.4106735979665885, rel=1e-9)
    assert s2 == s1.conjugate()


def test_classify_positive_slope_is_saddle():
    e = _classify_with_slope(1.0)
    assert e.kind == "saddle"
    s1, s2 = e.eigenvalues
    assert s1.real == pytest.approx(1.3177446878757824, rel=1e-9)
    assert s2.real == pytest.approx(-1.5177446878757825, rel=1e-9)
    assert s1.imag == 0.0 == s2.imag


def test_classify_small_negative_slope_is_stable_node():
    # between -k_f^2/(4 I) = -0.005 and 0: two real negative eigenvalues
    e = _classify_with_slope(-0.004)
    assert e.kind == "stable_node"
    s1, s2 = e.eigenvalues
    assert s1.imag == 0.0 and s2.imag == 0.0
    assert s1.real < 0.0 and s2.real < 0.0


def test_classify_zero_slope_is_non_hyperbolic():
    e = _classify_with_slope(0.0)
    assert e.kind == "non_hyperbolic"


def _classify_with_slope(target):
    """Classify an equilibrium whose torque slope is pinned to ``target``."""
    import stirling.equilibria as eq

    with mock.patch.object(eq, "torque_prime", lambda q, p: target):
        return classify_equilibrium(0.0, P)


def test_classify_matches_jacobian_eigenvalues():
    # independent eigenvalue computation of [[0, 1], [tau'/I, -k_f/I]]
    p = P.with_(alpha=2.2, t_h=360.0)
    for e in find_equilibria(p):
        jac = np.array([[0.0, 1.0],
                        [e.tau_prime / p.inertia, -p.k_f / p.inertia]])
        lam = np.sort_complex(np.linalg.eigvals(jac))
        got = np.sort_complex(np.array(e.eigenvalues))
        assert np.allclose(lam, got, rtol=1e-9, atol=1e-12)
        if e.kind == "saddle":
            assert max(s.real for s in e.eigenvalues) > 0.0
        else:
            assert max(s.real for s in e.eigenvalues) < 0.0


# -- find_equilibria ---------------------------------------------------------

def test_zero_phase_has_roots_at_zero_and_pi():
    eqs = find_equilibria(P.with_(alpha=0.0, t_h=298.15))
    qs = [e.q_star for e in eqs]
    assert min(abs(q - 0.0) for q in qs) < 1e-9
    assert min(abs(q - math.pi) for q in qs) < 1e-9


def test_census_at_symmetric_phase():
    eqs = find_equilibria(P.with_(alpha=math.pi, t_h=376.2))
    assert [e.kind for e in eqs] == ["saddle", "stable_focus",
                                     "saddle", "stable_focus"]
    qs = [e.q_star for e in eqs]
    assert qs == pytest.approx([0.0, math.pi / 2, math.pi, 3 * math.pi / 2],
                               abs=1e-9)


def test_roots_satisfy_torque_tolerance():
    for alpha, t_h in [(2.2, 360.0), (0.7, 430.0), (1.64, 376.2)]:
        p = P.with_(alpha=alpha, t_h=t_h)
        for e in find_equilibria(p):
            assert abs(torque(e.q_star, p)) <= 1e-9


def test_count_is_even_and_slopes_alternate():
    rng = np.random.default_rng(7)
    for _ in range(25):
        p = P.with_(alpha=float(rng.uniform(0.05, TWO_PI - 0.05)),
                    t_h=float(rng.uniform(300.0, 500.0)))
        eqs = find_equilibria(p)
        assert len(eqs) in (2, 4)
        signs = [math.copysign(1.0, e.tau_prime) for e in eqs]
        assert all(signs[i] != signs[(i + 1) % len(signs)]
                   for i in range(len(signs)))


def test_no_unstable_focus_ever():
    rng = np.random.default_rng(11)
    for _ in range(25):
        p = P.with_(alpha=float(rng.uniform(0.0, TWO_PI - 1e-9)),
                    t_h=float(rng.uniform(300.0, 500.0)))
        for e in find_equilibria(p):
            assert e.kind in ("saddle", "stable_focus", "stable_node",
                              "non_hyperbolic")
            if e.kind == "stable_focus":
                assert all(s.real < 0.0 for s in e.eigenvalues)


def test_near_fold_pair_resolved():
    # just below the fold, two roots sit ~1e-2 apart; the scan must see both
    eqs = find_equilibria(P.with_(alpha=1.6450, t_h=376.2))
    assert len(eqs) == 4


def test_flip_symmetry_of_census():
    p = P.with_(alpha=2.2, t_h=376.2)
    pf = P.with_(alpha=TWO_PI - 2.2, t_h=376.2)
    qs = sorted(e.q_star for e in find_equilibria(p))
    qs_f = sorted((TWO_PI - e.q_star) % TWO_PI for e in find_equilibria(pf))
    assert np.allclose(sorted(qs), sorted(qs_f), atol=1e-9)


def test_near_degenerate_alpha_stays_consistent():
    # within float resolution of the twin-birth angle the tangency misses
    # zero, so the census still comes back even with alternating slopes
    eqs = find_equilibria(P.with_(alpha=2.554299715, t_h=400.0))
    assert len(eqs) in (2, 4)
    signs = [math.copysign(1.0, e.tau_prime) for e in eqs]
    assert all(signs[i] != signs[(i + 1) % len(signs)]
               for i in range(len(signs)))


def test_grid_error_on_true_tangency():
    # a torque whose roots are all tangential never yields alternating
    # slopes, so doubling runs out and the scan reports the degeneracy
    import stirling.equilibria as eq

    with mock.patch.object(eq, "torque",
                           lambda q, p: np.sin(np.asarray(q)) ** 2), \
         mock.patch.object(eq, "torque_prime",
                           lambda q, p: np.sin(2.0 * np.asarray(q))):
        with pytest.raises(GridResolutionError):
            find_equilibria(P, n_grid=2048)


# -- pitchfork locus ---------------------------------------------------------

def test_locus_crossings_at_reference_temperature():
    pts = pitchfork_locus([1.60, 1.66], (370.0, 382.0))
    assert pts, "fold branch not found"
    # the fold curve passes close to (1.645, 376.2)
    t_at = {round(p.alpha, 2): p.t_h for p in pts}
    assert 370.0 < t_at[1.6] < 382.0
    assert t_at[1.66] < t_at[1.6]


def test_locus_vertical_branch():
    pts = pitchfork_locus([2.50, 2.60], (350.0, 450.0))
    alphas = {round(p.alpha, 6) for p in pts}
    assert 2.5543 == pytest.approx(min(alphas), abs=1e-3)
    # same alpha across all sampled temperatures
    assert max(alphas) - min(alphas) < 1e-6


def test_locus_rejects_bad_range():
    with pytest.raises(ValueError):
        pitchfork_locus([1.0], (200.0, 400.0))
    with pytest.raises(ValueError):
        pitchfork_locus([], (300.0, 400.0))


# -- CSV ---------------------------------------------------------------------

def test_equilibria_csv_schema(tmp_path):
    p = P.with_(alpha=2.2, t_h=360.0)
    eqs = find_equilibria(p)
    path = tmp_path / "eq.csv"
    write_equilibria_csv(path, [(p.alpha, p.t_h, e) for e in eqs])
    lines = path.read_text().splitlines()
    assert lines[0] == ("alpha,t_h,q_star,tau_prime,kind,"
                        "eig_re_1,eig_im_1,eig_re_2,eig_im_2")
    assert len(lines) == len(eqs) + 1
    first = lines[1].split(",")
    assert first[4] in ("saddle", "stable_focus", "stable_node",
                        "non_hyperbolic")


def test_pitchfork_csv_schema(tmp_path):
    from stirling.equilibria import PitchforkPoint

    path = tmp_path / "pf.csv"
    write_pitchfork_csv(path, [PitchforkPoint(1.0, 350.0, 0.5)])
    lines = path.read_text().splitlines()
    assert lines[0] == "alpha,t_h,q_star"
    assert lines[1] == "1,350,0.5"
