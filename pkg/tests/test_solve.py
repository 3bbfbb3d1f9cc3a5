import numpy as np
import pytest

from anisoshape.anisotropy import elliptic, iso
from anisoshape.curve2d import MultiCurve, circle, enclosed_area, polar_loop
from anisoshape.errors import AllComponentsVanished, InputError
from anisoshape.potential import quadratic
from anisoshape.solve import (
    SolveConfig,
    atw_step,
    delete_small,
    merge_close_loops,
    minimize_constrained,
    minimize_multistart,
    minimize_unconstrained,
    project_area,
)
from anisoshape.twopoint import two_point
from anisoshape.variation import spectrum
from oracles import critical_radii, star

BALL_G = quadratic(3.0, (0, 0), -3.0)


def ellipse(n=128, a=1.3, b=0.7):
    t = 2 * np.pi * np.arange(n) / n
    return MultiCurve((np.stack([a * np.cos(t), b * np.sin(t)], axis=1),))


def energy_monotone_between_events(res):
    marks = {e["iteration"] for e in res.events}
    E = np.asarray(res.energy_history)
    return all(E[k + 1] <= E[k] + 1e-12 for k in range(len(E) - 1) if (k + 1) not in marks)


def test_project_area():
    c = project_area(ellipse(), 2.0)
    assert abs(enclosed_area(c) - 2.0) <= 1e-8 * 2.0


def test_constrained_ellipse_to_disk():
    cfg = SolveConfig(volume=np.pi, n_vertices=128, tol=1e-5)
    res = minimize_constrained(ellipse(), iso(), quadratic(1.0), cfg)
    assert res.converged
    assert abs(enclosed_area(res.curve) - np.pi) <= 1e-8 * np.pi
    assert energy_monotone_between_events(res)
    r = np.linalg.norm(res.curve.points, axis=1)
    assert np.abs(r - 1).max() < 1e-2
    lam = spectrum(res.curve, iso(), quadratic(1.0), "mean_zero", k=1).values[0]
    assert lam >= -10 * res.curve.h
    assert len(res.curve.loops) == 1 and two_point(res.curve).S.max() < res.curve.h


def test_wulff_recovered_anisotropic():
    a = elliptic(2.0, 1.0)
    cfg = SolveConfig(volume=2 * np.pi, n_vertices=128, tol=1e-5)
    res = minimize_constrained(MultiCurve((circle(np.sqrt(2.0), 128),)), a, quadratic(1e-2), cfg)
    assert res.converged
    x, y = res.curve.points.T
    assert np.abs(x).max() == pytest.approx(2.0, abs=3e-2)
    assert np.abs(y).max() == pytest.approx(1.0, abs=3e-2)


def test_unconstrained_critical_radius():
    res = minimize_unconstrained(MultiCurve((circle(0.9, 128),)), iso(), BALL_G, SolveConfig(n_vertices=128, tol=1e-6))
    assert res.converged
    assert np.sqrt(enclosed_area(res.curve) / np.pi) == pytest.approx(critical_radii()[1], abs=2e-3)


def test_unconstrained_star_becomes_convex():
    res = minimize_unconstrained(star(2, 256), iso(), BALL_G, SolveConfig(n_vertices=256, tol=1e-5))
    assert res.converged
    assert two_point(res.curve).S.max() < 5e-3


def test_positive_potential_vanishes():
    with pytest.raises(AllComponentsVanished) as info:
        minimize_unconstrained(MultiCurve((circle(1.0, 64),)), iso(), quadratic(1.0, (0, 0), 1.0),
                               SolveConfig(n_vertices=64))
    assert info.value.result.termination == "all_components_vanished"
    assert info.value.result.iterations > 0


def test_two_disks_merge():
    r0 = np.sqrt(0.5)
    init = MultiCurve((circle(r0, 96, (-1.2, 0)), circle(r0, 96, (1.2, 0))))
    res = minimize_constrained(init, iso(), quadratic(1.0), SolveConfig(volume=np.pi, n_vertices=192, tol=1e-5))
    assert res.converged
    assert len(res.curve.loops) == 1
    assert any(e["event"] == "merge" for e in res.events)


def test_small_component_deleted():
    init = MultiCurve((circle(1.0, 128), circle(0.01, 16, (3, 0))))
    res = minimize_constrained(init, iso(), quadratic(1.0), SolveConfig(volume=np.pi, n_vertices=128, tol=1e-5))
    assert any(e["event"] == "delete" for e in res.events)
    assert len(res.curve.loops) == 1


def test_delete_and_merge_helpers():
    c = MultiCurve((circle(1.0, 64), circle(0.01, 16, (3, 0))))
    kept, dropped = delete_small(c, 1e-3)
    assert dropped == [1] and len(kept.loops) == 1
    pair = MultiCurve((circle(1.0, 128, (-1.005, 0)), circle(1.0, 128, (1.005, 0))))
    merged, did = merge_close_loops(pair, 0.02, pair.h, 16)
    assert did and len(merged.loops) == 1
    apart = MultiCurve((circle(1.0, 64, (-2, 0)), circle(1.0, 64, (2, 0))))
    assert not merge_close_loops(apart, 0.05, apart.h, 16)[1]


def test_clamp_logged():
    init = MultiCurve((circle(1.0, 64, (0.5, 0)),))
    res = minimize_constrained(init, iso(), quadratic(1.0), SolveConfig(volume=np.pi, n_vertices=64, r_max=1.45,
                                                                         max_iter=5))
    assert any(e["event"] == "clamp" for e in res.events)


def test_config_validation():
    with pytest.raises(InputError):
        SolveConfig(volume=1.0, eps_kill=0.5).validate()
    with pytest.raises(InputError):
        SolveConfig(dt=0.0).validate()
    with pytest.raises(InputError):
        SolveConfig(tol=-1.0).validate()
    with pytest.raises(InputError):
        minimize_constrained(MultiCurve((circle(1.0, 16),)), iso(), quadratic(1.0), SolveConfig())
    with pytest.raises(InputError):
        minimize_constrained(MultiCurve((circle(1.0, 16)[::-1],)), iso(), quadratic(1.0), SolveConfig(volume=1.0))


def test_max_iterations_reported():
    res = minimize_constrained(star(0, 128), iso(), quadratic(1.0), SolveConfig(volume=np.pi, max_iter=3))
    assert res.termination == "max_iterations" and not res.converged and res.iterations == 3


def test_multistart_deterministic():
    cfg = SolveConfig(volume=np.pi, n_vertices=96, tol=1e-4, n_starts=3, seed=7)
    a = minimize_multistart(iso(), quadratic(1.0), cfg)
    b = minimize_multistart(iso(), quadratic(1.0), cfg)
    assert len(a.starts) == 3
    assert np.array_equal(a.curve.points, b.curve.points)
    assert a.energy == min(s["energy"] for s in a.starts if s["termination"] == "converged")


def test_trajectory_logging():
    res = minimize_constrained(ellipse(), iso(), quadratic(1.0), SolveConfig(volume=np.pi, log_every=5, tol=1e-4))
    assert len(res.trajectory) >= 2


def test_atw_circle_step():
    c = MultiCurve((circle(1.0, 128),))
    tau = 1e-3
    nxt = atw_step(c, iso(), tau)
    r0 = np.sqrt(enclosed_area(c) / np.pi)
    r = np.sqrt(enclosed_area(nxt) / np.pi)
    assert r == pytest.approx(r0 - tau / r0, abs=5 * tau**2 + 1e-5)


def test_atw_huge_tau_vanishes():
    with pytest.raises(AllComponentsVanished):
        atw_step(MultiCurve((circle(1.0, 64),)), iso(), 1e6)


def test_atw_nonconvex_base_accepted():
    c = MultiCurve((polar_loop(lambda t: 1 + 0.2 * np.cos(3 * t), 128),))
    with pytest.warns(UserWarning):
        nxt = atw_step(c, iso(), 1e-3)
    assert enclosed_area(nxt) < enclosed_area(c)
