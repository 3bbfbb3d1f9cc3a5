"""Descent solvers for the constrained and unconstrained problems.

Each iteration moves vertices along their normals with the L2 (lumped) gradient
of the energy, discretised linearly-implicitly in the stiff terms::

    (M + dt (K + D+)) v = -(f - mu a),    x_i <- x_i + dt v_i nu_i

where ``f`` and ``a`` are the normal components of the energy and area
gradients, ``K`` is the anisotropic stiffness matrix, ``D+`` the positive part
of the potential's normal derivative, and ``mu`` keeps ``v`` tangent to the
area constraint. Steps are accepted by an Armijo test and rejected if they
create an intersection; constrained iterates are then projected back onto the
target area by a uniform normal offset.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .anisotropy import Anisotropy
from .curve2d import (
    MultiCurve,
    circle,
    enclosed_area,
    frame,
    intersecting_edges,
    loop_depths,
    loop_lengths,
    point_segment_distance,
    random_star,
    resample,
    shoelace,
)
from .errors import AllComponentsVanished, InputError, ProjectionFailure
from .potential import Potential, signed_distance_potential
from .variation import (
    VariationReport,
    area_gradient,
    bulk_energy,
    bulk_gradient,
    first_variation_residual,
    stiffness_matrix,
    surface_energy,
    surface_gradient,
)

logger = logging.getLogger("anisoshape")


@dataclass
class SolveConfig:
    volume: float | None = None  # None: unconstrained problem
    n_vertices: int = 256
    dt: float = 1e-2
    dt_max: float = 10.0
    dt_min: float = 1e-12
    backtrack: float = 0.5
    grow: float = 1.5
    armijo: float = 1e-4
    tol: float = 5e-4
    max_iter: int = 20000
    remesh_every: int = 20
    remesh_ratio: float = 1.5
    max_move: float = 2.0  # largest displacement per step, in units of mean edge length
    r_max: float = 50.0
    eps_kill: float | None = None
    merge_factor: float = 0.5
    min_loop_vertices: int = 16
    n_starts: int = 5
    seed: int = 0
    log_every: int = 0  # keep every k-th accepted iterate in the trajectory (0: none)

    def validate(self) -> None:
        if self.dt <= 0 or self.tol <= 0:
            raise InputError("dt and tol must be positive")
        if self.volume is not None:
            if self.volume <= 0:
                raise InputError("target volume must be positive")
            if self.kill_threshold >= self.volume / 10:
                raise InputError("eps_kill must be below volume / 10")
        if not 0 < self.backtrack < 1:
            raise InputError("backtrack factor must lie in (0, 1)")

    @property
    def kill_threshold(self) -> float:
        if self.eps_kill is not None:
            return self.eps_kill
        return 1e-3 * self.volume if self.volume is not None else 1e-4


@dataclass
class SolveResult:
    curve: MultiCurve
    iterations: int
    energy_history: list[float]
    residual_history: list[float]
    events: list[dict]
    termination: str
    report: VariationReport | None = None
    trajectory: list[MultiCurve] = field(default_factory=list)
    starts: list[dict] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.termination == "converged"

    @property
    def energy(self) -> float:
        return self.energy_history[-1] if self.energy_history else float("nan")


# ---------------------------------------------------------------------------
# geometric helpers


def project_area(curve: MultiCurve, volume: float, rel_tol: float = 1e-8, max_iter: int = 10) -> MultiCurve:
    """Uniform normal offset ``x + s nu`` with ``s`` found by Newton so that
    the enclosed area equals ``volume``."""
    nu = frame(curve).vertex_normal
    p = curve.points
    s = 0.0
    best = None
    for _ in range(max_iter + 1):
        c = curve.with_points(p + s * nu)
        err = enclosed_area(c) - volume
        if best is None or abs(err) < best[0]:
            best = (abs(err), c)
        if abs(err) <= 1e-14 * volume:
            break
        slope = float(np.sum(area_gradient(c) * nu))
        if slope <= 0:
            break
        s -= err / slope
    if best[0] > rel_tol * volume:
        raise ProjectionFailure(f"area projection missed by {best[0]:.3g}")
    return best[1]


def loop_distance(a: np.ndarray, b: np.ndarray) -> float:
    dist, _ = point_segment_distance(a, b, np.roll(b, -1, axis=0))
    return float(dist.min())


def _to_shapely(curve: MultiCurve):
    from shapely.geometry import Polygon
    from shapely.ops import unary_union

    depth = loop_depths(curve.loops)
    polys = []
    for k, loop in enumerate(curve.loops):
        if depth[k] % 2 == 0:
            holes = [
                h for j, h in enumerate(curve.loops)
                if depth[j] == depth[k] + 1 and Polygon(loop).contains(Polygon(h).representative_point())
            ]
            polys.append(Polygon(loop, holes))
    return unary_union(polys)


def _from_shapely(geom, target_h: float, min_vertices: int) -> MultiCurve:
    from shapely.geometry import Polygon

    polys = [geom] if isinstance(geom, Polygon) else list(getattr(geom, "geoms", []))
    loops = []
    for poly in polys:
        for ring in [poly.exterior, *poly.interiors]:
            pts = np.asarray(ring.coords)[:-1]
            if len(pts) < 3:
                continue
            n = max(min_vertices, int(round(ring.length / target_h)))
            loops.append(resample(MultiCurve((pts,)), [n]).loops[0])
    depth = loop_depths(loops)
    oriented = []
    for loop, d in zip(loops, depth):
        if (shoelace(loop) > 0) != (d % 2 == 0):
            loop = loop[::-1].copy()
        oriented.append(loop)
    return MultiCurve(tuple(oriented))


def merge_close_loops(curve: MultiCurve, gap: float, target_h: float, min_vertices: int):
    """Boolean union of loops closer than ``gap``; returns ``(curve, merged?)``."""
    depth = loop_depths(curve.loops)
    outer = [k for k in range(len(curve.loops)) if depth[k] % 2 == 0]
    close = False
    for ia, a in enumerate(outer):
        for b in outer[ia + 1:]:
            if loop_distance(curve.loops[a], curve.loops[b]) < gap:
                close = True
                break
        if close:
            break
    if not close:
        return curve, False
    geom = _to_shapely(curve).buffer(gap, join_style="round").buffer(-gap, join_style="round")
    return _from_shapely(geom, target_h, min_vertices), True


def remesh_uniform(curve: MultiCurve, n_total: int, min_vertices: int) -> MultiCurve:
    lengths = loop_lengths(curve)
    target_h = float(np.sum(lengths)) / n_total
    counts = [max(min_vertices, int(round(L / target_h))) for L in lengths]
    return resample(curve, counts)


def delete_small(curve: MultiCurve, threshold: float) -> tuple[MultiCurve, list[int]]:
    depth = loop_depths(curve.loops)
    areas = np.abs(curve.loop_areas)
    drop = set(int(k) for k in np.nonzero(areas < threshold)[0])
    # holes of a deleted outer loop go with it
    for k in list(drop):
        if depth[k] % 2 == 0:
            from .curve2d import points_in_loop

            for j, lp in enumerate(curve.loops):
                if depth[j] == depth[k] + 1 and points_in_loop(lp[:1], curve.loops[k])[0]:
                    drop.add(j)
    keep = tuple(lp for k, lp in enumerate(curve.loops) if k not in drop)
    return MultiCurve(keep), sorted(drop)


# ---------------------------------------------------------------------------
# descent


class _Problem:
    def __init__(self, aniso: Anisotropy, g: Potential, volume: float | None):
        self.aniso = aniso
        self.g = g
        self.volume = volume

    def energy(self, curve: MultiCurve) -> float:
        return surface_energy(curve, self.aniso) + bulk_energy(curve, self.g)

    def state(self, curve: MultiCurve) -> dict:
        fr = frame(curve)
        nu = fr.vertex_normal
        bulk, bgrad = bulk_gradient(curve, self.g)
        f = np.sum((surface_gradient(curve, self.aniso) + bgrad) * nu, axis=1)
        d = fr.dual_length
        if self.volume is not None:
            a = np.sum(area_gradient(curve) * nu, axis=1)
            mu = float(np.sum(f * a / d) / np.sum(a * a / d))
            res = (f - mu * a) / d
        else:
            a = None
            mu = 0.0
            res = f / d
        dng = np.maximum(self.g.normal_derivative(curve.points, nu), 0.0)
        K = stiffness_matrix(curve, self.aniso.tangential(fr.normal), fr)
        return dict(frame=fr, f=f, a=a, mu=mu, res=res, d=d, dng=dng, K=K,
                    F=surface_energy(curve, self.aniso) + bulk)

    def velocity(self, st: dict, dt: float) -> np.ndarray:
        P = (sp.diags(st["d"] * (1.0 + dt * st["dng"])) + dt * st["K"]).tocsc()
        lu = spla.splu(P)
        y1 = lu.solve(st["f"])
        if st["a"] is None:
            return -y1
        y2 = lu.solve(st["a"])
        lam = float(st["a"] @ y1) / float(st["a"] @ y2)
        return -(y1 - lam * y2)


def _descend(init: MultiCurve, aniso: Anisotropy, g: Potential, cfg: SolveConfig) -> SolveResult:
    cfg.validate()
    constrained = cfg.volume is not None
    prob = _Problem(aniso, g, cfg.volume)
    curve = init
    events: list[dict] = []
    if constrained:
        curve = project_area(curve, cfg.volume)
    if intersecting_edges(curve).size:
        raise InputError("initial curve is not simple")
    st = prob.state(curve)
    energies = [st["F"]]
    residuals = [float(np.max(np.abs(st["res"])))]
    trajectory = [curve] if cfg.log_every else []
    dt = cfg.dt
    termination = "max_iterations"
    it = 0
    for it in range(1, cfg.max_iter + 1):
        if residuals[-1] < cfg.tol:
            termination = "converged"
            it -= 1
            break
        merit_old = st["F"]
        accepted = False
        while dt >= cfg.dt_min:
            v = prob.velocity(st, dt)
            step = dt * v
            h = float(np.mean(st["frame"].length))
            big = float(np.max(np.abs(step)))
            if big > cfg.max_move * h:
                dt *= cfg.backtrack
                continue
            trial = curve.with_points(curve.points + step[:, None] * st["frame"].vertex_normal)
            if np.any(np.diff(trial.offsets) < 3) or np.any(trial.loop_areas * curve.loop_areas <= 0):
                dt *= cfg.backtrack
                continue
            if constrained:
                try:
                    trial = project_area(trial, cfg.volume)
                except ProjectionFailure:
                    dt *= cfg.backtrack
                    continue
            descent = float(np.sum(st["f"] * step))
            F_new = prob.energy(trial)
            if F_new > merit_old + cfg.armijo * descent or intersecting_edges(trial).size:
                dt *= cfg.backtrack
                continue
            accepted = True
            break
        if not accepted:
            termination = "stalled"
            break
        curve = trial
        dt = min(dt * cfg.grow, cfg.dt_max)

        changed = False
        if cfg.r_max and np.max(np.linalg.norm(curve.points, axis=1)) > cfg.r_max:
            p = curve.points.copy()
            r = np.linalg.norm(p, axis=1)
            out = r > cfg.r_max
            p[out] *= (cfg.r_max / r[out])[:, None]
            curve = curve.with_points(p)
            events.append({"iteration": it, "event": "clamp", "vertices": int(out.sum())})
            changed = True
        curve, dropped = delete_small(curve, cfg.kill_threshold)
        if dropped:
            events.append({"iteration": it, "event": "delete", "loops": dropped})
            changed = True
            if not curve.loops:
                termination = "all_components_vanished"
                energies.append(0.0)
                break
        if len(curve.loops) > 1:
            h = curve.h
            merged_curve, merged = merge_close_loops(curve, cfg.merge_factor * h, h, cfg.min_loop_vertices)
            if merged:
                events.append({"iteration": it, "event": "merge", "loops_before": len(curve.loops),
                               "loops_after": len(merged_curve.loops)})
                curve = merged_curve
                changed = True
        if cfg.remesh_every and it % cfg.remesh_every == 0:
            ell = curve.edge_lengths
            if float(ell.max() / ell.min()) > cfg.remesh_ratio:
                curve = remesh_uniform(curve, cfg.n_vertices, cfg.min_loop_vertices)
                events.append({"iteration": it, "event": "remesh", "n_vertices": curve.n_vertices})
                changed = True
        if changed and constrained:
            curve = project_area(curve, cfg.volume)
        st = prob.state(curve)
        energies.append(st["F"])
        residuals.append(float(np.max(np.abs(st["res"]))))
        if cfg.log_every and it % cfg.log_every == 0:
            trajectory.append(curve)
    else:
        if residuals[-1] < cfg.tol:
            termination = "converged"

    result = SolveResult(
        curve=curve,
        iterations=it,
        energy_history=energies,
        residual_history=residuals,
        events=events,
        termination=termination,
        trajectory=trajectory,
    )
    if curve.loops:
        result.report = first_variation_residual(curve, aniso, g, constrained)
    logger.info("descent finished: %s after %d iterations, F=%.8g", termination, it, energies[-1])
    return result


def minimize_constrained(init: MultiCurve, aniso: Anisotropy, g: Potential, cfg: SolveConfig) -> SolveResult:
    """Descend ``F`` at fixed enclosed area ``cfg.volume`` from ``init``.

    Non-convergence is reported through ``termination`` with the last iterate.
    """
    if cfg.volume is None:
        raise InputError("minimize_constrained needs cfg.volume")
    if enclosed_area(init) <= 0:
        raise InputError("initial curve must enclose positive area")
    return _descend(init, aniso, g, cfg)


def minimize_unconstrained(init: MultiCurve, aniso: Anisotropy, g: Potential, cfg: SolveConfig) -> SolveResult:
    """Descend ``F`` with free area.

    Raises :class:`AllComponentsVanished` (carrying the partial result) when
    every component shrinks away, which is the correct outcome whenever the
    empty set has lower energy.
    """
    if cfg.volume is not None:
        cfg = SolveConfig(**{**asdict(cfg), "volume": None})
    res = _descend(init, aniso, g, cfg)
    if res.termination == "all_components_vanished":
        raise AllComponentsVanished("all components vanished during descent", res)
    return res


def random_initial(rng: np.random.Generator, n: int, volume: float) -> MultiCurve:
    """Random smooth star-shaped loop with the given enclosed area."""
    r0 = np.sqrt(volume / np.pi)
    center = rng.uniform(-0.25, 0.25, size=2) * r0
    loop = random_star(rng, n, modes=4, amplitude=rng.uniform(0.1, 0.35), radius=r0)
    loop = loop * np.sqrt(volume / shoelace(loop))
    return MultiCurve((loop + center,))


def minimize_multistart(aniso: Anisotropy, g: Potential, cfg: SolveConfig,
                        init: MultiCurve | None = None) -> SolveResult:
    """Run several descents and keep the lowest converged energy.

    Starts are ``init`` (if given) plus random star-shaped curves drawn from
    ``cfg.seed``, up to ``cfg.n_starts`` runs in total.
    """
    rng = np.random.default_rng(cfg.seed)
    inits = [init] if init is not None else []
    volume = cfg.volume
    while len(inits) < max(1, cfg.n_starts):
        if volume is None:
            inits.append(MultiCurve((circle(1.0, cfg.n_vertices),)))
            volume = np.pi
        else:
            inits.append(random_initial(rng, cfg.n_vertices, volume))
    best = None
    summary = []
    for k, start in enumerate(inits):
        if cfg.volume is None:
            try:
                res = minimize_unconstrained(start, aniso, g, cfg)
            except AllComponentsVanished as exc:
                res = exc.result
        else:
            res = minimize_constrained(start, aniso, g, cfg)
        summary.append({"start": k, "energy": res.energy, "termination": res.termination,
                        "iterations": res.iterations})
        key = (not res.converged, res.energy)
        if best is None or key < best[0]:
            best = (key, res)
    result = best[1]
    result.starts = summary
    return result


def atw_step(prev: MultiCurve, aniso: Anisotropy, tau: float, cfg: SolveConfig | None = None) -> MultiCurve:
    """One minimising-movements step: unconstrained descent of
    ``F = surface + int sdist(., prev) / tau`` started from ``prev``."""
    # no remeshing: vertices stay paired with the base curve for the band quadrature
    cfg = cfg or SolveConfig(n_vertices=prev.n_vertices, tol=1e-3, max_iter=2000, dt=1.0, remesh_every=0)
    g = signed_distance_potential(prev, tau)
    return minimize_unconstrained(prev, aniso, g, cfg).curve
