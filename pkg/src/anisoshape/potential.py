"""Convex coercive potentials and their moduli of convexity."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .curve2d import MultiCurve, convex_hull, frame, point_segment_distance, points_in_loop
from .errors import InputError, NonConvexBaseWarning, NonConvexSample

FAMILIES = ("quadratic", "tilted", "sdist")


@dataclass(frozen=True, eq=False)
class Potential:
    """Bulk energy density ``g``.

    * ``quadratic`` params ``(a, cx, cy[, b])``: ``a |x - c|^2 + b``
    * ``tilted`` params ``(a, cx, cy, vx, vy[, b])``: ``a |x - c|^2 + <v, x> + b``
    * ``sdist``: signed distance to ``base`` divided by ``tau`` (negative inside)
    """

    family: str
    params: tuple[float, ...] = ()
    base: MultiCurve | None = None
    tau: float = 1.0
    convex_base: bool = True
    _segments: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown potential family {self.family!r}; choose from {FAMILIES}")
        if self.family == "quadratic" and (len(self.params) not in (3, 4) or self.params[0] < 0):
            raise InputError("quadratic potential needs params (a, cx, cy[, b]) with a >= 0")
        if self.family == "tilted" and (len(self.params) not in (5, 6) or self.params[0] <= 0):
            raise InputError("tilted potential needs params (a, cx, cy, vx, vy[, b]) with a > 0")
        if self.family == "sdist":
            if self.base is None or self.tau <= 0:
                raise InputError("sdist potential needs a base curve and tau > 0")
            p = self.base.points
            fr = frame(self.base)
            object.__setattr__(self, "_segments", (p, p[self.base.nxt], fr.normal))

    @property
    def quadratic_coefficient(self) -> float | None:
        return self.params[0] if self.family in ("quadratic", "tilted") else None

    def _quad(self):
        a, cx, cy = self.params[:3]
        if self.family == "quadratic":
            b = self.params[3] if len(self.params) == 4 else 0.0
            v = np.zeros(2)
        else:
            v = np.array(self.params[3:5])
            b = self.params[5] if len(self.params) == 6 else 0.0
        return a, np.array([cx, cy]), v, b

    def value(self, x) -> np.ndarray:
        return self.eval_with_grad(x)[0]

    def grad(self, x) -> np.ndarray:
        return self.eval_with_grad(x)[1]

    def eval_with_grad(self, x):
        x = np.asarray(x, dtype=float)
        if self.family != "sdist":
            a, c, v, b = self._quad()
            d = x - c
            val = a * np.sum(d * d, axis=-1) + x @ v + b
            return val, 2 * a * d + v
        flat = x.reshape(-1, 2)
        s, g = _signed_distance(flat, self.base, self._segments)
        return (s / self.tau).reshape(x.shape[:-1]), (g / self.tau).reshape(x.shape)

    def normal_derivative(self, x, nu) -> np.ndarray:
        return np.sum(self.grad(x) * nu, axis=-1)

    @property
    def spec(self) -> str:
        if self.family == "sdist":
            return f"sdist(tau={self.tau!r})"
        return f"{self.family}:" + ",".join(repr(float(p)) for p in self.params)


def _signed_distance(x: np.ndarray, base: MultiCurve, segments):
    a, b, normals = segments
    out_val = np.empty(len(x))
    out_grad = np.empty((len(x), 2))
    chunk = max(1, 2_000_000 // max(len(a), 1))
    for lo in range(0, len(x), chunk):
        pts = x[lo : lo + chunk]
        dist, foot = point_segment_distance(pts, a, b)
        k = np.argmin(dist, axis=1)
        rows = np.arange(len(pts))
        d = dist[rows, k]
        inside = np.zeros(len(pts), dtype=bool)
        for loop in base.loops:
            inside ^= points_in_loop(pts, loop)
        sign = np.where(inside, -1.0, 1.0)
        diff = pts - foot[rows, k]
        scale = max(float(np.max(np.abs(a))), 1.0)
        on_curve = d <= 1e-14 * scale
        with np.errstate(invalid="ignore", divide="ignore"):
            g = sign[:, None] * diff / d[:, None]
        g[on_curve] = normals[k[on_curve]]
        out_val[lo : lo + chunk] = sign * d
        out_grad[lo : lo + chunk] = g
    return out_val, out_grad


def quadratic(a: float, center=(0.0, 0.0), b: float = 0.0) -> Potential:
    return Potential("quadratic", (float(a), float(center[0]), float(center[1]), float(b)))


def tilted(a: float, v, center=(0.0, 0.0), b: float = 0.0) -> Potential:
    return Potential("tilted", (float(a), float(center[0]), float(center[1]), float(v[0]), float(v[1]), float(b)))


def signed_distance_potential(base: MultiCurve, tau: float) -> Potential:
    """``g(x) = sdist(x, base) / tau`` with negative values inside ``base``.

    A non-convex base is accepted but flagged with :class:`NonConvexBaseWarning`
    since the convexity guarantees of the theory no longer apply.
    """
    if tau <= 0:
        raise InputError("tau must be positive")
    hull = convex_hull(base)
    convex = len(base.loops) == 1 and float(np.max(hull.distance)) <= 1e-10 * max(1.0, base.h)
    if not convex:
        warnings.warn("signed-distance base curve is not convex", NonConvexBaseWarning, stacklevel=2)
    return Potential("sdist", (), base=base, tau=float(tau), convex_base=convex)


def parse_potential(text: str, base: MultiCurve | None = None, tau: float = 1.0) -> Potential:
    """Parse ``family:p1,p2,...``; ``sdist`` takes its base curve separately."""
    family, _, rest = text.partition(":")
    family = family.strip()
    try:
        params = tuple(float(x) for x in rest.split(",") if x.strip())
    except ValueError as exc:
        raise InputError(f"bad potential parameters in {text!r}") from exc
    if family == "sdist":
        if base is None:
            raise InputError("sdist potential needs a base curve")
        return signed_distance_potential(base, params[0] if params else tau)
    return Potential(family, params)


def eval_with_grad(g: Potential, x):
    return g.eval_with_grad(x)


@dataclass(frozen=True)
class ConvexityModulus:
    """Increasing function ``omega`` with ``g(y) - g(x) - <Dg(x), y - x> >= omega(|y - x|)``.

    ``kind`` is ``"exact"`` for quadratic families and ``"sampled"`` for the
    empirical envelope, which is only a lower bound on the sampled pairs.
    """

    kind: str
    coefficient: float | None = None
    grid: np.ndarray | None = None
    values: np.ndarray | None = None

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "exact":
            return self.coefficient * t * t
        return np.interp(t, self.grid, self.values, right=self.values[-1])

    @property
    def fn(self) -> Callable:
        return self.__call__


def convexity_gaps(g: Potential, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    gx, dgx = g.eval_with_grad(x)
    gy = g.value(y)
    return gy - gx - np.sum(dgx * (y - x), axis=-1)


def convexity_modulus(g: Potential, radius: float = 2.0, m: int = 200, bins: int = 40, seed: int = 0) -> ConvexityModulus:
    if radius <= 0 or m < 100:
        raise ValueError("need radius > 0 and m >= 100")
    if g.quadratic_coefficient is not None:
        return ConvexityModulus("exact", coefficient=float(g.quadratic_coefficient))
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(size=m))
    th = rng.uniform(0, 2 * np.pi, size=m)
    pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    vals, grads = g.eval_with_grad(pts)
    diff = pts[None, :, :] - pts[:, None, :]
    gap = vals[None, :] - vals[:, None] - np.sum(grads[:, None, :] * diff, axis=-1)
    dist = np.linalg.norm(diff, axis=-1)
    off = ~np.eye(m, dtype=bool)
    gap, dist = gap[off], dist[off]
    if np.any(gap < -1e-9):
        raise NonConvexSample(f"sampled convexity gap {float(gap.min()):.3g} < 0")
    edges = np.linspace(0.0, 2 * radius, bins + 1)
    which = np.clip(np.digitize(dist, edges) - 1, 0, bins - 1)
    mins = np.full(bins, np.inf)
    np.minimum.at(mins, which, gap)
    # node k+1 bounds every pair in bins >= k, so the envelope is monotone
    suffix = np.minimum.accumulate(mins[::-1])[::-1]
    suffix[~np.isfinite(suffix)] = np.max(gap)
    nodes = np.concatenate([[0.0], np.maximum(suffix, 0.0)])
    return ConvexityModulus("sampled", grid=edges, values=nodes)


def coercivity_probe(g: Potential, radius: float, m: int = 360) -> bool:
    """True if ``g`` on the probe circle of ``radius`` exceeds ``min g + 1``."""
    th = 2 * np.pi * np.arange(m) / m
    ring = radius * np.stack([np.cos(th), np.sin(th)], axis=1)
    rr = radius * np.sqrt(np.linspace(0, 1, 40))[:, None, None] * np.stack([np.cos(th), np.sin(th)], axis=1)[None]
    inner_min = float(np.min(g.value(rr.reshape(-1, 2))))
    return bool(np.min(g.value(ring)) > inner_min + 1.0)
