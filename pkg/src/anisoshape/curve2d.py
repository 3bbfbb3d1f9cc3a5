"""Closed polygonal multi-curves in the plane.

A :class:`MultiCurve` stores the boundary of a bounded planar set as a tuple of
closed loops. Outer loops run counterclockwise and holes run clockwise, so the
set always lies to the left of the direction of travel and the edge normal
``(t_y, -t_x)`` points out of the set on every loop.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateLoop, InputError, OverlappingComponents, SelfIntersection


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def rot_cw(v: np.ndarray) -> np.ndarray:
    """Rotate vectors by -90 degrees: tangent -> outward normal."""
    return np.stack([v[..., 1], -v[..., 0]], axis=-1)


def rot_ccw(v: np.ndarray) -> np.ndarray:
    """Rotate vectors by +90 degrees: outward normal -> tangent."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def shoelace(loop: np.ndarray) -> float:
    """Signed area of a closed polygon (positive when counterclockwise)."""
    return 0.5 * float(np.sum(_cross(loop, np.roll(loop, -1, axis=0))))


@dataclass(frozen=True)
class MultiCurve:
    """Oriented closed polygonal loops bounding a planar set.

    Use :func:`build` to construct a validated instance; the constructor itself
    performs no checks so that solvers can create intermediate iterates cheaply.
    """

    loops: tuple[np.ndarray, ...]

    @cached_property
    def points(self) -> np.ndarray:
        """All vertices stacked into one ``(N, 2)`` array."""
        if not self.loops:
            return np.zeros((0, 2))
        return np.concatenate(self.loops, axis=0)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([len(lp) for lp in self.loops])]).astype(int)

    @cached_property
    def loop_id(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.loops)), [len(lp) for lp in self.loops])

    @cached_property
    def nxt(self) -> np.ndarray:
        idx = np.arange(self.n_vertices)
        start = self.offsets[self.loop_id]
        size = self.offsets[self.loop_id + 1] - start
        return start + (idx - start + 1) % size

    @cached_property
    def prv(self) -> np.ndarray:
        idx = np.arange(self.n_vertices)
        start = self.offsets[self.loop_id]
        size = self.offsets[self.loop_id + 1] - start
        return start + (idx - start - 1) % size

    @property
    def n_vertices(self) -> int:
        return int(self.offsets[-1])

    @cached_property
    def loop_areas(self) -> np.ndarray:
        return np.array([shoelace(lp) for lp in self.loops])

    @property
    def ccw(self) -> tuple[bool, ...]:
        return tuple(bool(a > 0) for a in self.loop_areas)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.points[self.nxt] - self.points, axis=1)

    @property
    def h(self) -> float:
        """Mesh size: mean edge length."""
        return float(np.mean(self.edge_lengths))

    def loop_slice(self, k: int) -> slice:
        return slice(int(self.offsets[k]), int(self.offsets[k + 1]))

    def with_points(self, points: np.ndarray) -> "MultiCurve":
        """Same topology, new vertex positions."""
        return MultiCurve(tuple(points[self.loop_slice(k)].copy() for k in range(len(self.loops))))

    def transformed(self, matrix=None, shift=(0.0, 0.0)) -> "MultiCurve":
        m = np.eye(2) if matrix is None else np.asarray(matrix, dtype=float)
        return MultiCurve(tuple(lp @ m.T + np.asarray(shift, dtype=float) for lp in self.loops))

    def to_json(self) -> dict:
        return {"loops": [lp.tolist() for lp in self.loops]}


@dataclass(frozen=True)
class EdgeFrame:
    """Discrete frame of a multi-curve.

    Edge arrays are indexed by the start vertex: edge ``i`` joins vertex ``i``
    to ``curve.nxt[i]``.
    """

    tangent: np.ndarray
    normal: np.ndarray
    length: np.ndarray
    dual_length: np.ndarray
    vertex_normal: np.ndarray
    vertex_tangent: np.ndarray
    turning: np.ndarray
    curvature: np.ndarray


def frame(curve: MultiCurve) -> EdgeFrame:
    p = curve.points
    prv = curve.prv
    e = p[curve.nxt] - p
    length = np.linalg.norm(e, axis=1)
    tangent = e / length[:, None]
    normal = rot_cw(tangent)
    dual = 0.5 * (length[prv] + length)
    vn = normal[prv] + normal
    vn /= np.linalg.norm(vn, axis=1)[:, None]
    turning = np.arctan2(_cross(tangent[prv], tangent), np.sum(tangent[prv] * tangent, axis=1))
    return EdgeFrame(
        tangent=tangent,
        normal=normal,
        length=length,
        dual_length=dual,
        vertex_normal=vn,
        vertex_tangent=rot_ccw(vn),
        turning=turning,
        curvature=turning / dual,
    )


# ---------------------------------------------------------------------------
# predicates


def points_in_loop(pts: np.ndarray, loop: np.ndarray) -> np.ndarray:
    """Even-odd point-in-polygon test, vectorised over ``pts``."""
    pts = np.atleast_2d(pts)
    a = loop
    b = np.roll(loop, -1, axis=0)
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]
    straddle = (a[None, :, 1] > py) != (b[None, :, 1] > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = a[None, :, 0] + (py - a[None, :, 1]) * (b[None, :, 0] - a[None, :, 0]) / (
            b[None, :, 1] - a[None, :, 1]
        )
    crossings = straddle & (px < xint)
    return (np.count_nonzero(crossings, axis=1) % 2) == 1


def _segments_intersect(p1, p2, q1, q2) -> np.ndarray:
    o1 = _cross(p2 - p1, q1 - p1)
    o2 = _cross(p2 - p1, q2 - p1)
    o3 = _cross(q2 - q1, p1 - q1)
    o4 = _cross(q2 - q1, p2 - q1)
    bbox = (
        (np.minimum(p1[:, 0], p2[:, 0]) <= np.maximum(q1[:, 0], q2[:, 0]))
        & (np.minimum(q1[:, 0], q2[:, 0]) <= np.maximum(p1[:, 0], p2[:, 0]))
        & (np.minimum(p1[:, 1], p2[:, 1]) <= np.maximum(q1[:, 1], q2[:, 1]))
        & (np.minimum(q1[:, 1], q2[:, 1]) <= np.maximum(p1[:, 1], p2[:, 1]))
    )
    return (o1 * o2 <= 0) & (o3 * o4 <= 0) & bbox


def intersecting_edges(curve: MultiCurve) -> np.ndarray:
    """Pairs ``(i, j)`` of non-adjacent edges that touch or cross.

    Intersecting edges have start vertices within twice the longest edge of
    each other, so a k-d tree prefilter finds every candidate pair and the
    orientation test decides it exactly.
    """
    p = curve.points
    if len(p) == 0:
        return np.zeros((0, 2), dtype=int)
    lmax = float(np.max(curve.edge_lengths))
    pairs = cKDTree(p).query_pairs(2.0 * lmax * (1 + 1e-12), output_type="ndarray")
    if len(pairs) == 0:
        return np.zeros((0, 2), dtype=int)
    i, j = pairs[:, 0], pairs[:, 1]
    nxt = curve.nxt
    adjacent = (nxt[i] == j) | (nxt[j] == i)
    i, j = i[~adjacent], j[~adjacent]
    hit = _segments_intersect(p[i], p[nxt[i]], p[j], p[nxt[j]])
    return np.stack([i[hit], j[hit]], axis=1)


def loop_depths(loops: Sequence[np.ndarray]) -> np.ndarray:
    """Nesting depth of each loop (number of other loops containing it)."""
    depth = np.zeros(len(loops), dtype=int)
    for a, la in enumerate(loops):
        probe = la[:1]
        for b, lb in enumerate(loops):
            if a != b and points_in_loop(probe, lb)[0]:
                depth[a] += 1
    return depth


def _parents(loops: Sequence[np.ndarray], depth: np.ndarray) -> np.ndarray:
    parent = -np.ones(len(loops), dtype=int)
    for a, la in enumerate(loops):
        if depth[a] == 0:
            continue
        for b, lb in enumerate(loops):
            if b != a and depth[b] == depth[a] - 1 and points_in_loop(la[:1], lb)[0]:
                parent[a] = b
                break
    return parent


# ---------------------------------------------------------------------------
# operations


def _clean_loop(raw) -> np.ndarray:
    loop = np.asarray(raw, dtype=float)
    if loop.ndim != 2 or loop.shape[1] != 2:
        raise InputError(f"loop must be a list of (x, y) pairs, got shape {loop.shape}")
    if not np.all(np.isfinite(loop)):
        raise InputError("loop contains non-finite coordinates")
    if len(loop) > 1 and np.array_equal(loop[0], loop[-1]):
        loop = loop[:-1]
    if len(loop) < 3:
        raise DegenerateLoop(f"loop has {len(loop)} vertices, need at least 3")
    edge = np.linalg.norm(np.roll(loop, -1, axis=0) - loop, axis=1)
    if np.any(edge <= 0.0):
        raise DegenerateLoop("loop has a zero-length edge")
    return loop


def build(loops: Iterable, validate: bool = True) -> MultiCurve:
    """Validate raw vertex lists and normalise orientation.

    Loops at even nesting depth become counterclockwise outer boundaries and
    loops at odd depth become clockwise holes.
    """
    cleaned = [_clean_loop(raw) for raw in loops]
    if not cleaned:
        raise InputError("a curve needs at least one loop")
    depth = loop_depths(cleaned)
    oriented = []
    for loop, d in zip(cleaned, depth):
        want_ccw = d % 2 == 0
        if (shoelace(loop) > 0) != want_ccw:
            loop = loop[::-1].copy()
        oriented.append(loop)
    curve = MultiCurve(tuple(oriented))
    if validate:
        hits = intersecting_edges(curve)
        if len(hits):
            lid = curve.loop_id
            same = lid[hits[:, 0]] == lid[hits[:, 1]]
            if np.any(same):
                raise SelfIntersection(f"loop {lid[hits[same][0, 0]]} intersects itself")
            raise OverlappingComponents(
                f"loops {lid[hits[0, 0]]} and {lid[hits[0, 1]]} intersect"
            )
    return curve


def is_simple(curve: MultiCurve) -> bool:
    return len(intersecting_edges(curve)) == 0


def enclosed_area(curve: MultiCurve) -> float:
    """Area of the enclosed set; clockwise holes contribute negatively."""
    return float(np.sum(curve.loop_areas))


@dataclass(frozen=True)
class Hull:
    vertices: np.ndarray  # counterclockwise hull polygon
    indices: np.ndarray  # indices into curve.points
    distance: np.ndarray  # per curve vertex distance to the hull boundary

    @property
    def area(self) -> float:
        return shoelace(self.vertices)

    @property
    def perimeter(self) -> float:
        return float(np.sum(np.linalg.norm(np.roll(self.vertices, -1, axis=0) - self.vertices, axis=1)))


def hull_indices(pts: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull; collinear points are dropped."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    # drop exact duplicates
    keep = np.ones(len(order), dtype=bool)
    keep[1:] = np.any(np.diff(pts[order], axis=0) != 0, axis=1)
    order = order[keep]
    if len(order) < 3:
        return order

    def half(seq):
        chain: list[int] = []
        for k in seq:
            while len(chain) >= 2:
                o, a = pts[chain[-2]], pts[chain[-1]]
                if (a[0] - o[0]) * (pts[k][1] - o[1]) - (a[1] - o[1]) * (pts[k][0] - o[0]) <= 0:
                    chain.pop()
                else:
                    break
            chain.append(int(k))
        return chain

    lower = half(order)
    upper = half(order[::-1])
    return np.array(lower[:-1] + upper[:-1], dtype=int)


def point_segment_distance(pts: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Distances from each point to each segment ``a[k] b[k]``.

    Returns ``(dist, foot)`` with shapes ``(P, S)`` and ``(P, S, 2)``.
    """
    ab = b - a
    ab2 = np.sum(ab * ab, axis=1)
    ap = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.sum(ap * ab[None], axis=2) / ab2[None], 0.0, 1.0)
    foot = a[None] + t[..., None] * ab[None]
    return np.linalg.norm(pts[:, None, :] - foot, axis=2), foot


def convex_hull(curve: MultiCurve) -> Hull:
    pts = curve.points
    idx = hull_indices(pts)
    hv = pts[idx]
    a, b = hv, np.roll(hv, -1, axis=0)
    ab = b - a
    ab2 = np.sum(ab * ab, axis=1)
    d = np.zeros(len(pts))
    off = np.setdiff1d(np.arange(len(pts)), idx)
    for lo in range(0, len(off), 512):
        q = pts[off[lo:lo + 512]]
        ap = q[:, None, :] - a[None]
        t = np.clip(np.einsum("psd,sd->ps", ap, ab) / ab2, 0.0, 1.0)
        r = ap - t[..., None] * ab
        d[off[lo:lo + 512]] = np.sqrt(np.min(np.einsum("psd,psd->ps", r, r), axis=1))
    return Hull(vertices=hv, indices=idx, distance=d)


def _resample_loop(loop: np.ndarray, n_new: int) -> np.ndarray:
    closed = np.vstack([loop, loop[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, s[-1], n_new, endpoint=False)
    x = np.interp(targets, s, closed[:, 0])
    y = np.interp(targets, s, closed[:, 1])
    out = np.stack([x, y], axis=1)
    # undo the chord area loss by a similarity about the vertex centroid
    a_old, a_new = shoelace(loop), shoelace(out)
    if a_new * a_old > 0:
        c = out.mean(axis=0)
        out = c + (out - c) * np.sqrt(a_old / a_new)
    return out


def loop_lengths(curve: MultiCurve) -> np.ndarray:
    return np.array([np.sum(curve.edge_lengths[curve.loop_slice(k)]) for k in range(len(curve.loops))])


def remesh(curve: MultiCurve, target_h: float) -> MultiCurve:
    """Redistribute vertices uniformly by arclength on every loop."""
    if target_h <= 0:
        raise ValueError("target_h must be positive")
    out = []
    for loop, length in zip(curve.loops, loop_lengths(curve)):
        if length < 3 * target_h:
            raise DegenerateLoop(f"loop of length {length:.3g} is shorter than 3 * target_h")
        out.append(_resample_loop(loop, max(3, int(round(length / target_h)))))
    return MultiCurve(tuple(out))


def resample(curve: MultiCurve, n_per_loop: Sequence[int]) -> MultiCurve:
    return MultiCurve(tuple(_resample_loop(lp, int(n)) for lp, n in zip(curve.loops, n_per_loop)))


def components(curve: MultiCurve) -> list[MultiCurve]:
    """Split into connected regions: each outer loop with its direct holes."""
    loops = curve.loops
    depth = loop_depths(loops)
    parent = _parents(loops, depth)
    groups = []
    for k in range(len(loops)):
        if depth[k] % 2 == 0:
            members = [k] + [j for j in range(len(loops)) if parent[j] == k and depth[j] % 2 == 1]
            groups.append(members)
    return [MultiCurve(tuple(loops[j] for j in g)) for g in groups]


def component_labels(curve: MultiCurve) -> np.ndarray:
    """Per-loop index of the connected component the loop bounds."""
    depth = loop_depths(curve.loops)
    parent = _parents(curve.loops, depth)
    outer = [k for k in range(len(curve.loops)) if depth[k] % 2 == 0]
    label = np.empty(len(curve.loops), dtype=int)
    for k in range(len(curve.loops)):
        label[k] = outer.index(k) if depth[k] % 2 == 0 else outer.index(int(parent[k]))
    return label


# ---------------------------------------------------------------------------
# shape factories used by tests, scripts and the solver


def circle(radius: float = 1.0, n: int = 256, center=(0.0, 0.0), phase: float = 0.0) -> np.ndarray:
    t = phase + 2 * np.pi * np.arange(n) / n
    return np.stack([center[0] + radius * np.cos(t), center[1] + radius * np.sin(t)], axis=1)


def polar_loop(r_of_theta, n: int, center=(0.0, 0.0)) -> np.ndarray:
    t = 2 * np.pi * np.arange(n) / n
    r = r_of_theta(t)
    return np.stack([center[0] + r * np.cos(t), center[1] + r * np.sin(t)], axis=1)


def uniform_polar_loop(r_of_theta, n: int, center=(0.0, 0.0), oversample: int = 16) -> np.ndarray:
    """Polar curve sampled with ``n`` vertices equally spaced in arclength."""
    fine = polar_loop(r_of_theta, n * oversample, center)
    closed = np.vstack([fine, fine[:1]])
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(closed, axis=0), axis=1))])
    targets = np.linspace(0.0, s[-1], n, endpoint=False)
    # refine the parameter by interpolating theta along the fine arclength
    theta_fine = 2 * np.pi * np.arange(n * oversample + 1) / (n * oversample)
    theta = np.interp(targets, s, theta_fine)
    r = r_of_theta(theta)
    return np.stack([center[0] + r * np.cos(theta), center[1] + r * np.sin(theta)], axis=1)


def random_star(rng: np.random.Generator, n: int, modes: int = 5, amplitude: float = 0.25,
                radius: float = 1.0, center=(0.0, 0.0)) -> np.ndarray:
    """Smooth random star-shaped loop, arclength-uniform."""
    k = np.arange(2, modes + 2)
    amp = rng.uniform(0.0, 1.0, size=len(k)) / k
    amp *= amplitude / max(np.sum(amp), 1e-12)
    phase = rng.uniform(0.0, 2 * np.pi, size=len(k))

    def r(t):
        t = np.asarray(t)[..., None]
        return radius * (1.0 + np.sum(amp * np.cos(k * t + phase), axis=-1))

    return uniform_polar_loop(r, n, center)


# ---------------------------------------------------------------------------
# file formats


def load_curve(path, validate: bool = True) -> MultiCurve:
    """Read a curve from JSON (``{"loops": [[[x, y], ...], ...]}``) or CSV."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"curve file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        loops: list[list[list[float]]] = [[]]
        for row in csv.reader(text.splitlines()):
            if not row or all(not c.strip() for c in row):
                if loops[-1]:
                    loops.append([])
                continue
            try:
                loops[-1].append([float(row[0]), float(row[1])])
            except (ValueError, IndexError) as exc:
                raise InputError(f"bad CSV row {row!r}") from exc
        loops = [lp for lp in loops if lp]
    else:
        try:
            data = json.loads(text)
            loops = data["loops"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise InputError(f"{path}: expected JSON object with key 'loops'") from exc
    return build(loops, validate=validate)


def save_curve(curve: MultiCurve, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        blocks = ["\n".join(f"{float(x)!r},{float(y)!r}" for x, y in lp) for lp in curve.loops]
        path.write_text("\n\n".join(blocks) + "\n")
    else:
        path.write_text(json.dumps(curve.to_json()))
