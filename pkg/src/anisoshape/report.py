"""Certificates aggregating the necessary conditions for minimality.

Thresholds scale with the mean edge length ``h``; the constants live in
:data:`THRESHOLDS`. When the curve is not critical, the checks that only make
sense at critical points are still computed but marked informational.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .anisotropy import Anisotropy
from .curve2d import MultiCurve, component_labels, convex_hull
from .errors import SolverFailure
from .potential import Potential
from .twopoint import component_instability, lemma_key_check, subsolution_certificate, two_point, w12_sanity
from .variation import first_variation_residual, spectrum

# check name -> constant C in a threshold C * h
THRESHOLDS = {
    "stationarity": 0.1,
    "stability": 10.0,
    "two_point_zero": 0.2,
    "hull_contact": 0.2,
    "component_stability": 10.0,
    "subsolution_inequality": 10.0,
}

ANCHORS = {
    "stationarity": "stationarity: H + g equals a constant multiplier on the boundary",
    "stability": "stability: second variation nonnegative on admissible fields",
    "two_point_zero": "two-point function vanishes iff the boundary touches its convex hull",
    "hull_contact": "minimizers are convex when g has convex sublevel sets",
    "connected": "minimizers with strictly convex g have connected boundary",
    "outward_minimality": "outward minimality: no superset has smaller surface energy",
    "component_stability": "two-point function restricted to a component is destabilising",
    "subsolution_inequality": "integrated subsolution inequality for the two-point function",
    "lemma_key_inequality": "pointwise key inequality for the Jacobi operator applied to S",
    "dirichlet_bound": "Dirichlet energy of S bounded by diameter and total curvature",
}

@dataclass
class Check:
    name: str
    anchor: str
    measured: dict
    threshold: float | None
    passed: bool
    informational: bool = False

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "measured": self.measured,
            "threshold": self.threshold,
            "pass": bool(self.passed),
            "informational": self.informational,
        }


@dataclass
class Certificate:
    fingerprint: str
    mode: str
    h: float
    n_vertices: int
    checks: list[Check] = field(default_factory=list)
    timestamp: str = ""

    @property
    def verdict(self) -> bool:
        return all(c.passed for c in self.checks if not c.informational)

    def check(self, name: str) -> Check:
        return next(c for c in self.checks if c.name == name)

    @property
    def classification(self) -> str:
        if not self.check("stationarity").passed:
            return "not critical"
        if self.verdict:
            return "stable critical point consistent with minimality"
        return "critical but not minimizing"

    def to_json(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "mode": self.mode,
            "h": self.h,
            "n_vertices": self.n_vertices,
            "verdict": self.verdict,
            "classification": self.classification,
            "checks": [c.to_json() for c in self.checks],
            "timestamp": self.timestamp,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))


def fingerprint(curve: MultiCurve) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(curve.offsets, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(curve.points, dtype="<f8").tobytes())
    return h.hexdigest()


def _f(x) -> float:
    return float(x)


def diagnose(curve: MultiCurve, aniso: Anisotropy, g: Potential, mode: str = "constrained",
             thresholds: dict | None = None, timestamp: bool = True) -> Certificate:
    """Run every diagnostic on ``curve`` and collect them in a certificate.

    ``mode`` is ``"constrained"`` (fixed area, mean-zero stability) or
    ``"unconstrained"`` (free stability). Failed checks are recorded, never raised.
    """
    if mode not in ("constrained", "unconstrained"):
        raise ValueError("mode must be 'constrained' or 'unconstrained'")
    C = {**THRESHOLDS, **(thresholds or {})}
    constrained = mode == "constrained"
    h = curve.h
    cert = Certificate(
        fingerprint=fingerprint(curve),
        mode=mode,
        h=h,
        n_vertices=curve.n_vertices,
        timestamp=datetime.now(timezone.utc).isoformat() if timestamp else "",
    )

    def add(name, measured, threshold, passed, informational=False):
        cert.checks.append(Check(name, ANCHORS[name], measured, threshold, bool(passed), informational))

    rep = first_variation_residual(curve, aniso, g, constrained)
    res = rep.kkt_residual_sup if constrained else rep.residual_sup
    thr = C["stationarity"] * h
    critical = res <= thr
    add("stationarity", {"residual_sup": res, "mu": rep.kkt_mu, "F": rep.F}, thr, critical)
    info = not critical

    thr = -C["stability"] * h
    try:
        spec = spectrum(curve, aniso, g, "mean_zero" if constrained else "free", k=min(4, curve.n_vertices))
        lam = _f(spec.values[0])
        add("stability", {"lambda_min": lam, "values": [_f(v) for v in spec.values]}, thr, lam >= thr, info)
    except SolverFailure as exc:
        add("stability", {"error": str(exc)}, thr, False, info)

    fld = two_point(curve, aniso)
    s_max = _f(fld.S.max())
    add("two_point_zero", {"S_max": s_max, "S_mean": _f(fld.S.mean())}, C["two_point_zero"] * h,
        s_max <= C["two_point_zero"] * h, info)
    hull = convex_hull(curve)
    dist = _f(hull.distance.max())
    add("hull_contact", {"max_hull_distance": dist, "hull_area": hull.area}, C["hull_contact"] * h,
        dist <= C["hull_contact"] * h, info)
    n_comp = int(component_labels(curve).max()) + 1
    add("connected", {"components": n_comp}, 1, n_comp == 1, info)

    comp = component_instability(curve, aniso, g, tol_factor=C["component_stability"], fld=fld)
    violated = [r.index for r in comp.records if r.outward_minimality_violated]
    add("outward_minimality",
        {"violated": violated, "hull_surface": [r.hull_surface for r in comp.records],
         "surface": [r.surface for r in comp.records]},
        C["component_stability"] * h * h, not violated, info)
    unstable = [r.index for r in comp.records if r.unstable]
    add("component_stability", {"unstable": unstable, "Q_S": [r.Q_S for r in comp.records],
                                 "vacuous": comp.vacuous},
        -C["component_stability"] * h, not unstable, info)

    sub = subsolution_certificate(curve, aniso, g, constrained, tol_factor=C["subsolution_inequality"], fld=fld)
    add("subsolution_inequality", sub.to_json(), sub.tol, sub.passed, True)
    lem = lemma_key_check(curve, aniso, fld=fld)
    add("lemma_key_inequality", {"pass_fraction": lem.pass_fraction, "eligible": lem.n_eligible,
                                 "skipped": lem.n_skipped}, 0.99,
        not lem.n_eligible or lem.pass_fraction >= 0.99, True)
    dirichlet, bound = w12_sanity(curve, aniso, fld)
    add("dirichlet_bound", {"dirichlet": dirichlet, "bound": bound}, bound, dirichlet <= bound * (1 + 1e-9), True)
    return cert


def write_svg(curve: MultiCurve, path, values: np.ndarray | None = None, size: int = 600) -> None:
    """Curve coloured by a vertex field (default ``S``) over its convex hull."""
    values = two_point(curve).S if values is None else np.asarray(values, dtype=float)
    p = curve.points
    hull = convex_hull(curve).vertices
    lo, hi = p.min(axis=0), p.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.05 * span

    def xy(q):
        u = (q[..., 0] - lo[0] + pad) / (span + 2 * pad) * size
        v = size - (q[..., 1] - lo[1] + pad) / (span + 2 * pad) * size
        return u, v

    vmax = float(values.max()) if values.max() > 0 else 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
             '<rect width="100%" height="100%" fill="white"/>']
    hu, hv = xy(hull)
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(hu, hv))
    parts.append(f'<polygon points="{pts}" fill="none" stroke="#999" stroke-dasharray="4 3"/>')
    u, v = xy(p)
    nxt = curve.nxt
    for i in range(len(p)):
        t = 0.5 * (values[i] + values[nxt[i]]) / vmax
        color = f"rgb({int(255 * t)},0,{int(255 * (1 - t))})"
        parts.append(f'<line x1="{u[i]:.2f}" y1="{v[i]:.2f}" x2="{u[nxt[i]]:.2f}" y2="{v[nxt[i]]:.2f}" '
                     f'stroke="{color}" stroke-width="2"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))
