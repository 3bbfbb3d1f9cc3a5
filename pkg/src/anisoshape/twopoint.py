"""Two-point non-convexity function and the checks built on it.

``S(x_i) = max_j <nu_i, x_j - x_i>`` over all vertices of all loops. It is
non-negative, vanishes exactly on the convex-hull boundary, and on critical
configurations it is a subsolution of the Jacobi equation, which makes it a
destabilising direction whenever it is not identically zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .anisotropy import Anisotropy
from .curve2d import MultiCurve, component_labels, convex_hull, frame, hull_indices, rot_cw, shoelace
from .potential import ConvexityModulus, Potential, convexity_modulus
from .variation import anisotropic_curvature, first_variation_residual, jacobi_operator, stability_form

PARTNER_SMOOTH_TURN = 0.5  # radians; sharper partner vertices are not regular points
WIDE_STENCIL_TURN = 0.1  # radians; above this the curvature gradient uses a 2-edge stencil


@dataclass
class TwoPointField:
    S: np.ndarray
    partner: np.ndarray
    nondegenerate: np.ndarray
    second_best: np.ndarray
    L_S: np.ndarray | None = None
    h: float = 0.0

    def to_rows(self, curve: MultiCurve):
        p = curve.points
        for i in range(len(self.S)):
            yield {
                "index": i,
                "x": float(p[i, 0]),
                "y": float(p[i, 1]),
                "S": float(self.S[i]),
                "argmax": int(self.partner[i]),
                "nondegenerate": int(self.nondegenerate[i]),
                "L_S": "" if self.L_S is None else float(self.L_S[i]),
            }


def _local_max_mask(vals: np.ndarray, prv: np.ndarray, nxt: np.ndarray) -> np.ndarray:
    return (vals > vals[:, prv]) & (vals >= vals[:, nxt])


def two_point(curve: MultiCurve, aniso: Anisotropy | None = None, accelerate: bool = False,
              chunk: int = 256) -> TwoPointField:
    """Evaluate ``S`` with lowest-index tie-breaking for the maximiser.

    With ``accelerate=True`` only convex-hull vertices are scanned (a linear
    functional attains its maximum on the hull); S and the maximiser are the
    same as in the full scan.
    """
    p = curve.points
    n = len(p)
    fr = frame(curve)
    nu = fr.vertex_normal
    h = curve.h
    S = np.empty(n)
    partner = np.empty(n, dtype=int)
    second = np.empty(n)
    if accelerate:
        hull_seq = hull_indices(p)
        m = len(hull_seq)
        order = np.argsort(hull_seq)
        cand = hull_seq[order]
        inv = np.empty(m, dtype=int)
        inv[order] = np.arange(m)
        # hull-polygon neighbours, as positions in the sorted candidate list
        pts, prv, nxt = p[cand], inv[(order - 1) % m], inv[(order + 1) % m]
    else:
        cand = None
        pts, prv, nxt = p, curve.prv, curve.nxt
    for lo in range(0, n, chunk):
        sl = slice(lo, min(n, lo + chunk))
        vals = np.einsum("id,ijd->ij", nu[sl], pts[None, :, :] - p[sl, None, :])
        k = np.argmax(vals, axis=1)
        rows = np.arange(vals.shape[0])
        S[sl] = vals[rows, k]
        partner[sl] = k if cand is None else cand[k]
        lm = _local_max_mask(vals, prv, nxt)
        lm[rows, k] = False
        masked = np.where(lm, vals, -np.inf)
        second[sl] = masked.max(axis=1)
    nondeg = second < S - h * h
    L_S = None
    if aniso is not None:
        L_S = jacobi_operator(curve, aniso, None).apply_L(S)
    return TwoPointField(S=S, partner=partner, nondegenerate=nondeg, second_best=second, L_S=L_S, h=h)


def save_field_csv(curve: MultiCurve, fld: TwoPointField, path) -> None:
    rows = list(fld.to_rows(curve))
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def curvature_gradient(curve: MultiCurve, H: np.ndarray) -> np.ndarray:
    """Tangential gradient of a vertex field by centred arclength differences."""
    fr = frame(curve)
    nxt, prv = curve.nxt, curve.prv
    ell = fr.length
    slope = (H[nxt] - H[prv]) / (ell[prv] + ell)
    wide = np.abs(fr.turning) > WIDE_STENCIL_TURN
    if np.any(wide):
        n2, p2 = nxt[nxt], prv[prv]
        wide_slope = (H[n2] - H[p2]) / (ell[p2] + ell[prv] + ell + ell[nxt])
        slope = np.where(wide, wide_slope, slope)
    return slope[:, None] * fr.vertex_tangent


@dataclass
class KeyInequalityCheck:
    lhs: np.ndarray
    rhs: np.ndarray
    eligible: np.ndarray
    passed: np.ndarray
    tol: float

    @property
    def n_eligible(self) -> int:
        return int(np.count_nonzero(self.eligible))

    @property
    def n_skipped(self) -> int:
        return int(len(self.eligible) - self.n_eligible)

    @property
    def pass_fraction(self) -> float:
        if self.n_eligible == 0:
            return float("nan")
        return float(np.count_nonzero(self.passed & self.eligible) / self.n_eligible)


def lemma_key_check(curve: MultiCurve, aniso: Anisotropy, tol_factor: float = 10.0,
                    fld: TwoPointField | None = None) -> KeyInequalityCheck:
    """Test ``L S(x) >= H(x) - H(y) + <grad H(x), y - x>`` at regular vertices.

    ``y`` is the maximiser of ``S`` at ``x``. Vertices whose maximiser is not
    unique (a competing local maximum within ``h^2``) or sits on a sharp corner
    are skipped and counted.
    """
    fld = two_point(curve, aniso) if fld is None or fld.L_S is None else fld
    fr = frame(curve)
    H = anisotropic_curvature(curve, aniso, fr)
    gradH = curvature_gradient(curve, H)
    j = fld.partner
    p = curve.points
    rhs = H - H[j] + np.sum(gradH * (p[j] - p), axis=1)
    eligible = fld.nondegenerate & (np.abs(fr.turning[j]) < PARTNER_SMOOTH_TURN)
    tol = tol_factor * fld.h
    passed = fld.L_S >= rhs - tol
    return KeyInequalityCheck(lhs=fld.L_S, rhs=rhs, eligible=eligible, passed=passed, tol=tol)


def default_modulus(curve: MultiCurve, g: Potential) -> ConvexityModulus:
    radius = 1.5 * max(1.0, float(np.max(np.linalg.norm(curve.points, axis=1))))
    return convexity_modulus(g, radius=radius, m=200)


@dataclass
class SubsolutionCertificate:
    Q_S: float
    I_omega: float
    margin: float
    tol: float
    passed: bool
    label: str
    residual_sup: float
    modulus_kind: str

    def to_json(self) -> dict:
        return {
            "Q_S": self.Q_S,
            "I_omega": self.I_omega,
            "margin": self.margin,
            "tol": self.tol,
            "pass": self.passed,
            "label": self.label,
            "residual_sup": self.residual_sup,
            "modulus": self.modulus_kind,
        }


def subsolution_certificate(curve: MultiCurve, aniso: Anisotropy, g: Potential, constrained: bool = False,
                            omega: ConvexityModulus | None = None, critical_threshold: float = 1e-3,
                            tol_factor: float = 10.0, fld: TwoPointField | None = None) -> SubsolutionCertificate:
    """Integrated instability inequality ``Q(S) <= -sum omega(S) S d``.

    ``margin = -I_omega - Q(S)``; the check passes when ``Q(S) <= -I_omega + tol``
    with ``tol = tol_factor * h * max(1, ||S||)``.
    """
    fld = two_point(curve) if fld is None else fld
    omega = default_modulus(curve, g) if omega is None else omega
    S = fld.S
    d = frame(curve).dual_length
    q = stability_form(curve, aniso, g, S)
    i_omega = float(np.sum(omega(S) * S * d))
    rep = first_variation_residual(curve, aniso, g, constrained)
    res = rep.kkt_residual_sup if constrained else rep.residual_sup
    tol = tol_factor * fld.h * max(1.0, float(np.sqrt(np.sum(S * S * d))))
    return SubsolutionCertificate(
        Q_S=q,
        I_omega=i_omega,
        margin=-i_omega - q,
        tol=tol,
        passed=q <= -i_omega + tol,
        label="at critical point" if res < critical_threshold else "approximate",
        residual_sup=res,
        modulus_kind=omega.kind,
    )


@dataclass
class ComponentRecord:
    index: int
    n_loops: int
    Q_S: float
    I_omega: float
    unstable: bool  # S restricted to the component lowers the free stability form
    subsolution_consistent: bool
    hull_surface: float
    surface: float
    outward_minimality_violated: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ComponentInstability:
    records: list[ComponentRecord] = field(default_factory=list)
    vacuous: bool = False

    @property
    def flagged(self) -> list[int]:
        return [r.index for r in self.records if r.unstable or r.outward_minimality_violated]

    def to_json(self) -> dict:
        return {"vacuous": self.vacuous, "flagged": self.flagged, "components": [r.to_json() for r in self.records]}


def _polygon_surface(aniso: Anisotropy, loop: np.ndarray) -> float:
    return float(np.sum(aniso.value(rot_cw(np.roll(loop, -1, axis=0) - loop))))


def component_instability(curve: MultiCurve, aniso: Anisotropy, g: Potential,
                          omega: ConvexityModulus | None = None, tol_factor: float = 10.0,
                          fld: TwoPointField | None = None) -> ComponentInstability:
    """Evaluate the free stability form on ``S`` restricted to each component.

    A component with ``Q(S 1_comp) < -tol`` is not stable with respect to all
    variations, so a configuration with such a component cannot be a
    minimiser. Components with holes are additionally compared with their
    convex hull (a minimiser has no larger surface energy than any superset).
    """
    fld = two_point(curve) if fld is None else fld
    omega = default_modulus(curve, g) if omega is None else omega
    labels = component_labels(curve)[curve.loop_id]
    d = frame(curve).dual_length
    out = ComponentInstability(vacuous=int(labels.max()) == 0)
    tol = tol_factor * fld.h
    for c in range(int(labels.max()) + 1):
        mask = labels == c
        phi = np.where(mask, fld.S, 0.0)
        q = stability_form(curve, aniso, g, phi)
        i_om = float(np.sum(omega(phi) * phi * d))
        loop_ids = [k for k in range(len(curve.loops)) if component_labels(curve)[k] == c]
        surface = sum(_polygon_surface(aniso, curve.loops[k]) for k in loop_ids)
        outer = [k for k in loop_ids if shoelace(curve.loops[k]) > 0][0]
        hull_pts = curve.loops[outer][hull_indices(curve.loops[outer])]
        hull_surface = _polygon_surface(aniso, hull_pts)
        out.records.append(
            ComponentRecord(
                index=c,
                n_loops=len(loop_ids),
                Q_S=q,
                I_omega=i_om,
                unstable=q < -tol,
                subsolution_consistent=q <= -i_om + tol,
                hull_surface=hull_surface,
                surface=surface,
                outward_minimality_violated=hull_surface < surface - tol * fld.h,
            )
        )
    return out


def w12_sanity(curve: MultiCurve, aniso: Anisotropy, fld: TwoPointField | None = None):
    """Discrete Dirichlet energy of ``S`` and its bound ``diam^2 sum c kappa^2 d``."""
    fld = two_point(curve) if fld is None else fld
    fr = frame(curve)
    dS = fld.S[curve.nxt] - fld.S
    dirichlet = float(np.sum(dS * dS / fr.length))
    hull = convex_hull(curve).vertices
    diam = float(np.max(np.linalg.norm(hull[:, None] - hull[None], axis=-1)))
    bound = diam**2 * float(np.sum(aniso.tangential(fr.vertex_normal) * fr.curvature**2 * fr.dual_length))
    return dirichlet, bound
