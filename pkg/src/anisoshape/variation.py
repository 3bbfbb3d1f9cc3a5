"""Discrete energy and its first and second variations.

Conventions. Vertex moves are taken along the vertex normal ``nu_i`` (the
normalised sum of the two adjacent edge normals) and fields on the curve are
integrated with the lumped mass ``d_i`` (the dual length, i.e. the average of
the two adjacent edge lengths).

* Anisotropic curvature ``H_i = <dSurface/dx_i, nu_i> / d_i``.
* Bulk density ``gt_i = <dBulk/dx_i, nu_i> / d_i`` is the exact derivative of
  the quadrature used for ``int_E g``; it equals ``g(x_i)`` up to ``O(h^2)``
  and makes ``dF/dt = sum (H + gt) phi d`` hold to rounding for normal moves.
* Stability form ``Q(phi) = phi^T (K - C + G) phi`` with stiffness weights
  ``c(nu_e) / l_e``, curvature diagonal ``c(nu_i) kappa_i^2 d_i`` and
  potential diagonal ``D_nu g(x_i) d_i``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .anisotropy import Anisotropy
from .curve2d import MultiCurve, EdgeFrame, frame, rot_ccw, rot_cw
from .errors import DimensionMismatch, SolverFailure, StepTooLarge
from .potential import Potential

# barycentric weights (c, a, b) of the degree-2 interior 3-point rule
_QUAD_W = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])


@dataclass(frozen=True)
class Energy:
    F: float
    surface: float
    bulk: float


def surface_energy(curve: MultiCurve, aniso: Anisotropy) -> float:
    e = curve.points[curve.nxt] - curve.points
    return float(np.sum(aniso.value(rot_cw(e))))


def surface_gradient(curve: MultiCurve, aniso: Anisotropy) -> np.ndarray:
    p = curve.points
    e = p[curve.nxt] - p
    dphi = rot_ccw(aniso.grad(rot_cw(e)))
    grad = -dphi
    np.add.at(grad, curve.nxt, dphi)
    return grad


def _fan(curve: MultiCurve):
    p = curve.points
    centroids = np.stack([lp.mean(axis=0) for lp in curve.loops]) if curve.loops else np.zeros((0, 2))
    c = centroids[curve.loop_id]
    a = p
    b = p[curve.nxt]
    return c, a, b


def _triangles(g: Potential, c, a, b, with_grad: bool = True):
    """Signed degree-2 quadrature of ``g`` on triangles ``(c, a, b)`` and its
    derivatives in the three corners."""
    ac, bc = a - c, b - c
    area = 0.5 * (ac[:, 0] * bc[:, 1] - ac[:, 1] * bc[:, 0])
    q = np.einsum("kj,jnd->knd", _QUAD_W, np.stack([c, a, b]))
    if not with_grad:
        return area * g.value(q).mean(axis=0), None
    gv, gg = g.eval_with_grad(q)
    mean_g = gv.mean(axis=0)
    dA_da = 0.5 * rot_cw(bc)
    dA_db = 0.5 * rot_ccw(ac)
    dA_dc = -dA_da - dA_db
    w = [np.einsum("k,knd->nd", _QUAD_W[:, m], gg) for m in range(3)]
    dc = dA_dc * mean_g[:, None] + area[:, None] / 3 * w[0]
    da = dA_da * mean_g[:, None] + area[:, None] / 3 * w[1]
    db = dA_db * mean_g[:, None] + area[:, None] / 3 * w[2]
    return area * mean_g, (dc, da, db)


def _band_reference(curve: MultiCurve, g: Potential):
    """Base curve of a signed-distance potential when ``curve`` is a vertex-wise
    deformation of it, else None."""
    if g is None or g.family != "sdist" or g.base is None:
        return None
    base = g.base
    if len(base.loops) != len(curve.loops) or np.any(base.offsets != curve.offsets):
        return None
    return base


@lru_cache(maxsize=8)
def _base_integral(g: Potential) -> float:
    val, _ = _triangles(g, *_fan(g.base), with_grad=False)
    return float(np.sum(val))


def bulk_energy(curve: MultiCurve, g: Potential) -> float:
    return bulk_gradient(curve, g, with_grad=False)[0]


def bulk_gradient(curve: MultiCurve, g: Potential, with_grad: bool = True):
    """Quadrature of ``int_E g`` and its exact gradient in the vertices.

    The default rule fans every loop from its vertex centroid. For a
    signed-distance potential evaluated on a vertex-wise deformation of its
    base curve, the integral is instead taken as the base integral plus the
    signed quadrilaterals swept between corresponding edges; that band stays
    where the distance function is smooth, unlike fan triangles that cross
    the medial axis.
    """
    base = _band_reference(curve, g)
    p = curve.points
    nxt = curve.nxt
    if base is not None:
        P = base.points
        v1, d1 = _triangles(g, P, P[nxt], p[nxt], with_grad)
        v2, d2 = _triangles(g, P, p[nxt], p, with_grad)
        # the quads are oriented from the base towards the curve, so they
        # carry the base-minus-curve integral
        total = _base_integral(g) - float(np.sum(v1) + np.sum(v2))
        if not with_grad:
            return total, None
        grad = -d2[2]
        np.add.at(grad, nxt, -(d1[2] + d2[1]))
        return total, grad
    c, a, b = _fan(curve)
    val, parts = _triangles(g, c, a, b, with_grad)
    if not with_grad:
        return float(np.sum(val)), None
    dc, da, db = parts
    grad = da.copy()
    np.add.at(grad, nxt, db)
    sizes = np.diff(curve.offsets)
    per_loop = np.zeros((len(curve.loops), 2))
    np.add.at(per_loop, curve.loop_id, dc)
    grad += (per_loop / sizes[:, None])[curve.loop_id]
    return float(np.sum(val)), grad


def area_gradient(curve: MultiCurve) -> np.ndarray:
    p = curve.points
    return 0.5 * rot_cw(p[curve.nxt] - p[curve.prv])


def energy(curve: MultiCurve, aniso: Anisotropy, g: Potential | None) -> Energy:
    s = surface_energy(curve, aniso)
    bulk = bulk_energy(curve, g) if g is not None else 0.0
    return Energy(F=s + bulk, surface=s, bulk=bulk)


def anisotropic_curvature(curve: MultiCurve, aniso: Anisotropy, fr: EdgeFrame | None = None) -> np.ndarray:
    fr = frame(curve) if fr is None else fr
    grad = surface_gradient(curve, aniso)
    return np.sum(grad * fr.vertex_normal, axis=1) / fr.dual_length


def closed_form_curvature(curve: MultiCurve, aniso: Anisotropy, fr: EdgeFrame | None = None) -> np.ndarray:
    """``c(nu_i) kappa_i``, the curvature route through the tangential coefficient."""
    fr = frame(curve) if fr is None else fr
    return aniso.tangential(fr.vertex_normal) * fr.curvature


@dataclass(frozen=True)
class VariationReport:
    F: float
    surface: float
    bulk: float
    H: np.ndarray
    g: np.ndarray  # potential sampled at the vertices
    bulk_density: np.ndarray  # consistent discrete density gt
    mu: float
    residual: np.ndarray
    residual_sup: float
    constrained: bool
    # Lagrange multiplier / residual w.r.t. the exact area gradient
    kkt_mu: float
    kkt_residual_sup: float

    def to_json(self) -> dict:
        return {
            "F": self.F,
            "surface": self.surface,
            "bulk": self.bulk,
            "mu": self.mu,
            "residual_sup": self.residual_sup,
            "kkt_residual_sup": self.kkt_residual_sup,
            "constrained": self.constrained,
        }


def first_variation_residual(curve: MultiCurve, aniso: Anisotropy, g: Potential, constrained: bool = True) -> VariationReport:
    fr = frame(curve)
    d = fr.dual_length
    nu = fr.vertex_normal
    H = np.sum(surface_gradient(curve, aniso) * nu, axis=1) / d
    bulk, bgrad = bulk_gradient(curve, g)
    gt = np.sum(bgrad * nu, axis=1) / d
    f = H + gt
    if constrained:
        mu = float(np.sum(f * d) / np.sum(d))
        a = np.sum(area_gradient(curve) * nu, axis=1) / d
        kkt_mu = float(np.sum(f * a * d) / np.sum(a * a * d))
        kkt = f - kkt_mu * a
    else:
        mu = kkt_mu = 0.0
        kkt = f
    res = f - mu
    s = surface_energy(curve, aniso)
    return VariationReport(
        F=s + bulk,
        surface=s,
        bulk=bulk,
        H=H,
        g=g.value(curve.points),
        bulk_density=gt,
        mu=mu,
        residual=res,
        residual_sup=float(np.max(np.abs(res))),
        constrained=constrained,
        kkt_mu=kkt_mu,
        kkt_residual_sup=float(np.max(np.abs(kkt))),
    )


# ---------------------------------------------------------------------------
# second variation


@dataclass(frozen=True)
class JacobiOperator:
    """Symmetric matrix of the stability form in the lumped inner product.

    ``Q(phi) = phi @ matrix @ phi``; the Jacobi operator itself acts as
    ``L phi = -(stiffness - curvature_diag) phi / mass``.
    """

    stiffness: sp.csr_matrix
    curvature_diag: np.ndarray
    potential_diag: np.ndarray
    mass: np.ndarray

    @property
    def matrix(self) -> sp.csr_matrix:
        return (self.stiffness + sp.diags(self.potential_diag - self.curvature_diag)).tocsr()

    def apply_L(self, phi) -> np.ndarray:
        """Discrete ``L_Phi phi`` (no potential term)."""
        phi = np.asarray(phi, dtype=float)
        return (-(self.stiffness @ phi) + self.curvature_diag * phi) / self.mass

    def form(self, phi) -> float:
        phi = np.asarray(phi, dtype=float)
        return float(phi @ (self.stiffness @ phi) - np.sum((self.curvature_diag - self.potential_diag) * phi * phi))


def stiffness_matrix(curve: MultiCurve, weights: np.ndarray, fr: EdgeFrame) -> sp.csr_matrix:
    n = curve.n_vertices
    i = np.arange(n)
    j = curve.nxt
    w = weights / fr.length
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([w, w, -w, -w])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def jacobi_operator(curve: MultiCurve, aniso: Anisotropy, g: Potential | None) -> JacobiOperator:
    fr = frame(curve)
    K = stiffness_matrix(curve, aniso.tangential(fr.normal), fr)
    cv = aniso.tangential(fr.vertex_normal)
    curv = cv * fr.curvature**2 * fr.dual_length
    if g is None:
        pot = np.zeros(curve.n_vertices)
    else:
        pot = g.normal_derivative(curve.points, fr.vertex_normal) * fr.dual_length
    return JacobiOperator(stiffness=K, curvature_diag=curv, potential_diag=pot, mass=fr.dual_length)


def stability_form(curve: MultiCurve, aniso: Anisotropy, g: Potential | None, phi) -> float:
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (curve.n_vertices,):
        raise DimensionMismatch(f"field has shape {phi.shape}, curve has {curve.n_vertices} vertices")
    fr = frame(curve)
    dphi = phi[curve.nxt] - phi
    c_e = aniso.tangential(fr.normal)
    c_v = aniso.tangential(fr.vertex_normal)
    d = fr.dual_length
    q = np.sum(c_e * (dphi / fr.length) ** 2 * fr.length) - np.sum(c_v * fr.curvature**2 * phi**2 * d)
    if g is not None:
        q += np.sum(g.normal_derivative(curve.points, fr.vertex_normal) * phi**2 * d)
    return float(q)


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    vectors: np.ndarray  # columns, mass-orthonormal
    mode: str
    max_residual: float


def spectrum(curve: MultiCurve, aniso: Anisotropy, g: Potential | None, mode: str = "free", k: int = 6,
             tol: float = 1e-9) -> Spectrum:
    """Smallest ``k`` eigenpairs of the stability form w.r.t. the lumped mass.

    ``mode="mean_zero"`` restricts to fields with zero lumped mean by
    deflating the constant direction.
    """
    if mode not in ("free", "mean_zero"):
        raise ValueError("mode must be 'free' or 'mean_zero'")
    n = curve.n_vertices
    if k > n:
        raise ValueError("k exceeds the number of vertices")
    op = jacobi_operator(curve, aniso, g)
    s = 1.0 / np.sqrt(op.mass)
    B = op.matrix.toarray() * s[:, None] * s[None, :]
    B = 0.5 * (B + B.T)
    if mode == "mean_zero":
        u = np.sqrt(op.mass)
        u /= np.linalg.norm(u)
        Bu = B @ u
        B = B - np.outer(u, Bu) - np.outer(Bu, u) + (u @ Bu) * np.outer(u, u)
        shift = 10.0 * (np.max(np.sum(np.abs(B), axis=1)) + 1.0)
        B += shift * np.outer(u, u)
    vals, vecs = scipy.linalg.eigh(B, subset_by_index=[0, k - 1])
    scale = max(1.0, float(np.max(np.sum(np.abs(B), axis=1))))
    res = np.linalg.norm(B @ vecs - vecs * vals[None, :], axis=0) / scale
    if not np.all(np.isfinite(vals)) or float(res.max()) > tol:
        raise SolverFailure(f"eigen residual {float(res.max()):.3g} exceeds {tol:g}")
    return Spectrum(values=vals, vectors=vecs * s[:, None], mode=mode, max_residual=float(res.max()))


# ---------------------------------------------------------------------------
# finite-difference identities


@dataclass(frozen=True)
class VariationCheck:
    first_gap: float
    first_relative: float
    second_gap: float
    second_relative: float
    second_asserted: bool
    residual_sup: float
    predicted_first: float
    predicted_second: float


def check_variations(curve: MultiCurve, aniso: Anisotropy, g: Potential, phi, step: float,
                     constrained: bool = True, residual_bound: float = 1e-4) -> VariationCheck:
    """Compare centred finite differences of the energy with the discrete variations.

    Vertices move as ``x_i + t phi_i nu_i``. The first gap compares ``dF/dt``
    with ``sum (H + gt) phi d``. The second gap compares the second derivative
    of ``F - mu |E|`` (or ``F`` when unconstrained) with ``Q(phi)``; it is only
    meaningful near critical points, so ``second_asserted`` records whether the
    residual is below ``residual_bound``.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (curve.n_vertices,):
        raise DimensionMismatch(f"field has shape {phi.shape}, curve has {curve.n_vertices} vertices")
    h = float(np.min(curve.edge_lengths))
    if not 0 < step < h / 10:
        raise StepTooLarge(f"step {step:g} must lie in (0, h/10) = (0, {h / 10:g})")
    rep = first_variation_residual(curve, aniso, g, constrained)
    fr = frame(curve)
    move = phi[:, None] * fr.vertex_normal
    mu = rep.kkt_mu if constrained else 0.0

    def lag(t):
        c = curve.with_points(curve.points + t * move)
        e = energy(c, aniso, g)
        return e.F, e.F - mu * float(np.sum(c.loop_areas))

    f_p, l_p = lag(step)
    f_m, l_m = lag(-step)
    f_0, l_0 = lag(0.0)
    d = fr.dual_length
    pred1 = float(np.sum((rep.H + rep.bulk_density) * phi * d))
    dF = (f_p - f_m) / (2 * step)
    gap1 = abs(dF - pred1)
    scale1 = float(np.sum(np.abs((rep.H + rep.bulk_density) * phi) * d))
    d2 = (l_p - 2 * l_0 + l_m) / step**2
    pred2 = stability_form(curve, aniso, g, phi)
    gap2 = abs(d2 - pred2)
    scale2 = max(abs(pred2), float(np.sum(phi * phi * d)), 1e-300)
    return VariationCheck(
        first_gap=gap1,
        first_relative=gap1 / scale1 if scale1 > 0 else gap1,
        second_gap=gap2,
        second_relative=gap2 / scale2,
        second_asserted=rep.residual_sup <= residual_bound,
        residual_sup=rep.residual_sup,
        predicted_first=pred1,
        predicted_second=pred2,
    )
