"""One-homogeneous convex surface tensions with analytic derivatives.

All evaluators are vectorised over a trailing axis of length 2: ``value``
maps ``(..., 2) -> (...)``, ``grad`` maps ``(..., 2) -> (..., 2)`` and ``hess``
maps ``(..., 2) -> (..., 2, 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve2d import MultiCurve, rot_ccw
from .errors import InputError, NonSmoothAnisotropy, NonUnitNormal

FAMILIES = ("iso", "elliptic", "lq")


@dataclass(frozen=True)
class Anisotropy:
    """Surface tension ``Phi``.

    Families:

    * ``iso``: ``|p|``
    * ``elliptic`` with params ``(a, b)``: ``sqrt(a^2 p1^2 + b^2 p2^2)``
    * ``lq`` with params ``(q,)``: the l^q norm regularised as
      ``((p1^2 + eps|p|^2)^(q/2) + (p2^2 + eps|p|^2)^(q/2))^(1/q)``
    """

    family: str = "iso"
    params: tuple[float, ...] = ()
    epsilon: float = 1e-2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown anisotropy family {self.family!r}; choose from {FAMILIES}")
        if self.family == "elliptic":
            if len(self.params) != 2 or min(self.params) <= 0:
                raise InputError("elliptic anisotropy needs params (a, b) with a, b > 0")
        if self.family == "lq":
            if len(self.params) != 1 or self.params[0] < 1:
                raise InputError("lq anisotropy needs params (q,) with q >= 1")
            if self.epsilon < 0:
                raise InputError("epsilon must be non-negative")

    # -- evaluators --------------------------------------------------------

    def value(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.family == "iso":
            return np.linalg.norm(p, axis=-1)
        if self.family == "elliptic":
            a, b = self.params
            return np.sqrt((a * p[..., 0]) ** 2 + (b * p[..., 1]) ** 2)
        u, v, _, _ = self._lq_parts(p)
        q = self.params[0]
        return (u ** (q / 2) + v ** (q / 2)) ** (1.0 / q)

    def grad(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.family == "iso":
            return p / np.linalg.norm(p, axis=-1)[..., None]
        if self.family == "elliptic":
            a, b = self.params
            mp = np.stack([a * a * p[..., 0], b * b * p[..., 1]], axis=-1)
            return mp / self.value(p)[..., None]
        q = self.params[0]
        u, v, b1p, b2p = self._lq_parts(p)
        s = u ** (q / 2) + v ** (q / 2)
        w = u[..., None] ** (q / 2 - 1) * b1p + v[..., None] ** (q / 2 - 1) * b2p
        return s[..., None] ** (1.0 / q - 1) * w

    def hess(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.family == "iso":
            r = np.linalg.norm(p, axis=-1)
            n = p / r[..., None]
            eye = np.broadcast_to(np.eye(2), n.shape[:-1] + (2, 2))
            return (eye - n[..., :, None] * n[..., None, :]) / r[..., None, None]
        if self.family == "elliptic":
            a, b = self.params
            phi = self.value(p)
            mp = np.stack([a * a * p[..., 0], b * b * p[..., 1]], axis=-1)
            m = np.broadcast_to(np.diag([a * a, b * b]), p.shape[:-1] + (2, 2))
            outer = mp[..., :, None] * mp[..., None, :]
            return (m - outer / (phi**2)[..., None, None]) / phi[..., None, None]
        q = self.params[0]
        eps = self.epsilon
        u, v, b1p, b2p = self._lq_parts(p)
        s = u ** (q / 2) + v ** (q / 2)
        w = u[..., None] ** (q / 2 - 1) * b1p + v[..., None] ** (q / 2 - 1) * b2p
        b1 = np.diag([1 + eps, eps])
        b2 = np.diag([eps, 1 + eps])
        dw = (
            u[..., None, None] ** (q / 2 - 1) * b1
            + (q - 2) * u[..., None, None] ** (q / 2 - 2) * (b1p[..., :, None] * b1p[..., None, :])
            + v[..., None, None] ** (q / 2 - 1) * b2
            + (q - 2) * v[..., None, None] ** (q / 2 - 2) * (b2p[..., :, None] * b2p[..., None, :])
        )
        return (1 - q) * s[..., None, None] ** (1.0 / q - 2) * (w[..., :, None] * w[..., None, :]) + s[
            ..., None, None
        ] ** (1.0 / q - 1) * dw

    def _lq_parts(self, p):
        eps = self.epsilon
        r2 = p[..., 0] ** 2 + p[..., 1] ** 2
        u = p[..., 0] ** 2 + eps * r2
        v = p[..., 1] ** 2 + eps * r2
        b1p = np.stack([(1 + eps) * p[..., 0], eps * p[..., 1]], axis=-1)
        b2p = np.stack([eps * p[..., 0], (1 + eps) * p[..., 1]], axis=-1)
        return u, v, b1p, b2p

    # -- 2D reductions -----------------------------------------------------

    def tangential(self, nu) -> np.ndarray:
        """``<D^2 Phi(nu) t, t>`` with ``t`` the normal rotated by +90 degrees.

        No unit-length check; see :func:`tangential_coefficient`.
        """
        nu = np.asarray(nu, dtype=float)
        t = rot_ccw(nu)
        return np.einsum("...i,...ij,...j->...", t, self.hess(nu), t)

    @property
    def is_smooth(self) -> bool:
        return not (self.family == "lq" and self.epsilon == 0 and self.params[0] < 2)

    @property
    def spec(self) -> str:
        if not self.params:
            return self.family
        return f"{self.family}:" + ",".join(repr(float(x)) for x in self.params)


def iso() -> Anisotropy:
    return Anisotropy("iso")


def elliptic(a: float, b: float) -> Anisotropy:
    return Anisotropy("elliptic", (float(a), float(b)))


def lq(q: float, epsilon: float = 1e-2) -> Anisotropy:
    return Anisotropy("lq", (float(q),), float(epsilon))


def parse_anisotropy(text: str, epsilon: float = 1e-2) -> Anisotropy:
    """Parse ``family[:p1,p2,...]``, e.g. ``elliptic:2,1``."""
    family, _, rest = text.partition(":")
    try:
        params = tuple(float(x) for x in rest.split(",") if x.strip())
    except ValueError as exc:
        raise InputError(f"bad anisotropy parameters in {text!r}") from exc
    return Anisotropy(family.strip(), params, epsilon)


def unit(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def tangential_coefficient(aniso: Anisotropy, nu) -> np.ndarray:
    """Ellipticity coefficient ``c(nu)`` driving curvature and the Jacobi operator."""
    nu = np.asarray(nu, dtype=float)
    if np.any(np.abs(np.linalg.norm(nu, axis=-1) - 1.0) > 1e-9):
        raise NonUnitNormal("tangential_coefficient expects unit normals")
    return aniso.tangential(nu)


def smoothness_probe(aniso: Anisotropy, m: int = 360, delta: float = 1e-6, jump_tol: float = 1e-3) -> None:
    """Raise :class:`NonSmoothAnisotropy` if the angular profile has a kink.

    Compares one-sided angular derivatives of ``theta -> Phi(nu(theta))`` at
    ``m`` sampled angles, and requires a finite Hessian.
    """
    theta = 2 * np.pi * np.arange(m) / m
    f0 = aniso.value(unit(theta))
    fp = aniso.value(unit(theta + delta))
    fm = aniso.value(unit(theta - delta))
    right = (fp - f0) / delta
    left = (f0 - fm) / delta
    jump = np.abs(right - left)
    with np.errstate(all="ignore"):
        c = aniso.tangential(unit(theta))
    if not np.all(np.isfinite(c)) or np.any(jump > jump_tol):
        bad = theta[(jump > jump_tol) | ~np.isfinite(c)]
        raise NonSmoothAnisotropy(
            f"anisotropy {aniso.spec} has a kink near theta={float(bad[0]):.4f} (jump {float(jump.max()):.3g})"
        )


@dataclass(frozen=True)
class EllipticityAudit:
    lambda_min: float
    lambda_max: float
    ratio: float
    passed: bool


def ellipticity_audit(aniso: Anisotropy, m: int = 360) -> EllipticityAudit:
    """Minimum of ``c(nu)`` over ``m`` uniformly spaced unit normals.

    The uniform ellipticity condition is read as
    ``<D^2 Phi(nu) xi, xi> >= lambda |xi - <nu, xi> nu|^2``; on unit tangents
    the best constant is ``min c(nu)``.
    """
    if m < 16:
        raise ValueError("need at least 16 samples")
    smoothness_probe(aniso, m)
    c = aniso.tangential(unit(2 * np.pi * np.arange(m) / m))
    lo, hi = float(c.min()), float(c.max())
    return EllipticityAudit(lambda_min=lo, lambda_max=hi, ratio=hi / lo if lo > 0 else np.inf, passed=lo > 0)


def wulff_shape(aniso: Anisotropy, n: int = 256, scale: float = 1.0) -> MultiCurve:
    """Polygon through ``scale * DPhi(nu_k)`` for ``n`` equally spaced normals."""
    if n < 16:
        raise ValueError("need at least 16 vertices")
    smoothness_probe(aniso)
    pts = scale * aniso.grad(unit(2 * np.pi * np.arange(n) / n))
    return MultiCurve((pts,))


def wulff_area(aniso: Anisotropy, n: int = 4096) -> float:
    """Area of the scale-1 Wulff shape (polygonal approximation)."""
    from .curve2d import enclosed_area

    return enclosed_area(wulff_shape(aniso, n, 1.0))
