"""Sphere quadrature and the shape functionals of the point-interaction model."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import lebedev_rule
from scipy.special import roots_legendre

from .errors import NonPositiveParameter, OnSurface

# Degrees tabulated by scipy.integrate.lebedev_rule.
LEBEDEV_ORDERS = (3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27, 29, 31, 35, 41, 47,
                  53, 59, 65, 71, 77, 83, 89, 95, 101, 107, 113, 119, 125, 131)


@dataclass(frozen=True)
class SphereQuadrature:
    """Quadrature rule on the unit sphere.

    ``nodes`` has shape (K, 3); ``weights`` sum to 4*pi, so
    ``weights @ f(nodes)`` approximates the surface integral of f.
    The rule is exact for spherical harmonics of degree <= ``order``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @classmethod
    def lebedev(cls, order: int = 31) -> "SphereQuadrature":
        return _lebedev_cached(_round_up_order(order))

    def integrate(self, f, center=(0.0, 0.0, 0.0), radius: float = 1.0) -> float:
        """Surface integral of ``f(points)`` over the sphere of given center and radius.

        ``f`` receives an (K, 3) array of surface points and the matching
        (K, 3) outward unit normals and returns K values.
        """
        pts = np.asarray(center, dtype=float) + radius * self.nodes
        return float(radius**2 * self.weights @ f(pts, self.nodes))


def _round_up_order(order: int) -> int:
    for o in LEBEDEV_ORDERS:
        if o >= order:
            return o
    raise ValueError(f"no Lebedev rule of order >= {order} (max {LEBEDEV_ORDERS[-1]})")


@lru_cache(maxsize=None)
def _lebedev_cached(order: int) -> SphereQuadrature:
    x, w = lebedev_rule(order)
    nodes = np.ascontiguousarray(x.T)
    nodes.setflags(write=False)
    w = np.asarray(w, dtype=float)
    w.setflags(write=False)
    return SphereQuadrature(nodes=nodes, weights=w, order=order)


def _tangent_frame(normal):
    """Two unit vectors completing ``normal`` to an orthonormal frame."""
    helper = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(normal, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(normal, e1)


def a_surface(radius: float = 1.0, outer_order: int = 17, n_theta: int = 40, n_phi: int = 16) -> float:
    r"""Double surface integral A = |dB|^{-1} \iint (x-y).nu_x / |x-y| over a sphere.

    The inner integral over y is done in polar coordinates centred on the
    outer node x, which turns the coincident-point singularity into a smooth
    integrand in the polar angle (Gauss-Legendre in theta, trapezoid in phi).
    The value scales as ``radius**2``.
    """
    if radius <= 0:
        raise NonPositiveParameter("radius must be > 0")
    outer = SphereQuadrature.lebedev(outer_order)
    u, wu = roots_legendre(n_theta)
    theta = 0.5 * np.pi * (u + 1.0)
    w_theta = 0.5 * np.pi * wu * np.sin(theta)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    w_phi = np.full(n_phi, 2 * np.pi / n_phi)

    total = 0.0
    for xhat, wx in zip(outer.nodes, outer.weights):
        e1, e2 = _tangent_frame(xhat)
        ct, st = np.cos(theta)[:, None], np.sin(theta)[:, None]
        dirs = (ct[..., None] * xhat
                + st[..., None] * (np.cos(phi)[None, :, None] * e1 + np.sin(phi)[None, :, None] * e2))
        x = radius * xhat
        y = radius * dirs
        diff = x - y
        dist = np.linalg.norm(diff, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            integrand = np.where(dist > 0, diff @ xhat / dist, 0.0)
        inner = radius**2 * np.einsum("i,j,ij->", w_theta, w_phi, integrand)
        total += radius**2 * wx * inner
    return total / (4 * np.pi * radius**2)


def a_surface_unit_sphere() -> float:
    """A for the unit sphere; equals 8*pi/3."""
    return a_surface(1.0)


def a_surface_monte_carlo(n_pairs: int = 1_000_000, seed: int = 0, radius: float = 1.0):
    """Monte Carlo estimate of :func:`a_surface` with its standard error.

    Independent uniform pairs (x, y) on the sphere; returns ``(estimate, stderr)``.
    """
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n_pairs, 3))
    y = rng.normal(size=(n_pairs, 3))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    diff = radius * (x - y)
    dist = np.linalg.norm(diff, axis=1)
    f = np.einsum("ij,ij->i", diff, x) / dist
    area = 4 * np.pi * radius**2
    return area * f.mean(), area * f.std(ddof=1) / np.sqrt(n_pairs)


def surface_area(radius: float) -> float:
    return 4 * np.pi * radius**2


def volume(radius_ref: float, delta: float) -> float:
    """Volume of the bubble delta*B for a reference sphere of radius ``radius_ref``."""
    if radius_ref <= 0 or delta <= 0:
        raise NonPositiveParameter("radius_ref and delta must be > 0")
    return 4 * np.pi / 3 * (delta * radius_ref) ** 3


def averaged_kernel_quadrature(x, center, radius: float, order: int = 131):
    """Surface average of 1/|x - y| over a sphere, by Lebedev quadrature."""
    quad = SphereQuadrature.lebedev(order)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(center, dtype=float) + radius * quad.nodes
    dist = np.linalg.norm(x[:, None, :] - y[None, :, :], axis=-1)
    vals = (1.0 / dist) @ quad.weights / (4 * np.pi)
    return vals if vals.size > 1 else float(vals[0])


def averaged_kernel(x, center, radius: float):
    """Surface average over the sphere ``|y - center| = radius`` of ``1/|x - y|``.

    Exterior points use the mean-value property (exactly ``1/|x - center|``);
    interior points fall back to quadrature. ``x`` may be a single point or an
    (N, 3) array. Raises :class:`OnSurface` for points on the sphere.
    """
    xs = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.linalg.norm(xs - np.asarray(center, dtype=float), axis=1)
    if np.any(np.abs(r - radius) <= 1e-12 * radius):
        raise OnSurface("averaged_kernel is not defined on the sphere itself")
    out = np.empty(len(xs))
    outside = r > radius
    out[outside] = 1.0 / r[outside]
    if np.any(~outside):
        out[~outside] = averaged_kernel_quadrature(xs[~outside], center, radius)
    return out if np.ndim(x) > 1 else float(out[0])
