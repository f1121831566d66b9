"""Incident spherical wave from a point source and the per-bubble forcing."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AtSource
from .geometry import SphereQuadrature
from .scene import BubbleSpec, ClusterModel, Medium, PointSource


@dataclass(frozen=True)
class IncidentField:
    """u_in(x, t) = pulse(t - |x - x0| / c0) / |x - x0|."""

    source: PointSource
    medium: Medium

    @property
    def x0(self) -> np.ndarray:
        return np.asarray(self.source.position)

    def arrival_time(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.x0)) / self.medium.c0

    def scaled(self, factor: float) -> "IncidentField":
        return IncidentField(PointSource(self.source.position, self.source.pulse.scaled(factor)), self.medium)


def _distance(f: IncidentField, x) -> float:
    r = float(np.linalg.norm(np.asarray(x, dtype=float) - f.x0))
    if r < 1e-12:
        raise AtSource("incident field is singular at the source point")
    return r


def eval_incident(f: IncidentField, x, t, deriv_order: int = 0):
    """n-th time derivative of the incident wave at point ``x`` and time(s) ``t``."""
    r = _distance(f, x)
    return f.source.pulse(np.asarray(t, dtype=float) - r / f.medium.c0, deriv_order) / r


def incident_gradient(f: IncidentField, points, t: float) -> np.ndarray:
    """Spatial gradient of u_in at (K, 3) points for one time ``t``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    diff = pts - f.x0
    r = np.linalg.norm(diff, axis=1)
    if np.any(r < 1e-12):
        raise AtSource("incident field is singular at the source point")
    tau = t - r / f.medium.c0
    pulse = f.source.pulse
    radial = -(pulse(tau, 1) / (f.medium.c0 * r) + pulse(tau, 0) / r**2)
    return radial[:, None] * diff / r[:, None]


def forcing_b(f: IncidentField, bubble: BubbleSpec, t):
    """Monopole forcing B_i(t) = (rho_m/k_m) |Omega_i| d^2/dt^2 u_in(z_i, t)."""
    m = f.medium
    return m.rho_m / m.k_m * bubble.volume * eval_incident(f, bubble.center, t, 2)


def forcing_b_quadrature(f: IncidentField, bubble: BubbleSpec, t, order: int = 31):
    """Flux of grad u_in through the bubble surface, by Lebedev quadrature.

    This is the forcing as it appears before the monopole approximation; it
    is used to quantify that approximation.
    """
    quad = SphereQuadrature.lebedev(order)
    pts = np.asarray(bubble.center) + bubble.radius * quad.nodes
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.array([
        bubble.radius**2 * quad.weights @ np.einsum("ij,ij->i", incident_gradient(f, pts, tk), quad.nodes)
        for tk in ts
    ])
    return out if np.ndim(t) else float(out[0])


def rhs_vector(f: IncidentField, c: ClusterModel, t, forcing: str = "monopole"):
    """Right-hand side (rho_c/k_c) c0^2 B_i(t) of the amplitude system.

    Returns shape (M,) for scalar ``t`` and (M, len(t)) for arrays.
    """
    if forcing == "monopole":
        force = forcing_b
    elif forcing == "quadrature":
        force = forcing_b_quadrature
    else:
        raise ValueError(f"forcing must be 'monopole' or 'quadrature', got {forcing!r}")
    scale = c.contrast_ratio * c.c0**2
    rows = [s * np.asarray(force(f, bb, t)) for s, bb in zip(scale, c.bubbles)]
    return np.array(rows, dtype=float)
