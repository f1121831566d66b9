"""Physical scene: background medium, bubbles, point source, and the derived
coefficients of the delay-coupled amplitude system.

All quantities are SI.  A bubble is ``Omega_i = delta * B_i + z_i`` with
``B_i`` a sphere of radius ``radius_ref``; its density and bulk modulus are
``rho_c = rho_c_bar * delta**2`` and ``k_c = k_c_bar * delta**2``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from . import geometry
from .errors import DuplicateCenters, NonPositiveParameter, SceneParseError, SourceInsideBubble
from .pulse import Pulse, pulse_from_dict

# Largest eigenvalue of the magnetization operator on a sphere.
SPHERE_MAGNETIZATION_EIGENVALUE = 1.0 / 3.0


@lru_cache(maxsize=1)
def _a_unit() -> float:
    return geometry.a_surface_unit_sphere()


@dataclass(frozen=True)
class Medium:
    rho_m: float
    k_m: float

    def __post_init__(self):
        if not (self.rho_m > 0 and self.k_m > 0):
            raise NonPositiveParameter(f"medium needs rho_m > 0 and k_m > 0, got {self.rho_m}, {self.k_m}")
        if not np.isfinite(self.c0):
            raise NonPositiveParameter("sound speed is not finite")

    @property
    def c0(self) -> float:
        return float(np.sqrt(self.k_m / self.rho_m))


@dataclass(frozen=True)
class BubbleSpec:
    center: tuple
    delta: float
    radius_ref: float = 1.0
    rho_c_bar: float = 1.0
    k_c_bar: float = 1.0

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) != 3:
            raise ValueError("bubble center must be a 3-vector")
        object.__setattr__(self, "center", c)
        for name in ("delta", "radius_ref", "rho_c_bar", "k_c_bar"):
            if not getattr(self, name) > 0:
                raise NonPositiveParameter(f"bubble {name} must be > 0, got {getattr(self, name)}")

    @property
    def rho_c(self) -> float:
        return self.rho_c_bar * self.delta**2

    @property
    def k_c(self) -> float:
        return self.k_c_bar * self.delta**2

    @property
    def radius(self) -> float:
        """Physical radius delta * r."""
        return self.delta * self.radius_ref

    @property
    def volume(self) -> float:
        return geometry.volume(self.radius_ref, self.delta)

    @property
    def reference_volume(self) -> float:
        return 4 * np.pi / 3 * self.radius_ref**3

    @property
    def a_reference(self) -> float:
        """A functional of the reference sphere B (radius ``radius_ref``)."""
        return self.radius_ref**2 * _a_unit()

    def moved(self, center) -> "BubbleSpec":
        return replace(self, center=tuple(center))


@dataclass(frozen=True)
class PointSource:
    position: tuple
    pulse: Pulse

    def __post_init__(self):
        p = tuple(float(v) for v in self.position)
        if len(p) != 3:
            raise ValueError("source position must be a 3-vector")
        object.__setattr__(self, "position", p)


@dataclass(frozen=True)
class ClusterModel:
    """Bubbles plus every coefficient derived from them.

    Per-bubble arrays are indexed like ``bubbles``; ``q_matrix`` and
    ``delays`` are M x M with zero diagonals.
    """

    medium: Medium
    bubbles: tuple
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    a_surface: np.ndarray
    d_diag: np.ndarray
    b: np.ndarray
    q_matrix: np.ndarray
    delays: np.ndarray
    distances: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.bubbles)

    @property
    def centers(self) -> np.ndarray:
        return np.array([bb.center for bb in self.bubbles])

    @property
    def contrast_ratio(self) -> np.ndarray:
        """rho_c / k_c per bubble (delta independent)."""
        return np.array([bb.rho_c_bar / bb.k_c_bar for bb in self.bubbles])

    @property
    def c0(self) -> float:
        return self.medium.c0

    def system_matrix(self) -> np.ndarray:
        """A = diag(d) - Q, the zero-delay coupling matrix."""
        return np.diag(self.d_diag) - self.q_matrix

    def with_zero_delays(self) -> "ClusterModel":
        """Same cluster with every retardation set to zero."""
        return replace(self, delays=np.zeros_like(self.delays))

    def subset(self, indices: Sequence[int]) -> "ClusterModel":
        return build_cluster(self.medium, [self.bubbles[i] for i in indices])


def build_cluster(medium: Medium, bubbles: Sequence[BubbleSpec]) -> ClusterModel:
    """Derive the contrasts, A functionals, d_i, b_j, Q and delays of a cluster."""
    bubbles = tuple(bubbles)
    if not bubbles:
        raise ValueError("a cluster needs at least one bubble")
    z = np.array([bb.center for bb in bubbles])
    dist = np.linalg.norm(z[:, None, :] - z[None, :, :], axis=-1)
    off = ~np.eye(len(bubbles), dtype=bool)
    if np.any(dist[off] == 0.0):
        i, j = np.argwhere((dist == 0.0) & off)[0]
        raise DuplicateCenters(f"bubbles {i} and {j} share the center {tuple(z[i])}")

    rho_c = np.array([bb.rho_c for bb in bubbles])
    k_c = np.array([bb.k_c for bb in bubbles])
    delta = np.array([bb.delta for bb in bubbles])
    ratio = rho_c / k_c
    alpha = 1.0 / rho_c - 1.0 / medium.rho_m
    beta = 1.0 / k_c - 1.0 / medium.k_m
    gamma = beta - alpha * ratio
    # A of a sphere scales with radius squared: A(delta*B) = delta**2 * A(B).
    a_surf = np.array([_a_unit() * bb.radius**2 for bb in bubbles])
    d_diag = 0.5 * medium.rho_m * alpha * ratio * a_surf
    b = 0.5 * medium.rho_m * alpha * delta**3 * ratio
    with np.errstate(divide="ignore"):
        q = np.where(off, b[None, :] / np.where(off, dist, 1.0), 0.0)
    delays = dist / medium.c0
    for arr in (alpha, beta, gamma, a_surf, d_diag, b, q, delays, dist):
        arr.setflags(write=False)
    return ClusterModel(medium=medium, bubbles=bubbles, alpha=alpha, beta=beta, gamma=gamma,
                        a_surface=a_surf, d_diag=d_diag, b=b, q_matrix=q, delays=delays,
                        distances=dist)


@dataclass(frozen=True)
class InversionCheck:
    satisfied: bool
    margin: float
    value: float


@dataclass(frozen=True)
class AprioriCheck:
    satisfied: bool
    value: float


def _min_distance(c: ClusterModel) -> float:
    off = ~np.eye(c.size, dtype=bool)
    return float(c.distances[off].min())


def inversion_value(rho_m, ref_volume, delta, min_distance,
                    eigenvalue=SPHERE_MAGNETIZATION_EIGENVALUE) -> float:
    return rho_m / (4 * np.pi) * ref_volume * (delta / min_distance) ** 6 / eigenvalue**2


def check_inversion_condition(c: ClusterModel) -> InversionCheck:
    """Smallness condition ensuring the coupled system is invertible.

    Uses the largest reference volume and delta in the cluster and the
    minimal centre-to-centre distance. Vacuous for a single bubble.
    """
    if c.size == 1:
        return InversionCheck(True, 1.0, 0.0)
    value = inversion_value(c.medium.rho_m,
                            max(bb.reference_volume for bb in c.bubbles),
                            max(bb.delta for bb in c.bubbles),
                            _min_distance(c))
    return InversionCheck(bool(value < 1.0), 1.0 - value, value)


def check_apriori_condition(c: ClusterModel) -> AprioriCheck:
    """Condition under which the interior fields obey the improved a priori bound."""
    if c.size == 1:
        return AprioriCheck(True, 0.0)
    lam = SPHERE_MAGNETIZATION_EIGENVALUE
    off = ~np.eye(c.size, dtype=bool)
    with np.errstate(divide="ignore"):
        inv6 = np.where(off, 1.0 / np.where(off, c.distances, 1.0) ** 6, 0.0)
    weights = c.alpha[None, :] ** 2 / np.abs(1.0 + c.alpha[:, None] * lam) ** 2
    row_sums = (weights * inv6).sum(axis=1)
    delta = max(bb.delta for bb in c.bubbles)
    ref_vol = max(bb.reference_volume for bb in c.bubbles)
    value = float(c.medium.rho_m / (4 * np.pi) * ref_vol * delta**6 * row_sums.max())
    return AprioriCheck(bool(value < 1.0), value)


def minnaert_frequency(k_c_bar: float, rho_m: float, radius_ref: float = 1.0) -> float:
    """omega_M = sqrt(2 k_c_bar / (A_B rho_m)) for a spherical reference shape."""
    return float(np.sqrt(2 * k_c_bar / (radius_ref**2 * _a_unit() * rho_m)))


# ---------------------------------------------------------------------------
# scene files

@dataclass(frozen=True)
class Scene:
    medium: Medium
    bubbles: tuple
    source: PointSource

    def cluster(self) -> ClusterModel:
        return build_cluster(self.medium, self.bubbles)


_MEDIUM_KEYS = {"rho_m", "k_m"}
_BUBBLE_KEYS = {"center", "delta", "radius_ref", "rho_c_bar", "k_c_bar"}
_SOURCE_KEYS = {"position", "pulse"}
_PULSE_KEYS = {"kind", "params"}


def _reject_unknown(obj, allowed, where, required=()):
    if not isinstance(obj, dict):
        raise SceneParseError(f"{where} must be an object")
    extra = set(obj) - set(allowed)
    if extra:
        raise SceneParseError(f"unknown key(s) {sorted(extra)} in {where}")
    missing = set(required) - set(obj)
    if missing:
        raise SceneParseError(f"missing key(s) {sorted(missing)} in {where}")


def scene_from_dict(doc: dict) -> Scene:
    """Validate and build a :class:`Scene` from a parsed scene document."""
    _reject_unknown(doc, {"medium", "bubbles", "source"}, "scene", required=("medium", "bubbles", "source"))
    _reject_unknown(doc["medium"], _MEDIUM_KEYS, "medium", required=_MEDIUM_KEYS)
    if not isinstance(doc["bubbles"], list) or not doc["bubbles"]:
        raise SceneParseError("bubbles must be a non-empty list")
    for i, bb in enumerate(doc["bubbles"]):
        _reject_unknown(bb, _BUBBLE_KEYS, f"bubbles[{i}]", required=("center", "delta"))
    _reject_unknown(doc["source"], _SOURCE_KEYS, "source", required=_SOURCE_KEYS)
    _reject_unknown(doc["source"]["pulse"], _PULSE_KEYS, "source.pulse", required=("kind",))
    try:
        medium = Medium(**doc["medium"])
        bubbles = tuple(BubbleSpec(**bb) for bb in doc["bubbles"])
        pulse = pulse_from_dict(doc["source"]["pulse"])
        source = PointSource(doc["source"]["position"], pulse)
    except (TypeError, KeyError) as exc:
        raise SceneParseError(str(exc)) from exc
    x0 = np.asarray(source.position)
    for i, bb in enumerate(bubbles):
        if np.linalg.norm(x0 - np.asarray(bb.center)) <= bb.radius:
            raise SourceInsideBubble(f"source lies inside bubble {i}")
    return Scene(medium, bubbles, source)


def scene_to_dict(scene: Scene) -> dict:
    return {
        "medium": {"rho_m": scene.medium.rho_m, "k_m": scene.medium.k_m},
        "bubbles": [{"center": list(bb.center), "delta": bb.delta, "radius_ref": bb.radius_ref,
                     "rho_c_bar": bb.rho_c_bar, "k_c_bar": bb.k_c_bar} for bb in scene.bubbles],
        "source": {"position": list(scene.source.position), "pulse": scene.source.pulse.to_dict()},
    }


def loads_scene(text: str) -> Scene:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError(exc.msg, exc.lineno, exc.colno) from exc
    return scene_from_dict(doc)


def load_scene(path) -> Scene:
    return loads_scene(Path(path).read_text())
