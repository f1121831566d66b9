"""Scattered pressure from the bubble amplitudes.

:func:`scattered_field` evaluates the point-interaction expansion

    u_s(x, t) = sum_i (alpha_i rho_m / 4 pi) <1/|x - y|>_i Y_i(t - |x - z_i| / c0)

where ``<.>_i`` is the surface average over bubble i.  For dimers and
tetramers, :func:`dimer_dominant_field` gives the explicit leading term split
into a primary wave U1 (shifted, amplified incident wave) and a secondary
resonant wave U2; their combination is ``U1 - U2``.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import geometry
from .dynamics import AmplitudeSolution, collective_factor, sine_convolution, validate_pairing
from .errors import PointInsideBubble, StrongCouplingRegime
from .incident import IncidentField, eval_incident
from .scene import ClusterModel, minnaert_frequency

VARIANTS = ("theorem", "corollary")


@dataclass(frozen=True)
class ObservationSet:
    points: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[1] != 3:
            raise ValueError("observation points must be 3-vectors")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))

    def validate(self, c: ClusterModel):
        for k, x in enumerate(self.points):
            for i, bb in enumerate(c.bubbles):
                if np.linalg.norm(x - np.asarray(bb.center)) <= bb.radius:
                    raise PointInsideBubble(f"observation point {k} lies inside bubble {i}")


@dataclass
class TimeSeries:
    """Pressure channels at one observation point, keyed by channel name."""

    point_index: int
    point: np.ndarray
    t: np.ndarray
    channels: dict
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.channels[name]


def _retarded_amplitudes(sol: AmplitudeSolution, tr: np.ndarray, deriv: int = 0):
    if np.any(tr > sol.horizon * (1 + 1e-12)):
        warnings.warn("retarded times exceed the amplitude horizon; those samples are NaN", RuntimeWarning)
    return sol(tr, deriv)


def scattered_field(c: ClusterModel, sol: AmplitudeSolution, obs: ObservationSet,
                    variant: str = "theorem") -> list[TimeSeries]:
    """Scattered pressure at every observation point.

    ``variant='corollary'`` multiplies each term by ``(rho_c/k_c) c0**2``,
    the alternative prefactor kept for comparison.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    obs.validate(c)
    coef = c.alpha * c.medium.rho_m / (4 * np.pi)
    if variant == "corollary":
        coef = coef * c.contrast_ratio * c.c0**2
    out = []
    for k, x in enumerate(obs.points):
        u = np.zeros_like(obs.times)
        for i, bb in enumerate(c.bubbles):
            r = np.linalg.norm(x - np.asarray(bb.center))
            kernel = geometry.averaged_kernel(x, bb.center, bb.radius)
            y = _retarded_amplitudes(sol, obs.times - r / c.c0)[i]
            u = u + coef[i] * kernel * y
        out.append(TimeSeries(k, x, obs.times, {"u_s": u}, {"formula": f"point-interaction/{variant}",
                                                              "method": sol.method}))
    return out


@dataclass(frozen=True)
class PolymerCoefficients:
    omega_m: float
    j_factor: float
    amplitude: float  # rho_m |B| delta / (4 pi k_c_bar)


def polymer_coefficients(c: ClusterModel) -> PolymerCoefficients:
    """Minnaert frequency, collective factor J and the common amplitude for a dimer or tetramer."""
    multiplicity = {2: 1, 4: 3}.get(c.size)
    if multiplicity is None:
        raise ValueError("dominant-field formulas are available for dimers (2) and tetramers (4)")
    bb = c.bubbles[0]
    omega_m = minnaert_frequency(bb.k_c_bar, c.medium.rho_m, bb.radius_ref)
    J = collective_factor(c, multiplicity)
    if J <= 0:
        raise StrongCouplingRegime(f"J = {J:.4g} <= 0; bubbles too close for the oscillatory regime")
    amp = c.medium.rho_m * bb.reference_volume * bb.delta / (4 * np.pi * bb.k_c_bar)
    return PolymerCoefficients(omega_m, J, amp)


def dimer_dominant_field(c: ClusterModel, f: IncidentField, obs: ObservationSet,
                         T: float, dt: float) -> list[TimeSeries]:
    """Leading scattered field of a dimer (or tetramer) split into U1 and U2.

    With ``w = omega_M / sqrt(J)``, ``t_r = t - |x - z_1| / c0`` and
    ``S(x) = sum_j 1/|x - z_j|``::

        U1 = omega_M**2 a J**-1   S(x) u_in(z_1, t_r)
        U2 = omega_M**3 a J**-1.5 S(x) int_0^t_r sin(w (t_r - tau)) u_in(z_1, tau) dtau
        total = U1 - U2

    ``T`` and ``dt`` set the grid of the sine convolution, which is then
    evaluated at the retarded times through its dense output.
    """
    obs.validate(c)
    pc = polymer_coefficients(c)
    z = c.centers
    w = pc.omega_m / np.sqrt(pc.j_factor)
    trace = lambda tau: eval_incident(f, z[0], tau, 0)
    conv = sine_convolution(w, trace, T, dt)
    out = []
    for k, x in enumerate(obs.points):
        kernel_sum = float(np.sum(1.0 / np.linalg.norm(x - z, axis=1)))
        tr = obs.times - np.linalg.norm(x - z[0]) / c.c0
        u_ret = np.where(tr > 0, trace(np.maximum(tr, 0.0)), 0.0)
        v_ret = _retarded_amplitudes(conv, tr)[0]
        u1 = pc.omega_m**2 * pc.amplitude / pc.j_factor * kernel_sum * u_ret
        u2 = pc.omega_m**3 * pc.amplitude * pc.j_factor**-1.5 * kernel_sum * v_ret
        meta = {"formula": "dominant-polymer", "omega_M": pc.omega_m, "J": pc.j_factor}
        out.append(TimeSeries(k, x, obs.times, {"U1": u1, "U2": u2, "total": u1 - u2}, meta))
    return out


def dimer_collection_field(c: ClusterModel, pairing, f: IncidentField, obs: ObservationSet,
                           T: float, dt: float, max_ratio: float = 0.1) -> list[TimeSeries]:
    """Sum of the dominant fields of well separated dimers."""
    pairs = validate_pairing(c, pairing, max_ratio)
    obs.validate(c)
    total = None
    for pair in pairs:
        part = dimer_dominant_field(c.subset(pair), f, obs, T, dt)
        if total is None:
            total = part
            for ts in total:
                ts.metadata = {"formula": "dominant-dimer-collection",
                               "J": [ts.metadata["J"]], "omega_M": ts.metadata["omega_M"]}
        else:
            for acc, ts in zip(total, part):
                for name in acc.channels:
                    acc.channels[name] = acc.channels[name] + ts.channels[name]
                acc.metadata["J"].append(ts.metadata["J"])
    return total


def write_csv(path, metadata: dict, names, data):
    """Plain CSV with ``# key: json`` metadata lines before the header row.

    Floats are written with ``repr`` so reruns are byte-identical.
    """
    lines = [f"# {key}: {json.dumps(val, sort_keys=True)}" for key, val in sorted(metadata.items())]
    lines.append(",".join(names))
    lines += [",".join(repr(float(v)) for v in row) for row in np.asarray(data, dtype=float)]
    Path(path).write_text("\n".join(lines) + "\n")


def write_time_series_csv(ts: TimeSeries, path, metadata: dict | None = None,
                          columns=("u_s", "U1", "U2", "total")):
    """One CSV per observation point: metadata, then ``t`` and the requested channels."""
    meta = dict(ts.metadata)
    meta.update(metadata or {})
    meta["point"] = [float(v) for v in ts.point]
    names = [n for n in columns if n in ts.channels]
    write_csv(path, meta, ["t", *names], np.column_stack([ts.t] + [ts.channels[n] for n in names]))


def read_time_series_csv(path):
    """Inverse of :func:`write_csv`; returns ``(metadata, columns)``."""
    meta, header, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(": ")
            meta[key] = json.loads(val)
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows).reshape(-1, len(header))
    return meta, {name: data[:, k] for k, name in enumerate(header)}
