"""Amplitude dynamics of the bubble cluster.

The amplitudes Y_i(t) solve

    d_i Y_i'' + Y_i - sum_{j != i} q_ij Y_j''(t - tau_ij) = rhs_i(t),
    Y(0) = Y'(0) = 0,

a neutral delay system.  This module provides

* a method-of-steps solver for the retarded system (:func:`solve_delay_system`),
* a dense zero-delay solver for ``A Y'' + Y = rhs`` (:func:`solve_dense_system`),
* the modal closed forms for dimers, tetramers and collections of dimers,
  built on the Duhamel integral of a single oscillator (:func:`duhamel_solve`).

All solvers run on a uniform grid ``t_n = n * dt`` and return an
:class:`AmplitudeSolution` with cubic dense output.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from .errors import (BadPairing, NonPositiveEigenvalue, NonPositiveStiffness, NotADimer,
                     NotATetramer, NotEquidistant, NotIdentical, SingularMatrix, StepTooLarge)
from .incident import IncidentField, rhs_vector
from .scene import ClusterModel, check_inversion_condition


# ---------------------------------------------------------------------------
# dense output

def _lagrange4_weights(s):
    """Cubic Lagrange weights for nodes at offsets -1, 0, 1, 2 and local coordinate s."""
    s = np.asarray(s, dtype=float)
    return np.stack([
        -s * (s - 1) * (s - 2) / 6,
        (s + 1) * (s - 1) * (s - 2) / 2,
        -(s + 1) * s * (s - 2) / 2,
        (s + 1) * s * (s - 1) / 6,
    ])


def _lagrange4_eval(samples, dt, tq):
    """Interpolate uniformly spaced ``samples`` (M, N+1) at times ``tq``.

    Nodes with negative index count as zero history; the stencil is shifted
    left near the final node.
    """
    n_last = samples.shape[1] - 1
    x = np.asarray(tq, dtype=float) / dt
    k = np.floor(x).astype(int)
    k = np.minimum(k, n_last - 2) if n_last >= 3 else np.minimum(k, n_last)
    s = x - k
    w = _lagrange4_weights(s)
    out = np.zeros((samples.shape[0],) + x.shape)
    for m, off in enumerate((-1, 0, 1, 2)):
        idx = k + off
        ok = (idx >= 0) & (idx <= n_last)
        vals = np.where(ok, samples[:, np.clip(idx, 0, n_last)], 0.0)
        out += w[m] * vals
    return out


@dataclass(frozen=True)
class AmplitudeSolution:
    """Samples of Y, Y', Y'' on a uniform grid plus cubic dense output.

    ``y``, ``y_dot`` and ``y_ddot`` have shape (M, N+1).  Calling the
    solution evaluates Y (or a derivative) at arbitrary times: Y and Y' use
    cubic Hermite interpolation of (Y, Y'), Y'' uses 4-point cubic
    interpolation of the stored accelerations.  Times before 0 give the zero
    history, times after the horizon give NaN.
    """

    t: np.ndarray
    y: np.ndarray
    y_dot: np.ndarray
    y_ddot: np.ndarray
    method: str = ""

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def horizon(self) -> float:
        return float(self.t[-1])

    @property
    def size(self) -> int:
        return self.y.shape[0]

    def __call__(self, t, deriv: int = 0):
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        out = np.zeros((self.size, flat.size))
        inside = (flat >= 0) & (flat <= self.horizon * (1 + 1e-12))
        if deriv in (0, 1):
            spline = CubicHermiteSpline(self.t, self.y, self.y_dot, axis=1)
            out[:, inside] = spline(np.minimum(flat[inside], self.horizon), nu=deriv)
        elif deriv == 2:
            out[:, inside] = _lagrange4_eval(self.y_ddot, self.dt, flat[inside])
        else:
            raise ValueError("dense output supports deriv in {0, 1, 2}")
        # grid nodes return the stored samples exactly
        k = np.rint(flat / self.dt)
        node = inside & (np.abs(flat - k * self.dt) <= 1e-12 * self.dt)
        stored = (self.y, self.y_dot, self.y_ddot)[deriv]
        out[:, node] = stored[:, k[node].astype(int)]
        out[:, flat > self.horizon * (1 + 1e-12)] = np.nan
        return out.reshape((self.size,) + t.shape)


# ---------------------------------------------------------------------------
# helpers

def _time_grid(T: float, dt: float) -> np.ndarray:
    if not (dt > 0 and T > 0):
        raise ValueError("T and dt must be > 0")
    n = int(np.ceil(T / dt - 1e-9))
    return dt * np.arange(n + 1)


def _as_rhs(c: ClusterModel | None, forcing, forcing_method: str = "monopole") -> Callable:
    """Turn an IncidentField or callable into a vectorised rhs(t) -> (M, len(t))."""
    if isinstance(forcing, IncidentField):
        if c is None:
            raise ValueError("an IncidentField forcing needs the cluster")
        return lambda t: rhs_vector(forcing, c, np.atleast_1d(t), forcing=forcing_method)

    def rhs(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        vals = np.asarray(forcing(t), dtype=float)
        if vals.ndim == 1:
            vals = vals[None, :] if vals.shape == t.shape else np.repeat(vals[:, None], t.size, axis=1)
        return vals
    return rhs


def _rk4_second_order(accel, t, n_state, store_accel):
    """Classical RK4 for Y'' = accel(stage, n, Y, V) with Y(0) = Y'(0) = 0.

    ``stage`` is 0, 1 (half step) or 2 (full step) relative to node n.
    """
    N = t.size - 1
    dt = t[1] - t[0]
    y = np.zeros((n_state, N + 1))
    v = np.zeros((n_state, N + 1))
    store_accel(0, accel(0, 0, y[:, 0], v[:, 0]))
    for n in range(N):
        Y, V = y[:, n], v[:, n]
        a1 = accel(0, n, Y, V)
        Y2, V2 = Y + 0.5 * dt * V, V + 0.5 * dt * a1
        a2 = accel(1, n, Y2, V2)
        Y3, V3 = Y + 0.5 * dt * V2, V + 0.5 * dt * a2
        a3 = accel(1, n, Y3, V3)
        Y4, V4 = Y + dt * V3, V + dt * a3
        a4 = accel(2, n, Y4, V4)
        y[:, n + 1] = Y + dt / 6 * (V + 2 * V2 + 2 * V3 + V4)
        v[:, n + 1] = V + dt / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
        store_accel(n + 1, accel(0, n + 1, y[:, n + 1], v[:, n + 1]))
    return y, v


def _safe_inverse(A):
    A = np.asarray(A, dtype=float)
    if np.linalg.cond(A) > 1e14:
        raise SingularMatrix("coupling matrix is singular or numerically singular")
    return np.linalg.inv(A)


# ---------------------------------------------------------------------------
# solvers

def solve_delay_system(c: ClusterModel, forcing, T: float, dt: float,
                       forcing_method: str = "monopole") -> AmplitudeSolution:
    """Method-of-steps RK4 solver for the retarded amplitude system.

    Delayed accelerations ``Y_j''(t - tau_ij)`` are read from the stored
    acceleration history by cubic interpolation; this requires
    ``dt < min positive delay / 4`` so that every stencil lies in the past.
    Couplings with zero delay are treated implicitly through the matrix
    ``diag(d) - Q_0``.

    ``forcing`` is an :class:`IncidentField` or a callable returning the
    right-hand side for an array of times.
    """
    if np.any(c.d_diag <= 0):
        raise NonPositiveStiffness(f"all d_i must be > 0, got {c.d_diag}")
    tau = np.asarray(c.delays, dtype=float)
    off = ~np.eye(c.size, dtype=bool)
    delayed = off & (tau > 0)
    if np.any(delayed):
        tau_min = tau[delayed].min()
        if dt >= tau_min / 4:
            raise StepTooLarge(f"dt={dt:g} must be below a quarter of the smallest delay {tau_min:g}")
    if c.size > 1:
        inv = check_inversion_condition(c)
        if not inv.satisfied:
            warnings.warn(f"inversion condition violated (value {inv.value:.3g} >= 1)", RuntimeWarning)

    t = _time_grid(T, dt)
    N = t.size - 1
    rhs = _as_rhs(c, forcing, forcing_method)
    f_node = rhs(t)
    f_half = rhs(t[:-1] + 0.5 * dt) if N else np.zeros((c.size, 0))

    q = np.asarray(c.q_matrix, dtype=float)
    a0_inv = _safe_inverse(np.diag(c.d_diag) - np.where(delayed, 0.0, q))

    I, J = np.nonzero(delayed)
    q_pairs = q[I, J]
    pad = int(np.ceil(tau.max() / dt)) + 4 if I.size else 0
    acc_hist = np.zeros((c.size, pad + N + 1))
    # Stencil offsets and weights for each stage position (0, dt/2, dt).
    stencils = []
    for frac in (0.0, 0.5, 1.0):
        x = frac - tau[I, J] / dt
        k0 = np.floor(x).astype(int)
        w = _lagrange4_weights(x - k0)
        stencils.append((k0, w))

    def delayed_term(stage, n):
        if not I.size:
            return 0.0
        k0, w = stencils[stage]
        base = pad + n + k0
        vals = (w[0] * acc_hist[J, base - 1] + w[1] * acc_hist[J, base]
                + w[2] * acc_hist[J, base + 1] + w[3] * acc_hist[J, base + 2])
        return np.bincount(I, weights=q_pairs * vals, minlength=c.size)

    def accel(stage, n, Y, V):
        f = f_node[:, n] if stage == 0 else (f_half[:, n] if stage == 1 else f_node[:, n + 1])
        return a0_inv @ (f - Y + delayed_term(stage, n))

    def store(n, a):
        acc_hist[:, pad + n] = a

    y, v = _rk4_second_order(accel, t, c.size, store)
    return AmplitudeSolution(t, y, v, acc_hist[:, pad:].copy(), method="delay")


def solve_dense_system(A, rhs, T: float, dt: float, c: ClusterModel | None = None,
                       forcing_method: str = "monopole") -> AmplitudeSolution:
    """Solve ``A Y'' + Y = rhs(t)`` with zero initial data.

    The system is reduced to first order, ``Z = (Y, Y')``,
    ``Z' = [[0, I], [-A^{-1}, 0]] Z + [0, A^{-1} rhs]``, and integrated with
    classical RK4.  ``rhs`` may be a callable of time or an IncidentField
    (then ``c`` must be given).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    a_inv = _safe_inverse(A)
    t = _time_grid(T, dt)
    N = t.size - 1
    rhs_fn = _as_rhs(c, rhs, forcing_method)
    f_node = rhs_fn(t)
    f_half = rhs_fn(t[:-1] + 0.5 * dt) if N else np.zeros((A.shape[0], 0))
    acc = np.zeros((A.shape[0], N + 1))

    def accel(stage, n, Y, V):
        f = f_node[:, n] if stage == 0 else (f_half[:, n] if stage == 1 else f_node[:, n + 1])
        return a_inv @ (f - Y)

    def store(n, a):
        acc[:, n] = a

    y, v = _rk4_second_order(accel, t, A.shape[0], store)
    return AmplitudeSolution(t, y, v, acc, method="dense")


def delay_residual(c: ClusterModel, sol: AmplitudeSolution, forcing,
                   forcing_method: str = "monopole") -> float:
    """Max-norm residual of the retarded system at the grid midpoints.

    Y and Y'' are taken from the dense output, so the check exercises the
    interpolants between the nodes where the solver enforced the equation.
    """
    tm = sol.t[:-1] + 0.5 * sol.dt
    rhs = _as_rhs(c, forcing, forcing_method)(tm)
    y = sol(tm)
    ydd = sol(tm, 2)
    res = c.d_diag[:, None] * ydd + y - rhs
    for i in range(c.size):
        for j in range(c.size):
            if i != j and c.q_matrix[i, j] != 0.0:
                res[i] -= c.q_matrix[i, j] * sol(tm - c.delays[i, j], 2)[j]
    return float(np.abs(res).max())


# ---------------------------------------------------------------------------
# single oscillator

def duhamel_solve(lambda_k: float, g, T: float, dt: float) -> AmplitudeSolution:
    """Zero-data solution of ``lambda_k Z'' + Z = g`` by the Duhamel integral.

    ``Z(t) = s * int_0^t sin(s (t - tau)) g(tau) dtau`` with ``s = lambda_k**-0.5``.
    The convolution is split as ``sin(st) C(t) - cos(st) S(t)`` with
    cumulative integrals ``C, S`` of ``cos(s tau) g`` and ``sin(s tau) g``,
    each accumulated by Simpson's rule on every grid interval (``g`` is
    sampled at nodes and midpoints). Returns a one-component solution.
    """
    if not lambda_k > 0:
        raise NonPositiveEigenvalue(f"eigenvalue must be > 0 for an oscillatory response, got {lambda_k}")
    s = 1.0 / np.sqrt(lambda_k)
    t = _time_grid(T, dt)
    g_node = np.asarray(g(t), dtype=float).reshape(-1)
    if t.size == 1:
        return AmplitudeSolution(t, np.zeros((1, 1)), np.zeros((1, 1)), g_node[None, :] / lambda_k, "duhamel")
    tm = t[:-1] + 0.5 * dt
    g_mid = np.asarray(g(tm), dtype=float).reshape(-1)

    def cumulative(weight):
        node = weight(s * t) * g_node
        mid = weight(s * tm) * g_mid
        return np.concatenate([[0.0], np.cumsum(dt / 6 * (node[:-1] + 4 * mid + node[1:]))])

    C = cumulative(np.cos)
    S = cumulative(np.sin)
    st, ct = np.sin(s * t), np.cos(s * t)
    z = s * (st * C - ct * S)
    z_dot = s**2 * (ct * C + st * S)
    z_ddot = (g_node - z) / lambda_k
    return AmplitudeSolution(t, z[None, :], z_dot[None, :], z_ddot[None, :], method="duhamel")


def sine_convolution(omega: float, g, T: float, dt: float) -> AmplitudeSolution:
    """``V(t) = int_0^t sin(omega (t - tau)) g(tau) dtau`` with dense output."""
    z = duhamel_solve(1.0 / omega**2, g, T, dt)
    return AmplitudeSolution(z.t, z.y / omega, z.y_dot / omega, z.y_ddot / omega, "sine-convolution")


def oscillator_response(d: float, samples, dt: float, axis: int = 0):
    """Zero-data solution of ``d Y'' + Y = P`` for sampled forcing ``P``.

    ``P`` is interpolated in time by a cubic spline; on each interval the
    particular solution ``P - d P''`` is exact, and the homogeneous part is
    propagated by an exact rotation.  This is stable for any ``d > 0``,
    including the nearly non-dispersive regime ``d << dt**2``.  Returns
    ``(Y, Y_t, Y_tt)`` with the shape of ``samples``; ``Y_tt = (P - Y) / d``.
    """
    P = np.moveaxis(np.asarray(samples, dtype=float), axis, 0)
    nt = P.shape[0]
    y = np.zeros_like(P)
    v = np.zeros_like(P)
    if nt > 1:
        t = dt * np.arange(nt)
        coef = CubicSpline(t, P, axis=0).c  # (4, nt-1, ...)
        s = 1.0 / np.sqrt(d)
        cs, sn = np.cos(s * dt), np.sin(s * dt)
        for n in range(nt - 1):
            c3, c2, c1, c0 = coef[0, n], coef[1, n], coef[2, n], coef[3, n]
            yp0 = c0 - 2 * d * c2
            vp0 = c1 - 6 * d * c3
            yp1 = ((c3 * dt + c2) * dt + c1) * dt + c0 - d * (6 * c3 * dt + 2 * c2)
            vp1 = (3 * c3 * dt + 2 * c2) * dt + c1 - 6 * d * c3
            e, ed = y[n] - yp0, v[n] - vp0
            y[n + 1] = yp1 + e * cs + ed * sn / s
            v[n + 1] = vp1 - e * s * sn + ed * cs
    a = (P - y) / d
    return tuple(np.moveaxis(arr, 0, axis) for arr in (y, v, a))


# ---------------------------------------------------------------------------
# modal closed forms

@dataclass(frozen=True)
class SpectralDecomposition:
    """``A = P diag(eigenvalues) P^{-1}`` with the explicit symmetric-mode basis."""

    eigenvalues: np.ndarray
    p_matrix: np.ndarray
    p_inverse: np.ndarray
    matrix: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.p_matrix @ np.diag(self.eigenvalues) @ self.p_inverse

    def reconstruction_error(self) -> float:
        return float(np.linalg.norm(self.reconstruct() - self.matrix) / np.linalg.norm(self.matrix))

    @property
    def oscillatory(self) -> bool:
        return bool(np.all(self.eigenvalues > 0))


def _require_identical(c: ClusterModel):
    ref = c.bubbles[0]
    for bb in c.bubbles[1:]:
        for name in ("delta", "radius_ref", "rho_c_bar", "k_c_bar"):
            a, b = getattr(ref, name), getattr(bb, name)
            if abs(a - b) > 1e-12 * max(abs(a), abs(b)):
                raise NotIdentical(f"bubbles differ in {name}: {a} vs {b}")


def decompose_dimer(c: ClusterModel) -> SpectralDecomposition:
    """Eigen-decomposition of ``A = diag(d) - Q`` for two identical bubbles.

    Symmetric mode (1, 1) has eigenvalue ``d - q``, antisymmetric mode
    (-1, 1) has ``d + q`` where ``q = q_12 = q_21``.
    """
    if c.size != 2:
        raise NotADimer(f"expected 2 bubbles, got {c.size}")
    _require_identical(c)
    d, q = c.d_diag[0], c.q_matrix[0, 1]
    P = np.array([[1.0, -1.0], [1.0, 1.0]])
    P_inv = 0.5 * np.array([[1.0, 1.0], [-1.0, 1.0]])
    return SpectralDecomposition(np.array([d - q, d + q]), P, P_inv, c.system_matrix())


def decompose_tetramer(c: ClusterModel, rtol: float = 1e-9) -> SpectralDecomposition:
    """Eigen-decomposition for four identical, mutually equidistant bubbles.

    Spectrum ``{d - 3q, d + q, d + q, d + q}``.
    """
    if c.size != 4:
        raise NotATetramer(f"expected 4 bubbles, got {c.size}")
    _require_identical(c)
    dist = c.distances[~np.eye(4, dtype=bool)]
    if dist.max() - dist.min() > rtol * dist.max():
        raise NotEquidistant(f"pairwise distances range over [{dist.min():g}, {dist.max():g}]")
    d, q = c.d_diag[0], c.q_matrix[0, 1]
    P = np.array([[1.0, -1.0, -1.0, -1.0],
                  [1.0, 0.0, 0.0, 1.0],
                  [1.0, 0.0, 1.0, 0.0],
                  [1.0, 1.0, 0.0, 0.0]])
    P_inv = 0.25 * np.array([[1.0, 1.0, 1.0, 1.0],
                             [-1.0, -1.0, -1.0, 3.0],
                             [-1.0, -1.0, 3.0, -1.0],
                             [-1.0, 3.0, -1.0, -1.0]])
    return SpectralDecomposition(np.array([d - 3 * q, d + q, d + q, d + q]), P, P_inv, c.system_matrix())


def modal_solve(dec: SpectralDecomposition, rhs: Callable, T: float, dt: float,
                method: str = "modal") -> AmplitudeSolution:
    """Solve ``A Y'' + Y = rhs`` mode by mode: ``Z_k = duhamel(lambda_k, (P^{-1} rhs)_k)``, ``Y = P Z``."""
    if not dec.oscillatory:
        raise NonPositiveEigenvalue(
            f"non-positive eigenvalue(s) {dec.eigenvalues}: strong-coupling regime, no oscillatory closed form")
    modes = []
    for k, lam in enumerate(dec.eigenvalues):
        row = dec.p_inverse[k]
        modes.append(duhamel_solve(lam, lambda t, row=row: row @ rhs(t), T, dt))
    stack = lambda attr: np.vstack([getattr(m, attr) for m in modes])
    P = dec.p_matrix
    return AmplitudeSolution(modes[0].t, P @ stack("y"), P @ stack("y_dot"), P @ stack("y_ddot"), method)


def closed_form_dimer(c: ClusterModel, forcing, T: float, dt: float,
                      forcing_method: str = "monopole") -> AmplitudeSolution:
    """Dimer amplitudes ``Y_1 = Z_1 - Z_2``, ``Y_2 = Z_1 + Z_2`` from the two modal Duhamel integrals."""
    return modal_solve(decompose_dimer(c), _as_rhs(c, forcing, forcing_method), T, dt, "closed-dimer")


def closed_form_tetramer(c: ClusterModel, forcing, T: float, dt: float,
                         forcing_method: str = "monopole") -> AmplitudeSolution:
    """Tetramer amplitudes ``Y = P Z`` from the four modal Duhamel integrals."""
    return modal_solve(decompose_tetramer(c), _as_rhs(c, forcing, forcing_method), T, dt, "closed-tetramer")


def collective_factor(c: ClusterModel, multiplicity: int = 1) -> float:
    """J = 1 - multiplicity * delta / (A_B |z_1 - z_2|) for the first two bubbles.

    ``multiplicity`` is 1 for a dimer and 3 for a tetramer.
    """
    bb = c.bubbles[0]
    return float(1.0 - multiplicity * bb.delta / (bb.a_reference * c.distances[0, 1]))


def validate_pairing(c: ClusterModel, pairing: Sequence[Sequence[int]], max_ratio: float = 0.1):
    """Check that ``pairing`` partitions the bubbles into well separated dimers."""
    pairs = [tuple(int(i) for i in p) for p in pairing]
    flat = [i for p in pairs for i in p]
    if any(len(p) != 2 for p in pairs):
        raise BadPairing("every group must contain exactly two bubbles")
    if sorted(flat) != list(range(c.size)):
        raise BadPairing(f"pairing {pairs} must use each of the {c.size} bubbles exactly once")
    intra = max(c.distances[i, j] for i, j in pairs)
    if len(pairs) > 1:
        label = np.empty(c.size, dtype=int)
        for k, (i, j) in enumerate(pairs):
            label[[i, j]] = k
        inter = c.distances[label[:, None] != label[None, :]].min()
        if intra / inter >= max_ratio:
            raise BadPairing(f"dimers are not well separated: intra/inter = {intra / inter:.3g} >= {max_ratio}")
    return pairs


def default_pairing(n: int):
    if n % 2:
        raise BadPairing("a dimer collection needs an even number of bubbles")
    return [(2 * k, 2 * k + 1) for k in range(n // 2)]


def solve_dimer_collection(c: ClusterModel, pairing, forcing, T: float, dt: float,
                           max_ratio: float = 0.1, forcing_method: str = "monopole") -> AmplitudeSolution:
    """Block-diagonal approximation: each dimer solved in closed form, ignoring inter-dimer coupling."""
    pairs = validate_pairing(c, pairing, max_ratio)
    rhs = _as_rhs(c, forcing, forcing_method)
    t = _time_grid(T, dt)
    y, yd, ydd = (np.zeros((c.size, t.size)) for _ in range(3))
    for pair in pairs:
        idx = list(pair)
        dec = decompose_dimer(c.subset(idx))
        block = modal_solve(dec, lambda tt, idx=idx: rhs(tt)[idx], T, dt)
        y[idx], yd[idx], ydd[idx] = block.y, block.y_dot, block.y_ddot
    return AmplitudeSolution(t, y, yd, ydd, method="dimer-collection")
