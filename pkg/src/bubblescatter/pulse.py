"""Causal source signals with closed-form time derivatives.

Every pulse vanishes identically for ``t <= 0`` and is at least C^9 across
``t = 0``, so the incident wave it drives is smooth enough for the
point-interaction model.  Calling a pulse as ``pulse(t, n)`` returns the
``n``-th time derivative evaluated at ``t`` (scalar or array).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from math import comb

import numpy as np

from .errors import NonPositiveParameter


class Pulse:
    """Base class; subclasses implement ``_eval(t, n)`` for ``t > 0``."""

    amplitude: float = 1.0

    def __call__(self, t, n: int = 0):
        if n < 0:
            raise ValueError("derivative order must be >= 0")
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        on = t > 0
        if np.any(on):
            out[on] = self.amplitude * self._eval(t[on], n)
        return out if out.ndim else float(out)

    def scaled(self, factor: float) -> "Pulse":
        return replace(self, amplitude=self.amplitude * factor)

    def _eval(self, t, n):  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError


@dataclass(frozen=True)
class CausalPolyExp(Pulse):
    """``lambda(t) = amplitude * t**p * exp(-a t)`` for ``t > 0``.

    ``p >= 10`` gives a zero of order p at the origin, hence C^9 regularity.
    """

    p: float = 10.0
    a: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.p < 10:
            raise NonPositiveParameter(f"CausalPolyExp needs p >= 10 for C^9 regularity, got p={self.p}")
        if self.a <= 0:
            raise NonPositiveParameter(f"decay rate a must be > 0, got {self.a}")

    def _eval(self, t, n):
        # Leibniz rule on t^p * e^{-at}
        total = np.zeros_like(t)
        falling = 1.0
        for k in range(n + 1):
            if k > 0:
                falling *= self.p - k + 1
            if falling == 0.0:
                break
            total += comb(n, k) * falling * (-self.a) ** (n - k) * t ** (self.p - k)
        return total * np.exp(-self.a * t)

    def to_dict(self):
        return {"kind": "causal_poly_exp", "params": {"p": self.p, "a": self.a, "amplitude": self.amplitude}}


@dataclass(frozen=True)
class RaisedCosineBurst(Pulse):
    """Tone burst of ``n_cycles`` at ``frequency`` Hz starting at ``t0``.

    The carrier is windowed by ``((1 - cos(2 pi s / T_w)) / 2)**5`` on
    ``s = t - t0 in [0, T_w]``, which vanishes to order 10 at both ends.
    The product is expanded into a finite sum of sines so derivatives of any
    order are exact.
    """

    frequency: float = 1.0
    n_cycles: float = 3.0
    t0: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.frequency <= 0 or self.n_cycles <= 0:
            raise NonPositiveParameter("frequency and n_cycles must be > 0")
        if self.t0 < 0:
            raise NonPositiveParameter("t0 must be >= 0 to keep the burst causal")

    @property
    def duration(self) -> float:
        return self.n_cycles / self.frequency

    def _sine_terms(self):
        omega = 2 * np.pi * self.frequency
        kappa = 2 * np.pi / self.duration
        amps, freqs = [], []
        for j in range(6):
            c = comb(10, 5) / 1024 if j == 0 else 2 * (-1) ** j * comb(10, 5 - j) / 1024
            amps += [0.5 * c, 0.5 * c]
            freqs += [omega + j * kappa, omega - j * kappa]
        return np.array(amps), np.array(freqs)

    def _eval(self, t, n):
        s = t - self.t0
        out = np.zeros_like(t)
        on = (s > 0) & (s < self.duration)
        if np.any(on):
            amps, freqs = self._sine_terms()
            phase = np.outer(s[on], freqs) + n * np.pi / 2
            out[on] = (np.sin(phase) * (amps * freqs**n)).sum(axis=1)
        return out

    def to_dict(self):
        return {
            "kind": "raised_cosine_burst",
            "params": {"frequency": self.frequency, "n_cycles": self.n_cycles, "t0": self.t0, "amplitude": self.amplitude},
        }


@dataclass(frozen=True)
class ZeroPulse(Pulse):
    amplitude: float = 0.0

    def _eval(self, t, n):
        return np.zeros_like(t)

    def to_dict(self):
        return {"kind": "zero", "params": {}}


PULSE_KINDS = {
    "causal_poly_exp": CausalPolyExp,
    "raised_cosine_burst": RaisedCosineBurst,
    "zero": ZeroPulse,
}


def pulse_from_dict(spec: dict) -> Pulse:
    kind = spec.get("kind")
    if kind not in PULSE_KINDS:
        raise KeyError(f"unknown pulse kind {kind!r}; expected one of {sorted(PULSE_KINDS)}")
    return PULSE_KINDS[kind](**spec.get("params", {}))
