"""Scalar nonlinear-capacitor models.

Each node of a continuous Hopfield network is modeled as a nonlinear
capacitor: a sigmoid amplifier V = g(v) folded together with the linear
membrane capacitance C, so that the output voltage is a function of the
stored charge q = C*v,

    V = h(q) = g(q / C),        h'(q) > 0.

The antiderivative H(q) of h (normalized to H(0) = 0) is the electrical
energy stored in the capacitor; it is strictly convex. Its Legendre-Fenchel
transform H*(V) = sup_q [q*V - H(q)] inverts the charge-voltage relation
(q = dH*/dV) and its second derivative d2H*/dV2 = 1/h'(q) is the weight of
the Hessian-Riemannian metric used by the bounded-voltage gradient flow.

Only the tanh family with gain is shipped: g(v) = tanh(gain * v). The set
of supported activation families is a closed enumeration so every family
carries exact derivatives and the numeric conjugate oracle stays total.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from hopflow.errors import DomainError, InvalidModelError

SUPPORTED_KINDS = ("tanh",)

_LN2 = math.log(2.0)
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def log_cosh(x):
    """Overflow-safe ln(cosh(x)), exact for all finite x.

    Uses ln cosh x = |x| + ln(1 + exp(-2|x|)) - ln 2, whose exponential
    underflows harmlessly to zero for large |x|.
    """
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - _LN2


def _require_interior(V):
    if not np.all(np.isfinite(V)) or np.any(np.abs(V) >= 1.0):
        raise DomainError(
            "output voltage must lie strictly inside (-1, 1); "
            "the conjugate energy is +inf at and beyond the boundary"
        )


@dataclass(frozen=True)
class CapacitorModel:
    """One neuron's nonlinear capacitor: sigmoid gain and membrane capacitance.

    Parameters
    ----------
    gain : float
        Sigmoid sharpness (dimensionless), > 0.
    capacitance : float
        Membrane capacitance C (charge/voltage), > 0.
    kind : str
        Activation family tag; only "tanh" is supported.
    """

    gain: float = 1.0
    capacitance: float = 1.0
    kind: str = "tanh"

    def __post_init__(self):
        if self.kind not in SUPPORTED_KINDS:
            raise InvalidModelError(
                f"unsupported activation kind {self.kind!r}; "
                f"supported: {SUPPORTED_KINDS}"
            )
        if not (np.isfinite(self.gain) and self.gain > 0.0):
            raise InvalidModelError("gain must be finite and > 0")
        if not (np.isfinite(self.capacitance) and self.capacitance > 0.0):
            raise InvalidModelError("capacitance must be finite and > 0")

    # -- soma-voltage side -------------------------------------------------

    def activation(self, v):
        """Amplifier output V = tanh(gain * v); odd, range (-1, 1)."""
        return np.tanh(self.gain * np.asarray(v, dtype=float))

    def activation_slope(self, v):
        """dV/dv = gain * (1 - tanh(gain*v)^2) > 0."""
        V = self.activation(v)
        return self.gain * (1.0 - V * V)

    # -- charge side -------------------------------------------------------

    def charge_voltage(self, q):
        """Output voltage at stored charge: h(q) = tanh(gain * q / C)."""
        return np.tanh(self.gain * np.asarray(q, dtype=float) / self.capacitance)

    def charge_voltage_slope(self, q):
        """h'(q) = (gain / C) * (1 - h(q)^2) > 0."""
        V = self.charge_voltage(q)
        return (self.gain / self.capacitance) * (1.0 - V * V)

    def charge_energy(self, q):
        """Stored energy H(q) = (C/gain) * ln cosh(gain*q/C), with H(0) = 0.

        Strictly convex; evaluated through the overflow-safe ln cosh branch
        so trajectories may visit arbitrarily large |q|.
        """
        q = np.asarray(q, dtype=float)
        return (self.capacitance / self.gain) * log_cosh(self.gain * q / self.capacitance)

    # -- conjugate (output-voltage) side ------------------------------------

    def conjugate_energy(self, V):
        """Co-energy H*(V) = sup_q [q*V - H(q)] for |V| < 1.

        Closed form (C/gain) * (V*atanh(V) + ln(1 - V^2)/2); nonnegative,
        strictly convex, even, and finite on the open interval only.
        Raises DomainError for |V| >= 1 where the supremum is +inf.
        """
        V = np.asarray(V, dtype=float)
        _require_interior(V)
        return (self.capacitance / self.gain) * (
            V * np.arctanh(V) + 0.5 * np.log1p(-V * V)
        )

    def inverse_charge(self, V):
        """Charge at output voltage V: the inverse of h, q = (C/gain)*atanh(V).

        Equals dH*/dV.
        """
        V = np.asarray(V, dtype=float)
        _require_interior(V)
        return (self.capacitance / self.gain) * np.arctanh(V)

    def metric_weight(self, V):
        """Gradient-flow metric weight d2H*/dV2 = C / (gain * (1 - V^2)).

        Equals 1/h'(q(V)); always positive, diverging as |V| -> 1.
        """
        V = np.asarray(V, dtype=float)
        _require_interior(V)
        return self.capacitance / (self.gain * (1.0 - V * V))


def _golden_max(f, a, b, xtol):
    """Golden-section maximization of a unimodal f on [a, b]."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > xtol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return f(x)


def conjugate_energy_numeric(model: CapacitorModel, V: float,
                             span: float = 5.0, xtol: float = 1e-12) -> float:
    """Numeric Legendre-conjugate oracle: golden-section sup of q*V - H(q).

    Independent of the closed-form conjugate (it only evaluates the stored
    energy), so it can validate it. The objective is strictly concave in q;
    the bracket is centered on the stationary charge and `span` wide on each
    side, with absolute tolerance `xtol` on q.
    """
    Vf = float(V)
    _require_interior(Vf)
    center = float(model.inverse_charge(Vf))
    energy = model.charge_energy

    def objective(q):
        return q * Vf - float(energy(q))

    return _golden_max(objective, center - span, center + span, xtol)
