"""Hopfield network model: state maps, vector field, energies, gradients.

The network couples n nonlinear capacitors (one per node) through a
symmetric synaptic matrix T, each node shunted by a linear resistor R_i.
In charge coordinates the dynamics read

    dq/dt = T V - R^{-1} C^{-1} q + I,      V_i = h_i(q_i),

which is the negative output-voltage gradient of Hopfield's dissipation
potential

    P(V, I) = -V.T V/2-weighted coupling + sum_i H_i*(V_i)/(R_i C_i) - V.I.

P has dimension of power (its summands are co-content-like), while the
total stored energy H(q) = sum_i H_i(q_i) has dimension of energy. All
operations are pure; the network is immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hopflow.capacitor import CapacitorModel, log_cosh
from hopflow.errors import DimensionError, DomainError, InvalidModelError

SYMMETRY_TOL = 1e-12


def _as_vector(x, n, name):
    arr = np.asarray(x, dtype=float)
    if arr.shape != (n,):
        raise DimensionError(f"{name} must be a length-{n} vector, got shape {arr.shape}")
    return arr


def _require_interior(V):
    if not np.all(np.isfinite(V)) or np.any(np.abs(V) >= 1.0):
        raise DomainError("output-voltage vector must lie strictly inside the open cube (-1, 1)^n")


@dataclass(frozen=True)
class DissipationRates:
    """Along-trajectory rates and the two dissipation residuals at one state.

    passivity_residual is the node dissipation surplus V.R^{-1}v - V.T V;
    it is nonnegative exactly where the passivity condition holds, and
    satisfies dH/dt = I.V - passivity_residual identically.

    potential_residual is -V.dI/dt - dP/dt, which equals the metric
    quadratic form dV/dt . d2H*/dV2 . dV/dt and is therefore nonnegative
    up to rounding.
    """

    dH_dt: float
    dP_dt: float
    passivity_residual: float
    potential_residual: float


class HopfieldNetwork:
    """Immutable continuous Hopfield network.

    Parameters
    ----------
    capacitors : sequence of CapacitorModel
        Per-node nonlinear capacitors (carry gain and capacitance).
    resistances : array_like
        Per-node membrane resistances R_i > 0.
    coupling : array_like
        Symmetric n x n synaptic matrix T. Asymmetry beyond 1e-12 in
        max-norm is rejected (not silently symmetrized).
    """

    def __init__(self, capacitors, resistances, coupling):
        caps = tuple(capacitors)
        if not caps:
            raise InvalidModelError("network needs at least one node")
        for c in caps:
            if not isinstance(c, CapacitorModel):
                raise InvalidModelError(f"expected CapacitorModel, got {type(c).__name__}")
        n = len(caps)
        R = _as_vector(resistances, n, "resistances")
        if not np.all(np.isfinite(R)) or np.any(R <= 0.0):
            raise InvalidModelError("all resistances must be finite and > 0")
        T = np.array(coupling, dtype=float)
        if T.shape != (n, n):
            raise DimensionError(f"coupling must be {n}x{n}, got shape {T.shape}")
        if not np.all(np.isfinite(T)):
            raise InvalidModelError("coupling matrix must be finite")
        asym = float(np.max(np.abs(T - T.T))) if n > 0 else 0.0
        if asym > SYMMETRY_TOL:
            raise InvalidModelError(
                f"coupling matrix is asymmetric: max |T - T'| = {asym:.3e} "
                f"exceeds {SYMMETRY_TOL:.0e} (symmetrize it explicitly if intended)"
            )

        self._caps = caps
        self._R = R
        self._T = T
        self._gain = np.array([c.gain for c in caps], dtype=float)
        self._C = np.array([c.capacitance for c in caps], dtype=float)
        # leak rate 1/(R_i C_i), the weight of the conjugate term in P
        self._leak = 1.0 / (self._R * self._C)
        for arr in (self._R, self._T, self._gain, self._C, self._leak):
            arr.setflags(write=False)

    # -- basic structure -----------------------------------------------------

    @property
    def n(self) -> int:
        return len(self._caps)

    @property
    def capacitors(self) -> tuple:
        return self._caps

    @property
    def resistances(self) -> np.ndarray:
        return self._R

    @property
    def coupling(self) -> np.ndarray:
        return self._T

    @property
    def capacitances(self) -> np.ndarray:
        return self._C

    @property
    def gains(self) -> np.ndarray:
        return self._gain

    @classmethod
    def homogeneous(cls, n, coupling=None, gain=1.0, capacitance=1.0, resistance=1.0):
        """Network of n identical nodes; coupling defaults to zeros."""
        caps = [CapacitorModel(gain=gain, capacitance=capacitance) for _ in range(n)]
        if coupling is None:
            coupling = np.zeros((n, n))
        return cls(caps, np.full(n, float(resistance)), coupling)

    def __repr__(self):
        return f"HopfieldNetwork(n={self.n})"

    # -- coordinate maps -----------------------------------------------------

    def soma_voltage(self, q):
        """v = C^{-1} q."""
        q = _as_vector(q, self.n, "q")
        return q / self._C

    def output_voltage(self, q):
        """V_i = h_i(q_i) = tanh(gain_i * q_i / C_i); total on finite q."""
        q = _as_vector(q, self.n, "q")
        return np.tanh(self._gain * q / self._C)

    def voltage_slope(self, q):
        """h_i'(q_i) = (gain_i/C_i)(1 - V_i^2), the diagonal Hessian of H."""
        V = self.output_voltage(q)
        return (self._gain / self._C) * (1.0 - V * V)

    def charge_of_voltage(self, V):
        """Inverse state map q_i = (C_i/gain_i) atanh(V_i); |V_i| < 1 required."""
        V = _as_vector(V, self.n, "V")
        _require_interior(V)
        return (self._C / self._gain) * np.arctanh(V)

    def state(self, q) -> "NetworkState":
        return NetworkState(self, _as_vector(q, self.n, "q").copy())

    # -- energies and potential ------------------------------------------------

    def total_energy(self, q) -> float:
        """H(q) = sum_i (C_i/gain_i) ln cosh(gain_i q_i / C_i); convex, H(0)=0."""
        q = _as_vector(q, self.n, "q")
        return float(np.sum((self._C / self._gain) * log_cosh(self._gain * q / self._C)))

    def conjugate_energy_sum(self, V) -> float:
        """Leak-weighted conjugate term of P: sum_i H_i*(V_i) / (R_i C_i)."""
        V = _as_vector(V, self.n, "V")
        _require_interior(V)
        per_node = (self._C / self._gain) * (V * np.arctanh(V) + 0.5 * np.log1p(-V * V))
        return float(np.sum(self._leak * per_node))

    def dissipation_potential(self, V, currents) -> float:
        """Hopfield's potential P(V, I); dimension of power.

        P = -V.T V / 2 + sum_i H_i*(V_i)/(R_i C_i) - V.I
        """
        V = _as_vector(V, self.n, "V")
        I = _as_vector(currents, self.n, "currents")
        return float(
            -0.5 * V @ (self._T @ V) + self.conjugate_energy_sum(V) - V @ I
        )

    # -- gradients and metric ---------------------------------------------------

    def charge_rate(self, q, currents):
        """dq/dt = T V - (R C)^{-1} q + I, the charge-coordinate vector field."""
        q = _as_vector(q, self.n, "q")
        I = _as_vector(currents, self.n, "currents")
        V = np.tanh(self._gain * q / self._C)
        return self._T @ V - self._leak * q + I

    def potential_grad_V(self, V, currents):
        """dP/dV = -T V + (R C)^{-1} q(V) - I.

        Under V = dH/dq this equals minus the charge-coordinate vector
        field, which is the relaxation identity dq/dt = -dP/dV.
        """
        V = _as_vector(V, self.n, "V")
        I = _as_vector(currents, self.n, "currents")
        q = self.charge_of_voltage(V)
        return -(self._T @ V) + self._leak * q - I

    def potential_grad_I(self, V, currents=None):
        """dP/dI = -V exactly; P is affine in the currents."""
        V = _as_vector(V, self.n, "V")
        _require_interior(V)
        return -V.copy()

    def metric_weights(self, V):
        """Diagonal of the Hessian metric d2H*/dV2: C_i/(gain_i (1 - V_i^2))."""
        V = _as_vector(V, self.n, "V")
        _require_interior(V)
        return self._C / (self._gain * (1.0 - V * V))

    def metric_matrix(self, V):
        """The metric as a dense diagonal matrix (inverse Hessian of H)."""
        return np.diag(self.metric_weights(V))

    def potential_hessian(self, V):
        """Hessian of P in V: -T + diag(metric_weights / (R C))."""
        w = self.metric_weights(V)
        return -self._T + np.diag(self._leak * w)

    # -- dissipation diagnostics --------------------------------------------------

    def dissipation_rates(self, q, currents, current_rate=None) -> DissipationRates:
        """Exact dH/dt, dP/dt and both dissipation residuals at one state.

        current_rate is dI/dt at the same instant (zeros for constant
        inputs). All quantities come from closed-form gradients, not from
        finite differences of samples.
        """
        q = _as_vector(q, self.n, "q")
        I = _as_vector(currents, self.n, "currents")
        if current_rate is None:
            Idot = np.zeros(self.n)
        else:
            Idot = _as_vector(current_rate, self.n, "current_rate")

        V = self.output_voltage(q)
        v = q / self._C
        qdot = self._T @ V - self._leak * q + I
        Vdot = self.voltage_slope(q) * qdot

        dH_dt = float(V @ qdot)
        grad_V = self.potential_grad_V(V, I)
        dP_dt = float(grad_V @ Vdot) + float((-V) @ Idot)
        passivity_residual = float(V @ (v / self._R)) - float(V @ (self._T @ V))
        potential_residual = float(-V @ Idot) - dP_dt
        return DissipationRates(dH_dt, dP_dt, passivity_residual, potential_residual)

    # -- serialization ---------------------------------------------------------------

    def to_document(self) -> dict:
        """JSON-ready network document {n, C, R, lambda, T}."""
        return {
            "n": self.n,
            "C": [float(x) for x in self._C],
            "R": [float(x) for x in self._R],
            "lambda": [float(x) for x in self._gain],
            "T": [[float(x) for x in row] for row in self._T],
        }

    @classmethod
    def from_document(cls, doc: dict) -> "HopfieldNetwork":
        """Build a network from its JSON document; validates symmetry."""
        try:
            n = int(doc["n"])
            C = list(doc["C"])
            R = list(doc["R"])
            gains = list(doc["lambda"])
            T = doc["T"]
        except (KeyError, TypeError) as exc:
            raise InvalidModelError(f"malformed network document: {exc}") from exc
        if not (len(C) == len(R) == len(gains) == n):
            raise DimensionError("network document: C, R, lambda must all have length n")
        caps = [CapacitorModel(gain=g, capacitance=c) for g, c in zip(gains, C)]
        return cls(caps, R, T)


@dataclass(frozen=True)
class NetworkState:
    """Charge vector with derived voltage views (single source of truth).

    Only the charge q is stored; the soma voltage v = C^{-1} q and the
    output voltage V = dH/dq are recomputed on access.
    """

    network: HopfieldNetwork
    q: np.ndarray

    @property
    def v(self) -> np.ndarray:
        return self.network.soma_voltage(self.q)

    @property
    def V(self) -> np.ndarray:
        return self.network.output_voltage(self.q)


class InputSignal:
    """External current I(t) together with its analytic derivative dI/dt.

    The derivative is part of the signal (not estimated numerically)
    because the potential dissipation inequality dP/dt <= -V.dI/dt is
    only a clean test when dI/dt is exact.
    """

    def __init__(self, n, value_fn, rate_fn, kind="custom", constant=None):
        self.n = int(n)
        self._value_fn = value_fn
        self._rate_fn = rate_fn
        self.kind = kind
        self._constant = None if constant is None else np.asarray(constant, dtype=float)

    @classmethod
    def constant(cls, currents) -> "InputSignal":
        vec = np.array(currents, dtype=float).reshape(-1)
        zero = np.zeros_like(vec)
        return cls(vec.size, lambda t: vec, lambda t: zero, kind="constant", constant=vec)

    @classmethod
    def zero(cls, n) -> "InputSignal":
        return cls.constant(np.zeros(int(n)))

    @classmethod
    def sinusoid(cls, amplitude, omega, phase=0.0) -> "InputSignal":
        """I(t) = amplitude * sin(omega t + phase), componentwise amplitude."""
        amp = np.array(amplitude, dtype=float).reshape(-1)
        w = float(omega)
        ph = float(phase)
        return cls(
            amp.size,
            lambda t: amp * np.sin(w * t + ph),
            lambda t: amp * w * np.cos(w * t + ph),
            kind="sinusoid",
        )

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def constant_value(self) -> np.ndarray:
        if self._constant is None:
            raise ValueError("not a constant signal")
        return self._constant

    def value(self, t) -> np.ndarray:
        out = np.asarray(self._value_fn(float(t)), dtype=float)
        if out.shape != (self.n,):
            raise DimensionError(f"input signal returned shape {out.shape}, expected ({self.n},)")
        return out

    def rate(self, t) -> np.ndarray:
        out = np.asarray(self._rate_fn(float(t)), dtype=float)
        if out.shape != (self.n,):
            raise DimensionError(f"input-rate signal returned shape {out.shape}, expected ({self.n},)")
        return out
