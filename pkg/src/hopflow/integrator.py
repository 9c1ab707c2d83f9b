"""Time integration in charge and output-voltage coordinates.

Two steppers are provided: a fixed-step classical RK4 (kept for order
checks and for runs that need a shared uniform sample grid) and an
adaptive Dormand-Prince 5(4) pair. Both are hand-rolled rather than
delegated to an ODE library because the voltage-coordinate flow lives on
the open cube (-1, 1)^n and needs a reject-and-halve guard on every
stage, and because diagnostics are recorded at every accepted step from
closed-form expressions.

Integration stops at the horizon or as soon as the charge-coordinate
velocity drops below the equilibrium threshold (reported as converged).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from hopflow.errors import (
    BoundaryProximityError,
    DimensionError,
    DivergenceError,
    DomainError,
    InvalidModelError,
    MaxStepsError,
)
from hopflow.network import HopfieldNetwork, InputSignal

_MIN_GUARD_STEP = 1e-14

# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_DP_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0)
_DP_B4 = (5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
          -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0)


@dataclass
class IntegratorConfig:
    """Stepper selection, tolerances, horizon and termination thresholds.

    method "rk4" uses the fixed step dt; "rk45" adapts the step to meet
    (rtol, atol). equilibrium_tol is the inf-norm threshold on dq/dt below
    which the run is reported converged.
    """

    method: str = "rk45"
    dt: float = 1e-3
    rtol: float = 1e-8
    atol: float = 1e-10
    t0: float = 0.0
    t_end: float = 10.0
    equilibrium_tol: float = 1e-10
    max_steps: int = 1_000_000
    max_step_size: float | None = None

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise InvalidModelError(f"unknown integrator method {self.method!r}")
        if not self.dt > 0.0:
            raise InvalidModelError("dt must be > 0")
        if not (self.rtol > 0.0 and self.atol > 0.0):
            raise InvalidModelError("rtol and atol must be > 0")
        if not self.equilibrium_tol > 0.0:
            raise InvalidModelError("equilibrium_tol must be > 0")
        if not self.t_end > self.t0:
            raise InvalidModelError("t_end must exceed t0")
        if self.max_steps < 1:
            raise InvalidModelError("max_steps must be >= 1")
        if self.max_step_size is not None and not self.max_step_size > 0.0:
            raise InvalidModelError("max_step_size must be > 0")


@dataclass
class Trajectory:
    """Time-stamped states with along-path diagnostics.

    All arrays share the leading sample axis. States are stored as charges;
    the voltage view V is stored alongside because every diagnostic lives
    in V-space. `converged` is True when the equilibrium threshold stopped
    the run before the horizon.
    """

    times: np.ndarray
    q: np.ndarray
    V: np.ndarray
    H: np.ndarray
    P: np.ndarray
    dH_dt: np.ndarray
    dP_dt: np.ndarray
    passivity_residual: np.ndarray
    potential_residual: np.ndarray
    converged: bool
    reason: str

    def __len__(self):
        return self.times.size

    @property
    def n(self) -> int:
        return self.q.shape[1]

    def final_q(self) -> np.ndarray:
        return self.q[-1].copy()

    def csv_header(self) -> list[str]:
        n = self.n
        return (["t"]
                + [f"q_{i + 1}" for i in range(n)]
                + [f"V_{i + 1}" for i in range(n)]
                + ["H", "P", "dHdt", "dPdt", "passivity_residual", "P_residual"])

    def to_csv(self, path_or_file) -> None:
        """Write the trajectory as CSV with shortest round-trip floats."""
        if hasattr(path_or_file, "write"):
            self._write_csv(path_or_file)
        else:
            with open(path_or_file, "w", encoding="ascii", newline="") as fh:
                self._write_csv(fh)

    def _write_csv(self, fh) -> None:
        fh.write(",".join(self.csv_header()) + "\n")
        cols = [self.times, *self.q.T, *self.V.T, self.H, self.P,
                self.dH_dt, self.dP_dt, self.passivity_residual, self.potential_residual]
        for k in range(len(self)):
            fh.write(",".join(repr(float(col[k])) for col in cols) + "\n")

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        self._write_csv(buf)
        return buf.getvalue()


class _Recorder:
    """Accumulates accepted samples and their diagnostics."""

    def __init__(self, net: HopfieldNetwork, signal: InputSignal):
        self.net = net
        self.signal = signal
        self.times = []
        self.q = []
        self.V = []
        self.rows = []  # (H, P, dHdt, dPdt, passivity_residual, potential_residual)

    def record(self, t: float, q: np.ndarray) -> float:
        """Store the sample; returns ||dq/dt||_inf for equilibrium checks."""
        net = self.net
        I = self.signal.value(t)
        Idot = self.signal.rate(t)
        V = net.output_voltage(q)
        if np.any(np.abs(V) >= 1.0):
            raise BoundaryProximityError(
                f"stored state at t={t:.6g} saturated the sigmoid to floating-point 1; "
                "the trajectory left the resolvable interior of the cube"
            )
        try:
            rates = net.dissipation_rates(q, I, Idot)
            H = net.total_energy(q)
            P = net.dissipation_potential(V, I)
        except DomainError as exc:  # pragma: no cover - guarded above
            raise BoundaryProximityError(str(exc)) from exc
        self.times.append(t)
        self.q.append(q.copy())
        self.V.append(V)
        self.rows.append((H, P, rates.dH_dt, rates.dP_dt,
                          rates.passivity_residual, rates.potential_residual))
        qdot = net.charge_rate(q, I)
        return float(np.max(np.abs(qdot)))

    def build(self, converged: bool, reason: str) -> Trajectory:
        rows = np.asarray(self.rows, dtype=float)
        return Trajectory(
            times=np.asarray(self.times, dtype=float),
            q=np.asarray(self.q, dtype=float),
            V=np.asarray(self.V, dtype=float),
            H=rows[:, 0], P=rows[:, 1], dH_dt=rows[:, 2], dP_dt=rows[:, 3],
            passivity_residual=rows[:, 4], potential_residual=rows[:, 5],
            converged=converged, reason=reason,
        )


def _check_finite(y, t):
    if not np.all(np.isfinite(y)):
        raise DivergenceError(f"state became non-finite at t={t:.6g}")


def _rk4_stages(f, t, y, h, interior):
    """One classical RK4 step; returns None if a stage violates `interior`."""
    k1 = f(t, y)
    y2 = y + 0.5 * h * k1
    if interior is not None and not interior(y2):
        return None
    k2 = f(t + 0.5 * h, y2)
    y3 = y + 0.5 * h * k2
    if interior is not None and not interior(y3):
        return None
    k3 = f(t + 0.5 * h, y3)
    y4 = y + h * k3
    if interior is not None and not interior(y4):
        return None
    k4 = f(t + h, y4)
    y_new = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if interior is not None and not interior(y_new):
        return None
    return y_new


def _dp45_stages(f, t, y, h, interior):
    """One Dormand-Prince attempt; returns (y5, err_vec) or None on guard hit."""
    k = []
    for i in range(7):
        yi = y
        if i > 0:
            acc = _DP_A[i][0] * k[0]
            for j in range(1, i):
                aij = _DP_A[i][j]
                if aij != 0.0:
                    acc = acc + aij * k[j]
            yi = y + h * acc
            if interior is not None and not interior(yi):
                return None
        k.append(f(t + _DP_C[i] * h, yi))
    y5 = y + h * sum(b * ki for b, ki in zip(_DP_B5, k) if b != 0.0)
    y4 = y + h * sum(b * ki for b, ki in zip(_DP_B4, k) if b != 0.0)
    if interior is not None and not interior(y5):
        return None
    return y5, y5 - y4


def _integrate(f, y0, signal, cfg, recorder_q_of, interior):
    """Shared stepping loop; recorder_q_of maps stepper state to charge."""
    rec = recorder_q_of.recorder
    to_q = recorder_q_of.to_q

    t = float(cfg.t0)
    y = np.array(y0, dtype=float)
    qdot_inf = rec.record(t, to_q(y))
    if qdot_inf < cfg.equilibrium_tol:
        return rec.build(True, "equilibrium")

    t_end = float(cfg.t_end)
    span = t_end - t
    steps = 0

    if cfg.method == "rk4":
        while t < t_end - 1e-15 * max(1.0, abs(t_end)):
            h_target = min(cfg.dt, t_end - t)
            h = h_target
            advanced = 0.0
            # cover h_target, halving only when the cube guard rejects a stage
            while advanced < h_target - 1e-15 * h_target:
                steps += 1
                if steps > cfg.max_steps:
                    raise MaxStepsError(
                        f"exceeded max_steps={cfg.max_steps} before t_end",
                        rec.build(False, "max_steps"))
                h = min(h, h_target - advanced)
                y_new = _rk4_stages(f, t + advanced, y, h, interior)
                if y_new is None:
                    h *= 0.5
                    if h < _MIN_GUARD_STEP:
                        raise BoundaryProximityError(
                            f"step rejected down to {h:.3e} at t={t + advanced:.6g}: "
                            "trajectory pinned against the cube boundary")
                    continue
                _check_finite(y_new, t + advanced + h)
                y = y_new
                advanced += h
            t += h_target
            qdot_inf = rec.record(t, to_q(y))
            if qdot_inf < cfg.equilibrium_tol:
                return rec.build(True, "equilibrium")
        return rec.build(False, "t_end")

    # adaptive Dormand-Prince 5(4)
    h_max = cfg.max_step_size if cfg.max_step_size is not None else min(span / 10.0, 1.0)
    f0 = f(t, y)
    h = min(h_max, max(1e-6, 0.01 * (1.0 + float(np.max(np.abs(y))))
                       / (1.0 + float(np.max(np.abs(f0))))))
    while t < t_end - 1e-15 * max(1.0, abs(t_end)):
        h = min(h, h_max, t_end - t)
        steps += 1
        if steps > cfg.max_steps:
            raise MaxStepsError(
                f"exceeded max_steps={cfg.max_steps} before t_end",
                rec.build(False, "max_steps"))
        attempt = _dp45_stages(f, t, y, h, interior)
        if attempt is None:
            h *= 0.5
            if h < _MIN_GUARD_STEP:
                raise BoundaryProximityError(
                    f"step rejected down to {h:.3e} at t={t:.6g}: "
                    "trajectory pinned against the cube boundary")
            continue
        y5, err_vec = attempt
        if not np.all(np.isfinite(y5)):
            h *= 0.5
            if h < _MIN_GUARD_STEP:
                raise DivergenceError(f"state became non-finite at t={t:.6g}")
            continue
        scale = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0:
            t = t + h
            y = y5
            qdot_inf = rec.record(t, to_q(y))
            if qdot_inf < cfg.equilibrium_tol:
                return rec.build(True, "equilibrium")
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h *= factor
        else:
            h *= min(1.0, max(0.2, 0.9 * err ** -0.2))
    return rec.build(False, "t_end")


class _StateMap:
    def __init__(self, recorder, to_q):
        self.recorder = recorder
        self.to_q = to_q


def integrate_q(net: HopfieldNetwork, q0, signal: InputSignal,
                cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the charge-coordinate ODE dq/dt = T V - (RC)^{-1} q + I.

    The charge field is globally defined, so no domain guard is needed;
    diagnostics are computed at every accepted step.
    """
    cfg = cfg or IntegratorConfig()
    q0 = np.asarray(q0, dtype=float)
    if q0.shape != (net.n,):
        raise DimensionError(f"q0 must have shape ({net.n},), got {q0.shape}")
    if not np.all(np.isfinite(q0)):
        raise DivergenceError("initial charge is not finite")

    def f(t, q):
        return net.charge_rate(q, signal.value(t))

    rec = _Recorder(net, signal)
    return _integrate(f, q0, signal, cfg, _StateMap(rec, lambda y: y), interior=None)


def integrate_V(net: HopfieldNetwork, V0, signal: InputSignal,
                cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate the gradient flow metric(V) dV/dt = -dP/dV on the open cube.

    The metric is diagonal so its inversion is componentwise. Any stage
    that would leave the open cube is rejected and the step halved; a
    persistent rejection below the 1e-14 floor raises
    BoundaryProximityError. States are stored as charges via the inverse
    charge map.
    """
    cfg = cfg or IntegratorConfig()
    V0 = np.asarray(V0, dtype=float)
    if V0.shape != (net.n,):
        raise DimensionError(f"V0 must have shape ({net.n},), got {V0.shape}")
    if np.any(np.abs(V0) >= 1.0) or not np.all(np.isfinite(V0)):
        raise DomainError("V0 must lie strictly inside the open cube (-1, 1)^n")

    def f(t, V):
        return -net.potential_grad_V(V, signal.value(t)) / net.metric_weights(V)

    def interior(V):
        return bool(np.all(np.abs(V) < 1.0))

    rec = _Recorder(net, signal)
    return _integrate(f, V0, signal, cfg, _StateMap(rec, net.charge_of_voltage),
                      interior=interior)


@dataclass
class MonotonicityReport:
    """Along-trajectory verification of the potential dissipation inequality.

    rate check: dP/dt + V.dI/dt <= rate_tol at every sample.
    discrete check (constant inputs only): P(t_{k+1}) <= P(t_k) plus a
    magnitude-scaled slack disc_tol * (1 + |P(t_k)|).
    """

    rate_ok: bool
    worst_rate_violation: float
    worst_rate_time: float
    constant_input: bool
    discrete_ok: bool | None = None
    worst_discrete_increase: float | None = None
    worst_discrete_time: float | None = None
    samples: int = 0

    @property
    def ok(self) -> bool:
        return self.rate_ok and (self.discrete_ok is not False)


def monotonicity_report(traj: Trajectory, signal: InputSignal,
                        rate_tol: float = 1e-8,
                        disc_tol: float = 1e-9) -> MonotonicityReport:
    """Check dP/dt <= -V.dI/dt pointwise, and discrete P decrease for constant I."""
    if len(traj) == 0:
        raise InvalidModelError("trajectory is empty")
    rates = np.array([
        traj.dP_dt[k] + float(traj.V[k] @ signal.rate(traj.times[k]))
        for k in range(len(traj))
    ])
    worst_idx = int(np.argmax(rates))
    worst_rate = float(rates[worst_idx])
    report = MonotonicityReport(
        rate_ok=bool(worst_rate <= rate_tol),
        worst_rate_violation=worst_rate,
        worst_rate_time=float(traj.times[worst_idx]),
        constant_input=signal.is_constant,
        samples=len(traj),
    )
    if signal.is_constant and len(traj) > 1:
        increase = traj.P[1:] - traj.P[:-1]
        slack = disc_tol * (1.0 + np.abs(traj.P[:-1]))
        margin = increase - slack
        k = int(np.argmax(margin))
        report.discrete_ok = bool(margin[k] <= 0.0)
        report.worst_discrete_increase = float(increase[k])
        report.worst_discrete_time = float(traj.times[k + 1])
    elif signal.is_constant:
        report.discrete_ok = True
        report.worst_discrete_increase = 0.0
        report.worst_discrete_time = float(traj.times[0])
    return report
