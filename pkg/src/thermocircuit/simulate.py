"""Steady state, time integration, eigen-analysis and the DAE reference solver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy import linalg

from .circuit import DaeSystem, SourceValues, ThermalCircuit
from .exceptions import InputBindingError, SingularityError, StabilityError
from .statespace import StateSpace

__all__ = [
    "TimeSeries",
    "Trajectory",
    "IntegratorConfig",
    "EigenReport",
    "METHODS",
    "steady_state",
    "stability_limit",
    "discretize",
    "bind_inputs",
    "integrate",
    "eigen_report",
    "dae_reference_solve",
]

METHODS = ("explicit-euler", "implicit-euler", "exact-zoh")

# micro-steps per input step in the reference solver (finest level = 64 * 2**(levels-1))
ORACLE_SUBSTEPS = 64
ORACLE_LEVELS = 4


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled, named input channels.

    Parameters
    ----------
    dt : float
        Sampling step in seconds.
    channels : mapping of str to array-like
        Equal-length vectors.  Temperatures in °C, heat flows in W.
    start : float
        Time of the first sample, seconds.
    """

    dt: float
    channels: Mapping[str, np.ndarray]
    start: float = 0.0

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"time step must be > 0, got {self.dt}")
        chans = {}
        for name, values in self.channels.items():
            arr = np.array(values, dtype=float).reshape(-1)
            arr.setflags(write=False)
            chans[str(name)] = arr
        lengths = {len(v) for v in chans.values()}
        if len(lengths) > 1:
            raise ValueError(f"channels have unequal lengths {sorted(lengths)}")
        object.__setattr__(self, "channels", chans)

    @property
    def names(self) -> list:
        return list(self.channels)

    def __len__(self):
        for v in self.channels.values():
            return len(v)
        return 0

    @property
    def times(self) -> np.ndarray:
        return self.start + self.dt * np.arange(len(self))

    def __getitem__(self, name) -> np.ndarray:
        return self.channels[name]

    @classmethod
    def constant(cls, values: Mapping[str, float], n_steps: int, dt: float, start=0.0):
        return cls(dt, {k: np.full(n_steps, float(v)) for k, v in values.items()}, start)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Simulated temperatures on a time grid.

    ``outputs`` has one column per output label; ``states`` (optional) one
    column per state label.
    """

    times: np.ndarray
    outputs: np.ndarray
    output_labels: tuple
    states: Optional[np.ndarray] = None
    state_labels: tuple = ()

    def __len__(self):
        return len(self.times)

    def column(self, label) -> np.ndarray:
        if label in self.output_labels:
            return self.outputs[:, self.output_labels.index(label)]
        if self.states is not None and label in self.state_labels:
            return self.states[:, self.state_labels.index(label)]
        raise KeyError(label)

    def to_timeseries(self) -> TimeSeries:
        dt = float(self.times[1] - self.times[0]) if len(self.times) > 1 else 1.0
        start = float(self.times[0]) if len(self.times) else 0.0
        return TimeSeries(dt, dict(zip(self.output_labels, self.outputs.T)), start)


@dataclass(frozen=True)
class IntegratorConfig:
    """Time-integration settings.

    Parameters
    ----------
    method : {"exact-zoh", "implicit-euler", "explicit-euler"}
    dt : float, optional
        Simulation step in seconds.  Must divide the input step.  Defaults
        to the input step.
    initial_state : array-like, optional
        Capacitive-node temperatures at the first sample.  Defaults to the
        steady state under the first input sample.
    allow_unstable : bool
        Let explicit Euler run with a step above its stability limit.
    interpolation : {"hold", "linear"}
        How inputs are sampled between their own grid points.
    """

    method: str = "exact-zoh"
    dt: Optional[float] = None
    initial_state: Optional[np.ndarray] = None
    allow_unstable: bool = False
    interpolation: str = "hold"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.dt is not None and not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"time step must be > 0, got {self.dt}")
        if self.interpolation not in ("hold", "linear"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")


@dataclass(frozen=True)
class EigenReport:
    eigenvalues: np.ndarray
    time_constants: np.ndarray
    dominant_time_constant: float
    stiffness_ratio: float

    def __str__(self):
        lines = [
            f"states: {len(self.eigenvalues)}",
            f"dominant time constant: {self.dominant_time_constant:.6g} s",
            f"stiffness ratio: {self.stiffness_ratio:.6g}",
            "eigenvalue [1/s]    time constant [s]",
        ]
        for lam, tau in zip(self.eigenvalues, self.time_constants):
            lines.append(f"{lam: .8e}    {tau:.8e}")
        return "\n".join(lines)


def steady_state(dae: DaeSystem, sources: SourceValues) -> np.ndarray:
    """Node temperatures with dθ/dt = 0.

    Solves ``A^T G A θ = A^T G b + f`` by Cholesky factorization.

    Raises
    ------
    SingularityError
        If some component of the circuit has no branch to the reference.
    """
    b, f = sources.expand(dae.temp_source_flags, dae.flow_source_flags)
    rhs = dae.source_coupling @ b + f
    try:
        factor = linalg.cho_factor(-dae.conduction)
    except linalg.LinAlgError as exc:
        raise SingularityError(
            "conduction matrix is singular: a component has no branch to the reference",
            module="simulator",
        ) from exc
    return linalg.cho_solve(factor, rhs)


def _spectrum(ss: StateSpace) -> np.ndarray:
    # C^1/2 A C^-1/2 is symmetric, so the spectrum is real
    sq = np.sqrt(ss.partition.c_c)
    sym = sq[:, None] * ss.A / sq[None, :]
    sym = 0.5 * (sym + sym.T)
    return linalg.eigvalsh(sym)


def stability_limit(ss: StateSpace) -> float:
    """Largest explicit-Euler step, ``2 / max|λ|``, in seconds."""
    lam_max = np.max(np.abs(_spectrum(ss)))
    return math.inf if lam_max == 0 else 2.0 / lam_max


def eigen_report(ss: StateSpace) -> EigenReport:
    """Eigenvalues (slowest first), time constants and stiffness."""
    lam = np.sort(_spectrum(ss))[::-1]
    with np.errstate(divide="ignore"):
        tau = -1.0 / lam
    mags = np.abs(lam)
    stiff = mags.max() / mags.min() if mags.min() > 0 else math.inf
    return EigenReport(
        eigenvalues=lam,
        time_constants=tau,
        dominant_time_constant=float(tau.max()),
        stiffness_ratio=float(stiff),
    )


def discretize(a, b, dt: float, method: str = "exact-zoh"):
    """Discrete-time pair ``(Φ, Γ)`` with ``x[k+1] = Φ x[k] + Γ u[k]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n, m = b.shape
    if method == "exact-zoh":
        aug = np.zeros((n + m, n + m))
        aug[:n, :n] = a * dt
        aug[:n, n:] = b * dt
        e = linalg.expm(aug)
        return e[:n, :n], e[:n, n:]
    if method == "implicit-euler":
        lu = linalg.lu_factor(np.eye(n) - dt * a)
        phi = linalg.lu_solve(lu, np.eye(n))
        return phi, linalg.lu_solve(lu, dt * b)
    if method == "explicit-euler":
        return np.eye(n) + dt * a, dt * b
    raise ValueError(f"unknown method {method!r}")


def bind_inputs(labels, inputs, binding=None) -> np.ndarray:
    """Build the input matrix ``U`` (n_steps x len(labels)) from channels.

    Parameters
    ----------
    labels : sequence of str
        Input names in model order.
    inputs : TimeSeries or ndarray
        An array is taken as ``U`` directly after a shape check.
    binding : mapping, optional
        ``label -> channel`` or ``label -> [(channel, gain), ...]``.  Labels
        without a binding are looked up as channel names.

    Raises
    ------
    InputBindingError
        If an input has no channel.
    """
    labels = list(labels)
    if not isinstance(inputs, TimeSeries):
        u = np.asarray(inputs, dtype=float)
        if u.ndim == 1:
            u = u.reshape(-1, 1) if len(labels) == 1 else u.reshape(1, -1)
        if u.shape[1] != len(labels):
            raise InputBindingError(f"input array has {u.shape[1]} columns, model has {len(labels)} inputs")
        return u
    binding = dict(binding or {})
    u = np.zeros((len(inputs), len(labels)))
    for j, label in enumerate(labels):
        spec = binding.get(label, label)
        terms = [(spec, 1.0)] if isinstance(spec, str) else list(spec)
        for channel, gain in terms:
            if channel not in inputs.channels:
                raise InputBindingError(f"no channel {channel!r} for input {label!r}")
            u[:, j] += gain * inputs.channels[channel]
    return u


def _step_ratio(input_dt: float, dt: float) -> int:
    ratio = input_dt / dt
    r = int(round(ratio))
    if r < 1 or abs(ratio - r) > 1e-9 * ratio:
        raise ValueError(
            f"simulation step {dt} s must divide the input step {input_dt} s"
        )
    return r


def _macro_map(phi, gamma, r):
    """Compose ``r`` identical steps into one."""
    if r == 1:
        return phi, gamma
    p = np.eye(phi.shape[0])
    q = np.zeros_like(gamma)
    for _ in range(r):
        q = phi @ q + gamma
        p = phi @ p
    return p, q


def integrate(ss: StateSpace, inputs, cfg: IntegratorConfig = None, binding=None, input_dt=None) -> Trajectory:
    """Simulate the state-space model on the input grid.

    Parameters
    ----------
    ss : StateSpace
    inputs : TimeSeries or ndarray of shape (n_steps, n_inputs)
        Arrays need ``input_dt`` (or ``cfg.dt``) for the sampling step.
    cfg : IntegratorConfig, optional
    binding : mapping, optional
        See :func:`bind_inputs`.

    Returns
    -------
    Trajectory
        Outputs and states at every input sample; the outputs use the input
        held at that sample.

    Raises
    ------
    InputBindingError
        If a model input has no channel.
    StabilityError
        Explicit Euler above the stability limit without ``allow_unstable``.
    """
    cfg = cfg or IntegratorConfig()
    u = bind_inputs(ss.input_labels, inputs, binding)
    if isinstance(inputs, TimeSeries):
        in_dt, start = inputs.dt, inputs.start
    else:
        in_dt = input_dt if input_dt is not None else cfg.dt
        if in_dt is None:
            raise ValueError("input_dt is required when inputs is an array")
        start = 0.0
    dt = cfg.dt if cfg.dt is not None else in_dt
    r = _step_ratio(in_dt, dt)
    n_steps = u.shape[0]

    if cfg.method == "explicit-euler" and not cfg.allow_unstable:
        limit = stability_limit(ss)
        if not dt < limit:
            raise StabilityError(
                f"explicit Euler step {dt} s is not below the stability limit {limit:.6g} s"
            )

    if cfg.initial_state is None:
        x = initial_steady_state(ss, u[0] if n_steps else np.zeros(ss.n_inputs))
    else:
        x = np.array(cfg.initial_state, dtype=float).reshape(ss.n_states)

    phi, gamma = discretize(ss.A, ss.B, dt, cfg.method)
    states = np.empty((n_steps, ss.n_states))
    if cfg.interpolation == "hold" or r == 1:
        p, q = _macro_map(phi, gamma, r)
        for k in range(n_steps):
            states[k] = x
            x = p @ x + q @ u[k]
    else:
        for k in range(n_steps):
            states[k] = x
            u_next = u[k + 1] if k + 1 < n_steps else u[k]
            for j in range(r):
                x = phi @ x + gamma @ (u[k] + (j / r) * (u_next - u[k]))

    outputs = states @ ss.C.T + u @ ss.D.T
    return Trajectory(
        times=start + in_dt * np.arange(n_steps),
        outputs=outputs,
        output_labels=tuple(ss.output_labels),
        states=states,
        state_labels=tuple(ss.state_labels),
    )


def initial_steady_state(ss: StateSpace, u0) -> np.ndarray:
    """States with zero derivative under constant input ``u0``."""
    try:
        return linalg.solve(ss.A, -ss.B @ np.asarray(u0, dtype=float))
    except linalg.LinAlgError as exc:
        raise SingularityError(
            "state matrix is singular; no steady initial state", module="simulator"
        ) from exc


def _source_arrays(circuit: ThermalCircuit, inputs):
    """Full-length ``b`` and ``f`` histories from labelled channels."""
    b_idx = np.flatnonzero(circuit.temp_source_flags)
    f_idx = np.flatnonzero(circuit.flow_source_flags)
    if isinstance(inputs, TimeSeries):
        n = len(inputs)
        b_vals = np.zeros((n, len(b_idx)))
        f_vals = np.zeros((n, len(f_idx)))
        for j, i in enumerate(b_idx):
            label = circuit.branch_labels[i]
            if label not in inputs.channels:
                raise InputBindingError(f"no channel for temperature source {label!r}")
            b_vals[:, j] = inputs[label]
        for j, i in enumerate(f_idx):
            label = circuit.node_labels[i]
            if label not in inputs.channels:
                raise InputBindingError(f"no channel for flow source {label!r}")
            f_vals[:, j] = inputs[label]
    else:
        b_vals, f_vals = (np.atleast_2d(np.asarray(v, dtype=float)) for v in inputs)
        n = b_vals.shape[0] if b_vals.size else f_vals.shape[0]
        b_vals = b_vals.reshape(n, len(b_idx))
        f_vals = f_vals.reshape(n, len(f_idx))
    b = np.zeros((n, circuit.n_branches))
    f = np.zeros((n, circuit.n_nodes))
    b[:, b_idx] = b_vals
    f[:, f_idx] = f_vals
    return b, f


def dae_reference_solve(
    dae: DaeSystem,
    circuit: ThermalCircuit,
    inputs,
    theta0=None,
    dt: Optional[float] = None,
    substeps: int = ORACLE_SUBSTEPS,
    levels: int = ORACLE_LEVELS,
) -> Trajectory:
    """Integrate ``C dθ/dt = K θ + Kb b + f`` directly, without elimination.

    Each input interval is crossed with implicit-Euler micro-steps of the
    full DAE (massless rows are solved together with the capacitive ones in
    one dense system).  The interval is traversed with ``substeps``,
    ``2*substeps``, ... micro-steps and the results are combined by
    polynomial extrapolation to zero step size over ``levels`` levels;
    ``levels=1`` is plain implicit Euler.

    Parameters
    ----------
    inputs : TimeSeries or (ndarray, ndarray)
        Channels named after the flagged branch / node labels, or the pair
        ``(branch_temps, node_flows)`` with one row per sample.
    theta0 : array-like, optional
        Initial temperatures of all nodes or of the capacitive nodes only.
        Defaults to the steady state under the first sample.
    dt : float, optional
        Sampling step when ``inputs`` is an array pair.

    Returns
    -------
    Trajectory
        ``states`` holds every node temperature; ``outputs`` the flagged
        output nodes.
    """
    b_hist, f_hist = _source_arrays(circuit, inputs)
    if isinstance(inputs, TimeSeries):
        step, start = inputs.dt, inputs.start
    else:
        if dt is None:
            raise ValueError("dt is required when inputs are arrays")
        step, start = dt, 0.0
    n_steps, n_nodes = f_hist.shape
    k = dae.conduction
    caps = np.asarray(dae.capacities, dtype=float)
    massless = np.flatnonzero(caps == 0.0)
    capacitive = np.flatnonzero(caps != 0.0)
    drive = np.hstack([dae.source_coupling, np.eye(n_nodes)])  # acts on [b; f]
    a_hist = np.hstack([b_hist, f_hist])

    # affine interval map θ+ = P θ + Q a for each micro-step count
    maps = []
    for lev in range(levels):
        n = substeps * 2**lev
        h = step / n
        lhs = np.diag(caps / h) - k
        try:
            lu = linalg.lu_factor(lhs)
        except (linalg.LinAlgError, ValueError) as exc:
            raise SingularityError("DAE iteration matrix is singular", module="simulator") from exc
        s = linalg.lu_solve(lu, np.diag(caps / h))
        t = linalg.lu_solve(lu, drive)
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(t))):
            raise SingularityError("DAE iteration matrix is singular", module="simulator")
        p, q = np.eye(n_nodes), np.zeros_like(t)
        # binary powering: n is a power of two times `substeps`
        for _ in range(substeps):
            q = s @ q + t
            p = s @ p
        for _ in range(lev):
            q = p @ q + q
            p = p @ p
        maps.append((h, p, q))

    hs = np.array([m[0] for m in maps])
    weights = np.array(
        [np.prod([hs[i] / (hs[i] - hs[j]) for i in range(levels) if i != j]) for j in range(levels)]
    )
    p_ex = sum(w * m[1] for w, m in zip(weights, maps))
    q_ex = sum(w * m[2] for w, m in zip(weights, maps))

    k00 = k[np.ix_(massless, massless)]
    k0c = k[np.ix_(massless, capacitive)]

    def algebraic(theta_c, a):
        if len(massless) == 0:
            return np.zeros(0)
        rhs = -(k0c @ theta_c + (drive @ a)[massless])
        try:
            return np.linalg.solve(k00, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularityError("massless rows are singular", module="simulator") from exc

    theta = np.zeros(n_nodes)
    if theta0 is None:
        b0 = b_hist[0, np.flatnonzero(circuit.temp_source_flags)]
        f0 = f_hist[0, np.flatnonzero(circuit.flow_source_flags)]
        theta = steady_state(dae, SourceValues(b0, f0))
    else:
        theta0 = np.asarray(theta0, dtype=float).reshape(-1)
        if len(theta0) == n_nodes:
            theta[capacitive] = theta0[capacitive]
        elif len(theta0) == len(capacitive):
            theta[capacitive] = theta0
        else:
            raise ValueError(f"theta0 has length {len(theta0)}")

    out = np.empty((n_steps, n_nodes))
    for step_k in range(n_steps):
        theta[massless] = algebraic(theta[capacitive], a_hist[step_k])
        out[step_k] = theta
        theta = p_ex @ theta + q_ex @ a_hist[step_k]

    outputs = np.flatnonzero(circuit.output_flags)
    return Trajectory(
        times=start + step * np.arange(n_steps),
        outputs=out[:, outputs],
        output_labels=tuple(circuit.node_labels[i] for i in outputs),
        states=out,
        state_labels=tuple(circuit.node_labels),
    )
