"""Long-time symplectic integration and trajectory diagnostics.

The integrator is the implicit midpoint rule: symplectic and time-reversible
for any smooth Hamiltonian, second order, with the implicit equation solved
by fixed-point iteration (the vector field is a small perturbation of an
integrable one at the step sizes used here, so the iteration contracts
fast).  Fixed step size keeps the symplectic structure honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import FTPolynomial
from .errors import StepConvergenceError
from .geometry import NearIntegrableSystem

TWO_PI = 2.0 * math.pi


class HamiltonianField:
    """Vectorized evaluator for a Fourier-Taylor Hamiltonian and its gradient.

    Precomputes the mode, exponent and coefficient arrays once; each call is
    a handful of numpy operations over the term list, which keeps million-step
    integrations affordable.
    """

    def __init__(self, H: FTPolynomial):
        self.poly = H
        self.n = H.dims
        self.center = np.asarray(H.center, dtype=float)
        items = sorted(H.terms.items())
        m = len(items)
        self.K = np.array([k for (k, _a), _c in items], dtype=np.int64).reshape(m, self.n)
        self.A = np.array([a for (_k, a), _c in items], dtype=np.int64).reshape(m, self.n)
        self.C = np.array([c for _key, c in items], dtype=np.complex128)
        self.Kt = 2j * math.pi * self.K.astype(np.float64)
        self.has_actions = bool(np.any(self.A))

    def _powers(self, action):
        delta = action - self.center
        D = delta[None, :] ** self.A
        return delta, D

    def value(self, theta, action) -> float:
        if self.C.size == 0:
            return 0.0
        E = np.exp(self.Kt @ theta)
        _delta, D = self._powers(action)
        return float(np.real(np.sum(self.C * D.prod(axis=1) * E)))

    def gradients(self, theta, action):
        """(grad_theta H, grad_I H) at a point, sharing the term evaluation."""
        n = self.n
        if self.C.size == 0:
            return np.zeros(n), np.zeros(n)
        E = np.exp(self.Kt @ theta)
        delta, D = self._powers(action)
        P = D.prod(axis=1)
        base = self.C * E
        g_theta = np.real(self.Kt.T @ (base * P))
        g_action = np.zeros(n)
        if self.has_actions:
            Dm1 = self.A * delta[None, :] ** np.maximum(self.A - 1, 0)
            for i in range(n):
                rest = np.real(base * Dm1[:, i] * np.prod(np.delete(D, i, axis=1), axis=1))
                g_action[i] = rest.sum()
        return g_theta, g_action

    def rhs(self, theta, action):
        """Hamiltonian vector field (dtheta/dt, dI/dt) = (dI H, -dtheta H)."""
        g_theta, g_action = self.gradients(theta, action)
        return g_action, -g_theta


def as_field(system) -> HamiltonianField:
    if isinstance(system, HamiltonianField):
        return system
    if isinstance(system, NearIntegrableSystem):
        return HamiltonianField(system.hamiltonian)
    if isinstance(system, FTPolynomial):
        return HamiltonianField(system)
    raise TypeError(f"cannot build a Hamiltonian field from {type(system)!r}")


@dataclass
class PhaseState:
    """Point (theta, I) at time t; angles reduced mod 1."""

    theta: np.ndarray
    action: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float) % 1.0
        self.action = np.asarray(self.action, dtype=float)
        if not np.all(np.isfinite(self.action)):
            raise ValueError("non-finite action")


@dataclass
class TrajectoryRecord:
    """Sampled trajectory summary: actions, energy and running drift."""

    times: np.ndarray
    actions: np.ndarray
    energies: np.ndarray
    drifts: np.ndarray
    exit_time: float
    exit_kind: str  # one of: drift, horizon, domain, failure
    energy_drift: float
    steps: int
    initial_action: np.ndarray

    @property
    def max_drift(self) -> float:
        return float(self.drifts[-1]) if self.drifts.size else 0.0

    def write_csv(self, path):
        n = self.actions.shape[1]
        header = "t," + ",".join(f"I_{i+1}" for i in range(n)) + ",H,drift"
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in range(self.times.size):
                cells = [f"{self.times[row]:.17g}"]
                cells += [f"{v:.17g}" for v in self.actions[row]]
                cells.append(f"{self.energies[row]:.17g}")
                cells.append(f"{self.drifts[row]:.17g}")
                fh.write(",".join(cells) + "\n")


def step_implicit_midpoint(
    system, state: PhaseState, h_step: float, tol: float = 1e-13, max_iter: int = 50
) -> PhaseState:
    """One implicit-midpoint step, solved by fixed-point iteration.

    Symplectic and time-reversible; raises when the iteration fails to reach
    the requested residual (usually a sign that h_step is too large for the
    field's contraction).
    """
    field = as_field(system)
    theta0, act0 = state.theta, state.action
    g_theta, g_action = field.gradients(theta0, act0)
    theta1 = theta0 + h_step * g_action
    act1 = act0 - h_step * g_theta
    for _ in range(max_iter):
        mid_theta = 0.5 * (theta0 + theta1)
        mid_act = 0.5 * (act0 + act1)
        g_theta, g_action = field.gradients(mid_theta, mid_act)
        new_theta = theta0 + h_step * g_action
        new_act = act0 - h_step * g_theta
        change = max(
            float(np.max(np.abs(new_theta - theta1))),
            float(np.max(np.abs(new_act - act1))),
        )
        theta1, act1 = new_theta, new_act
        if change <= tol:
            return PhaseState(theta1, act1, state.t + h_step)
    raise StepConvergenceError(
        f"implicit midpoint did not reach residual {tol:g} in {max_iter} iterations "
        f"(h_step={h_step:g} may be too large)"
    )


def integrate(
    system,
    state0: PhaseState,
    horizon: float,
    h_step: float,
    drift_threshold: float,
    stride: int = 1,
    domain_radius: float | None = None,
    tol: float = 1e-13,
) -> TrajectoryRecord:
    """Integrate until the horizon, a drift exit, or a domain exit.

    Exit conditions are checked every step; samples are recorded every
    `stride` steps (plus the initial and final states).  The drift column is
    the running sup-norm displacement of the actions.
    """
    field = as_field(system)
    if domain_radius is None and isinstance(system, NearIntegrableSystem):
        domain_radius = system.model.R
    theta = state0.theta.copy()
    act = state0.action.copy()
    act0 = act.copy()
    t = state0.t
    n_steps = max(1, int(round((horizon - t) / h_step)))
    times, actions, energies, drifts = [], [], [], []
    max_drift = 0.0

    def sample():
        times.append(t)
        actions.append(act.copy())
        energies.append(field.value(theta, act))
        drifts.append(max_drift)

    sample()
    exit_kind = "horizon"
    exit_time = t
    steps_done = 0
    for step_idx in range(1, n_steps + 1):
        state = step_implicit_midpoint(field, PhaseState(theta, act, t), h_step, tol=tol)
        theta, act, t = state.theta, state.action, state.t
        steps_done = step_idx
        max_drift = max(max_drift, float(np.max(np.abs(act - act0))))
        exit_time = t
        if max_drift > drift_threshold:
            exit_kind = "drift"
            sample()
            break
        if domain_radius is not None and float(np.max(np.abs(act))) > domain_radius:
            exit_kind = "domain"
            sample()
            break
        if step_idx % stride == 0 or step_idx == n_steps:
            sample()
    energies_arr = np.array(energies)
    return TrajectoryRecord(
        times=np.array(times),
        actions=np.array(actions),
        energies=energies_arr,
        drifts=np.array(drifts),
        exit_time=exit_time,
        exit_kind=exit_kind,
        energy_drift=float(np.max(np.abs(energies_arr - energies_arr[0]))),
        steps=steps_done,
        initial_action=act0,
    )


def confinement_decomposition(record: TrajectoryRecord, omega_per):
    """Split the action displacement along and across the periodic frequency.

    Returns (parallel, orthogonal): the signed component of I(t) - I(0) along
    omega_per and the complementary vector series.  The theory confines the
    parallel part by the remainder's angle derivative and the orthogonal part
    by convexity plus energy conservation.
    """
    omega_per = np.asarray(omega_per, dtype=float)
    norm = np.linalg.norm(omega_per)
    if norm == 0:
        raise ValueError("omega_per must be nonzero")
    u = omega_per / norm
    displacement = record.actions - record.initial_action[None, :]
    parallel = displacement @ u
    orthogonal = displacement - parallel[:, None] * u[None, :]
    return parallel, orthogonal
