"""External forces and initial conditions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ModelError
from .model import Phase, SystemModel, stiffness_matrix

# integer codes shared with the compiled kernels
FORCE_NONE = 0
FORCE_HARMONIC = 1
FORCE_SWEEP = 2


@dataclass(frozen=True)
class Excitation:
    """Point force on one node.

    ``kind`` is ``'free'`` (no force), ``'harmonic'`` (``F_max sin(2 pi f t)``)
    or ``'sweep'`` (linear chirp from ``f0`` towards ``f1``, reached at ``t1``).
    """

    kind: str = "free"
    F_max: float = 0.0
    f: float = 0.0
    f0: float = 0.0
    f1: float = 0.0
    t1: float = 1.0
    node: int = 1

    def __post_init__(self):
        if self.kind not in ("free", "harmonic", "sweep"):
            raise ModelError(f"unknown excitation kind {self.kind!r}")
        if self.F_max < 0:
            raise ModelError("force amplitude must be non-negative")
        if self.kind == "harmonic" and not self.f > 0:
            raise ModelError("harmonic frequency must be positive")
        if self.kind == "sweep" and not (self.f1 > self.f0 > 0 and self.t1 > 0):
            raise ModelError("sweep needs f1 > f0 > 0 and t1 > 0")
        if self.node < 1:
            raise ModelError("force node is 1-based")

    @property
    def code(self) -> int:
        return {"free": FORCE_NONE, "harmonic": FORCE_HARMONIC, "sweep": FORCE_SWEEP}[self.kind]

    @property
    def params(self) -> np.ndarray:
        return np.array([self.F_max, self.f, self.f0, self.f1, self.t1], dtype=float)

    def amplitude(self, t):
        """Scalar force value at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        if self.kind == "free":
            return np.zeros_like(t)
        return self.F_max * np.sin(self.phase_angle(t))

    def amplitude_rate(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "free":
            return np.zeros_like(t)
        return self.F_max * np.cos(self.phase_angle(t)) * 2 * np.pi * self.instantaneous_frequency(t)

    def phase_angle(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "harmonic":
            return 2 * np.pi * self.f * t
        if self.kind == "sweep":
            return 2 * np.pi * t * (self.f0 + t * (self.f1 - self.f0) / (2 * self.t1))
        return np.zeros_like(t)

    def instantaneous_frequency(self, t):
        """``d(phase)/dt / 2 pi`` in Hz."""
        t = np.asarray(t, dtype=float)
        if self.kind == "harmonic":
            return np.full_like(t, self.f)
        if self.kind == "sweep":
            return self.f0 + t * (self.f1 - self.f0) / self.t1
        return np.zeros_like(t)

    def load_vector(self, n_dof: int) -> np.ndarray:
        if self.node > n_dof:
            raise ModelError(f"force node {self.node} does not exist")
        b = np.zeros(n_dof)
        if self.kind != "free":
            b[self.node - 1] = 1.0
        return b


def force_at(excitation: Excitation, t: float, n_dof: int) -> np.ndarray:
    if t < 0:
        raise DomainError("time must be non-negative")
    return float(excitation.amplitude(t)) * excitation.load_vector(n_dof)


def pure_mode_initial_state(basis, mode: int, amplitude: float):
    """Displacement along one mass-normalised mode (1-based index), at rest."""
    if not 1 <= mode <= basis.n_modes:
        raise IndexError(f"mode {mode} out of range 1..{basis.n_modes}")
    u = amplitude * basis.shapes[:, mode - 1]
    return u, np.zeros_like(u)


def mode_amplitude_for(basis, mode: int, node: int, value: float) -> float:
    """Modal amplitude that puts ``value`` on ``node`` for a pure-mode state."""
    comp = basis.shapes[node - 1, mode - 1]
    if comp == 0:
        raise ModelError(f"mode {mode} has a node at {node}")
    return value / comp


def static_initial_state(model: SystemModel, node: int, value: float, phase=Phase.LOW):
    """Prescribe one nodal displacement; the others settle in static equilibrium."""
    K = stiffness_matrix(model, phase)
    n = model.n_dof
    free = [i for i in range(n) if i != node - 1]
    u = np.zeros(n)
    u[node - 1] = value
    if free:
        Kff = K[np.ix_(free, free)]
        u[free] = np.linalg.solve(Kff, -K[free, node - 1] * value)
    return u, np.zeros(n)


@dataclass(frozen=True)
class InitialCondition:
    """How the starting state is specified.

    ``explicit`` takes ``u`` and ``v`` directly; ``pure_mode`` scales low-phase
    mode ``mode`` so that ``node`` starts at ``value``; ``static`` prescribes
    ``node`` and relaxes the others.
    """

    kind: str = "explicit"
    u: tuple[float, ...] = ()
    v: tuple[float, ...] = ()
    mode: int = 1
    node: int = 1
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("explicit", "pure_mode", "static"):
            raise ModelError(f"unknown initial condition kind {self.kind!r}")

    def resolve(self, model: SystemModel):
        n = model.n_dof
        if self.kind == "explicit":
            u = np.zeros(n) if not self.u else np.asarray(self.u, dtype=float)
            v = np.zeros(n) if not self.v else np.asarray(self.v, dtype=float)
            if u.shape != (n,) or v.shape != (n,):
                raise ModelError(f"initial state needs {n} displacements and velocities")
            return u, v
        if self.kind == "static":
            return static_initial_state(model, self.node, self.value)
        from .modal import modal_basis

        basis = modal_basis(model, Phase.LOW)
        amp = mode_amplitude_for(basis, self.mode, self.node, self.value)
        return pure_mode_initial_state(basis, self.mode, amp)
