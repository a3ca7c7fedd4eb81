"""Lumped-parameter systems with two-valued spring stiffnesses.

Nodes are numbered from 1 to ``n``; node 0 is the ground. Each spring
carries a base (low-phase) stiffness ``k0`` and a high-phase scale factor
``gamma``. ``gamma = inf`` makes the spring rigid in the high phase, which
is modelled as a kinematic constraint (node lock when one end is grounded,
node merge otherwise) rather than as a large finite stiffness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import ConstraintError, DomainError, ModelError, SingularMassError

INFINITE = math.inf


class Phase(IntEnum):
    LOW = 0
    HIGH = 1

    @classmethod
    def parse(cls, value) -> "Phase":
        if isinstance(value, Phase):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise ValueError(f"unknown stiffness phase {value!r}") from None
        return cls(int(value))


@dataclass(frozen=True)
class SpringElement:
    nodes: tuple[int, int]
    k0: float
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(i) for i in self.nodes))
        if len(self.nodes) != 2:
            raise ModelError("a spring connects exactly two nodes")
        if not self.k0 > 0:
            raise ModelError(f"base stiffness must be positive, got {self.k0}")
        if not (self.gamma >= 1.0):
            raise ModelError(f"high-phase scale must be >= 1 or inf, got {self.gamma}")

    @property
    def rigid_when_high(self) -> bool:
        return math.isinf(self.gamma)

    def stiffness(self, phase: Phase) -> float:
        return self.k0 * self.gamma if phase == Phase.HIGH else self.k0

    @property
    def drop(self) -> float:
        """Stiffness change at a high-to-low switch, ``k0 * (1 - gamma)``."""
        return self.k0 * (1.0 - self.gamma)


@dataclass(frozen=True)
class Constraint:
    """Kinematic constraint active in one stiffness phase.

    ``kind='lock'`` pins ``nodes[0]`` to the ground; ``kind='merge'`` ties
    two nodes together through a massless rigid link.
    """

    kind: str
    nodes: tuple[int, ...]
    phase: Phase = Phase.HIGH

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(i) for i in self.nodes))
        object.__setattr__(self, "phase", Phase.parse(self.phase))
        if self.kind == "lock":
            if len(self.nodes) != 1 or self.nodes[0] == 0:
                raise ConstraintError("a lock needs exactly one non-ground node")
        elif self.kind == "merge":
            if len(self.nodes) != 2 or self.nodes[0] == self.nodes[1]:
                raise ConstraintError("a merge needs two distinct nodes")
        else:
            raise ConstraintError(f"unknown constraint kind {self.kind!r}")

    @property
    def link(self) -> tuple[int, int]:
        return (0, self.nodes[0]) if self.kind == "lock" else self.nodes


@dataclass(frozen=True)
class SystemModel:
    masses: tuple[float, ...]
    springs: tuple[SpringElement, ...]
    alpha: float = 0.0
    beta: float = 0.0
    constraints: tuple[Constraint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        object.__setattr__(self, "springs", tuple(self.springs))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not self.masses:
            raise ModelError("model has no masses")
        if any(not m > 0 for m in self.masses):
            raise SingularMassError(f"all masses must be positive: {self.masses}")
        if self.alpha < 0 or self.beta < 0:
            raise ModelError("Rayleigh coefficients must be non-negative")
        n = len(self.masses)
        for s in self.springs:
            if any(i < 0 or i > n for i in s.nodes):
                raise ModelError(f"spring {s.nodes} references a missing node")
            if s.nodes[0] == s.nodes[1]:
                raise ModelError(f"spring {s.nodes} connects a node to itself")
        for c in self.constraints:
            if any(i > n for i in c.nodes):
                raise ConstraintError(f"constraint {c} references a missing node")

    @property
    def n_dof(self) -> int:
        return len(self.masses)

    def with_gammas(self, gammas) -> "SystemModel":
        springs = tuple(
            SpringElement(s.nodes, s.k0, float(g)) for s, g in zip(self.springs, gammas)
        )
        return SystemModel(self.masses, springs, self.alpha, self.beta, self.constraints)


def _incidence(spring: SpringElement, n: int) -> np.ndarray:
    """Row vector ``b`` with ``b @ u`` = spring elongation."""
    b = np.zeros(n)
    a, c = spring.nodes
    if a:
        b[a - 1] -= 1.0
    if c:
        b[c - 1] += 1.0
    return b


def elongations(model: SystemModel, u: np.ndarray) -> np.ndarray:
    """Elongation of every spring for displacements ``u`` (last axis = nodes)."""
    B = np.array([_incidence(s, model.n_dof) for s in model.springs])
    return np.asarray(u) @ B.T


def rigid_links(model: SystemModel, phase: Phase) -> list[tuple[int, int]]:
    phase = Phase.parse(phase)
    links = [c.link for c in model.constraints if c.phase == phase]
    if phase == Phase.HIGH:
        links += [s.nodes for s in model.springs if s.rigid_when_high]
    return links


def stiffness_matrix(model: SystemModel, phase: Phase) -> np.ndarray:
    """Stiffness matrix of the phase. Rigid springs are left out (constraints)."""
    phase = Phase.parse(phase)
    n = model.n_dof
    K = np.zeros((n, n))
    for s in model.springs:
        if phase == Phase.HIGH and s.rigid_when_high:
            continue
        b = _incidence(s, n)
        K += s.stiffness(phase) * np.outer(b, b)
    return K


def assemble_matrices(model: SystemModel, phase: Phase):
    """Return ``(M, K, C)`` for one stiffness phase with ``C = alpha*M + beta*K``."""
    if any(not m > 0 for m in model.masses):
        raise SingularMassError("all masses must be positive")
    M = np.diag(np.asarray(model.masses, dtype=float))
    K = stiffness_matrix(model, phase)
    return M, K, model.alpha * M + model.beta * K


def reduction_matrix(model: SystemModel, phase: Phase) -> np.ndarray:
    """Map ``T`` (n x r) from independent coordinates to nodal displacements.

    Nodes joined by rigid links share one coordinate; groups that reach the
    ground are eliminated.
    """
    n = model.n_dof
    parent = list(range(n + 1))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in rigid_links(model, phase):
        if a == b:
            raise ConstraintError(f"rigid link {a}-{b} has no distinct endpoints")
        ra, rb = find(a), find(b)
        if ra != rb:
            # keep the ground as root so grounded groups are easy to spot
            if rb == find(0):
                ra, rb = rb, ra
            parent[rb] = ra

    ground = find(0)
    roots: list[int] = []
    for i in range(1, n + 1):
        r = find(i)
        if r != ground and r not in roots:
            roots.append(r)
    if not roots:
        raise ConstraintError("constraints leave no free degree of freedom")
    T = np.zeros((n, len(roots)))
    for i in range(1, n + 1):
        r = find(i)
        if r != ground:
            T[i - 1, roots.index(r)] = 1.0
    return T


@dataclass(frozen=True)
class ReducedSystem:
    """Phase matrices in full and independent coordinates."""

    phase: Phase
    T: np.ndarray
    M: np.ndarray
    K: np.ndarray
    C: np.ndarray
    Mr: np.ndarray
    Kr: np.ndarray
    Cr: np.ndarray

    @property
    def n_free(self) -> int:
        return self.T.shape[1]

    def project(self, u: np.ndarray) -> np.ndarray:
        """Mass-weighted projection of nodal values onto the free coordinates."""
        u = np.asarray(u, dtype=float)
        if self.T.shape[0] == self.T.shape[1]:  # no rigid links: T is the identity
            return u.copy()
        # M is diagonal, so each free coordinate is a mass-weighted group mean;
        # single-node groups are copied to keep their values bit-exact
        m = np.diag(self.M)
        out = (self.T.T @ (m * u)) / (self.T.T @ m)
        single = self.T.sum(axis=0) == 1
        out[single] = u[np.argmax(self.T[:, single], axis=0)]
        return out

    def state_matrix(self) -> np.ndarray:
        r = self.n_free
        Minv = np.linalg.inv(self.Mr)
        A = np.zeros((2 * r, 2 * r))
        A[:r, r:] = np.eye(r)
        A[r:, :r] = -Minv @ self.Kr
        A[r:, r:] = -Minv @ self.Cr
        return A

    def frequencies_hz(self) -> np.ndarray:
        from scipy.linalg import eigvalsh

        lam = eigvalsh(self.Kr, self.Mr)
        return np.sqrt(np.clip(lam, 0.0, None)) / (2 * np.pi)


def reduce(model: SystemModel, phase: Phase) -> ReducedSystem:
    phase = Phase.parse(phase)
    M, K, C = assemble_matrices(model, phase)
    T = reduction_matrix(model, phase)
    return ReducedSystem(phase, T, M, K, C, T.T @ M @ T, T.T @ K @ T, T.T @ C @ T)


def serial_stiffness(k1: float, k2: float) -> float:
    """Equivalent stiffness of two springs in series (``inf`` acts as rigid)."""
    for k in (k1, k2):
        if not k > 0:
            raise DomainError(f"stiffness must be positive, got {k}")
    if math.isinf(k1):
        return float(k2)
    if math.isinf(k2):
        return float(k1)
    return k1 * k2 / (k1 + k2)


def quarter_cycle_period(m: float, k: float) -> float:
    """Duration of a quarter of a free period, ``pi/2 * sqrt(m/k)``."""
    if not (m > 0 and k > 0):
        raise DomainError(f"mass and stiffness must be positive, got m={m}, k={k}")
    return 0.5 * math.pi * math.sqrt(m / k)


# Serial two-mass chain: ground -k1- m1 -k2- m2.
REFERENCE_K01 = 825.0
REFERENCE_K02 = 300.0
REFERENCE_M1 = 0.01
REFERENCE_M2 = 1.5
REFERENCE_ALPHA = 0.1
REFERENCE_BETA = 0.001


def identify_reference_parameters(gamma1: float = 1.0, gamma2: float = 1.0) -> SystemModel:
    """Serial two-DoF reference chain with optional high-phase scale factors."""
    return SystemModel(
        masses=(REFERENCE_M1, REFERENCE_M2),
        springs=(
            SpringElement((0, 1), REFERENCE_K01, gamma1),
            SpringElement((1, 2), REFERENCE_K02, gamma2),
        ),
        alpha=REFERENCE_ALPHA,
        beta=REFERENCE_BETA,
    )
