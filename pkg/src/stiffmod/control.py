"""Switched-stiffness control logic.

High stiffness while the magnitude of the observation variable grows, low
stiffness while it shrinks. Transitions to high stiffness are *increase*
events (normally at zero crossings), transitions to low stiffness are
*decrease* events (normally at extremal points).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import MissingBasisError, ModelError
from .model import Phase


class EventKind(str, Enum):
    INCREASE = "increase"
    DECREASE = "decrease"


def desired_phase(c: float, c_dot: float) -> Phase:
    return Phase.HIGH if c * c_dot >= 0 else Phase.LOW


def desired_phase_sampled(c_prev: float, c_next: float) -> Phase:
    """Real-time variant comparing two consecutive samples."""
    return Phase.HIGH if abs(c_next) >= abs(c_prev) else Phase.LOW


@dataclass(frozen=True)
class ObservationVariable:
    """Scalar signal driving the switching.

    ``kind='dof'`` reads node ``index`` (1-based). ``kind='modal'`` projects
    onto mode ``index`` (1-based) of either the low-phase basis or the basis
    of the currently active phase.
    """

    kind: str = "dof"
    index: int = 1
    basis: str = "low"

    def __post_init__(self):
        if self.kind not in ("dof", "modal"):
            raise ModelError(f"unknown observation kind {self.kind!r}")
        if self.basis not in ("low", "current"):
            raise ModelError(f"unknown basis selector {self.basis!r}")
        if self.index < 1:
            raise ModelError("observation index is 1-based")

    def weights(self, n_dof: int, basis=None) -> np.ndarray:
        """Nodal weight vector ``w`` with ``c = w @ u``."""
        if self.kind == "dof":
            if self.index > n_dof:
                raise ModelError(f"node {self.index} does not exist")
            w = np.zeros(n_dof)
            w[self.index - 1] = 1.0
            return w
        if basis is None:
            raise MissingBasisError("modal observation needs a modal basis")
        if self.index > basis.n_modes:
            raise ModelError(f"mode {self.index} does not exist in the basis")
        return basis.M @ basis.shapes[:, self.index - 1]


def evaluate_observation(obs: ObservationVariable, state, basis=None):
    """Return ``(c, c_dot)`` for a state exposing nodal ``u`` and ``v``."""
    u = np.asarray(state.u, dtype=float)
    w = obs.weights(u.size, basis)
    return float(w @ u), float(w @ np.asarray(state.v, dtype=float))


@dataclass
class SwitchEvent:
    time: float
    kind: EventKind
    observation_value: float
    state_before: object
    state_after: object
    work: float = 0.0
    cause: str = "logic"
    observation_rate: float = 0.0

    @property
    def new_phase(self) -> Phase:
        return Phase.HIGH if self.kind == EventKind.INCREASE else Phase.LOW


@dataclass
class ControllerSettings:
    observation: ObservationVariable = field(default_factory=ObservationVariable)
    mode: str = "event"
    dwell: float | None = None
    tolerance: float = 1e-10
    initial_phase: str = "auto"
    window: tuple[float, float] | None = None
    enabled: bool = True
    idle_phase: str = "low"

    def __post_init__(self):
        if self.mode not in ("event", "sampled"):
            raise ModelError(f"unknown controller mode {self.mode!r}")
        if self.initial_phase not in ("auto", "low", "high"):
            raise ModelError(f"unknown initial phase {self.initial_phase!r}")
        if self.idle_phase not in ("low", "high"):
            raise ModelError(f"unknown idle phase {self.idle_phase!r}")
        if self.tolerance <= 0:
            raise ModelError("event tolerance must be positive")
        if self.window is not None:
            start, stop = self.window
            if not 0 <= start <= stop:
                raise ModelError(f"invalid modulation window {self.window}")


class Controller:
    """Switching rule plus its event log. One instance per simulation run."""

    def __init__(self, settings: ControllerSettings | None = None):
        self.settings = settings or ControllerSettings()
        self.events: list[SwitchEvent] = []

    def active(self, t: float) -> bool:
        s = self.settings
        if not s.enabled:
            return False
        if s.window is None:
            return True
        return s.window[0] <= t < s.window[1]

    def initial_phase(self, c: float, c_dot: float) -> Phase:
        choice = self.settings.initial_phase
        if choice == "auto":
            return desired_phase(c, c_dot)
        return Phase.parse(choice)

    def record(self, event: SwitchEvent) -> None:
        self.events.append(event)
