"""Simulation of vibrating lumped-mass systems with switched stiffness.

The stiffness of selected springs toggles between a low and a high value
depending on whether an observed signal grows or shrinks in magnitude.
The package integrates such runs, locates the switching instants and
splits the lost vibration energy into the part taken out by the switching
itself, the part moved into other modes, and the inherent damping.
"""

from ._kernels import backend_name
from .control import ControllerSettings, EventKind, ObservationVariable, SwitchEvent
from .energy import EnergyLedger, compute_ledger, cycle_losses, half_cycle_rates
from .errors import (
    ConfigError,
    ConstraintError,
    DomainError,
    MissingBasisError,
    ModelError,
    NoSignChangeError,
    SingularMassError,
    StabilityError,
    StiffmodError,
    TooFewEventsError,
)
from .excitation import Excitation, InitialCondition, force_at, pure_mode_initial_state
from .modal import ModalBasis, modal_basis, solve_basis, to_modal
from .model import (
    INFINITE,
    Constraint,
    Phase,
    SpringElement,
    SystemModel,
    assemble_matrices,
    identify_reference_parameters,
    reduce,
)
from .integrator import Trajectory, simulate
from .scenarios import PRESETS, Scenario, get_preset, run_scenario

__version__ = "0.1.0"
