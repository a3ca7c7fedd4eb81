"""Preset experiments and the scenario runner."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ._kernels import backend_name
from .control import ControllerSettings, ObservationVariable
from .energy import EnergyLedger, compute_ledger, cycle_losses
from .errors import ConfigError, ModelError
from .excitation import Excitation, InitialCondition
from .integrator import Trajectory, simulate
from .model import Constraint, SpringElement, SystemModel, identify_reference_parameters, INFINITE

# scale factors of the paired global/local serial cases
GLOBAL_GAMMA = 2.421
LOCAL_GAMMA2 = 5.0
SINGLE_DOF_KL = 220.0
SINGLE_DOF_KH = 300.0


@dataclass(frozen=True)
class Scenario:
    """Everything needed to reproduce one run.

    ``window`` lives inside ``controller``; the modulation is active only
    for ``window[0] <= t < window[1]`` when it is set.
    """

    name: str
    model: SystemModel
    initial: InitialCondition = field(default_factory=InitialCondition)
    excitation: Excitation = field(default_factory=Excitation)
    controller: ControllerSettings = field(default_factory=ControllerSettings)
    t_end: float = 1.0
    dt: float | None = None
    method: str = "gauss"
    primary_mode: int = 1
    output_stride: int = 1
    description: str = ""

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConfigError(f"{self.name}: t_end must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"{self.name}: dt must be positive")
        if self.output_stride < 1:
            raise ConfigError(f"{self.name}: output stride must be at least 1")
        win = self.controller.window
        if win is not None and win[1] > self.t_end:
            raise ConfigError(f"{self.name}: modulation window {win} exceeds t_end={self.t_end}")
        if not 1 <= self.primary_mode <= self.model.n_dof:
            raise ConfigError(f"{self.name}: primary mode {self.primary_mode} out of range")

    @property
    def window(self):
        return self.controller.window

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def unmodulated(self) -> "Scenario":
        """Same run with the switching disabled (stiffness held at the idle phase)."""
        ctrl = dataclasses.replace(self.controller, enabled=False)
        return self.replace(name=self.name + "-unmodulated", controller=ctrl)


@dataclass
class RunResult:
    scenario: Scenario
    trajectory: Trajectory
    ledger: EnergyLedger
    summary: dict

    def __iter__(self):
        return iter((self.trajectory, self.ledger, self.summary))


def _serial(gamma1, gamma2, name, description, obs, initial, t_end=4.0):
    return Scenario(
        name=name,
        model=identify_reference_parameters(gamma1, gamma2),
        initial=initial,
        controller=ControllerSettings(observation=obs, initial_phase="low"),
        t_end=t_end,
        description=description,
    )


def _sweep(gamma1, gamma2, name, description):
    return Scenario(
        name=name,
        model=identify_reference_parameters(gamma1, gamma2),
        excitation=Excitation("sweep", F_max=1.0, f0=1.0, f1=3.0, t1=100.0, node=2),
        controller=ControllerSettings(
            observation=ObservationVariable("modal", 1), initial_phase="low", window=(30.0, 65.0)
        ),
        t_end=100.0,
        output_stride=10,
        description=description,
    )


def _build_presets() -> dict[str, Scenario]:
    pure = InitialCondition("pure_mode", mode=1, node=2, value=0.002)
    static = InitialCondition("static", node=2, value=0.002)
    q1 = ObservationVariable("modal", 1, "low")
    u2 = ObservationVariable("dof", 2)
    presets = [
        Scenario(
            name="single-dof",
            model=SystemModel(
                masses=(1.5,),
                springs=(SpringElement((0, 1), SINGLE_DOF_KL, SINGLE_DOF_KH / SINGLE_DOF_KL),),
            ),
            initial=InitialCondition("explicit", u=(0.002,), v=(0.0,)),
            controller=ControllerSettings(observation=ObservationVariable("dof", 1), initial_phase="low"),
            t_end=5.0,
            description="undamped oscillator switched between 220 and 300 N/m",
        ),
        Scenario(
            name="coupleable",
            model=SystemModel(
                masses=(1.5, 0.01),
                springs=(SpringElement((0, 1), 220.0), SpringElement((0, 2), 80.0)),
                alpha=0.0,
                beta=0.005,
                constraints=(Constraint("merge", (1, 2), "high"),),
            ),
            initial=InitialCondition("explicit", u=(0.002, 0.002), v=(0.0, 0.0)),
            controller=ControllerSettings(
                observation=ObservationVariable("dof", 1), initial_phase="high", idle_phase="high"
            ),
            t_end=4.0,
            description="two grounded oscillators rigidly coupled while |u1| grows",
        ),
        _serial(GLOBAL_GAMMA, GLOBAL_GAMMA, "serial-global",
                "reference chain, both springs scaled by 2.421, first-mode start", q1, pure),
        _serial(1.0, LOCAL_GAMMA2, "serial-local",
                "reference chain, only the outer spring scaled by 5, first-mode start", q1, pure),
        _serial(SINGLE_DOF_KH / SINGLE_DOF_KL, SINGLE_DOF_KH / SINGLE_DOF_KL, "serial-global-1.3636",
                "reference chain, both springs scaled by 300/220, observing u2", u2, static),
        _serial(INFINITE, 1.0, "serial-local-rigid",
                "reference chain, inner spring locked while |u2| grows", u2, static),
        _sweep(GLOBAL_GAMMA, GLOBAL_GAMMA, "sweep-global",
               "1 N chirp 1-3 Hz on m2, global modulation inside the window"),
        _sweep(1.0, LOCAL_GAMMA2, "sweep-local",
               "1 N chirp 1-3 Hz on m2, local modulation inside the window"),
    ]
    return {s.name: s for s in presets}


PRESETS: dict[str, Scenario] = _build_presets()
ALIASES = {"sweep": "sweep-global"}


def preset_names() -> list[str]:
    return list(PRESETS)


def get_preset(name: str) -> Scenario:
    key = ALIASES.get(name, name)
    try:
        return PRESETS[key]
    except KeyError:
        raise ConfigError(f"unknown scenario {name!r}; try one of {', '.join(PRESETS)}") from None


def _summary(scenario: Scenario, traj: Trajectory, ledger: EnergyLedger) -> dict:
    E0 = float(ledger.E[0])
    L_end = float(ledger.L[-1])
    shares = {}
    for key, series in (("L_a", ledger.L_a), ("L_s", ledger.L_s), ("L_p", ledger.L_p)):
        shares[key] = float(series[-1]) / L_end + 0.0 if L_end != 0 else None
    scale = abs(E0) if E0 != 0 else float(np.max(np.abs(ledger.E)))
    return {
        "scenario": scenario.name,
        "backend": backend_name(),
        "dt": traj.dt,
        "t_end": float(traj.t[-1]),
        "n_samples": int(traj.n_samples),
        "n_events": len(traj.events),
        "peak_abs_u": [float(x) for x in np.max(np.abs(traj.u), axis=0)],
        "E0": E0,
        "final_E_over_E0": float(ledger.E[-1]) / E0 if E0 != 0 else None,
        "L_final": L_end,
        "L_a_final": float(ledger.L_a[-1]) + 0.0,
        "L_s_final": float(ledger.L_s[-1]) + 0.0,
        "L_p_final": float(ledger.L_p[-1]) + 0.0,
        "loss_shares": shares,
        "max_closure_error": ledger.max_closure_error(),
        "closure_scale": scale,
    }


def run_scenario(scenario: Scenario, *, t_end: float | None = None, dt: float | None = None) -> RunResult:
    """Simulate a scenario and build its energy ledger.

    Unpacks as ``trajectory, ledger, summary``.
    """
    if t_end is not None and scenario.window is not None:
        # a shortened run keeps whatever part of the window still fits
        start, stop = scenario.window
        ctrl = dataclasses.replace(scenario.controller, window=(min(start, t_end), min(stop, t_end)))
        scenario = scenario.replace(controller=ctrl)
    if t_end is not None or dt is not None:
        scenario = scenario.replace(
            t_end=scenario.t_end if t_end is None else t_end,
            dt=scenario.dt if dt is None else dt,
        )
    initial = scenario.initial.resolve(scenario.model)
    traj = simulate(
        scenario.model,
        initial,
        excitation=scenario.excitation,
        settings=scenario.controller,
        t_end=scenario.t_end,
        dt=scenario.dt,
        method=scenario.method,
    )
    ledger = compute_ledger(traj, scenario.model, scenario.primary_mode)
    return RunResult(scenario, traj, ledger, _summary(scenario, traj, ledger))


def mean_cycle_loss(scenario: Scenario, skip: int = 1) -> float:
    """Average fractional energy loss per cycle, ignoring the first ``skip`` cycles."""
    res = run_scenario(scenario)
    _, loss = cycle_losses(res.trajectory, res.ledger)
    if loss.size <= skip:
        raise ModelError(f"{scenario.name}: not enough cycles to measure the loss")
    return float(np.mean(loss[skip:]))


def match_global_gamma(local: Scenario, bracket=(1.05, 10.0), skip: int = 1, xtol: float = 1e-4) -> float:
    """Global scale factor whose per-cycle loss equals that of ``local``.

    All springs of the local model get the same factor; the factor is found
    with Brent's method inside ``bracket``.
    """
    target = mean_cycle_loss(local, skip)

    def mismatch(gamma):
        model = local.model.with_gammas([gamma] * len(local.model.springs))
        return mean_cycle_loss(local.replace(model=model), skip) - target

    return float(brentq(mismatch, *bracket, xtol=xtol))
