"""Energy bookkeeping along a trajectory.

The lost energy ``L = E(t) - E(0) - W(t)`` (``W`` = work of the external
force) splits into

* ``L_a``: energy jumps at switches, supplied or removed by the
  stiffness-variation device (pseudo-active part),
* ``L_p``: viscous dissipation in the primary mode (passive part),
* ``L_s``: viscous dissipation in all other modes (semi-active part).

Dissipation integrals use the trapezoid rule with the Euler-Maclaurin
endpoint correction ``h^2/12 (f'_0 - f'_1)``, where ``f'`` comes from the
sampled accelerations. This keeps the rule fourth-order on the sample grid.
Intervals are never taken across a switch.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .control import EventKind
from .errors import DomainError, TooFewEventsError
from .integrator import Trajectory
from .modal import modal_basis
from .model import Phase, SystemModel, elongations, reduce

MIN_SAMPLES_PER_PERIOD = 20


@dataclass
class EnergyLedger:
    t: np.ndarray
    U: np.ndarray
    T: np.ndarray
    W: np.ndarray
    L_a: np.ndarray
    L_diss: np.ndarray
    modal: np.ndarray
    primary_mode: int = 1

    @property
    def E(self) -> np.ndarray:
        return self.U + self.T

    @property
    def L(self) -> np.ndarray:
        E = self.E
        if E.size == 0:
            return E.copy()
        return E - E[0] - self.W

    @property
    def L_p(self) -> np.ndarray:
        return self.modal[:, self.primary_mode - 1]

    @property
    def L_s(self) -> np.ndarray:
        return self.modal.sum(axis=1) - self.L_p

    @property
    def closure(self) -> np.ndarray:
        return self.L - (self.L_a + self.L_s + self.L_p)

    def max_closure_error(self) -> float:
        return float(np.abs(self.closure).max()) if self.t.size else 0.0


def extracted_energy_step(model: SystemModel, u, drops=None) -> float:
    """Potential-energy change ``sum 1/2 dk_j e_j^2`` of a stiffness step.

    ``drops`` defaults to each spring's high-to-low change ``k0 (1 - gamma)``.
    Springs with zero elongation contribute nothing even when rigid.
    """
    e = elongations(model, u)
    dk = np.array([s.drop for s in model.springs]) if drops is None else np.asarray(drops, float)
    total = 0.0
    for dkj, ej in zip(dk, e):
        if ej == 0.0:
            continue
        if not np.isfinite(dkj):
            raise DomainError("a rigid spring cannot be released at non-zero elongation")
        total += 0.5 * dkj * ej * ej
    return float(total)


def accumulate_L_a(event_times, steps, t) -> np.ndarray:
    """Right-continuous step sum of the switching energies."""
    event_times = np.asarray(event_times, float)
    steps = np.asarray(steps, float)
    t = np.asarray(t, float)
    if event_times.size == 0:
        return np.zeros_like(t)
    order = np.argsort(event_times, kind="stable")
    csum = np.concatenate([[0.0], np.cumsum(steps[order])])
    return csum[np.searchsorted(event_times[order], t, side="right")]


def _intervals(traj: Trajectory) -> np.ndarray:
    """Mask over ``i -> i+1`` intervals that lie inside one LTI segment."""
    if traj.n_samples < 2:
        return np.zeros(0, dtype=bool)
    dt = np.diff(traj.t)
    return (dt > 0) & (traj.phase[1:] == traj.phase[:-1])


def accelerations(traj: Trajectory, model: SystemModel) -> np.ndarray:
    a = np.zeros_like(traj.u)
    f = traj.force
    for ph in Phase:
        rows = traj.phase == ph
        if not rows.any():
            continue
        s = reduce(model, ph)
        rhs = f[rows] - traj.v[rows] @ s.C.T - traj.u[rows] @ s.K.T
        xdd = np.linalg.solve(s.Mr, s.T.T @ rhs.T).T
        a[rows] = xdd @ s.T.T
    return a


def _force_rate(traj: Trajectory) -> np.ndarray:
    exc = traj.excitation
    if exc is not None:
        return np.outer(exc.amplitude_rate(traj.t), traj.load)
    # no analytic force law available: differentiate inside segments
    rate = np.zeros(traj.n_samples)
    ok = _intervals(traj)
    edges = np.flatnonzero(~ok) + 1
    for lo, hi in zip(np.r_[0, edges], np.r_[edges, traj.n_samples]):
        if hi - lo >= 2:
            rate[lo:hi] = np.gradient(traj.force_amplitude[lo:hi], traj.t[lo:hi])
    return np.outer(rate, traj.load)


def _cumulative(traj: Trajectory, f, fdot) -> np.ndarray:
    """Corrected-trapezoid running integral of a sampled integrand."""
    out = np.zeros(traj.n_samples)
    if traj.n_samples < 2:
        return out
    h = np.diff(traj.t)
    piece = 0.5 * h * (f[:-1] + f[1:]) + h * h / 12.0 * (fdot[:-1] - fdot[1:])
    piece[~_intervals(traj)] = 0.0
    out[1:] = np.cumsum(piece)
    return out


def _check_sampling(traj: Trajectory, model: SystemModel) -> None:
    ok = _intervals(traj)
    if not ok.any():
        return
    h = np.diff(traj.t)
    for ph in Phase:
        sel = ok & (traj.phase[:-1] == ph)
        if sel.any():
            f_max = reduce(model, ph).frequencies_hz().max()
            if h[sel].max() * f_max * MIN_SAMPLES_PER_PERIOD > 1.0 + 1e-9:
                warnings.warn(
                    f"trajectory is undersampled for the {f_max:.2f} Hz mode; "
                    "dissipation integrals will be inaccurate",
                    RuntimeWarning,
                    stacklevel=3,
                )


def dissipation_quadrature(traj: Trajectory, model: SystemModel, a=None) -> np.ndarray:
    """Running ``-int v^T C v dt`` with the damping matrix of the active phase."""
    _check_sampling(traj, model)
    a = accelerations(traj, model) if a is None else a
    p = np.zeros(traj.n_samples)
    dp = np.zeros(traj.n_samples)
    for ph in Phase:
        rows = traj.phase == ph
        if rows.any():
            C = reduce(model, ph).C
            Cv = traj.v[rows] @ C.T
            p[rows] = np.einsum("ij,ij->i", traj.v[rows], Cv)
            dp[rows] = 2.0 * np.einsum("ij,ij->i", a[rows], Cv)
    return -_cumulative(traj, p, dp)


def modal_dissipation(traj: Trajectory, model: SystemModel, a=None) -> np.ndarray:
    """Running dissipation per mode, each segment in its own phase basis.

    Column ``i`` holds ``-int c_i(phase) qdot_i^2 dt`` for mode ``i + 1``.
    """
    _check_sampling(traj, model)
    a = accelerations(traj, model) if a is None else a
    bases = {ph: modal_basis(model, ph) for ph in Phase if (traj.phase == ph).any()}
    n_modes = max((b.n_modes for b in bases.values()), default=modal_basis(model, Phase.LOW).n_modes)
    out = np.zeros((traj.n_samples, n_modes))
    for i in range(n_modes):
        p = np.zeros(traj.n_samples)
        dp = np.zeros(traj.n_samples)
        for ph, b in bases.items():
            if i >= b.n_modes:
                continue
            rows = traj.phase == ph
            proj = b.M @ b.shapes[:, i]
            c = b.modal_damping[i, i]
            qd = traj.v[rows] @ proj
            qdd = a[rows] @ proj
            p[rows] = c * qd * qd
            dp[rows] = 2.0 * c * qd * qdd
        out[:, i] = -_cumulative(traj, p, dp)
    return out


def decompose(modal: np.ndarray, primary_mode: int = 1):
    """Split per-mode dissipation into ``(L_s, L_p)``."""
    modal = np.asarray(modal, float)
    L_p = modal[:, primary_mode - 1].copy()
    return modal.sum(axis=1) - L_p, L_p


def external_work(traj: Trajectory, model: SystemModel, a=None) -> np.ndarray:
    if not np.any(traj.force_amplitude) or not traj.load.any():
        return np.zeros(traj.n_samples)
    a = accelerations(traj, model) if a is None else a
    f = traj.force
    p = np.einsum("ij,ij->i", f, traj.v)
    dp = np.einsum("ij,ij->i", _force_rate(traj), traj.v) + np.einsum("ij,ij->i", f, a)
    return _cumulative(traj, p, dp)


def switch_jumps(traj: Trajectory, E: np.ndarray):
    """Times and energy jumps of the duplicated switch samples."""
    if traj.n_samples < 2:
        return np.zeros(0), np.zeros(0)
    idx = np.flatnonzero(np.diff(traj.t) == 0)
    return traj.t[idx], E[idx + 1] - E[idx]


def compute_ledger(traj: Trajectory, model: SystemModel, primary_mode: int = 1) -> EnergyLedger:
    U = np.zeros(traj.n_samples)
    T = np.zeros(traj.n_samples)
    for ph in Phase:
        rows = traj.phase == ph
        if rows.any():
            s = reduce(model, ph)
            U[rows] = 0.5 * np.einsum("ij,jk,ik->i", traj.u[rows], s.K, traj.u[rows])
            T[rows] = 0.5 * np.einsum("ij,jk,ik->i", traj.v[rows], s.M, traj.v[rows])
    E = U + T
    a = accelerations(traj, model)
    t_jump, jumps = switch_jumps(traj, E)
    # jumps sit between two samples sharing a time stamp; attribute them to the later one
    L_a = np.zeros(traj.n_samples)
    if jumps.size:
        idx = np.flatnonzero(np.diff(traj.t) == 0) + 1
        steps = np.zeros(traj.n_samples)
        steps[idx] = jumps
        L_a = np.cumsum(steps)
    return EnergyLedger(
        t=traj.t.copy(),
        U=U,
        T=T,
        W=external_work(traj, model, a),
        L_a=L_a,
        L_diss=dissipation_quadrature(traj, model, a),
        modal=modal_dissipation(traj, model, a),
        primary_mode=primary_mode,
    )


def _pre_index(traj: Trajectory, time: float) -> int:
    """Sample index holding the state just before a switch at ``time``."""
    i = int(np.searchsorted(traj.t, time, side="left"))
    return min(i, traj.n_samples - 1)


@dataclass
class HalfCycleRates:
    t: np.ndarray
    total: np.ndarray
    active: np.ndarray
    passive: np.ndarray
    semi: np.ndarray
    semi_modal: np.ndarray


def half_cycle_rates(traj: Trajectory, ledger: EnergyLedger) -> HalfCycleRates:
    """Normalised energy changes between consecutive decrease events.

    Each half cycle runs from one stiffness reduction to the next; the loss
    is the difference of the left-limit potential energies, split into the
    switching, primary-mode and residual (semi-active) parts, all divided
    by the energy just before the first reduction.
    """
    dec = [e for e in traj.events if e.kind == EventKind.DECREASE and e.cause == "logic"]
    if len(dec) < 2:
        raise TooFewEventsError(f"need at least two decrease events, found {len(dec)}")
    idx = np.array([_pre_index(traj, e.time) for e in dec])
    i0, i1 = idx[:-1], idx[1:]
    E_ref = ledger.E[i0]
    total = ledger.U[i1] - ledger.U[i0]
    active = ledger.L_a[i1] - ledger.L_a[i0]
    passive = ledger.L_p[i1] - ledger.L_p[i0]
    semi_modal = ledger.L_s[i1] - ledger.L_s[i0]
    semi = total - active - passive
    return HalfCycleRates(
        t=traj.t[i0], total=total / E_ref, active=active / E_ref, passive=passive / E_ref,
        semi=semi / E_ref, semi_modal=semi_modal / E_ref,
    )


def cycle_losses(traj: Trajectory, ledger: EnergyLedger):
    """Fractional energy loss per full cycle.

    Cycles are delimited by increase events whose observation rate has the
    same sign. Returns ``(start_times, loss_fraction)`` with
    ``loss_fraction = 1 - E(end) / E(start)``.
    """
    inc = [e for e in traj.events if e.kind == EventKind.INCREASE and e.cause == "logic"]
    if not inc:
        return np.zeros(0), np.zeros(0)
    sign = np.sign(inc[0].observation_rate)
    marks = [e for e in inc if np.sign(e.observation_rate) == sign]
    idx = np.array([_pre_index(traj, e.time) + 1 for e in marks])
    E = ledger.E[idx]
    return traj.t[idx[:-1]], 1.0 - E[1:] / E[:-1]
