"""Time integration of the piecewise linear time-invariant system.

Every stiffness phase is an LTI system ``M a + C v + K u = f`` on its free
coordinates. Steps use the two-stage Gauss-Legendre collocation method
(fourth order, A-stable, exact conservation of quadratic invariants of
undamped linear systems), so a step reduces to a fixed matrix map plus
two force samples. ``method='expm'`` swaps in the exact matrix exponential
for unforced runs and serves as a reference solution.

Switches are located inside a step by bracketing the sign change of the
observation signal (or its rate) and refining with the Illinois variant of
regula falsi; integration restarts at the located instant.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import _kernels
from .control import (
    Controller,
    ControllerSettings,
    EventKind,
    SwitchEvent,
    desired_phase,
    desired_phase_sampled,
)
from .errors import ModelError, NoSignChangeError, StabilityError
from .excitation import Excitation
from .model import Phase, ReducedSystem, SystemModel, reduce

logger = logging.getLogger(__name__)

_SQ3 = math.sqrt(3.0)
GAUSS_A = np.array([[0.25, 0.25 - _SQ3 / 6], [0.25 + _SQ3 / 6, 0.25]])
GAUSS_C = (0.5 - _SQ3 / 6, 0.5 + _SQ3 / 6)

MIN_STEPS_PER_PERIOD = 20
DEFAULT_STEPS_PER_PERIOD = 200


def gauss_propagator(A: np.ndarray, h: float, gvec: np.ndarray | None = None):
    """One-step map of the Gauss-Legendre method for ``y' = A y + s(t) g``.

    Returns ``(P, q1, q2)`` with ``y1 = P y0 + s(t0 + c1 h) q1 + s(t0 + c2 h) q2``.
    """
    N = A.shape[0]
    I = np.eye(N)
    big = np.eye(2 * N) - h * np.kron(GAUSS_A, A)
    S = np.linalg.inv(big)
    G = 0.5 * h * (S[:N] + S[N:])
    P = I + G @ np.vstack([A, A])
    if gvec is None:
        gvec = np.zeros(N)
    return P, G[:, :N] @ gvec, G[:, N:] @ gvec


def exact_propagator(A: np.ndarray, h: float):
    P = scipy.linalg.expm(h * A)
    z = np.zeros(A.shape[0])
    return P, z, z


def energy(sys: ReducedSystem, u, v):
    """Potential and kinetic energy in the given phase (vectorised over rows)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    U = 0.5 * np.einsum("...i,ij,...j->...", u, sys.K, u)
    T = 0.5 * np.einsum("...i,ij,...j->...", v, sys.M, v)
    return U, T


@dataclass
class SimState:
    t: float
    u: np.ndarray
    v: np.ndarray
    phase: Phase = Phase.LOW
    constraints: frozenset = frozenset()


@dataclass
class Trajectory:
    """Sampled solution. A switch appears as two samples with the same time
    stamp: the state before and the state after the switch."""

    t: np.ndarray
    u: np.ndarray
    v: np.ndarray
    phase: np.ndarray
    force_amplitude: np.ndarray
    load: np.ndarray
    events: list[SwitchEvent] = field(default_factory=list)
    dt: float = 0.0
    method: str = "gauss"
    excitation: Excitation | None = None

    @property
    def n_samples(self) -> int:
        return self.t.size

    @property
    def force(self) -> np.ndarray:
        return np.outer(self.force_amplitude, self.load)

    def state(self, i: int) -> SimState:
        return SimState(float(self.t[i]), self.u[i].copy(), self.v[i].copy(), Phase(int(self.phase[i])))

    @classmethod
    def empty(cls, n_dof: int) -> "Trajectory":
        return cls(
            np.empty(0), np.empty((0, n_dof)), np.empty((0, n_dof)),
            np.empty(0, dtype=np.int8), np.empty(0), np.zeros(n_dof),
        )


class PhaseSystem:
    """Phase matrices plus cached propagators and observation weights."""

    def __init__(self, model: SystemModel, phase: Phase, load=None, w_full=None, method="gauss"):
        self.sys = reduce(model, phase)
        self.phase = self.sys.phase
        self.method = method
        self.A = self.sys.state_matrix()
        r = self.sys.n_free
        n = model.n_dof
        load = np.zeros(n) if load is None else np.asarray(load, float)
        self.gvec = np.concatenate([np.zeros(r), np.linalg.solve(self.sys.Mr, self.sys.T.T @ load)])
        self.w = self.sys.T.T @ (np.zeros(n) if w_full is None else np.asarray(w_full, float))
        self._cache: dict[float, tuple] = {}

    @property
    def T(self):
        return self.sys.T

    def propagator(self, h: float):
        hit = self._cache.get(h)
        if hit is None:
            hit = self._make(h)
            self._cache[h] = hit
        return hit

    def _make(self, h):
        if self.method == "expm":
            return exact_propagator(self.A, h)
        return gauss_propagator(self.A, h, self.gvec)

    def advance(self, y, t, h, excitation: Excitation, cached=True):
        P, q1, q2 = self.propagator(h) if cached else self._make(h)
        s1 = float(excitation.amplitude(t + GAUSS_C[0] * h))
        s2 = float(excitation.amplitude(t + GAUSS_C[1] * h))
        return P @ y + s1 * q1 + s2 * q2

    def pack(self, u, v) -> np.ndarray:
        return np.concatenate([self.sys.project(u), self.sys.project(v)])

    def unpack(self, y):
        r = self.sys.n_free
        y = np.asarray(y)
        return y[..., :r] @ self.T.T, y[..., r:] @ self.T.T

    def observe(self, y):
        r = self.sys.n_free
        return float(self.w @ y[:r]), float(self.w @ y[r:])

    def max_frequency(self) -> float:
        return float(self.sys.frequencies_hz().max())


def check_resolution(dt: float, f_max: float) -> None:
    if not dt > 0:
        raise StabilityError(f"time step must be positive, got {dt}")
    if dt * f_max * MIN_STEPS_PER_PERIOD > 1.0 + 1e-12:
        raise StabilityError(
            f"dt={dt:g} s gives {1.0 / (dt * f_max):.1f} steps per period of the "
            f"{f_max:.3f} Hz mode; at least {MIN_STEPS_PER_PERIOD} are required"
        )


def default_dt(f_max: float) -> float:
    return 1.0 / (DEFAULT_STEPS_PER_PERIOD * f_max)


def step(model: SystemModel, state: SimState, dt: float, excitation: Excitation | None = None,
         method: str = "gauss") -> SimState:
    """Advance one step inside a single phase (no switching)."""
    excitation = excitation or Excitation()
    ps = PhaseSystem(model, state.phase, excitation.load_vector(model.n_dof), method=method)
    check_resolution(dt, ps.max_frequency())
    if method == "expm" and excitation.kind != "free":
        raise ModelError("the matrix-exponential propagator only supports free vibration")
    y = ps.advance(ps.pack(state.u, state.v), state.t, dt, excitation, cached=False)
    u, v = ps.unpack(y)
    return SimState(state.t + dt, u, v, state.phase, state.constraints)


def locate_event(f, a: float, b: float, tol: float = 1e-10, fa=None, fb=None, xtol=None):
    """Refine a sign change of ``f`` on ``[a, b]``.

    Returns ``(t_event, t_right)``: the estimate with ``|f| < tol`` (or a
    bracket narrower than ``xtol``) and the right end of the final bracket,
    which lies on the far side of the sign change.
    """
    fa = f(a) if fa is None else fa
    fb = f(b) if fb is None else fb
    if fb == 0.0:
        return b, b
    if fa == 0.0:
        return a, b
    if fa * fb > 0:
        raise NoSignChangeError(f"no sign change on [{a}, {b}]: f={fa:g}, {fb:g}")
    if xtol is None:
        xtol = 8 * np.finfo(float).eps * max(1.0, abs(a), abs(b))
    side = 0
    ga, gb = fa, fb  # Illinois-weighted copies
    m = 0.5 * (a + b)
    for _ in range(200):
        m = (a * gb - b * ga) / (gb - ga)
        if not a < m < b:
            m = 0.5 * (a + b)
        fm = f(m)
        if abs(fm) < tol or b - a < xtol:
            return m, b
        if (fm > 0) == (fa > 0):
            a, fa, ga = m, fm, fm
            if side == -1:
                gb *= 0.5
            side = -1
        else:
            b, fb, gb = m, fm, fm
            if side == 1:
                ga *= 0.5
            side = 1
    return m, b


def apply_switch(model: SystemModel, state: SimState, new_phase: Phase):
    """Change the stiffness phase of a state.

    Displacements and velocities carry over unchanged except where new rigid
    links appear: the state is projected (mass-weighted) onto the new
    constraint set, which zeroes locked nodes and gives merged nodes their
    momentum-conserving common velocity. Returns ``(new_state, work)``, with
    ``work`` the energy change the switching device has to supply.
    """
    old = reduce(model, state.phase)
    new = reduce(model, new_phase)
    u = new.T @ new.project(state.u)
    v = new.T @ new.project(state.v)
    e0 = sum(energy(old, state.u, state.v))
    e1 = sum(energy(new, u, v))
    return SimState(state.t, u, v, Phase.parse(new_phase)), float(e1 - e0)


class _Recorder:
    def __init__(self):
        self.chunks = []

    def add(self, t, u, v, phase, f):
        t = np.atleast_1d(np.asarray(t, float))
        self.chunks.append((t, np.atleast_2d(u), np.atleast_2d(v),
                            np.full(t.size, int(phase), dtype=np.int8), np.atleast_1d(f)))

    def build(self, load, events, dt, method, excitation) -> Trajectory:
        cat = [np.concatenate([c[i] for c in self.chunks]) for i in range(5)]
        return Trajectory(cat[0], cat[1], cat[2], cat[3], cat[4], load, events, dt, method, excitation)


def simulate(model: SystemModel, initial=None, excitation: Excitation | None = None,
             settings: ControllerSettings | None = None, t_end: float = 1.0,
             dt: float | None = None, method: str = "gauss") -> Trajectory:
    """Integrate a switched-stiffness run from ``t = 0`` to ``t_end``.

    ``initial`` is a ``(u0, v0)`` pair (nodal values) or ``None`` for rest.
    """
    from .modal import modal_basis

    n = model.n_dof
    excitation = excitation or Excitation()
    settings = settings or ControllerSettings()
    ctrl = Controller(settings)
    if method not in ("gauss", "expm"):
        raise ModelError(f"unknown integration method {method!r}")
    if method == "expm" and excitation.kind != "free":
        raise ModelError("the matrix-exponential propagator only supports free vibration")
    if initial is None:
        u0, v0 = np.zeros(n), np.zeros(n)
    else:
        u0, v0 = (np.asarray(x, dtype=float) for x in initial)
    load = excitation.load_vector(n)
    obs = settings.observation

    weights = {}
    for ph in Phase:
        basis = None
        if obs.kind == "modal":
            basis = modal_basis(model, Phase.LOW if obs.basis == "low" else ph)
        weights[ph] = obs.weights(n, basis) if (obs.kind == "dof" or basis is not None) else None
    systems = {ph: PhaseSystem(model, ph, load, weights[ph], method) for ph in Phase}

    idle = Phase.parse(settings.idle_phase)
    used = list(Phase) if settings.enabled else [idle]
    f_max = max(systems[ph].max_frequency() for ph in used)
    h = default_dt(f_max) if dt is None else float(dt)
    check_resolution(h, f_max)
    dwell = h if settings.dwell is None else float(settings.dwell)
    tol = settings.tolerance

    if ctrl.active(0.0):
        w0 = weights[Phase.LOW]
        phase = ctrl.initial_phase(float(w0 @ u0), float(w0 @ v0))
    else:
        phase = idle
    ps = systems[phase]
    y = ps.pack(u0, v0)
    rec = _Recorder()
    u, v = ps.unpack(y)
    rec.add(0.0, u, v, phase, excitation.amplitude(0.0))

    code, par = excitation.code, excitation.params
    c1, c2 = GAUSS_C
    check_from = -math.inf
    t = 0.0

    def commit(tt, yy, ph):
        uu, vv = systems[ph].unpack(yy)
        rec.add(tt, uu, vv, ph, excitation.amplitude(tt))

    def switch(tt, yy, new_phase, cause):
        nonlocal phase
        old_ps, new_ps = systems[phase], systems[new_phase]
        uu, vv = old_ps.unpack(yy)
        before = SimState(tt, uu, vv, phase)
        e0 = sum(energy(old_ps.sys, uu, vv))
        y_new = new_ps.pack(uu, vv)
        u1, v1 = new_ps.unpack(y_new)
        e1 = sum(energy(new_ps.sys, u1, v1))
        after = SimState(tt, u1, v1, new_phase)
        kind = EventKind.INCREASE if new_phase == Phase.HIGH else EventKind.DECREASE
        c_val, cd_val = old_ps.observe(yy)
        ctrl.record(SwitchEvent(tt, kind, c_val, before, after, float(e1 - e0), cause, cd_val))
        rec.add(tt, u1, v1, new_phase, excitation.amplitude(tt))
        phase = new_phase
        return y_new

    boundaries = []
    if settings.enabled and settings.window is not None:
        boundaries += [b for b in settings.window if 0.0 < b < t_end]
    boundaries = sorted(set(boundaries)) + [t_end]

    for b in boundaries:
        snap = 1e-9 * h
        while t < b - snap:
            ps = systems[phase]
            active = ctrl.active(t)
            watch = _kernels.WATCH_NONE
            if active and ps.w.any():
                watch = _kernels.WATCH_EVENT if settings.mode == "event" else _kernels.WATCH_SAMPLED
            n_full = int(math.floor((b - t) / h + 1e-9))
            if n_full > 0:
                P, q1, q2 = ps.propagator(h)
                r2 = y.size
                ts = np.empty(n_full)
                ys = np.empty((n_full, r2))
                fs = np.empty(n_full)
                k, status = _kernels.advance(
                    P, q1, q2, np.ascontiguousarray(y), t, h, n_full, ps.w, code, par,
                    c1, c2, check_from, watch, phase == Phase.HIGH, ts, ys, fs,
                )
                if k:
                    if status == _kernels.STOP_DONE and abs(ts[k - 1] - b) < snap:
                        ts[k - 1] = b
                    uu, vv = ps.unpack(ys[:k])
                    rec.add(ts[:k].copy(), uu, vv, phase, fs[:k].copy())
                    t, y = float(ts[k - 1]), ys[k - 1].copy()
                if status == _kernels.STOP_SAMPLED:
                    y = switch(t, y, Phase.LOW if phase == Phase.HIGH else Phase.HIGH, "logic")
                    check_from = t + dwell
                    continue
                if status == _kernels.STOP_CROSSING:
                    tau = h
                else:
                    tau = b - t
                    if tau <= snap:
                        break
            else:
                tau = b - t
            # partial step (or the step that contains a crossing)
            y_end = ps.advance(y, t, tau, excitation, cached=(tau == h))
            armed = t + tau > check_from + 1e-9 * h
            if watch == _kernels.WATCH_SAMPLED and armed:
                commit(t + tau, y_end, phase)
                c_prev, c_next = ps.observe(y)[0], ps.observe(y_end)[0]
                t, y = t + tau, y_end
                if desired_phase_sampled(c_prev, c_next) != phase:
                    y = switch(t, y, Phase.LOW if phase == Phase.HIGH else Phase.HIGH, "logic")
                    check_from = t + dwell
                continue
            crossing = None
            if watch == _kernels.WATCH_EVENT and armed:
                crossing = _find_crossing(ps, y, y_end, t, tau, excitation, tol)
            if crossing is None:
                t, y = t + tau, y_end
                if abs(t - b) < snap:
                    t = b
                commit(t, y, phase)
                continue
            s_evt, y_evt, s_right, y_right = crossing
            want = desired_phase(*ps.observe(y_right))
            if want != phase:
                t = t + s_evt
                commit(t, y_evt, phase)
                y = switch(t, y_evt, want, "logic")
                check_from = t + dwell
            else:
                t = t + s_right
                y = y_right
                commit(t, y, phase)
        t = b
        if b >= t_end:
            break
        if settings.window is not None and b == settings.window[0] and ctrl.active(b):
            want = desired_phase(*systems[phase].observe(y))
            if want != phase:
                y = switch(t, y, want, "window")
                check_from = t + dwell
        elif settings.window is not None and b == settings.window[1] and phase != idle:
            y = switch(t, y, idle, "window")

    traj = rec.build(load, ctrl.events, h, method, excitation)
    logger.debug("simulated %d samples, %d switches (%s backend)",
                 traj.n_samples, len(ctrl.events), _kernels.backend_name())
    return traj


def _find_crossing(ps: PhaseSystem, y0, y1, t0, tau, excitation, tol):
    """Earliest sign change of ``c`` or ``c_dot`` inside ``[t0, t0 + tau]``.

    Returns ``(s_event, y_event, s_right, y_right)`` relative to ``t0``, or
    ``None`` if neither indicator changes sign.
    """
    r = ps.sys.n_free
    cache: dict[float, np.ndarray] = {0.0: y0, tau: y1}

    def state(s):
        if s not in cache:
            cache[s] = ps.advance(y0, t0, s, excitation, cached=False)
        return cache[s]

    best = None
    for part in (slice(0, r), slice(r, 2 * r)):
        ind0 = float(ps.w @ y0[part])
        ind1 = float(ps.w @ y1[part])
        if not (ind0 * ind1 < 0 or (ind1 == 0.0 and ind0 != 0.0)):
            continue

        def f(s, part=part):
            return float(ps.w @ state(s)[part])

        s_evt, s_right = locate_event(f, 0.0, tau, tol, fa=ind0, fb=ind1)
        if best is None or s_evt < best[0]:
            best = (s_evt, s_right)
    if best is None:
        return None
    s_evt, s_right = best
    return s_evt, state(s_evt), s_right, state(s_right)
