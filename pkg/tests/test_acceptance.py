"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v`` (the lines are
repeated in the terminal summary) or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest
from scipy.signal import find_peaks

from conftest import ACCEPTANCE_LINES
from stiffmod.control import ControllerSettings, EventKind, ObservationVariable
from stiffmod.energy import compute_ledger, cycle_losses, half_cycle_rates
from stiffmod.excitation import Excitation
from stiffmod.integrator import simulate
from stiffmod.modal import modal_basis, to_modal
from stiffmod.model import Phase, SpringElement, SystemModel, identify_reference_parameters, quarter_cycle_period, reduce
from stiffmod.scenarios import PRESETS, get_preset, run_scenario

# below this closure error (relative to the energy scale) the ledger is at
# floating-point round-off and halving dt cannot shrink it further
ROUND_OFF_FLOOR = 1e-10


def report(number, title, ok, detail, elapsed=None, budget=None):
    if budget is not None:
        ok = ok and elapsed < budget
        detail = f"{detail}; runtime {elapsed:.2f} s (< {budget:g} s)"
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} | {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_eigenfrequencies():
    t0 = time.perf_counter()
    f = reduce(identify_reference_parameters(), Phase.LOW).frequencies_hz()
    elapsed = time.perf_counter() - t0
    err = np.abs(f / np.array([1.927, 53.395]) - 1)
    report(1, "eigenfrequencies", bool(np.all(err < 1e-3)),
           f"f = {f[0]:.5f}, {f[1]:.4f} Hz, max rel err {err.max():.2e} (tol 1e-3)", elapsed, 1.0)


TABLE_K = {"unchanged": (146.597, 1.126e5), "global": (354.912, 2.725e5), "local": (353.855, 2.332e5)}
TABLE_C = {"unchanged": (0.247, 112.653), "global": (0.455, 272.592), "local": (0.454, 233.246)}
TABLE_PHI = {
    "unchanged": np.array([[-6.893, -316.153], [-25.814, 0.563]]),
    "global": np.array([[-6.893, -316.153], [-25.814, 0.563]]),
    "local": np.array([[-16.66, -315.789], [-25.784, 1.36]]),
}


def test_criterion_2_modal_matrices():
    t0 = time.perf_counter()
    ref = identify_reference_parameters()
    bases = {
        "unchanged": modal_basis(ref, Phase.LOW),
        "global": modal_basis(ref.with_gammas([2.421, 2.421]), Phase.HIGH),
        "local": modal_basis(ref.with_gammas([1.0, 5.0]), Phase.HIGH),
    }
    worst_k = worst_c = 0.0
    worst_cos = 1.0
    for case, b in bases.items():
        worst_k = max(worst_k, np.max(np.abs(np.diag(b.modal_stiffness) / TABLE_K[case] - 1)))
        worst_c = max(worst_c, np.max(np.abs(np.diag(b.modal_damping) / TABLE_C[case] - 1)))
        for j in range(2):
            x, y = b.shapes[:, j], TABLE_PHI[case][:, j]
            worst_cos = min(worst_cos, abs(x @ y) / np.linalg.norm(x) / np.linalg.norm(y))
    elapsed = time.perf_counter() - t0
    ok = worst_k < 5e-3 and worst_c < 5e-3 and worst_cos > 0.999
    report(2, "modal stiffness, damping and shapes", ok,
           f"max rel err K {worst_k:.2e}, C {worst_c:.2e} (tol 5e-3); min |cos| {worst_cos:.6f} (> 0.999)",
           elapsed, 1.0)


def test_criterion_3_half_cycle_ratio():
    t0 = time.perf_counter()
    res = run_scenario(get_preset("single-dof"))
    hc = half_cycle_rates(res.trajectory, res.ledger)
    elapsed = time.perf_counter() - t0
    target = 220.0 / 300.0 - 1.0
    err = np.abs(hc.total - target).max()
    ok = hc.total.size >= 10 and err < 1e-6
    report(3, "undamped half-cycle energy ratio", ok,
           f"{hc.total.size} half cycles, dE/E = {hc.total.mean():.8f}, max |err| {err:.2e} (tol 1e-6)",
           elapsed, 5.0)


def _closure(result):
    L = result.ledger
    scale = abs(L.E[0]) if L.E[0] != 0 else float(np.abs(L.E).max())
    return L.max_closure_error() / scale


def test_criterion_4_ledger_closure():
    t0 = time.perf_counter()
    rows, ok = [], True
    for name, scenario in PRESETS.items():
        coarse = run_scenario(scenario)
        fine = run_scenario(scenario, dt=coarse.trajectory.dt / 2)
        e1, e2 = _closure(coarse), _closure(fine)
        ratio = e1 / e2 if e2 > 0 else math.inf
        converged = ratio >= 4.0 or max(e1, e2) <= ROUND_OFF_FLOOR
        this_ok = e1 <= 1e-3 and converged
        ok &= this_ok
        rows.append(f"{name} {e1:.1e}->{e2:.1e} (x{ratio:.1f}){'' if this_ok else ' !'}")
    elapsed = time.perf_counter() - t0
    report(4, "ledger closure on every preset", ok,
           "rel err default->dt/2: " + ", ".join(rows)
           + f" (tol 1e-3, ratio >= 4 unless both <= {ROUND_OFF_FLOOR:g})", elapsed, 60.0)


def test_criterion_5_global_null_result():
    t0 = time.perf_counter()
    res = run_scenario(get_preset("serial-global"))
    basis = modal_basis(res.scenario.model, Phase.LOW)
    q = to_modal(basis, res.trajectory.u)
    q0 = np.linalg.norm(q[0])
    E0 = res.ledger.E[0]
    q2_max = np.abs(q[:, 1]).max() / q0
    ls_max = np.abs(res.ledger.L_s).max() / E0
    elapsed = time.perf_counter() - t0
    ok = q2_max < 1e-9 and ls_max < 1e-9
    report(5, "global modulation keeps the second mode silent", ok,
           f"max |q2|/|q(0)| = {q2_max:.1e}, max |L_s|/E0 = {ls_max:.1e} (tol 1e-9)", elapsed, 10.0)


def test_criterion_6_local_global_pairing():
    t0 = time.perf_counter()
    g = run_scenario(get_preset("serial-global"))
    l = run_scenario(get_preset("serial-local"))
    grid = np.linspace(0.0, 4.0, 8001)
    ug = np.interp(grid, g.trajectory.t, g.trajectory.u[:, 1])
    ul = np.interp(grid, l.trajectory.t, l.trajectory.u[:, 1])
    rms = np.sqrt(np.mean((ul - ug) ** 2)) / np.sqrt(np.mean(ug**2))
    lg = cycle_losses(g.trajectory, g.ledger)[1]
    ll = cycle_losses(l.trajectory, l.ledger)[1]
    n = min(lg.size, ll.size)
    cyc = np.abs(ll[:n] / lg[:n] - 1).max()
    L = l.ledger
    ls_end, lp_end, la_end = L.L_s[-1], L.L_p[-1], L.L_a[-1]
    semi_ok = ls_end < 0 and np.all(L.L_s <= 0) and abs(ls_end + lp_end) > abs(la_end)
    elapsed = time.perf_counter() - t0
    ok = rms <= 0.02 and n >= 5 and cyc <= 0.02 and semi_ok
    report(6, "local/global pairing", ok,
           f"(a) u2 RMS diff {rms:.2%} (<= 2%); (b) {n} cycles, max loss mismatch {cyc:.2%} (<= 2%); "
           f"(c) L_s = {ls_end:.3e} J, |L_s+L_p| = {abs(ls_end + lp_end):.3e} > |L_a| = {abs(la_end):.3e}",
           elapsed, 20.0)


@pytest.mark.parametrize("name", ["sweep-global", "sweep-local"])
def test_criterion_7_sweep_suppression(name):
    t0 = time.perf_counter()
    scenario = get_preset(name)
    mod = run_scenario(scenario)
    ref = run_scenario(scenario.unmodulated(), dt=mod.trajectory.dt)
    peak_mod = np.abs(mod.trajectory.u[:, 1]).max()
    peak_ref = np.abs(ref.trajectory.u[:, 1]).max()
    elapsed = time.perf_counter() - t0
    ratio = peak_mod / peak_ref
    report(7, f"sweep suppression ({name})", ratio <= 0.5,
           f"peak |u2| {peak_mod * 1e3:.3f} mm vs unmodulated {peak_ref * 1e3:.3f} mm, ratio {ratio:.3f} (<= 0.5)",
           elapsed, 60.0)


def test_criterion_8_integrator():
    t0 = time.perf_counter()
    # (a) order on a smooth forced segment against the closed-form response
    m, k, F, f = 1.5, 220.0, 1.0, 1.3
    osc = SystemModel((m,), (SpringElement((0, 1), k),))
    om, Om = math.sqrt(k / m), 2 * math.pi * f
    exact = F / (k - m * Om**2) * (math.sin(Om) - Om / om * math.sin(om))
    off = ControllerSettings(observation=ObservationVariable("dof", 1), enabled=False)
    errs = []
    for n in (100, 200, 400):
        tr = simulate(osc, None, excitation=Excitation("harmonic", F_max=F, f=f), settings=off, t_end=1.0, dt=1.0 / n)
        errs.append(abs(tr.u[-1, 0] - exact))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    # (b) energy over 100 undamped periods at the default step
    period = 2 * math.pi / om
    tr = simulate(osc, ([0.002], [0.0]), settings=off, t_end=100 * period)
    E = 0.5 * k * tr.u[:, 0] ** 2 + 0.5 * m * tr.v[:, 0] ** 2
    drift = np.abs(E - E[0]).max() / E[0]
    # (c) event spacing equals the quarter periods of the two stiffnesses
    res = run_scenario(get_preset("single-dof"))
    ev = res.trajectory.events
    p_l, p_h = quarter_cycle_period(1.5, 220.0), quarter_cycle_period(1.5, 300.0)
    expected = np.array([p_h if e.kind == EventKind.INCREASE else p_l for e in ev[:-1]])
    gap_err = np.abs(np.diff([e.time for e in ev]) - expected).max()
    elapsed = time.perf_counter() - t0
    ok = bool(np.all((orders > 3.7) & (orders < 4.3))) and drift <= 1e-8 and gap_err <= 1e-6
    report(8, "integrator properties", ok,
           f"observed order {', '.join(f'{o:.2f}' for o in orders)} (~4); energy drift {drift:.1e} (<= 1e-8); "
           f"max event-gap error {gap_err:.1e} s over {len(ev) - 1} gaps (<= 1e-6)")


def test_criterion_9_coupleable():
    t0 = time.perf_counter()
    scenario = get_preset("coupleable")
    sw = run_scenario(scenario)
    ref = run_scenario(scenario.unmodulated(), dt=sw.trajectory.dt)
    # both runs are identical up to the first decoupling, which happens at
    # the first extremum; the comparison starts with the peaks after it
    t_first = next(e.time for e in sw.trajectory.events if e.kind == EventKind.DECREASE)

    def peaks(res):
        t, u = res.trajectory.t, np.abs(res.trajectory.u[:, 0])
        idx = find_peaks(u)[0]
        return u[idx][t[idx] > t_first + 1e-9][:5]

    a_sw, a_ref = peaks(sw), peaks(ref)
    masses = np.array(scenario.model.masses)
    merges = [e for e in sw.trajectory.events if e.kind == EventKind.INCREASE]
    mom = max(abs(masses @ e.state_after.v - masses @ e.state_before.v) / np.abs(masses * e.state_before.v).sum()
              for e in merges)
    elapsed = time.perf_counter() - t0
    ok = a_sw.size == 5 and a_ref.size == 5 and bool(np.all(a_sw < a_ref)) and mom <= 1e-12
    report(9, "coupleable oscillators", ok,
           "peak |u1| switched/constant: " + ", ".join(f"{x / y:.3f}" for x, y in zip(a_sw, a_ref))
           + f" (< 1); max merge momentum error {mom:.1e} over {len(merges)} merges (<= 1e-12)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
