"""CSV and SVG output."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .energy import EnergyLedger
from .errors import ConfigError
from .integrator import Trajectory

FLOAT_FORMAT = "%.15g"
LEDGER_COLUMNS = ("U", "T", "E", "W", "L", "L_a", "L_s", "L_p")
PLOT_POINTS = 4000


def column_names(n_dof: int) -> list[str]:
    nodes = range(1, n_dof + 1)
    return (
        ["t"]
        + [f"u{i}" for i in nodes]
        + [f"v{i}" for i in nodes]
        + ["phase"]
        + [f"f{i}" for i in nodes]
        + list(LEDGER_COLUMNS)
        + [f"L_mode{i}" for i in nodes]
    )


def output_rows(traj: Trajectory, stride: int = 1) -> np.ndarray:
    """Indices written for a given stride: every ``stride``-th sample, both
    samples of each switch, and the last sample."""
    n = traj.n_samples
    if n == 0:
        return np.zeros(0, dtype=int)
    keep = np.arange(n) % max(1, int(stride)) == 0
    same = np.flatnonzero(np.diff(traj.t) == 0)
    keep[same] = True
    keep[same + 1] = True
    keep[-1] = True
    return np.flatnonzero(keep)


def table(traj: Trajectory, ledger: EnergyLedger, stride: int = 1) -> dict[str, np.ndarray]:
    """Column name -> values, in export order."""
    n = traj.u.shape[1]
    rows = output_rows(traj, stride)
    cols = {"t": traj.t[rows]}
    for i in range(n):
        cols[f"u{i + 1}"] = traj.u[rows, i]
    for i in range(n):
        cols[f"v{i + 1}"] = traj.v[rows, i]
    cols["phase"] = traj.phase[rows].astype(int)
    force = traj.force
    for i in range(n):
        cols[f"f{i + 1}"] = force[rows, i]
    for name in LEDGER_COLUMNS:
        cols[name] = getattr(ledger, name)[rows]
    for i in range(ledger.modal.shape[1]):
        cols[f"L_mode{i + 1}"] = ledger.modal[rows, i]
    return cols


def emit_csv(traj: Trajectory, ledger: EnergyLedger, path, stride: int = 1) -> Path:
    path = Path(path)
    cols = table(traj, ledger, stride)
    names = list(cols)
    with path.open("w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        if cols["t"].size:
            data = np.column_stack([cols[k] for k in names]).astype(float) + 0.0  # no negative zeros
            fmt = [("%d" if k == "phase" else FLOAT_FORMAT) for k in names]
            np.savetxt(fh, data, fmt=fmt, delimiter=",")
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            header = next(csv.reader(fh), None)
            if not header or header[0] != "t":
                raise ConfigError(f"{path}: not a trajectory file (first column must be t)")
            rest = fh.read()
        body = np.loadtxt(io.StringIO(rest), delimiter=",", ndmin=2) if rest.strip() else np.empty((0, len(header)))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed data ({exc})") from None
    if body.shape[1] != len(header):
        raise ConfigError(f"{path}: {body.shape[1]} values per row but {len(header)} columns")
    return {name: body[:, j] for j, name in enumerate(header)}


def trajectory_from_table(cols: dict[str, np.ndarray], excitation=None) -> Trajectory:
    """Rebuild a trajectory from exported columns (events are not restored)."""
    n = 0
    while f"u{n + 1}" in cols:
        n += 1
    required = [f"{p}{i}" for p in ("u", "v", "f") for i in range(1, n + 1)] + ["phase"]
    missing = [k for k in required if k not in cols]
    if n == 0 or missing:
        raise ConfigError(f"trajectory columns missing: {missing or ['u1']}")
    force = np.column_stack([cols[f"f{i}"] for i in range(1, n + 1)])
    if excitation is not None and excitation.kind != "free":
        load = excitation.load_vector(n)
    else:
        peak = np.abs(force).max(axis=0) if force.size else np.zeros(n)
        load = np.zeros(n)
        if peak.any():
            load[int(np.argmax(peak))] = 1.0
    amplitude = force @ load
    t = cols["t"]
    dt = float(np.diff(t)[np.diff(t) > 0].min()) if t.size > 1 else 0.0
    return Trajectory(
        t=t.copy(),
        u=np.column_stack([cols[f"u{i}"] for i in range(1, n + 1)]),
        v=np.column_stack([cols[f"v{i}"] for i in range(1, n + 1)]),
        phase=cols["phase"].astype(np.int8),
        force_amplitude=amplitude,
        load=load,
        dt=dt,
        excitation=excitation,
    )


def _envelope(t, y, points=PLOT_POINTS):
    """Thin a long series for plotting while keeping its extremes."""
    if t.size <= points:
        return t, y
    bins = np.array_split(np.arange(t.size), points // 2)
    tt, yy = [], []
    for b in bins:
        lo, hi = b[np.argmin(y[b])], b[np.argmax(y[b])]
        for k in sorted((lo, hi)):
            tt.append(t[k])
            yy.append(y[k])
    return np.array(tt), np.array(yy)


def emit_plot(cols: dict[str, np.ndarray], path, columns=None, title: str | None = None) -> Path:
    """Line chart (SVG) of selected columns against ``t``.

    By default displacements go in the top panel and the loss ledger
    (L, L_a, L_s, L_p) in the bottom panel.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    t = cols["t"]
    if columns is None:
        panels = [[k for k in cols if k[0] == "u" and k[1:].isdigit()],
                  [k for k in ("L", "L_a", "L_s", "L_p") if k in cols]]
    else:
        unknown = [c for c in columns if c not in cols]
        if unknown:
            raise ConfigError(f"unknown column(s) {unknown}")
        panels = [list(columns)]
    panels = [p for p in panels if p]
    with matplotlib.rc_context({"svg.hashsalt": "stiffmod", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(len(panels), 1, sharex=True, figsize=(8, 2.8 * len(panels)), squeeze=False)
        for ax, names in zip(axes[:, 0], panels):
            for name in names:
                ax.plot(*_envelope(t, cols[name]), lw=0.8, label=name)
            ax.legend(loc="upper right", fontsize="small")
            ax.grid(True, lw=0.3)
            unit = "J" if names[0].startswith(("L", "E", "U", "T", "W")) else ""
            if unit:
                ax.set_ylabel(unit)
        axes[-1, 0].set_xlabel("t in s")
        if title:
            axes[0, 0].set_title(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path
