"""Compare the numba and pure-numpy propagation backends.

Each backend runs in its own interpreter (the backend is chosen at import
time through STIFFMOD_DISABLE_NUMBA). Inside, a warm-up call absorbs JIT
compilation, then two workloads are timed:

* ``kernel``: the raw propagation loop over a fixed number of steps, with
  event watching on and forcing active;
* ``scenario``: a complete preset run (simulation plus energy ledger).

Usage::

    python benchmarks/bench_kernels.py [--scenario sweep-local] [--steps 200000] [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
import stiffmod
from stiffmod import _kernels
from stiffmod.excitation import Excitation
from stiffmod.integrator import GAUSS_C, PhaseSystem
from stiffmod.model import Phase, identify_reference_parameters
from stiffmod.scenarios import get_preset, run_scenario

scenario, n_steps, repeat = sys.argv[1], int(sys.argv[2]), int(sys.argv[3])
exc = Excitation("sweep", F_max=1.0, f0=1.0, f1=3.0, t1=100.0, node=2)
ps = PhaseSystem(identify_reference_parameters(1.0, 5.0), Phase.LOW, exc.load_vector(2), np.array([0.0, 1.0]))
h = 6e-5
P, q1, q2 = ps.propagator(h)
y0 = np.zeros(4)

def kernel(n):
    ts, ys, fs = np.empty(n), np.empty((n, 4)), np.empty(n)
    # watching a quantity that never changes sign keeps the loop running to the end
    return _kernels.advance(P, q1, q2, y0, 0.0, h, n, np.zeros(2), exc.code, exc.params,
                            GAUSS_C[0], GAUSS_C[1], -np.inf, _kernels.WATCH_EVENT, False, ts, ys, fs)

def best(fn, *a):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*a)
        times.append(time.perf_counter() - t0)
    return min(times)

t0 = time.perf_counter()
kernel(10)
warm = time.perf_counter() - t0
preset = get_preset(scenario)
run_scenario(preset, t_end=0.5)
k = best(kernel, n_steps)
s = best(lambda: run_scenario(preset))
print(json.dumps({"backend": stiffmod.backend_name(), "warmup_s": warm, "kernel_s": k,
                  "kernel_steps_per_s": n_steps / k, "scenario_s": s}))
"""


def measure(disable: bool, scenario: str, steps: int, repeat: int) -> dict:
    env = dict(os.environ)
    env.pop("STIFFMOD_DISABLE_NUMBA", None)
    if disable:
        env["STIFFMOD_DISABLE_NUMBA"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", WORKER, scenario, str(steps), str(repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", default="sweep-local")
    parser.add_argument("--steps", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    rows = [measure(flag, args.scenario, args.steps, args.repeat) for flag in (False, True)]
    print(f"{'backend':<8} {'warm-up s':>10} {'kernel s':>10} {'Msteps/s':>10} {args.scenario + ' s':>18}")
    for r in rows:
        print(f"{r['backend']:<8} {r['warmup_s']:>10.3f} {r['kernel_s']:>10.4f} "
              f"{r['kernel_steps_per_s'] / 1e6:>10.2f} {r['scenario_s']:>18.3f}")
    if len(rows) == 2 and rows[0]["backend"] != rows[1]["backend"]:
        print(f"kernel speed-up {rows[1]['kernel_s'] / rows[0]['kernel_s']:.1f}x, "
              f"scenario speed-up {rows[1]['scenario_s'] / rows[0]['scenario_s']:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
