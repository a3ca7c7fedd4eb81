import json
import os
import subprocess
import sys

import numpy as np
import pytest

from stiffmod import _kernels
from stiffmod.excitation import Excitation
from stiffmod.integrator import GAUSS_C, PhaseSystem
from stiffmod.model import Phase

SWEEP = Excitation("sweep", F_max=1.0, f0=1.0, f1=3.0, t1=100.0, node=2)


def _inputs(model, phase, w, n):
    ps = PhaseSystem(model, phase, SWEEP.load_vector(2), w)
    h = 5e-5
    P, q1, q2 = ps.propagator(h)
    y0 = ps.pack(np.array([1e-4, 3e-4]), np.array([0.0, -0.01]))
    return (P, q1, q2, y0, 40.0, h, n, ps.w, SWEEP.code, SWEEP.params, GAUSS_C[0], GAUSS_C[1])


def _call(fn, args, check_from, watch, high):
    n, N = args[6], args[3].size
    ts, ys, fs = np.empty(n), np.empty((n, N)), np.empty(n)
    k, status = fn(*args, check_from, watch, high, ts, ys, fs)
    return k, status, ts[:k], ys[:k], fs[:k]


@pytest.mark.skipif(not _kernels.USING_NUMBA, reason="numba backend disabled")
class TestBackendsAgree:
    @pytest.mark.parametrize("watch", [_kernels.WATCH_NONE, _kernels.WATCH_EVENT, _kernels.WATCH_SAMPLED])
    @pytest.mark.parametrize("high", [False, True])
    def test_same_samples_and_stop(self, local_model, watch, high):
        args = _inputs(local_model, Phase.HIGH if high else Phase.LOW, np.array([0.0, 1.0]), 3000)
        a = _call(_kernels.advance, args, -np.inf, watch, high)
        b = _call(_kernels.advance_numpy, args, -np.inf, watch, high)
        assert a[0] == b[0] and a[1] == b[1]
        np.testing.assert_allclose(a[2], b[2], rtol=0, atol=1e-12)
        np.testing.assert_allclose(a[3], b[3], rtol=1e-9, atol=1e-15)
        np.testing.assert_allclose(a[4], b[4], atol=1e-12)

    def test_check_from_delays_detection(self, local_model):
        args = _inputs(local_model, Phase.LOW, np.array([0.0, 1.0]), 3000)
        k0 = _call(_kernels.advance, args, -np.inf, _kernels.WATCH_EVENT, False)[0]
        later = 40.0 + (k0 + 5) * args[5]
        for fn in (_kernels.advance, _kernels.advance_numpy):
            k1 = _call(fn, args, later, _kernels.WATCH_EVENT, False)[0]
            assert k1 > k0 + 4


def _simulate_in_subprocess(disable):
    code = (
        "import json, stiffmod\n"
        "from stiffmod.scenarios import get_preset, run_scenario\n"
        "r = run_scenario(get_preset('serial-local'), t_end=1.0)\n"
        "print(json.dumps({'backend': stiffmod.backend_name(),"
        " 'events': [e.time for e in r.trajectory.events], 'u_end': list(r.trajectory.u[-1])}))\n"
    )
    env = dict(os.environ)
    env.pop("STIFFMOD_DISABLE_NUMBA", None)
    if disable:
        env["STIFFMOD_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def test_env_flag_selects_numpy_backend():
    fallback = _simulate_in_subprocess(True)
    assert fallback["backend"] == "numpy"
    default = _simulate_in_subprocess(False)
    assert default["backend"] == ("numba" if _kernels.numba is not None else "numpy")
    np.testing.assert_allclose(fallback["events"], default["events"], atol=1e-12)
    np.testing.assert_allclose(fallback["u_end"], default["u_end"], rtol=1e-8, atol=1e-15)
