import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stiffmod.errors import DomainError, ModelError
from stiffmod.excitation import (
    Excitation,
    InitialCondition,
    force_at,
    mode_amplitude_for,
    pure_mode_initial_state,
    static_initial_state,
)
from stiffmod.modal import modal_basis, to_modal
from stiffmod.model import Phase

SWEEP = Excitation("sweep", F_max=1.0, f0=1.0, f1=3.0, t1=100.0, node=2)


class TestForce:
    def test_sweep_starts_at_zero(self):
        np.testing.assert_array_equal(force_at(SWEEP, 0.0, 2), [0.0, 0.0])

    def test_sweep_end_value(self):
        # phase at t1 is 2 pi * 100 * 2 = 400 pi
        assert SWEEP.phase_angle(100.0) == pytest.approx(400 * math.pi, rel=1e-15)
        assert abs(force_at(SWEEP, 100.0, 2)[1]) < 1e-12

    def test_instantaneous_frequency(self):
        assert SWEEP.instantaneous_frequency(0.0) == pytest.approx(1.0)
        assert SWEEP.instantaneous_frequency(100.0) == pytest.approx(3.0)

    def test_rate_matches_difference_quotient(self):
        t, h = 37.3, 1e-6
        fd = (SWEEP.amplitude(t + h) - SWEEP.amplitude(t - h)) / (2 * h)
        assert SWEEP.amplitude_rate(t) == pytest.approx(fd, rel=1e-6)

    def test_free_is_zero(self):
        np.testing.assert_array_equal(force_at(Excitation(), 12.5, 3), np.zeros(3))

    def test_harmonic(self):
        e = Excitation("harmonic", F_max=2.0, f=0.5, node=1)
        assert force_at(e, 0.5, 1)[0] == pytest.approx(2.0)

    def test_negative_time(self):
        with pytest.raises(DomainError):
            force_at(SWEEP, -1.0, 2)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "sweep", "F_max": 1.0, "f0": 3.0, "f1": 1.0, "t1": 1.0},
            {"kind": "sweep", "F_max": 1.0, "f0": 1.0, "f1": 3.0, "t1": 0.0},
            {"kind": "harmonic", "F_max": -1.0, "f": 1.0},
            {"kind": "harmonic", "F_max": 1.0, "f": 0.0},
            {"kind": "noise"},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ModelError):
            Excitation(**kwargs)

    def test_missing_node(self):
        with pytest.raises(ModelError):
            force_at(SWEEP, 1.0, 1)

    @settings(max_examples=60, deadline=None)
    @given(t=st.floats(0.0, 200.0), dt=st.floats(1e-9, 1e-3))
    def test_continuity(self, t, dt):
        # Lipschitz bound from the largest instantaneous frequency on [t, t + dt]
        bound = 2 * math.pi * float(SWEEP.instantaneous_frequency(t + dt)) * dt * SWEEP.F_max
        jump = abs(force_at(SWEEP, t + dt, 2)[1] - force_at(SWEEP, t, 2)[1])
        assert jump <= bound * (1 + 1e-9) + 1e-15


class TestInitialStates:
    def test_zero_amplitude(self, reference_model):
        b = modal_basis(reference_model, Phase.LOW)
        u, v = pure_mode_initial_state(b, 1, 0.0)
        np.testing.assert_array_equal(u, 0.0)
        np.testing.assert_array_equal(v, 0.0)

    def test_bad_mode(self, reference_model):
        with pytest.raises(IndexError):
            pure_mode_initial_state(modal_basis(reference_model, Phase.LOW), 3, 1.0)

    @pytest.mark.parametrize("u2", [-0.002, 0.002])
    def test_single_modal_entry(self, reference_model, u2):
        b = modal_basis(reference_model, Phase.LOW)
        u, _ = pure_mode_initial_state(b, 1, mode_amplitude_for(b, 1, 2, u2))
        assert u[1] == pytest.approx(u2, rel=1e-14)
        q = to_modal(b, u)
        assert abs(q[1]) < 1e-14 * abs(q[0])

    def test_amplitude_matches_table(self, reference_model):
        # the tabulated first-mode start q1 = -0.0775 with column (-6.893, -25.814) / sqrt(1000)
        b = modal_basis(reference_model, Phase.LOW)
        q1 = mode_amplitude_for(b, 1, 2, 0.002)
        assert abs(q1) == pytest.approx(0.0775 / math.sqrt(1000), rel=2e-3)

    def test_static_start_is_nearly_first_mode(self, reference_model):
        u, v = static_initial_state(reference_model, 2, 0.002)
        # relaxed inner node: u1 = k2 / (k1 + k2) u2
        assert u[0] == pytest.approx(300.0 / 1125.0 * 0.002)
        q = to_modal(modal_basis(reference_model, Phase.LOW), u)
        assert abs(q[1]) < 0.03 * abs(q[0])

    def test_initial_condition_kinds(self, reference_model):
        u, v = InitialCondition("explicit", u=(0.0, 0.002)).resolve(reference_model)
        np.testing.assert_array_equal(v, 0.0)
        with pytest.raises(ModelError):
            InitialCondition("explicit", u=(1.0,)).resolve(reference_model)
        with pytest.raises(ModelError):
            InitialCondition("random")
        u, _ = InitialCondition("pure_mode", mode=1, node=2, value=0.002).resolve(reference_model)
        assert u[1] == pytest.approx(0.002)
