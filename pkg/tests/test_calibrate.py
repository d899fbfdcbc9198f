import math

import numpy as np
import pytest

from fluxsim.calibrate import (
    CalibrationSettings,
    build_pulse,
    check_ascending,
    error_vs_length_sweep,
    gate_error_cost,
    initial_guess,
    sweep_point,
    tune_up,
)
from fluxsim.dynamics import GateSimulator
from fluxsim.errors import CalibrationError
from fluxsim.metrics import GateReport
from fluxsim.pulses import PulseShape, combined_drive_element, unit_area


def report(leakage=0.01, phase_error=0.1, dominant=True):
    return GateReport(
        fidelity=0.99,
        leakage=leakage,
        z_corrections=[0.0, 0.0],
        conditional_phase=np.pi + phase_error,
        target_phase_error=phase_error if dominant else float("nan"),
        uncorrected_fidelity=0.9,
        diagonal_dominant=dominant,
    )


@pytest.fixture(scope="module")
def simulator(cz_system):
    return GateSimulator(cz_system)


class TestSettings:
    def test_defaults(self):
        settings = CalibrationSettings()
        assert settings.shape is PulseShape.FLAT_TOP
        assert settings.drag
        assert settings.drag_alpha == 1.0
        assert settings.max_evaluations == 200

    @pytest.mark.parametrize(
        "kwargs",
        [{"max_evaluations": 0}, {"amplitude_bounds": (1.2, 2.0)}, {"detuning_bound": 0.0}],
    )
    def test_validation(self, kwargs):
        with pytest.raises(CalibrationError):
            CalibrationSettings(**kwargs)

    def test_ramp_times(self):
        flat = CalibrationSettings()
        assert flat.ramp_time(2) == 10.0
        assert flat.ramp_time(4) == 30.0
        assert CalibrationSettings(t_r=5.0).ramp_time(4) == 5.0
        assert CalibrationSettings(shape="cosine").ramp_time(3) == 0.0


class TestCost:
    def test_leakage_plus_phase(self):
        assert gate_error_cost(report()) == pytest.approx(0.01 + 0.01)
        assert gate_error_cost(report(), phase_weight=2.0) == pytest.approx(0.01 + 0.02)

    def test_non_dominant_gate_gets_largest_penalty(self):
        assert gate_error_cost(report(dominant=False)) == pytest.approx(0.01 + np.pi**2)


class TestPulseConstruction:
    def test_initial_guess_completes_one_cycle(self, simulator):
        omega_d_amp, omega_drive = initial_guess(simulator, PulseShape.COSINE, 50.0)
        element = combined_drive_element(simulator.drive_elements(), dict(simulator.drive_phases()))
        assert omega_d_amp * unit_area(PulseShape.COSINE, 50.0) * abs(element) == pytest.approx(1.0)
        assert omega_drive == pytest.approx(simulator.gate_frequency())

    def test_amplitude_scales_inversely_with_length(self, simulator):
        short, _ = initial_guess(simulator, PulseShape.COSINE, 50.0)
        long_, _ = initial_guess(simulator, PulseShape.COSINE, 100.0)
        assert short == pytest.approx(2.0 * long_)

    def test_flat_top_with_drag(self, simulator):
        pulse = build_pulse(simulator, 100.0)
        assert pulse.shape is PulseShape.FLAT_TOP
        assert pulse.t_r == 10.0
        assert pulse.drag_alpha == 1.0
        assert pulse.drag_detuning == pytest.approx(simulator.transition_table().min_detuning)

    def test_without_drag(self, simulator):
        pulse = build_pulse(simulator, 50.0, CalibrationSettings(shape="cosine", drag=False), omega_d_amp=0.01)
        assert pulse.drag_alpha == 0.0
        assert pulse.omega_d_amp == 0.01
        assert pulse.omega_drive == pytest.approx(simulator.gate_frequency())


class TestSweep:
    def test_check_ascending(self):
        assert check_ascending([30, 50, 100]) == [30.0, 50.0, 100.0]
        with pytest.raises(CalibrationError):
            check_ascending([])
        with pytest.raises(CalibrationError):
            check_ascending([50.0, 50.0])

    def test_unsorted_sweep_rejected(self, simulator):
        with pytest.raises(CalibrationError):
            error_vs_length_sweep(simulator, [100.0, 50.0])

    def test_failed_point_is_recorded(self, simulator):
        # a 10 ns ramp does not fit twice into 15 ns
        point = sweep_point(simulator, 15.0, CalibrationSettings())
        assert point.failure is not None
        assert math.isnan(point.error)
        assert not point.converged
        assert point.result is None


class TestNonSelectiveSystem:
    def test_tune_up_reports_failure(self, uncoupled_cz_system):
        simulator = GateSimulator(uncoupled_cz_system, drive_sites=(0,))
        assert abs(simulator.transition_table().min_detuning) < 1e-4
        settings = CalibrationSettings(shape="cosine")
        result = tune_up(simulator, 10.0, settings)
        assert not result.converged
        assert "state-selective" in result.failure
        assert len(result.cost_trace) == 1
        assert result.report is not None


@pytest.mark.slow
class TestTuneUp:
    def test_cz_at_50ns(self, simulator):
        settings = CalibrationSettings(shape="cosine")
        result = tune_up(simulator, 50.0, settings)
        assert result.report.error <= 1e-2
        assert result.final_cost <= result.initial_cost
        half_width = abs(simulator.transition_table().min_detuning) / 2.0
        assert abs(result.omega_drive - simulator.gate_frequency()) <= half_width + 1e-12

    def test_cz_error_falls_with_length(self, simulator):
        points = error_vs_length_sweep(simulator, [50.0, 100.0], CalibrationSettings(shape="cosine"))
        assert points[1].error <= 1e-3
        assert points[1].error < points[0].error
