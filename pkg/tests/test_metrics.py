import numpy as np
import pytest
from scipy.stats import unitary_group

from fluxsim.errors import MetricsError, NotDiagonalDominantError
from fluxsim.metrics import (
    average_gate_fidelity,
    basis_bits,
    conditional_phase,
    controlled_z_target,
    gate_conditional_phase,
    gate_report,
    leakage,
    local_z_unitary,
    multiqubit_phase_decomposition,
    optimize_local_z,
    reconstruct_phases,
    subset_name,
    target_unitary,
    wrap_phase,
)


class TestFidelity:
    def test_perfect_gate(self):
        cz = controlled_z_target(2)
        assert average_gate_fidelity(cz, cz) == pytest.approx(1.0)

    def test_global_phase_is_irrelevant(self):
        ccz = controlled_z_target(3)
        assert average_gate_fidelity(np.exp(0.7j) * ccz, ccz) == pytest.approx(1.0)

    def test_identity_against_cz(self):
        # (4 + |1 + 1 + 1 - 1|^2) / 20
        assert average_gate_fidelity(np.eye(4), controlled_z_target(2)) == pytest.approx(0.4)

    def test_trace_orthogonal_unitary(self):
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        assert average_gate_fidelity(x, np.eye(2)) == pytest.approx(1.0 / 3.0)

    def test_dimension_mismatch(self):
        with pytest.raises(MetricsError):
            average_gate_fidelity(np.eye(4), np.eye(8))

    def test_non_square_rejected(self):
        with pytest.raises(MetricsError):
            average_gate_fidelity(np.ones((2, 4)), np.eye(2))


class TestLocalZ:
    def test_basis_bits_order(self):
        bits = basis_bits(2)
        np.testing.assert_array_equal(bits, [[0, 0], [0, 1], [1, 0], [1, 1]])

    def test_local_z_unitary(self):
        u = local_z_unitary([0.3, 0.5])
        np.testing.assert_allclose(np.angle(np.diag(u)), [0.0, 0.5, 0.3, 0.8])

    def test_identity_against_cz_is_improved(self):
        result = optimize_local_z(np.eye(4))
        assert result.uncorrected_fidelity == pytest.approx(0.4)
        assert result.fidelity == pytest.approx(0.6, abs=1e-8)

    def test_recovers_local_phases(self):
        ccz = controlled_z_target(3)
        u = ccz @ local_z_unitary([0.4, -1.1, 2.0])
        result = optimize_local_z(u)
        assert result.fidelity == pytest.approx(1.0, abs=1e-10)
        assert result.uncorrected_fidelity < 0.9

    def test_never_below_uncorrected(self):
        u = unitary_group.rvs(8, random_state=7)
        result = optimize_local_z(u)
        assert result.fidelity >= result.uncorrected_fidelity - 1e-12

    def test_not_power_of_two(self):
        with pytest.raises(MetricsError):
            optimize_local_z(np.eye(3))


class TestLeakage:
    def test_unitary_has_no_leakage(self):
        assert leakage(unitary_group.rvs(4, random_state=1)) == pytest.approx(0.0, abs=1e-12)

    def test_one_lost_column(self):
        u = np.eye(4, dtype=complex)
        u[2, 2] = 0.0
        assert leakage(u) == pytest.approx(0.25)

    def test_leaky_fidelity_uses_retained_population(self):
        u = np.sqrt(0.5) * controlled_z_target(2)
        # (2 + |0.5^0.5 * 4|^2) / 20
        assert average_gate_fidelity(u, controlled_z_target(2)) == pytest.approx(0.5)


class TestConditionalPhase:
    def test_wrap_phase(self):
        assert wrap_phase(np.pi) == pytest.approx(np.pi)
        assert wrap_phase(-np.pi) == pytest.approx(np.pi)
        assert wrap_phase(3 * np.pi / 2) == pytest.approx(-np.pi / 2)
        np.testing.assert_allclose(wrap_phase(np.array([0.0, 2 * np.pi])), [0.0, 0.0], atol=1e-12)

    def test_cz(self):
        assert abs(conditional_phase([0, 0, 0, np.pi])) == pytest.approx(np.pi)

    def test_ccz(self):
        phases = np.zeros(8)
        phases[-1] = np.pi
        assert abs(conditional_phase(phases)) == pytest.approx(np.pi)

    def test_invariant_under_local_z(self):
        phases = np.zeros(8)
        phases[-1] = np.pi
        shifted = phases + basis_bits(3) @ np.array([0.3, -0.8, 1.7])
        assert wrap_phase(conditional_phase(shifted) - conditional_phase(phases)) == pytest.approx(0.0, abs=1e-12)

    def test_reference_neighbor_range(self):
        with pytest.raises(MetricsError):
            conditional_phase(np.zeros(4), reference_neighbor=2)

    def test_requires_diagonal_dominance(self):
        swap = np.eye(4)[[0, 2, 1, 3]]
        with pytest.raises(NotDiagonalDominantError):
            gate_conditional_phase(swap)


class TestPhaseDecomposition:
    def test_cz_coefficients(self):
        c = multiqubit_phase_decomposition([0, 0, 0, np.pi])
        assert c[()] == pytest.approx(np.pi / 4)
        assert c[(0,)] == pytest.approx(-np.pi / 4)
        assert c[(1,)] == pytest.approx(-np.pi / 4)
        assert c[(0, 1)] == pytest.approx(np.pi / 4)

    def test_matches_direct_sum(self):
        rng = np.random.default_rng(3)
        phases = rng.uniform(-np.pi, np.pi, 8)
        c = multiqubit_phase_decomposition(phases)
        z = 1 - 2 * basis_bits(3)
        for subset, value in c.items():
            parity = np.prod(z[:, list(subset)], axis=1) if subset else np.ones(8)
            assert value == pytest.approx(np.mean(phases * parity))

    def test_reconstruction(self):
        rng = np.random.default_rng(5)
        phases = rng.uniform(-np.pi, np.pi, 16)
        c = multiqubit_phase_decomposition(phases)
        assert len(c) == 16
        np.testing.assert_allclose(reconstruct_phases(c, 4), phases, atol=1e-12)

    def test_subset_names(self):
        assert subset_name(()) == "I"
        assert subset_name((0, 2)) == "Z0Z2"


class TestGateReport:
    def test_ideal_ccz(self):
        report = gate_report(controlled_z_target(3))
        assert report.fidelity == pytest.approx(1.0)
        assert report.error == pytest.approx(0.0, abs=1e-12)
        assert report.leakage == pytest.approx(0.0, abs=1e-12)
        assert abs(report.target_phase_error) == pytest.approx(0.0, abs=1e-12)
        assert report.diagonal_dominant

    def test_identity_target(self):
        identity = target_unitary("identity", 3)
        np.testing.assert_array_equal(identity, np.eye(8))
        np.testing.assert_array_equal(target_unitary(None, 2), controlled_z_target(2))
        report = gate_report(np.eye(8), identity)
        assert report.fidelity == pytest.approx(1.0)
        assert report.target_phase_error == pytest.approx(0.0, abs=1e-12)
        assert gate_report(np.eye(8)).fidelity < 1.0

    def test_local_phases_do_not_change_conditional_phase(self):
        u = controlled_z_target(2) @ local_z_unitary([0.2, 0.9])
        report = gate_report(u)
        assert abs(report.conditional_phase) == pytest.approx(np.pi)
        assert report.fidelity == pytest.approx(1.0, abs=1e-10)

    def test_non_dominant_gate(self):
        swap = np.eye(4)[[0, 2, 1, 3]].astype(complex)
        report = gate_report(swap)
        assert not report.diagonal_dominant
        assert np.isnan(report.conditional_phase)
        data = report.to_dict()
        assert data["conditional_phase"] is None
        assert data["phase_terms"] == {}

    def test_non_dominant_strict(self):
        swap = np.eye(4)[[0, 2, 1, 3]].astype(complex)
        with pytest.raises(NotDiagonalDominantError):
            gate_report(swap, strict=True)

    def test_to_dict_names_terms(self):
        data = gate_report(controlled_z_target(2)).to_dict()
        assert set(data["phase_terms"]) == {"I", "Z0", "Z1", "Z0Z1"}
        assert data["z_corrections"] == pytest.approx([0.0, 0.0], abs=1e-8)
