import numpy as np
import pytest
from scipy import sparse

from fluxsim.circuit import (
    BasisTag,
    FluxoniumSpec,
    OperatorMatrix,
    StarSystem,
    TransmonCouplerSpec,
    basis_index,
    build_system_hamiltonian,
    coupler_oscillator,
    diagonalize_fluxonium,
    embed_operator,
    project_low_energy,
    transmon_charge_spectrum,
)
from fluxsim.circuit.system import bare_energies, charge_operators
from fluxsim.errors import CircuitError, DegeneratePotentialError, DimensionMismatchError, EmptyProjectionError

from conftest import FLUXONIUM_TRANSITIONS, coupler, fluxonium, star_system


class TestOperatorMatrix:
    def test_rejects_non_square(self):
        with pytest.raises(DimensionMismatchError):
            OperatorMatrix(np.zeros((2, 3)))

    def test_rejects_wrong_dims(self):
        with pytest.raises(DimensionMismatchError):
            OperatorMatrix(np.eye(6), dims=(2, 2))

    def test_hermiticity(self):
        h = OperatorMatrix(np.array([[1.0, 0.5j], [-0.5j, 2.0]]))
        assert h.is_hermitian()
        assert not OperatorMatrix(np.array([[1.0, 1.0], [0.0, 2.0]])).is_hermitian()

    def test_sparse_entries(self):
        op = OperatorMatrix(sparse.identity(4, format="csr"), dims=(2, 2))
        assert op.is_sparse
        np.testing.assert_array_equal(op.dense(), np.eye(4))
        assert op.with_entries(np.eye(4), BasisTag.DRESSED).basis_tag is BasisTag.DRESSED


class TestFluxonium:
    @pytest.mark.parametrize("k", range(5))
    def test_transition_frequencies(self, k):
        spectrum = diagonalize_fluxonium(fluxonium(k))
        omega01, omega12, omega03 = FLUXONIUM_TRANSITIONS[k]
        assert spectrum.omega01 == pytest.approx(omega01, abs=2e-3)
        assert spectrum.omega12 == pytest.approx(omega12, abs=2e-3)
        assert spectrum.omega03 == pytest.approx(omega03, abs=2e-3)

    def test_basis_convergence(self):
        small = diagonalize_fluxonium(fluxonium(0), basis_size=60)
        large = diagonalize_fluxonium(fluxonium(0), basis_size=120)
        np.testing.assert_allclose(small.energies, large.energies, atol=1e-4)

    def test_charge_gauge(self):
        spectrum = diagonalize_fluxonium(fluxonium(0))
        n = spectrum.n_op
        assert np.allclose(n, n.conj().T)
        for k in range(1, spectrum.spec.n_levels):
            element = n[k - 1, k]
            assert abs(np.imag(element)) < 1e-10
            assert np.real(element) >= 0

    def test_parity_at_half_flux(self):
        n = diagonalize_fluxonium(fluxonium(0)).n_op
        # |0> and |2> share parity at phi_ext = pi
        assert abs(n[0, 2]) < 1e-8
        assert abs(n[1, 2]) > 0.1

    def test_harmonic_limit(self):
        spec = FluxoniumSpec(e_c=1.0, e_l=1.0, e_j=1e-6, n_levels=4)
        spectrum = diagonalize_fluxonium(spec)
        np.testing.assert_allclose(spectrum.energies, spec.oscillator_frequency * np.arange(4), atol=1e-5)
        n_zpf = 1.0 / (np.sqrt(2.0) * spec.oscillator_length)
        assert np.real(spectrum.n_op[0, 1]) == pytest.approx(n_zpf, rel=1e-5)

    def test_energies_are_read_only(self):
        spectrum = diagonalize_fluxonium(fluxonium(1))
        with pytest.raises(ValueError):
            spectrum.energies[0] = 1.0

    def test_basis_floor(self):
        with pytest.raises(CircuitError):
            diagonalize_fluxonium(fluxonium(0), basis_size=20)

    def test_invalid_energies(self):
        with pytest.raises(CircuitError):
            FluxoniumSpec(e_c=1.0, e_l=-0.5, e_j=5.0)


class TestCoupler:
    def test_closed_form_at_zero_flux(self):
        data = coupler_oscillator(coupler(0.0))
        assert data.omega_c == pytest.approx(11.537, abs=2e-3)
        assert data.alpha_c == pytest.approx(-0.3394, abs=1e-3)
        assert data.n_zpf * data.phi_zpf == pytest.approx(0.5)

    def test_energies_follow_closed_form(self):
        data = coupler_oscillator(coupler(0.413))
        assert data.energies[1] == pytest.approx(data.omega_c)
        assert data.energies[2] - data.energies[1] == pytest.approx(data.omega12)

    def test_matches_charge_basis_transmon(self):
        spec = coupler(0.0)
        levels = transmon_charge_spectrum(spec)
        assert levels[1] == pytest.approx(coupler_oscillator(spec).omega_c, abs=1e-2)

    def test_flux_tunes_down(self):
        assert coupler_oscillator(coupler(0.413)).omega_c < coupler_oscillator(coupler(0.0)).omega_c

    def test_charge_operator(self):
        data = coupler_oscillator(coupler(0.2))
        np.testing.assert_allclose(data.n_op, data.n_zpf * (data.a_op + data.adag_op))

    def test_degenerate_at_half_flux(self):
        with pytest.raises(DegeneratePotentialError):
            coupler_oscillator(TransmonCouplerSpec(e_c=0.32, e_j=55.0, phi_ext=np.pi))


class TestStarSystem:
    def test_layout(self, ccz_system):
        assert ccz_system.site_names == ("Q0", "Q1", "C1", "Q2", "C2")
        assert ccz_system.dims == (4, 4, 3, 4, 3)
        assert ccz_system.dimension == 576
        assert [ccz_system.qubit_site(k) for k in range(3)] == [0, 1, 3]
        assert ccz_system.coupler_site(2) == 4

    def test_labels(self, ccz_system):
        labels = ccz_system.computational_labels()
        assert len(labels) == 8
        assert labels[1] == (0, 0, 0, 1, 0)
        assert labels[4] == (1, 0, 0, 0, 0)
        assert ccz_system.qubit_levels((1, 0, 2, 1, 0)) == (1, 0, 1)
        assert len(ccz_system.transition_labels()) == 8 + 3 * 4
        assert len(ccz_system.required_labels()) == 27

    def test_neighbor_count(self):
        with pytest.raises(CircuitError):
            star_system(5)

    def test_length_mismatch(self):
        with pytest.raises(CircuitError):
            StarSystem(
                central=fluxonium(0),
                neighbors=(fluxonium(1),),
                couplers=(coupler(), coupler()),
                j_c0=(0.5,),
                j_cj=(0.5,),
                j_0j=(0.125,),
            )

    def test_with_coupler_biases(self, cz_system):
        moved = cz_system.with_coupler_biases([0.1])
        assert moved.coupler_biases() == (0.1,)
        assert cz_system.coupler_biases() == pytest.approx((2 * np.pi * 0.413,))
        with pytest.raises(CircuitError):
            cz_system.with_coupler_biases([0.1, 0.2])

    def test_embed_operator(self, cz_system):
        n1 = diagonalize_fluxonium(fluxonium(1)).n_op
        embedded = embed_operator(n1, 1, cz_system)
        expected = np.kron(np.kron(np.eye(4), n1), np.eye(3))
        np.testing.assert_allclose(embedded.dense(), expected)
        with pytest.raises(DimensionMismatchError):
            embed_operator(n1, 2, cz_system)
        with pytest.raises(DimensionMismatchError):
            embed_operator(n1, 3, cz_system)

    def test_hamiltonian(self, cz_system):
        h = build_system_hamiltonian(cz_system)
        assert h.is_sparse
        assert h.dim == 48
        assert h.is_hermitian()
        np.testing.assert_allclose(h.diagonal(), bare_energies(cz_system))

    def test_uncoupled_hamiltonian_is_diagonal(self, uncoupled_cz_system):
        h = build_system_hamiltonian(uncoupled_cz_system).dense()
        np.testing.assert_allclose(h, np.diag(np.diag(h)))

    def test_charge_operators_keyed_by_site(self, ccz_system):
        assert sorted(charge_operators(ccz_system)) == [0, 1, 2, 3, 4]

    def test_projection(self, cz_system):
        h = build_system_hamiltonian(cz_system)
        projected = project_low_energy(h, 20.0)
        assert projected.basis_tag is BasisTag.PROJECTED
        assert projected.dim == int(np.sum(bare_energies(cz_system) < 20.0))
        assert projected.is_hermitian()
        ground = cz_system.label((0, 0))
        assert basis_index(ground, cz_system.dims, projected.kept) == 0
        excited_couplers = (3, 3, 2)
        assert basis_index(excited_couplers, cz_system.dims, projected.kept) is None

    def test_empty_projection(self, cz_system):
        with pytest.raises(EmptyProjectionError):
            project_low_energy(build_system_hamiltonian(cz_system), -1.0)

    def test_four_neighbor_projection_size(self):
        system = star_system(4)
        assert system.dimension == 82944
        kept = int(np.sum(bare_energies(system) < 24.0))
        assert kept == pytest.approx(7393, rel=0.02)

    @pytest.mark.slow
    def test_four_neighbor_projection_keeps_states_below_cutoff(self):
        system = star_system(4)
        projected = project_low_energy(build_system_hamiltonian(system), 24.0)
        np.testing.assert_array_equal(projected.kept, np.flatnonzero(bare_energies(system) < 24.0))
        assert projected.dim == projected.kept.size
