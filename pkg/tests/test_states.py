import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite import hermgauss

from kerrphase.states import (KerrParams, StateError, TruncationError,
                              auto_cutoff, coherent_state, density_matrix,
                              evolve, fock_state, fock_superposition,
                              kerr_energy, recurrence_time, squeezed_vacuum)


class TestKerrParams:
    def test_defaults(self):
        p = KerrParams()
        assert p.mass == p.spring == p.hbar == 1.0
        assert p.lambda2_x == p.lambda2_p == 0.0

    def test_lambda2_x_defaults_to_lambda2_p(self):
        p = KerrParams(lambda2_p=-0.25)
        assert p.lambda2_x == -0.25 and p.matched

    def test_positivity(self):
        with pytest.raises(StateError):
            KerrParams(mass=-1.0)

    def test_cross_nonlinearity_signs(self):
        assert KerrParams(lambda2_p=0.25).cross_nonlinearity() == 0.25
        assert KerrParams(lambda2_p=-0.25).cross_nonlinearity() == -0.25
        p = KerrParams(lambda2_p=-0.25, lambda2_x=-0.04)
        assert p.cross_nonlinearity() == pytest.approx(-0.1)
        with pytest.raises(StateError):
            KerrParams(lambda2_p=0.25, lambda2_x=-0.25).cross_nonlinearity()


class TestCoherentState:
    def test_vacuum(self):
        s = coherent_state(0.0, cutoff=4)
        assert np.allclose(s.amplitudes, [1, 0, 0, 0, 0])
        assert s.tail_mass == 0.0

    def test_ground_weight(self):
        # |c_0|^2 = exp(-|alpha|^2), the Poisson zero-count weight
        s = coherent_state(7 / 12, cutoff=16)
        assert abs(s.amplitudes[0]) ** 2 == pytest.approx(
            np.exp(-((7 / 12) ** 2)), rel=1e-12)

    def test_mean_photon_number(self):
        s = coherent_state(1.25, cutoff=24)
        assert s.mean_photon() == pytest.approx(25 / 16, rel=1e-12)

    def test_normalized(self):
        s = coherent_state(2.0 + 1.0j)
        assert s.norm() == pytest.approx(1.0, abs=1e-14)

    def test_cutoff_too_small_refused(self):
        with pytest.raises(TruncationError) as exc:
            coherent_state(2.0, cutoff=6)
        assert exc.value.tail_mass >= 1e-12

    def test_phase_convention(self):
        s = coherent_state(1.0j, cutoff=20)
        # c_1/c_0 = alpha
        assert s.amplitudes[1] / s.amplitudes[0] == pytest.approx(1.0j)


class TestSqueezedVacuum:
    def test_zeta_zero_is_vacuum(self):
        s = squeezed_vacuum(0.0)
        assert s.cutoff == 0 and s.amplitudes[0] == 1.0

    def test_parity_selection(self):
        s = squeezed_vacuum(1 / 3, cutoff=32)
        assert s.amplitudes[1] == 0.0 and s.amplitudes[3] == 0.0

    def test_two_term_ratio(self):
        s = squeezed_vacuum(1 / 3, cutoff=32)
        ratio = abs(s.amplitudes[2] / s.amplitudes[0])
        assert ratio == pytest.approx(np.tanh(1 / 3) / np.sqrt(2), rel=1e-12)

    def test_amplitudes_match_quadrature_oracle(self):
        # overlap of the squeezed position Gaussian (variance scaled by
        # exp(-2 zeta)) with Hermite functions, by Gauss-Hermite quadrature
        zeta = 1 / 3
        s = squeezed_vacuum(zeta, cutoff=32)
        nodes, weights = hermgauss(180)
        sq = np.exp(2 * zeta)

        def psi(n, x):
            out0 = np.pi ** -0.25 * np.exp(-0.5 * x * x)
            if n == 0:
                return out0
            prev, cur = out0, np.sqrt(2.0) * x * out0
            for k in range(2, n + 1):
                prev, cur = cur, (np.sqrt(2.0 / k) * x * cur
                                  - np.sqrt((k - 1) / k) * prev)
            return cur

        # hermgauss computes Int exp(-x^2) g(x) dx, so g carries exp(+x^2)
        for n in (0, 2, 4, 6):
            g = ((sq / np.pi) ** 0.25 * np.exp(-sq / 2 * nodes**2)
                 * psi(n, nodes) * np.exp(nodes**2))
            overlap = np.sum(weights * g)
            assert overlap == pytest.approx(s.amplitudes[n].real, abs=1e-8)


class TestFockSuperposition:
    def test_equal_superposition(self):
        s = fock_superposition([(0, 1), (1, 1)])
        assert np.allclose(s.amplitudes, [1 / np.sqrt(2), 1 / np.sqrt(2)])

    def test_pure_fock(self):
        s = fock_state(3)
        assert s.amplitudes[3] == 1.0 and s.cutoff == 3

    def test_relative_phase_preserved(self):
        s = fock_superposition([(0, 1), (2, 1j)])
        assert s.norm() == pytest.approx(1.0, abs=1e-14)
        assert s.amplitudes[2] / s.amplitudes[0] == pytest.approx(1.0j)

    def test_empty_rejected(self):
        with pytest.raises(StateError):
            fock_superposition([])

    def test_index_above_cutoff_rejected(self):
        with pytest.raises(StateError):
            fock_superposition([(5, 1.0)], cutoff=3)


class TestKerrEnergy:
    def test_harmonic_ground_state(self):
        assert kerr_energy(0, KerrParams()) == pytest.approx(0.5)

    def test_quarter_nonlinearity(self):
        assert kerr_energy(0, KerrParams(lambda2_p=0.25)) == pytest.approx(0.5625)

    def test_first_excited(self):
        assert kerr_energy(1, KerrParams(lambda2_p=1 / 16)) == pytest.approx(1.640625)

    def test_mismatched_nonlinearities_rejected(self):
        with pytest.raises(StateError):
            kerr_energy(0, KerrParams(lambda2_p=0.25, lambda2_x=0.5))


class TestRecurrenceTime:
    def test_values(self):
        assert recurrence_time(KerrParams(lambda2_p=1 / 16)) == pytest.approx(16 * np.pi)
        assert recurrence_time(KerrParams(lambda2_p=0.25)) == pytest.approx(4 * np.pi)
        assert recurrence_time(KerrParams(lambda2_p=1.0)) == pytest.approx(np.pi)

    def test_negative_nonlinearity_uses_magnitude(self):
        assert recurrence_time(KerrParams(lambda2_p=-1 / 16)) == pytest.approx(16 * np.pi)

    def test_harmonic_has_no_scale(self):
        with pytest.raises(StateError, match="no recurrence scale"):
            recurrence_time(KerrParams())


class TestEvolve:
    def test_t_zero_identity(self):
        s = coherent_state(1.0)
        out = evolve(s, 0.0, KerrParams(lambda2_p=0.25))
        assert np.array_equal(out.amplitudes, s.amplitudes)

    def test_fock_state_invariant_up_to_phase(self):
        s = fock_state(2)
        out = evolve(s, 1.7, KerrParams(lambda2_p=0.25))
        assert np.abs(np.abs(out.amplitudes[2]) - 1.0) < 1e-14

    def test_unitarity(self):
        s = coherent_state(1.5)
        out = evolve(s, 123.456, KerrParams(lambda2_p=1 / 16))
        assert abs(out.norm() - 1.0) < 1e-14

    def test_density_matrix_recurrence(self):
        params = KerrParams(lambda2_p=1 / 16)
        s = coherent_state(7 / 12)
        rho0 = density_matrix(s).matrix
        rho_t = density_matrix(evolve(s, recurrence_time(params), params)).matrix
        assert np.max(np.abs(rho_t - rho0)) < 1e-12

    def test_harmonic_amplitude_moduli_constant(self):
        s = coherent_state(1.0)
        out = evolve(s, 2.3, KerrParams())
        assert np.max(np.abs(np.abs(out.amplitudes) - np.abs(s.amplitudes))) < 1e-14
        assert out.mean_photon() == pytest.approx(s.mean_photon(), abs=1e-13)

    @settings(max_examples=25, deadline=None)
    @given(t1=st.floats(-20, 20), t2=st.floats(-20, 20),
           alpha=st.floats(0.1, 1.5))
    def test_group_property(self, t1, t2, alpha):
        params = KerrParams(lambda2_p=1 / 16)
        s = coherent_state(alpha)
        two_step = evolve(evolve(s, t1, params), t2, params)
        one_step = evolve(s, t1 + t2, params)
        assert np.max(np.abs(two_step.amplitudes - one_step.amplitudes)) < 1e-12

    def test_mismatched_nonlinearities_rejected(self):
        with pytest.raises(StateError):
            evolve(coherent_state(0.5), 1.0,
                   KerrParams(lambda2_p=0.25, lambda2_x=0.5))


class TestDensityMatrix:
    def test_vacuum(self):
        rho = density_matrix(coherent_state(0.0, cutoff=4))
        assert rho.matrix[0, 0] == 1.0
        assert np.count_nonzero(rho.matrix) == 1

    def test_superposition_coherences(self):
        rho = density_matrix(fock_superposition([(0, 1), (1, 1)]))
        assert rho.matrix[0, 1] == pytest.approx(0.5)
        assert rho.matrix[1, 0] == pytest.approx(0.5)

    def test_mixture(self):
        rho = density_matrix([(0.5, fock_state(0)), (0.5, fock_state(1))])
        assert np.allclose(np.diag(rho.matrix), [0.5, 0.5])
        assert rho.matrix[0, 1] == 0.0

    def test_hermitian_unit_trace(self):
        rho = density_matrix(coherent_state(1.2 + 0.3j)).matrix
        assert np.max(np.abs(rho - rho.conj().T)) < 1e-15
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-13)


class TestAutoCutoff:
    def test_vacuum_is_exact(self):
        assert auto_cutoff("coherent", alpha=0.0) == 0

    def test_coherent_tail_below_tolerance(self):
        from kerrphase.states import coherent_tail
        n = auto_cutoff("coherent", alpha=1.25, tol=1e-12)
        assert coherent_tail(1.25, n) < 1e-12
        assert coherent_tail(1.25, n - 1) >= 1e-12

    def test_squeezed_tail_below_tolerance(self):
        from kerrphase.states import squeezed_tail
        n = auto_cutoff("squeezed", zeta=1 / 3, tol=1e-12)
        assert squeezed_tail(1 / 3, n) < 1e-12
        assert squeezed_tail(1 / 3, n - 1) >= 1e-12

    def test_cap_enforced(self):
        with pytest.raises(TruncationError):
            auto_cutoff("coherent", alpha=40.0, tol=1e-12, cap=64)

    def test_bad_tolerance(self):
        with pytest.raises(StateError):
            auto_cutoff("coherent", alpha=1.0, tol=0.0)
