import math

import numpy as np
import pytest

from iontc.qops import (
    DomainError,
    Generator,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    all_generators,
    basis_state,
    embed,
    fidelity,
    generator_matrix,
    is_unitary,
    pauli_string_operator,
    pulse_unitary,
)

from conftest import expm_oracle

KINDS = [Generator("X"), Generator("Y"), Generator("XX"), Generator("YY"), Generator.z(1)]


class TestGenerator:
    def test_labels(self):
        assert Generator.z(3).label == "Z3"
        assert Generator("YY").label == "YY"

    def test_coefficients(self):
        assert Generator("X").coefficient == 0.5
        assert Generator.z(2).coefficient == 0.5
        assert Generator("XX").coefficient == 0.25
        assert Generator("YY").coefficient == 0.25

    @pytest.mark.parametrize("kind,index", [("Q", None), ("Z", None), ("Z", 0), ("X", 1)])
    def test_invalid(self, kind, index):
        with pytest.raises(DomainError):
            Generator(kind, index)

    def test_index_out_of_range(self):
        with pytest.raises(DomainError):
            generator_matrix(Generator.z(4), 3)
        with pytest.raises(DomainError):
            pulse_unitary(Generator.z(4), 0.1, 3)

    def test_register_cap(self):
        with pytest.raises(DomainError):
            generator_matrix(Generator("X"), 11)
        with pytest.raises(DomainError):
            generator_matrix(Generator("X"), 0)

    def test_all_generators(self):
        assert [g.label for g in all_generators(2)] == ["X", "Y", "XX", "YY", "Z1", "Z2"]
        assert [g.label for g in all_generators(2, include_y=False)] == ["X", "XX", "Z1", "Z2"]


class TestGeneratorMatrix:
    def test_z_single_qubit(self):
        np.testing.assert_array_equal(generator_matrix(Generator.z(1), 1), np.diag([1, -1]))

    def test_x_two_qubits_spectrum(self):
        ev = np.linalg.eigvalsh(generator_matrix(Generator("X"), 2))
        np.testing.assert_allclose(sorted(ev), [-2, 0, 0, 2], atol=1e-12)

    def test_xx_three_qubits_spectrum(self):
        # S_x is S_z in the Hadamard basis: eigenvalues (3 - 2 popcount)^2
        expected = sorted((3 - 2 * bin(i).count("1")) ** 2 for i in range(8))
        assert expected == [1, 1, 1, 1, 1, 1, 9, 9]
        ev = np.linalg.eigvalsh(generator_matrix(Generator("XX"), 3))
        np.testing.assert_allclose(sorted(ev), expected, atol=1e-12)

    def test_sx_matches_pauli_sum(self):
        s = pauli_string_operator([(1, [(1, "x")]), (1, [(2, "x")])], 2)
        np.testing.assert_array_equal(generator_matrix(Generator("X"), 2), s)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_hermitian(self, n):
        for g in all_generators(n):
            h = generator_matrix(g, n)
            np.testing.assert_allclose(h, h.conj().T, atol=0)

    def test_cached_matrices_are_readonly(self):
        h = generator_matrix(Generator("XX"), 3)
        with pytest.raises(ValueError):
            h[0, 0] = 5


class TestPulseUnitary:
    def test_z_pi(self):
        np.testing.assert_allclose(pulse_unitary(Generator.z(1), math.pi, 1), np.diag([-1j, 1j]), atol=1e-15)

    @pytest.mark.parametrize("n", [1, 3, 5])
    def test_zero_angle_is_identity(self, n):
        for g in all_generators(n):
            np.testing.assert_allclose(pulse_unitary(g, 0.0, n), np.eye(2**n), atol=1e-15)

    def test_xx_pi_over_4_two_qubits(self):
        np.testing.assert_allclose(
            pulse_unitary(Generator("XX"), math.pi / 4, 2), expm_oracle(Generator("XX"), math.pi / 4, 2), atol=1e-12
        )

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_closed_form_matches_expm(self, n, rng):
        for g in all_generators(n):
            for theta in rng.uniform(-2 * math.pi, 2 * math.pi, size=3):
                np.testing.assert_allclose(pulse_unitary(g, theta, n), expm_oracle(g, theta, n), atol=1e-10)

    def test_unitarity_1000_angles(self, rng):
        n = 3
        for g in all_generators(n):
            for theta in rng.uniform(-2 * math.pi, 2 * math.pi, size=1000):
                u = pulse_unitary(g, theta, n)
                assert is_unitary(u, atol=1e-12)

    def test_exponential_consistency(self, rng):
        n = 3
        for g in all_generators(n):
            a, b = rng.uniform(-2 * math.pi, 2 * math.pi, size=2)
            np.testing.assert_allclose(
                pulse_unitary(g, a, n) @ pulse_unitary(g, b, n), pulse_unitary(g, a + b, n), atol=1e-12
            )

    def test_single_qubit_x_rotation(self):
        theta = 0.7
        expected = math.cos(theta / 2) * np.eye(2) - 1j * math.sin(theta / 2) * SIGMA_X
        np.testing.assert_allclose(pulse_unitary(Generator("X"), theta, 1), expected, atol=1e-15)


class TestFidelity:
    def test_self(self, rng):
        u = pulse_unitary(Generator("XX"), 0.3, 3)
        assert fidelity(u, u) == pytest.approx(1, abs=1e-12)

    def test_global_phase(self, rng):
        u = pulse_unitary(Generator("Y"), 1.1, 2)
        for phi in rng.uniform(0, 2 * math.pi, 5):
            assert fidelity(u, np.exp(1j * phi) * u) == pytest.approx(1, abs=1e-12)

    def test_orthogonal(self):
        assert fidelity(np.eye(2), SIGMA_X) == 0

    def test_symmetric_and_bounded(self, rng):
        for _ in range(20):
            u = pulse_unitary(Generator("XX"), rng.uniform(-6, 6), 2) @ pulse_unitary(Generator.z(1), rng.uniform(-6, 6), 2)
            v = pulse_unitary(Generator("Y"), rng.uniform(-6, 6), 2)
            f = fidelity(u, v)
            assert f == pytest.approx(fidelity(v, u), abs=1e-15)
            assert -1e-12 <= f <= 1 + 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            fidelity(np.eye(2), np.eye(4))


class TestPauliStrings:
    def test_identity_term(self):
        np.testing.assert_array_equal(pauli_string_operator([(1, [])], 2), np.eye(4))

    def test_cnot(self):
        u = pauli_string_operator(
            [(0.5, []), (0.5, [(1, "z")]), (0.5, [(2, "x")]), (-0.5, [(1, "z"), (2, "x")])], 2
        )
        expected = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
        np.testing.assert_allclose(u, expected, atol=1e-15)

    def test_qubit_order(self):
        # qubit 1 is the most significant tensor factor
        np.testing.assert_array_equal(
            pauli_string_operator([(1, [(1, "z")])], 2), np.kron(SIGMA_Z, np.eye(2))
        )
        np.testing.assert_array_equal(embed(SIGMA_Y, 2, 2), np.kron(np.eye(2), SIGMA_Y))

    def test_same_qubit_product(self):
        # x then y on one qubit: sigma_y sigma_x = -i sigma_z
        np.testing.assert_allclose(
            pauli_string_operator([(1, [(1, "x"), (1, "y")])], 1), -1j * SIGMA_Z, atol=1e-15
        )

    @pytest.mark.parametrize("terms", [[(1, [(3, "x")])], [(1, [(0, "x")])], [(1, [(1, "w")])]])
    def test_errors(self, terms):
        with pytest.raises(DomainError):
            pauli_string_operator(terms, 2)


def test_basis_state():
    v = basis_state("10")
    assert v[2] == 1 and np.count_nonzero(v) == 1
    with pytest.raises(DomainError):
        basis_state("12")
