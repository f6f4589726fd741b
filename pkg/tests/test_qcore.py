import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonbeat.qcore import (
    DensityMatrix,
    HilbertSpace,
    Operator,
    SpaceMismatchError,
    StateVector,
    apply,
    basis_state,
    identity,
    lowering,
    norm_squared,
    tensor_product,
    trace,
    transition,
)

QUBIT = HilbertSpace((2,), ("q",))
QUBIT2 = HilbertSpace((2,), ("r",))


def sigma_x(space, label):
    return transition(space, label, 0, 1) + transition(space, label, 1, 0)


class TestHilbertSpace:
    def test_dimension_is_product(self):
        s = HilbertSpace((3, 3, 2), ("a", "b", "c"))
        assert s.dim == 18

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError, match="unique"):
            HilbertSpace((2, 2), ("a", "a"))

    def test_flat_index_first_label_most_significant(self):
        s = HilbertSpace((3, 3), ("a", "b"))
        assert s.flat_index((1, 2)) == 5

    def test_product_rejects_shared_labels(self):
        with pytest.raises(ValueError, match="duplicate"):
            _ = QUBIT * HilbertSpace((3,), ("q",))


class TestTensorProduct:
    def test_identity_times_identity(self):
        out = tensor_product(identity(QUBIT), identity(QUBIT2))
        assert np.array_equal(out.matrix, np.eye(4))

    def test_basis_kets(self):
        out = tensor_product(basis_state(QUBIT, (0,)), basis_state(QUBIT2, (1,)))
        assert out.space.dim == 4
        assert np.array_equal(out.amplitudes, [0, 1, 0, 0])

    def test_bit_flip_on_first_qubit(self):
        space = QUBIT * QUBIT2
        op = tensor_product(sigma_x(QUBIT, "q"), identity(QUBIT2))
        flipped = apply(op, basis_state(space, (0, 0)))
        assert np.array_equal(flipped.amplitudes, basis_state(space, (1, 0)).amplitudes)

    def test_duplicate_label_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            tensor_product(identity(QUBIT), identity(QUBIT))


class TestApply:
    def test_identity_application(self):
        psi = basis_state(QUBIT, (1,))
        assert np.array_equal(apply(identity(QUBIT), psi).amplitudes, psi.amplitudes)

    def test_hom_plus_jump_on_one_photon(self):
        # R+ = sqrt(kappa/2)(b1 + b2) acting on |1,0> gives sqrt(1/2)|0,0>
        space = HilbertSpace((2, 2), ("cav1", "cav2"))
        r_plus = math.sqrt(0.5) * (lowering(space, "cav1") + lowering(space, "cav2"))
        out = apply(r_plus, basis_state(space, (1, 0)))
        expected = np.zeros(4, dtype=complex)
        expected[0] = math.sqrt(0.5)
        assert np.allclose(out.amplitudes, expected, atol=1e-15)

    def test_antisymmetric_port_annihilates_symmetric_state(self):
        space = HilbertSpace((2, 2), ("cav1", "cav2"))
        r_minus = math.sqrt(0.5) * (lowering(space, "cav1") - lowering(space, "cav2"))
        sym = StateVector(
            (basis_state(space, (1, 0)).amplitudes + basis_state(space, (0, 1)).amplitudes)
            / math.sqrt(2),
            space,
        )
        assert apply(r_minus, sym).norm_squared() < 1e-30

    def test_space_mismatch_rejected(self):
        with pytest.raises(SpaceMismatchError):
            apply(identity(QUBIT), basis_state(QUBIT2, (0,)))


class TestTraceAndNorm:
    def test_projector_trace(self):
        rho = basis_state(QUBIT * QUBIT2, (0, 0)).to_density_matrix()
        assert trace(rho) == 1.0

    def test_decayed_amplitude_norm(self):
        # survival amplitude e^{-kappa t / 2} on |20> at kappa t = 2
        space = HilbertSpace((3, 3), ("atom1", "atom2"))
        psi = StateVector(
            math.exp(-1.0) * basis_state(space, (2, 0)).amplitudes, space
        )
        assert norm_squared(psi) == pytest.approx(math.exp(-2.0), rel=1e-12)

    def test_zero_matrix_trace(self):
        rho = DensityMatrix(np.zeros((2, 2)), QUBIT)
        assert trace(rho) == 0.0


class TestValidation:
    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            StateVector(np.array([np.nan, 0.0]), QUBIT)

    def test_norm_range_checked_on_demand(self):
        psi = StateVector(np.array([2.0, 0.0]), QUBIT)  # construction is fine
        with pytest.raises(ValueError, match="squared norm"):
            psi.validate()

    def test_density_matrix_validation(self):
        good = DensityMatrix(np.array([[0.5, 0.1], [0.1, 0.5]]), QUBIT)
        good.validate()
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(np.array([[0.5, 0.2], [0.1, 0.5]]), QUBIT).validate()
        with pytest.raises(ValueError, match="positive"):
            DensityMatrix(np.array([[0.5, 0.6], [0.6, 0.5]]), QUBIT).validate()

    def test_immutability(self):
        psi = basis_state(QUBIT, (0,))
        with pytest.raises(ValueError):
            psi.amplitudes[0] = 2.0


small_ints = st.integers(min_value=-3, max_value=3)


def int_matrix(dim):
    return st.lists(
        st.lists(small_ints, min_size=dim, max_size=dim), min_size=dim, max_size=dim
    ).map(lambda rows: np.array(rows, dtype=complex))


class TestProperties:
    @given(a=int_matrix(2), b=int_matrix(2), c=int_matrix(2))
    @settings(max_examples=50, deadline=None)
    def test_tensor_product_associative_exactly(self, a, b, c):
        sa = HilbertSpace((2,), ("a",))
        sb = HilbertSpace((2,), ("b",))
        sc = HilbertSpace((2,), ("c",))
        oa, ob, oc = Operator(a, sa), Operator(b, sb), Operator(c, sc)
        left = tensor_product(tensor_product(oa, ob), oc)
        right_mat = np.kron(a, np.kron(b, c))
        assert np.array_equal(left.matrix, right_mat)

    @given(data=st.data())
    @settings(max_examples=50, deadline=None)
    def test_sandwich_preserves_positivity(self, data):
        dim = 3
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        space = HilbertSpace((dim,), ("s",))
        v = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = DensityMatrix(v @ v.conj().T / np.trace(v @ v.conj().T).real, space)
        a = Operator(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)), space)
        sandwiched = a.matrix @ rho.matrix @ a.matrix.conj().T
        assert np.trace(sandwiched).real >= -1e-10

    @given(data=st.data())
    @settings(max_examples=50, deadline=None)
    def test_apply_composes(self, data):
        dim = 4
        rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
        space = HilbertSpace((dim,), ("s",))
        a = Operator(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)), space)
        b = Operator(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)), space)
        psi = StateVector(rng.normal(size=dim) + 1j * rng.normal(size=dim), space)
        lhs = apply(a, apply(b, psi)).amplitudes
        rhs = apply(a @ b, psi).amplitudes
        scale = max(np.max(np.abs(rhs)), 1.0)
        assert np.max(np.abs(lhs - rhs)) <= 10 * np.finfo(float).eps * dim * scale
