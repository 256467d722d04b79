import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import sample_pair
from qdiv import gfun
from qdiv.errors import DimensionError, DomainError, ValidationError
from qdiv.matcore import (
    DensityMatrix,
    HermitianBasis,
    SuperOperator,
    as_hermitian,
    coordinates,
    eigh,
    from_coordinates,
    identity_super,
    left_super,
    mat_fun,
    modular_spectrum,
    relative_modular,
    right_super,
)
from qdiv.sampling import random_density, random_hermitian

SX = np.array([[0, 1], [1, 0]], dtype=complex)


class TestValidation:
    def test_nan_rejected(self):
        with pytest.raises(ValidationError, match="finite"):
            as_hermitian(np.array([[np.nan, 0], [0, 1]]))

    def test_non_square(self):
        with pytest.raises(DimensionError):
            as_hermitian(np.ones((2, 3)))

    def test_non_hermitian(self):
        with pytest.raises(ValidationError) as exc:
            as_hermitian(np.array([[1, 1], [0, 1]]))
        assert exc.value.invariant == "hermitian"

    def test_trace(self):
        with pytest.raises(ValidationError) as exc:
            DensityMatrix(np.diag([0.6, 0.3]))
        assert exc.value.invariant == "trace"

    @pytest.mark.parametrize("p", [0.0, 1e-13, -0.1])
    def test_positivity(self, p):
        with pytest.raises(ValidationError) as exc:
            DensityMatrix(np.diag([1 - p, p]))
        assert exc.value.invariant == "positivity"

    def test_density_accepts(self, rng):
        P = DensityMatrix(random_density(3, rng))
        assert P.dim == 3
        assert P.eigenvalues[0] > 0


class TestEigh:
    def test_identity(self):
        w, U = eigh(np.eye(2))
        np.testing.assert_allclose(w, [1, 1])
        np.testing.assert_allclose(np.abs(U), np.eye(2), atol=1e-15)

    def test_diagonal(self):
        w, U = eigh(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(w, [1, 3])
        np.testing.assert_allclose(np.abs(U), [[0, 1], [1, 0]], atol=1e-15)

    def test_pauli_x(self):
        w, U = eigh(SX)
        np.testing.assert_allclose(w, [-1, 1], atol=1e-15)
        v = U[:, 0] * np.sign(U[0, 0].real)
        np.testing.assert_allclose(v, np.array([1, -1]) / np.sqrt(2), atol=1e-15)


class TestMatFun:
    def test_identity_function(self, rng):
        H = random_hermitian(4, rng)
        np.testing.assert_allclose(mat_fun(H, lambda w: w), H, atol=1e-12)

    def test_sqrt(self):
        np.testing.assert_allclose(mat_fun(np.diag([4.0, 9.0]), np.sqrt), np.diag([2.0, 3.0]))

    def test_log(self):
        np.testing.assert_allclose(mat_fun(np.diag([np.e, np.e**2]), np.log), np.diag([1.0, 2.0]), atol=1e-15)

    def test_log_domain_error_names_eigenvalue(self):
        with pytest.raises(DomainError, match="-1"):
            mat_fun(np.diag([-1.0, 2.0]), np.log)

    def test_density_helpers(self, rng):
        P = DensityMatrix(random_density(3, rng, 0.1))
        S = P.sqrt()
        np.testing.assert_allclose(S @ S, P.matrix, atol=1e-13)
        np.testing.assert_allclose(P.inv() @ P.matrix, np.eye(3), atol=1e-10)
        np.testing.assert_allclose(P.power(0.5), S, atol=1e-13)


class TestBasis:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_orthonormal_traceless(self, n):
        E = HermitianBasis.gell_mann(n).elements
        G = np.einsum("iab,jba->ij", E, E)
        np.testing.assert_allclose(G, np.eye(n * n), atol=1e-12)
        np.testing.assert_allclose(np.einsum("kaa->k", E[1:]), 0, atol=1e-14)

    def test_identity_coordinates(self):
        np.testing.assert_allclose(coordinates(np.eye(2)), [np.sqrt(2), 0, 0, 0], atol=1e-15)

    @pytest.mark.parametrize("k", range(9))
    def test_basis_element_unit_vector(self, k):
        B = HermitianBasis.gell_mann(3)
        np.testing.assert_allclose(B.coordinates(B.elements[k]), np.eye(9)[k], atol=1e-14)

    def test_norm_and_roundtrip(self, rng):
        A = random_hermitian(4, rng)
        c = coordinates(A)
        assert np.isclose(c @ c, np.trace(A @ A).real)
        np.testing.assert_allclose(from_coordinates(c), A, atol=1e-13)

    def test_rotated_basis(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        B = HermitianBasis.gell_mann(2).rotated(Q)
        A = random_hermitian(2, rng)
        np.testing.assert_allclose(B.from_coordinates(B.coordinates(A)), A, atol=1e-13)

    def test_rotated_rejects_non_orthogonal(self):
        with pytest.raises(ValidationError, match="orthogonal"):
            HermitianBasis.gell_mann(2).rotated(2 * np.eye(3))


class TestSuperOperators:
    def test_left_identity(self):
        np.testing.assert_allclose(left_super(np.eye(3)).matrix, identity_super(3).matrix, atol=1e-14)

    def test_right_entrywise(self):
        E12 = np.array([[0, 1], [0, 0]], dtype=complex)
        np.testing.assert_allclose(right_super(np.diag([2.0, 3.0])).apply(E12), 3 * E12)

    def test_left_right_commute(self, rng):
        P, Q = sample_pair(rng, 3)
        L, R = left_super(Q), right_super(P)
        np.testing.assert_allclose((L @ R).matrix, (R @ L).matrix, atol=1e-13)

    @pytest.mark.parametrize("n", [2, 3])
    def test_left_right_positive(self, rng, n):
        P = random_density(n, rng)
        for S in (left_super(P), right_super(P)):
            assert S.eigvalsh().min() > -1e-14

    def test_linearity_and_composition(self, rng):
        A = rng.standard_normal((4, 4))
        B = rng.standard_normal((4, 4))
        S1 = SuperOperator(A, 2)
        S2 = SuperOperator(B, 2)
        X = random_hermitian(2, rng)
        Y = random_hermitian(2, rng)
        np.testing.assert_allclose(S1.apply(2 * X + Y), 2 * S1.apply(X) + S1.apply(Y), atol=1e-12)
        np.testing.assert_allclose((S1 @ S2).apply(X), S1.apply(S2.apply(X)), atol=1e-12)

    def test_natural_roundtrip(self, rng):
        L = rng.standard_normal((9, 9)) + 1j * rng.standard_normal((9, 9))
        S = SuperOperator.from_natural(L, 3)
        np.testing.assert_allclose(S.natural, L, atol=1e-12)


class TestModular:
    def test_maximally_mixed_is_identity(self):
        D = relative_modular(np.eye(3) / 3, np.eye(3) / 3)
        np.testing.assert_allclose(D.matrix, np.eye(9), atol=1e-13)

    def test_diagonal_entrywise(self):
        p = np.array([0.2, 0.3, 0.5])
        q = np.array([0.6, 0.1, 0.3])
        D = relative_modular(np.diag(q), np.diag(p))
        for k in range(3):
            for j in range(3):
                E = np.zeros((3, 3), dtype=complex)
                E[k, j] = 1
                np.testing.assert_allclose(D.apply(E), q[k] / p[j] * E, atol=1e-13)

    @pytest.mark.parametrize("commuting", [True, False])
    def test_spectrum_is_ratio_multiset(self, rng, commuting):
        if commuting:
            P, Q = np.diag([0.2, 0.3, 0.5]), np.diag([0.6, 0.1, 0.3])
        else:
            P, Q = sample_pair(rng, 3)
        D = relative_modular(Q, P)
        p, q = np.linalg.eigvalsh(P), np.linalg.eigvalsh(Q)
        expected = np.sort((q[:, None] / p[None, :]).ravel())
        got = np.sort(np.linalg.eigvals(D.matrix).real)
        np.testing.assert_allclose(got, expected, rtol=1e-10)

    def test_self_modular_unit_multiplicity(self, rng):
        P = random_density(4, rng)
        w = np.linalg.eigvals(relative_modular(P, P).matrix).real
        assert np.sum(np.isclose(w, 1.0, atol=1e-10)) >= 4

    def test_modular_spectrum_equal_states(self, rng):
        P = random_density(3, rng)
        ms = modular_spectrum(P, P)
        assert ms.expect(gfun.log()) == pytest.approx(0, abs=1e-13)

    def test_modular_spectrum_commuting(self):
        p, q = np.array([0.2, 0.8]), np.array([0.7, 0.3])
        ms = modular_spectrum(np.diag(q), np.diag(p))
        mask = ms.weights > 1e-14
        got = sorted(zip(ms.ratios[mask], ms.weights[mask]))
        np.testing.assert_allclose(got, sorted(zip(q / p, p)), atol=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(2, 5), st.integers(0, 2**32 - 1))
    def test_weights_sum_to_one(self, n, seed):
        r = np.random.default_rng(seed)
        P, Q = sample_pair(r, n)
        assert modular_spectrum(Q, P).weights.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("spec", ["log", "quadratic", "ratio:0.7", "power:0.5"])
    @pytest.mark.parametrize("n", [2, 3, 4, 6])
    def test_superoperator_calculus_matches_spectrum(self, rng, spec, n):
        g = gfun.parse(spec)
        P, Q = sample_pair(rng, n)
        D = relative_modular(Q, P)
        sP = DensityMatrix(P).sqrt()
        val = np.trace(sP @ D.fun(g).apply(sP)).real
        assert val == pytest.approx(modular_spectrum(Q, P).expect(g), abs=1e-10)
