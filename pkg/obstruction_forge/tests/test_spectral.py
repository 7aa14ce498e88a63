from fractions import Fraction

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from obstruction_forge.spectral import (NonnegMatrix, power_lambda,
                                        exact_inverse, is_contracting,
                                        contraction_vector, block_product,
                                        cyclic_sp_invariance, is_nilpotent,
                                        SpectralError, DimensionMismatchError,
                                        BitSizeError, SingularMatrixError,
                                        NotContractingError)


F = Fraction

entries = st.one_of(st.just(F(0)), st.just(F(0)),
                    st.fractions(min_value=0, max_value=2,
                                 max_denominator=4))


def square_matrices(max_size=8):
    return st.integers(1, max_size).flatmap(
        lambda n: st.lists(st.lists(entries, min_size=n, max_size=n),
                           min_size=n, max_size=n)).map(NonnegMatrix)


@st.composite
def block_chains(draw, max_blocks=4, max_dim=5):
    k = draw(st.integers(1, max_blocks))
    dims = draw(st.lists(st.integers(1, max_dim), min_size=k, max_size=k))
    blocks = []
    for i in range(k):
        rows, cols = dims[i], dims[(i + 1) % k]
        blocks.append(NonnegMatrix(draw(st.lists(
            st.lists(entries, min_size=cols, max_size=cols),
            min_size=rows, max_size=rows)), shape=(rows, cols)))
    return blocks


@st.composite
def strictly_upper(draw, max_size=8):
    W = draw(square_matrices(max_size))
    n = W.rows
    return NonnegMatrix([[W[i, j] if j > i else 0 for j in range(n)]
                         for i in range(n)])


class TestNonnegMatrix:
    def test_from_strings(self):
        W = NonnegMatrix([['0', '1'], ['1/4', 0]])

        assert W.shape == (2, 2)
        assert W[1, 0] == F(1, 4)
        assert W.to_strings() == [['0', '1'], ['1/4', '0']]

    def test_negative_entry(self):
        with pytest.raises(SpectralError, match='Negative entry'):
            NonnegMatrix([[1, -1]])

    def test_float_entry(self):
        with pytest.raises(ValueError, match='exact rationals'):
            NonnegMatrix([[0.5]])

    def test_ragged(self):
        with pytest.raises(SpectralError, match='Ragged'):
            NonnegMatrix([[1, 2], [3]])

    def test_empty_needs_shape(self):
        W = NonnegMatrix([], shape=(0, 3))

        assert W.shape == (0, 3)
        assert W.is_zero()

    def test_immutable(self):
        W = NonnegMatrix([[1]])
        entries = W.entries
        entries[0, 0] = F(5)

        assert W[0, 0] == 1
        with pytest.raises(ValueError):
            W[:, :][0, 0] = F(2)

    def test_matmul(self):
        A = NonnegMatrix([[1, 2]])
        B = NonnegMatrix([[3], ['1/2']])

        assert A @ B == NonnegMatrix([[4]])
        assert B @ A == NonnegMatrix([[3, 6], ['1/2', 1]])

    def test_matmul_empty_inner_dimension(self):
        A = NonnegMatrix([[], []], shape=(2, 0))
        B = NonnegMatrix([], shape=(0, 3))

        assert A @ B == NonnegMatrix.zeros(2, 3)

    def test_matmul_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            NonnegMatrix([[1, 2]]) @ NonnegMatrix([[1, 2]])

    def test_power(self):
        W = NonnegMatrix([[0, 1], ['1/4', 0]])

        assert W ** 0 == NonnegMatrix.identity(2)
        assert W ** 2 == NonnegMatrix([['1/4', 0], [0, '1/4']])
        assert W ** 5 == NonnegMatrix([[0, '1/16'], ['1/64', 0]])

    def test_to_float(self):
        npt.assert_equal(NonnegMatrix([['1/2', 2]]).to_float(),
                         np.array([[0.5, 2.0]]))


class TestPowerLambda:
    @pytest.mark.parametrize('rows, expected', [
        ([[0, 1], ['1/4', 0]], 0.5),
        ([[0, 0], [0, 0]], 0.0),
        ([[0, 1], [1, 0]], 1.0),
        ([['1/2', 5], [0, '1/3']], 0.5),
        ([[2, 1], [1, 2]], 3.0),
        ([[0, 2, 0], [0, 0, '1/4'], ['1/2', 0, 0]], 0.25 ** (1 / 3)),
    ])
    def test_known_radius(self, rows, expected):
        npt.assert_allclose(power_lambda(NonnegMatrix(rows)), expected,
                            atol=1e-9)

    def test_empty(self):
        assert power_lambda(NonnegMatrix.zeros(0)) == 0.0

    def test_not_square(self):
        with pytest.raises(SpectralError, match='square'):
            power_lambda(NonnegMatrix([[1, 2]]))

    def test_gelfand_fallback(self):
        W = NonnegMatrix([[0, 1], ['1/4', 0]])

        npt.assert_allclose(power_lambda(W, max_iterations=1), 0.5,
                            atol=1e-9)


class TestExactInverse:
    def test_inverse(self):
        inverse = exact_inverse([[2, 1], [1, 1]])

        assert inverse.tolist() == [[1, -1], [-1, 2]]

    def test_rational_inverse(self):
        inverse = exact_inverse([[F(1, 2), 0], [0, F(1, 3)]])

        assert inverse.tolist() == [[2, 0], [0, 3]]

    def test_needs_pivoting(self):
        inverse = exact_inverse([[0, 1], [1, 0]])

        assert inverse.tolist() == [[0, 1], [1, 0]]

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            exact_inverse([[1, 2], [2, 4]])

    def test_bit_guard(self):
        with pytest.raises(BitSizeError, match='above the guard of 64'):
            exact_inverse([[2**70, 1], [1, 1]], max_bits=64)


class TestIsContracting:
    def test_contracting(self):
        assert is_contracting(NonnegMatrix([[0, 1], ['1/4', 0]]))

    @pytest.mark.parametrize('rows', [[[1]], [[0, 2], [1, 0]], [[0, 1], [1, 0]],
                                      [['3/2']]])
    def test_not_contracting(self, rows):
        assert not is_contracting(NonnegMatrix(rows))

    def test_empty(self):
        assert is_contracting(NonnegMatrix.zeros(0))


class TestContractionVector:
    def test_vector(self):
        v = contraction_vector(NonnegMatrix([[0, 1], ['1/4', 0]]))

        assert v.tolist() == [F(8, 3), F(5, 3)]

    def test_not_contracting(self):
        with pytest.raises(NotContractingError):
            contraction_vector(NonnegMatrix([[1]]))

    def test_empty(self):
        assert len(contraction_vector(NonnegMatrix.zeros(0))) == 0


class TestBlocks:
    def test_block_product(self):
        blocks = [NonnegMatrix([[2]]), NonnegMatrix([['1/8']])]

        assert block_product(blocks) == NonnegMatrix([['1/4']])

    def test_block_product_mismatch(self):
        with pytest.raises(DimensionMismatchError, match='do not chain'):
            block_product([NonnegMatrix([[1, 1]]), NonnegMatrix([[1, 1]])])

    def test_block_product_empty(self):
        with pytest.raises(SpectralError):
            block_product([])

    def test_cyclic_invariance(self):
        report = cyclic_sp_invariance([NonnegMatrix([[2]]),
                                       NonnegMatrix([['1/8']])])

        npt.assert_allclose(report.values, (0.25, 0.25), atol=1e-9)
        assert report.agree

    def test_cyclic_invariance_rectangular(self):
        blocks = [NonnegMatrix([[1, 2]]), NonnegMatrix([['1/2'], [1]])]
        report = cyclic_sp_invariance(blocks)

        assert report.products[0].shape == (1, 1)
        assert report.products[1].shape == (2, 2)
        npt.assert_allclose(report.values, (2.5, 2.5), atol=1e-9)

    def test_cyclic_invariance_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cyclic_sp_invariance([NonnegMatrix([[1, 2]]),
                                  NonnegMatrix([[1, 2]])])

    @pytest.mark.parametrize('rows, expected', [
        ([[0, 1, 5], [0, 0, 1], [0, 0, 0]], True),
        ([[0, 1], [1, 0]], False),
        ([['1/2']], False),
    ])
    def test_is_nilpotent(self, rows, expected):
        assert is_nilpotent(NonnegMatrix(rows)) is expected


class TestProperties:
    @settings(max_examples=1000, deadline=None,
              suppress_health_check=[HealthCheck.too_slow])
    @given(square_matrices())
    def test_contraction_agrees_with_estimate(self, W):
        estimate = power_lambda(W, tol=1e-9)
        contracting = is_contracting(W)
        if abs(estimate - 1) >= 1e-6:
            assert contracting == (estimate < 1)
        if contracting:
            v = contraction_vector(W)
            assert list(W[:, :].dot(v)) == [x - 1 for x in v]
            assert all(x >= 1 for x in v)

    @settings(max_examples=500, deadline=None,
              suppress_health_check=[HealthCheck.too_slow])
    @given(block_chains())
    def test_cyclic_products_share_radius(self, blocks):
        report = cyclic_sp_invariance(blocks, tol=1e-9)

        npt.assert_allclose(report.values, report.values[0], rtol=1e-8,
                            atol=1e-9)

    @settings(max_examples=500, deadline=None,
              suppress_health_check=[HealthCheck.too_slow])
    @given(st.one_of(square_matrices(), strictly_upper()))
    def test_nilpotent_iff_zero_radius(self, W):
        tol = 1e-9

        assert is_nilpotent(W) == (power_lambda(W, tol=tol) <= tol)
