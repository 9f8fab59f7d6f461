"""Tests for PPT polytopes of symmetric block states."""

import numpy as np
import pytest
from scipy.stats import ortho_group

from entanglement.block_decomposition import SymmetricBlockState, block_state_at_xi
from entanglement.errors import SpinDomainError
from entanglement.ppt_geometry import (
    _jacobi_joint_diagonalize,
    common_eigenbasis,
    is_ppt,
    maximally_mixed_weights,
    min_pt_eigenvalue,
    partial_transpose,
    ppt_constraints,
    random_feasible_point,
    transposed_projectors,
)
from entanglement.spin_algebra import BlockLabel

BLOCKS = [BlockLabel(1, 1), BlockLabel(2, 1), BlockLabel(1, 3), BlockLabel(2, 2), BlockLabel(3, 2), BlockLabel(3, 3)]


class TestPartialTranspose:
    def test_involution(self):
        block = BlockLabel(2, 1)
        matrix = np.arange(36, dtype=float).reshape(6, 6)
        np.testing.assert_array_equal(partial_transpose(partial_transpose(matrix, block), block), matrix)

    def test_transposes_b_indices(self):
        block = BlockLabel(1, 1)
        matrix = np.zeros((4, 4))
        # |a=0, b=0><a=1, b=1|  ->  |a=0, b=1><a=1, b=0|
        matrix[block.index(0, 0), block.index(1, 1)] = 1.0
        transposed = partial_transpose(matrix, block)
        assert transposed[block.index(0, 1), block.index(1, 0)] == 1.0
        assert transposed.sum() == 1.0

    def test_shape_checked(self):
        with pytest.raises(SpinDomainError):
            partial_transpose(np.eye(3), BlockLabel(1, 1))


class TestTwoPhotonBoundary:
    def test_single_halfspace(self):
        polytope = ppt_constraints(BlockLabel(1, 1))
        a, b = polytope.halfspaces()
        np.testing.assert_allclose(a, [[1.0]], atol=1e-9)
        np.testing.assert_allclose(b, [0.5], atol=1e-9)

    def test_constraint_rows(self):
        constraints = ppt_constraints(BlockLabel(1, 1)).constraints
        np.testing.assert_allclose(constraints, [[-0.5, 0.5], [0.5, 1 / 6]], atol=1e-12)

    def test_vertices(self):
        vertices = ppt_constraints(BlockLabel(1, 1)).vertices
        np.testing.assert_allclose(vertices, [[0.0, 1.0], [0.5, 0.5]], atol=1e-12)


class TestConstraints:
    @pytest.mark.parametrize("block", BLOCKS, ids=str)
    def test_margin_is_smallest_pt_eigenvalue(self, block):
        polytope = ppt_constraints(block)
        rng = np.random.default_rng(7)
        for _ in range(5):
            zeta = rng.dirichlet(np.ones(block.n_spins))
            assert polytope.margin(zeta) == pytest.approx(min_pt_eigenvalue(zeta, block), abs=1e-10)

    @pytest.mark.parametrize("block", BLOCKS, ids=str)
    def test_shape_and_read_only(self, block):
        constraints = ppt_constraints(block).constraints
        assert constraints.shape[1] == block.n_spins
        assert len(np.unique(np.round(constraints, 9), axis=0)) == len(constraints)
        assert not constraints.flags.writeable

    @pytest.mark.parametrize("block", BLOCKS, ids=str)
    def test_highest_spin_and_identity_are_feasible(self, block):
        polytope = ppt_constraints(block)
        highest = np.zeros(block.n_spins)
        highest[-1] = 1.0
        assert polytope.contains(highest)
        assert polytope.contains(maximally_mixed_weights(block))

    @pytest.mark.parametrize("block", BLOCKS, ids=str)
    def test_vertices_are_feasible(self, block):
        polytope = ppt_constraints(block)
        for vertex in polytope.vertices:
            assert polytope.contains(vertex, tol=1e-9)

    @pytest.mark.parametrize("alpha", [1, 2, 3])
    def test_largest_singlet_weight(self, alpha):
        polytope = ppt_constraints(BlockLabel(alpha, alpha))
        assert polytope.max_weight(0) == pytest.approx(1 / (alpha + 1), abs=1e-9)

    def test_cached(self):
        assert ppt_constraints(BlockLabel(2, 2)) is ppt_constraints(BlockLabel(2, 2))


class TestEigenbasis:
    @pytest.mark.parametrize("block", BLOCKS, ids=str)
    def test_orthogonal_and_diagonalizing(self, block):
        matrices = transposed_projectors(block)
        basis, leakage = common_eigenbasis(matrices)
        np.testing.assert_allclose(basis.T @ basis, np.eye(block.dim), atol=1e-10)
        assert leakage < 1e-9

    def test_joint_diagonalization_of_degenerate_family(self):
        rotation = ortho_group.rvs(5, random_state=3)
        first = rotation @ np.diag([1.0, 1.0, 2.0, 2.0, 3.0]) @ rotation.T
        second = rotation @ np.diag([4.0, 5.0, 6.0, 6.0, 6.0]) @ rotation.T
        basis = _jacobi_joint_diagonalize([first, second])
        for matrix in (first, second):
            rotated = basis.T @ matrix @ basis
            np.testing.assert_allclose(rotated - np.diag(np.diag(rotated)), 0.0, atol=1e-10)


class TestFeasibility:
    def test_werner_states(self):
        polytope = ppt_constraints(BlockLabel(1, 1))
        inside = is_ppt(SymmetricBlockState(BlockLabel(1, 1), np.array([0.4, 0.6])), polytope)
        outside = is_ppt(SymmetricBlockState(BlockLabel(1, 1), np.array([0.8, 0.2])), polytope)
        assert inside and inside.margin > 0
        assert not outside and outside.margin == pytest.approx(-0.3)

    @pytest.mark.parametrize("alpha", [1, 2, 3])
    def test_trajectories_stay_outside(self, alpha):
        block = BlockLabel(alpha, alpha)
        polytope = ppt_constraints(block)
        checks = {xi_value: is_ppt(block_state_at_xi(block, xi_value), polytope) for xi_value in (0.5, 0.95, 0.99)}
        for check in checks.values():
            assert not check
            assert check.margin < 0.0
        assert abs(checks[0.99].margin) < abs(checks[0.95].margin)

    def test_block_mismatch(self):
        with pytest.raises(SpinDomainError):
            is_ppt(SymmetricBlockState(BlockLabel(1, 1), np.array([0.5, 0.5])), ppt_constraints(BlockLabel(2, 2)))

    @pytest.mark.parametrize("block", BLOCKS, ids=str)
    def test_random_points_are_interior(self, block):
        polytope = ppt_constraints(block)
        rng = np.random.default_rng(11)
        for _ in range(5):
            point = random_feasible_point(polytope, rng)
            assert polytope.contains(point)
            assert point.min() > 0.0


class TestExport:
    def test_to_dict(self):
        record = ppt_constraints(BlockLabel(1, 1)).to_dict()
        assert record["block"] == [1, 1]
        assert record["spins"] == [0.0, 1.0]
        assert record["halfspaces"]["b"] == pytest.approx([0.5])
        assert len(record["vertices"]) == 2

    def test_vertices_omitted_for_large_blocks(self):
        record = ppt_constraints(BlockLabel(4, 4)).to_dict(max_vertex_spins=4)
        assert "vertices" not in record
