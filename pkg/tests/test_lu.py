import numpy as np
import pytest

from blockinv.blockmatrix import BlockMatrix, densify, partition
from blockinv.exceptions import SingularTile
from blockinv.lu import LEAF_OPS, block_lu, lu_invert, lu_leaf, triangular_invert
from blockinv.spin import spin_invert
from oracles import forward_substitution_inverse, inf_residual, random_spd, rel_fro


def dd_matrix(n, rng):
    m = rng.uniform(-1, 1, (n, n))
    return m + np.diag(np.abs(m).sum(axis=1) + 1)


def test_identity():
    res, _ = block_lu(BlockMatrix.identity(8, 2))
    assert res.L == BlockMatrix.identity(8, 2)
    assert res.U == BlockMatrix.identity(8, 2)
    inv, _ = lu_invert(BlockMatrix.identity(8, 2))
    assert inv == BlockMatrix.identity(8, 2)


def test_hand_doolittle():
    res, _ = block_lu(partition(np.array([[4.0, 3.0], [6.0, 3.0]]), 1))
    np.testing.assert_array_equal(densify(res.L), [[1.0, 0.0], [1.5, 1.0]])
    np.testing.assert_array_equal(densify(res.U), [[4.0, 3.0], [0.0, -1.5]])


@pytest.mark.parametrize("bs", [1, 2])
def test_hand_inverse(bs):
    inv, _ = lu_invert(partition(np.array([[4.0, 2.0], [2.0, 3.0]]), bs))
    np.testing.assert_allclose(densify(inv), np.array([[3.0, -2.0], [-2.0, 4.0]]) / 8, rtol=1e-15)


@pytest.mark.parametrize("bs", [4, 16, 64, 128])
def test_factorisation_diag_dominant(bs, rng):
    a = dd_matrix(128, rng)
    res, _ = block_lu(partition(a, bs))
    l, u = densify(res.L), densify(res.U)
    assert rel_fro(l @ u, a) <= 1e-10
    np.testing.assert_array_equal(np.diag(l), np.ones(128))
    assert not np.triu(l, 1).any()
    assert not np.tril(u, -1).any()


def test_factorisation_spd_512(rng):
    a = random_spd(512, rng)
    res, _ = block_lu(partition(a, 64))
    assert rel_fro(densify(res.L) @ densify(res.U), a) <= 1e-9


@pytest.mark.parametrize("bs", [8, 32, 256])
def test_inverse_agrees_with_spin(bs, rng):
    a = random_spd(256, rng)
    x, _ = lu_invert(partition(a, bs))
    y, _ = spin_invert(partition(a, bs))
    assert rel_fro(densify(x), densify(y)) <= 1e-8
    assert inf_residual(a, densify(x)) <= 1e-6


@pytest.mark.parametrize("b", [1, 2, 4, 8, 16])
def test_leaf_op_census(b, rng):
    n = 64
    _, trace = lu_invert(partition(random_spd(n, rng), n // b))
    assert trace.leaf_ops == LEAF_OPS * b
    assert trace.leaf_inversions() == b
    assert len(trace.leaf_nodes()) == b
    if b > 1:
        assert trace.stage_counts()["additional"] == 7
    for _, nid in trace.internal_nodes():
        c = trace.stage_counts(node=nid)
        if nid == 0:
            continue
        # Schur products (3) plus four getLU products for the inverse factors
        assert c["multiply"] == 3 + 4
        assert c["subtract"] == 1
        assert c["scalarMul"] == 2


def test_leaf_parts_consistent(rng):
    t = random_spd(8, rng)
    l, u, li, ui, ops, comp = lu_leaf(t)
    assert (ops, comp) == (9, 4)
    np.testing.assert_allclose(l @ u, t, rtol=1e-13)
    np.testing.assert_allclose(li @ l, np.eye(8), atol=1e-13)
    np.testing.assert_allclose(u @ ui, np.eye(8), atol=1e-13)


def test_single_element_leaf():
    l, u, li, ui, ops, comp = lu_leaf(np.array([[2.0]]))
    assert (l[0, 0], u[0, 0], li[0, 0], ui[0, 0], ops, comp) == (1.0, 2.0, 1.0, 0.5, 3, 0)


def test_zero_pivot_raises():
    with pytest.raises(SingularTile):
        lu_invert(partition(np.array([[0.0, 1.0], [1.0, 0.0]]), 1))
    with pytest.raises(SingularTile):
        block_lu(partition(np.array([[0.0, 1.0], [1.0, 0.0]]), 2))


def test_triangular_identity_and_diagonal(rng):
    inv, _ = triangular_invert(BlockMatrix.identity(16, 4), "lower")
    assert inv == BlockMatrix.identity(16, 4)
    d = np.diag(rng.uniform(1, 2, 16))
    inv, _ = triangular_invert(partition(d, 4), "upper")
    np.testing.assert_allclose(densify(inv), np.diag(1 / np.diag(d)), rtol=1e-15)


@pytest.mark.parametrize("side", ["lower", "upper"])
def test_triangular_against_substitution(side, rng):
    t = np.tril(rng.uniform(-1, 1, (64, 64)), -1) + np.eye(64)
    if side == "upper":
        t = t.T
    inv, trace = triangular_invert(partition(t, 8), side)
    ref = forward_substitution_inverse(t) if side == "lower" else forward_substitution_inverse(t.T).T
    np.testing.assert_allclose(densify(inv), ref, rtol=1e-10, atol=1e-10)
    assert trace.leaf_ops == 8


def test_triangular_bad_side():
    with pytest.raises(ValueError):
        triangular_invert(BlockMatrix.identity(4, 2), "diagonal")
