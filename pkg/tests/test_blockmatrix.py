import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockinv.blockmatrix import (
    BlockMatrix,
    MatrixBlock,
    Tag,
    arrange,
    break_mat,
    densify,
    multiply,
    partition,
    quadrant,
    scalar_mul,
    subtract,
)
from blockinv.exceptions import BadBlockSize, DimensionMismatch, NonPowerOfTwo, OddGrid
from blockinv.executor import Executor
from oracles import triple_loop


def random_bm(rng, b, bs):
    return partition(rng.normal(size=(b * bs, b * bs)), bs)


@st.composite
def block_matrices(draw, grids=(2, 4, 8)):
    b = draw(st.sampled_from(grids))
    bs = draw(st.sampled_from([1, 2, 4]))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_bm(np.random.default_rng(seed), b, bs)


def test_constructor_validation():
    t = np.zeros((2, 2))
    with pytest.raises(DimensionMismatch):
        BlockMatrix([MatrixBlock(0, 0, t)], 4, 2)  # gaps
    with pytest.raises(DimensionMismatch):
        BlockMatrix([MatrixBlock(0, 0, t), MatrixBlock(0, 0, t)], 2, 2)
    with pytest.raises(DimensionMismatch):
        BlockMatrix({(0, 0): np.zeros((3, 3))}, 2, 2)
    with pytest.raises(DimensionMismatch):
        BlockMatrix({(1, 0): t}, 2, 2)
    with pytest.raises(NonPowerOfTwo):
        BlockMatrix({(0, 0): np.zeros((3, 3))}, 3, 3)
    with pytest.raises(BadBlockSize):
        BlockMatrix({(0, 0): t}, 1, 2)


def test_tiles_are_read_only(rng):
    a = random_bm(rng, 2, 2)
    with pytest.raises(ValueError):
        a.tile(0, 0)[0, 0] = 1.0


def test_break_mat_two_by_two(rng):
    q = break_mat(random_bm(rng, 2, 2))
    for tag in Tag:
        assert q.count(tag) == 1
    assert all((tb.block.row, tb.block.col) == (0, 0) for tb in q.tagged)


@pytest.mark.parametrize("src,tag,local", [((2, 1), Tag.A21, (0, 1)), ((1, 1), Tag.A11, (1, 1))])
def test_break_mat_div_mod_rule(src, tag, local, rng):
    a = random_bm(rng, 4, 1)
    q = break_mat(a)
    hits = [tb for tb in q.tagged if tb.block.tile is a.tile(*src)]
    assert len(hits) == 1
    assert hits[0].tag is tag
    assert (hits[0].block.row, hits[0].block.col) == local


def test_break_mat_rejects_single_block(rng):
    with pytest.raises(OddGrid):
        break_mat(random_bm(rng, 1, 2))


def test_quadrant_examples(rng):
    a = random_bm(rng, 2, 4)
    q11 = quadrant(break_mat(a), Tag.A11)
    assert q11.b == 1 and q11.n == 4
    np.testing.assert_array_equal(q11.tile(0, 0), a.tile(0, 0))
    a = random_bm(rng, 8, 2)
    q = break_mat(a)
    d = densify(a)
    h = a.n // 2
    for tag in Tag:
        assert len(quadrant(q, tag)) == 16
    np.testing.assert_array_equal(densify(quadrant(q, Tag.A12)), d[:h, h:])
    np.testing.assert_array_equal(densify(quadrant(q, Tag.A21)), d[h:, :h])


@settings(max_examples=60)
@given(block_matrices())
def test_quadrants_partition_the_input(a):
    q = break_mat(a)
    quads = [quadrant(q, t) for t in Tag]
    ids = [id(t) for m in quads for _, _, t in m.blocks]
    assert len(ids) == len(set(ids)) == a.b**2
    assert set(ids) == {id(t) for _, _, t in a.blocks}


@settings(max_examples=200)
@given(block_matrices())
def test_arrange_break_round_trip(a):
    q = break_mat(a)
    back = arrange(*(quadrant(q, t) for t in (Tag.A11, Tag.A12, Tag.A21, Tag.A22)), q.half_size)
    assert back == a


@settings(max_examples=200)
@given(block_matrices())
def test_partition_densify_round_trip(a):
    assert partition(densify(a), a.block_size) == a


def test_arrange_identity():
    eye = BlockMatrix.identity(4, 2)
    zero = BlockMatrix.zeros(4, 2)
    assert arrange(eye, zero, zero, eye) == BlockMatrix.identity(8, 2)


def test_arrange_matches_dense_concatenation(rng):
    c = [random_bm(rng, 2, 2) for _ in range(4)]
    d = [densify(x) for x in c]
    np.testing.assert_array_equal(densify(arrange(*c)), np.block([[d[0], d[1]], [d[2], d[3]]]))


def test_arrange_rejects_mismatch(rng):
    a = random_bm(rng, 2, 2)
    with pytest.raises(DimensionMismatch):
        arrange(a, a, a, random_bm(rng, 4, 1))
    with pytest.raises(DimensionMismatch):
        arrange(a, a, a, a, half_size=3)


def test_scalar_mul(rng):
    a = random_bm(rng, 4, 2)
    assert scalar_mul(scalar_mul(a, -1), -1) == a
    z = scalar_mul(a, 0)
    assert z.keys() == a.keys() and not densify(z).any()
    np.testing.assert_array_equal(densify(scalar_mul(a, 2.5)), 2.5 * densify(a))


def test_subtract(rng):
    a, b = random_bm(rng, 4, 2), random_bm(rng, 4, 2)
    assert subtract(a, a) == BlockMatrix.zeros(8, 2)
    assert subtract(a, BlockMatrix.zeros(8, 2)) == a
    np.testing.assert_array_equal(densify(subtract(a, b)), densify(a) - densify(b))
    with pytest.raises(DimensionMismatch):
        subtract(a, random_bm(rng, 2, 4))


def test_multiply_units(rng):
    a = random_bm(rng, 4, 4)
    eye = BlockMatrix.identity(16, 4)
    assert multiply(a, eye) == a
    assert multiply(eye, a) == a


@pytest.mark.parametrize("b,bs", [(2, 8), (4, 16), (8, 32)])
def test_multiply_matches_dense_oracle(b, bs, rng):
    a, c = random_bm(rng, b, bs), random_bm(rng, b, bs)
    got = densify(multiply(a, c))
    ref = densify(a) @ densify(c)
    assert np.linalg.norm(got - ref) <= 1e-10 * np.linalg.norm(ref)


def test_multiply_small_exact_triple_loop(rng):
    # element blocks: the blocked sum over k is the textbook loop itself
    a, c = random_bm(rng, 4, 1), random_bm(rng, 4, 1)
    assert np.array_equal(densify(multiply(a, c)), triple_loop(densify(a), densify(c)))


@pytest.mark.parametrize("cores", [1, 2, 4, 8])
def test_multiply_independent_of_scheduling(cores, rng):
    a, c = random_bm(rng, 8, 4), random_bm(rng, 8, 4)
    ref = multiply(a, c)
    with Executor(cores) as ex:
        assert multiply(a, c, ex) == ref


@settings(max_examples=40)
@given(block_matrices(), st.floats(-4, 4, allow_nan=False))
def test_densify_homomorphism(a, s):
    d = densify(a)
    np.testing.assert_array_equal(densify(scalar_mul(a, s)), s * d)
    np.testing.assert_array_equal(densify(subtract(a, a)), d - d)


def test_densify_layout(rng):
    t = rng.normal(size=(2, 2))
    one = partition(t, 2)
    np.testing.assert_array_equal(densify(one), t)
    a = random_bm(rng, 2, 2)
    d = densify(a)
    np.testing.assert_array_equal(d[2:4, 0:2], a.tile(1, 0))


def test_partition_rejects_bad_sizes(rng):
    with pytest.raises(BadBlockSize):
        partition(np.eye(8), 3)
    with pytest.raises(BadBlockSize):
        partition(np.eye(6), 2)
    with pytest.raises(BadBlockSize):
        partition(np.eye(4), 8)
