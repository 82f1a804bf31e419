import io as _io

import numpy as np
import pytest

from blockinv import bench
from blockinv.bench import (
    SWEEP_HEADER,
    BenchRecord,
    GenSpec,
    compare_model,
    fit_constant,
    gen,
    gen_dense,
    invert_timed,
    local_minima,
    read_sweep,
    residual_inf,
    write_csv,
)
from blockinv.blockmatrix import BlockMatrix, partition
from blockinv.cost import CostParams, CostWeights, levelsum
from blockinv.exceptions import BadSpec, InsufficientData


def test_sweep_header_exact():
    assert SWEEP_HEADER == [
        "algorithm", "n", "block_size", "b", "cores", "run_id", "status", "wall_ms",
        "leaf_ms", "breakmat_ms", "xy_ms", "multiply_ms", "subtract_ms", "scalarmul_ms",
        "arrange_ms", "additional_ms", "shuffle_bytes", "residual_inf",
    ]


@pytest.mark.parametrize("kind", ["spd", "dd", "uniform"])
def test_gen_is_deterministic(kind):
    a = gen(GenSpec(32, 8, 7, kind))
    assert a == gen(GenSpec(32, 8, 7, kind))
    assert a != gen(GenSpec(32, 8, 8, kind))


def test_gen_ranges():
    u = gen_dense(GenSpec(64, 64, 1, "uniform"))
    assert u.min() >= -1.0 and u.max() < 1.0
    s = gen_dense(GenSpec(64, 64, 1, "spd"))
    np.testing.assert_array_equal(s, s.T)
    assert np.linalg.eigvalsh(s).min() >= 64 - 1e-9
    d = gen_dense(GenSpec(64, 64, 1, "dd"))
    off = np.abs(d).sum(axis=1) - np.abs(np.diag(d))
    assert (np.abs(np.diag(d)) > off).all()


@pytest.mark.parametrize(
    "kw",
    [dict(n=12, block_size=4), dict(n=16, block_size=32), dict(n=16, block_size=4, seed=-1),
     dict(n=16, block_size=4, seed=2**64), dict(n=16, block_size=4, kind="hilbert")],
)
def test_bad_spec(kw):
    with pytest.raises(BadSpec):
        GenSpec(**kw)


def test_residual_of_identity_is_zero():
    eye = BlockMatrix.identity(16, 4)
    assert residual_inf(eye, eye) == 0.0
    assert residual_inf(np.eye(4), 2 * np.eye(4)) == 1.0


def test_invert_timed_fills_record():
    a = gen(GenSpec(64, 16, 3))
    inv, rec = invert_timed(a, "spin", 2, run_id=5)
    assert rec.status == "ok" and rec.run_id == "5"
    assert (rec.n, rec.block_size, rec.b, rec.cores) == (64, 16, 4, 2)
    assert rec.wall_ms > 0 and rec.multiply_ms > 0 and rec.leaf_ms > 0
    assert rec.shuffle_bytes > 0
    assert rec.residual_inf == residual_inf(a, inv) <= 1e-6
    _, lurec = invert_timed(a, "lu", 1)
    assert lurec.additional_ms > 0


def test_invert_timed_singular():
    a = partition(np.array([[0.0, 1.0], [1.0, 0.0]]), 1)
    inv, rec = invert_timed(a, "spin", 1)
    assert inv is None and rec.status == "singular"
    with pytest.raises(BadSpec):
        invert_timed(a, "qr", 1)


def test_repeats_give_identical_residuals():
    a = gen(GenSpec(64, 8, 11))
    res = {invert_timed(a, "lu", c)[1].residual_inf for c in (1, 2, 4)}
    assert len(res) == 1


def test_small_sweep_and_csv_round_trip(tmp_path):
    p = tmp_path / "s.csv"
    recs = bench.sweep(32, algorithms=("spin", "lu"), b_values=(1, 2, 4), cores=2, repeats=2, out=p)
    assert len(recs) == 2 * 3 * 2 + 2 * 3
    assert [r.run_id for r in recs[-6:]] == ["median"] * 6
    back = read_sweep(p)
    assert [r.row() for r in back] == [r.row() for r in recs]
    meds = bench.cell_medians(back, "spin", n=32, cores=2)
    assert list(meds) == [1, 2, 4]


def test_sweep_rejects_bad_arguments():
    with pytest.raises(BadSpec):
        bench.sweep(32, b_values=(3,))
    with pytest.raises(BadSpec):
        bench.sweep(32, b_values=(64,))
    with pytest.raises(BadSpec):
        bench.sweep(32, repeats=0)
    with pytest.raises(BadSpec):
        bench.sweep(32, algorithms=("qr",))


def test_read_sweep_rejects_foreign_csv(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(InsufficientData):
        read_sweep(p)


def test_write_csv_to_stream():
    buf = _io.StringIO()
    write_csv(buf, ["x", "y"], [[1, 0.1]])
    assert buf.getvalue() == "x,y\n1,0.1\n"


def test_fit_constant():
    assert fit_constant([1.0, 2.0], [3.0, 6.0]) == 3.0
    with pytest.raises(InsufficientData):
        fit_constant([0.0, 0.0], [1.0, 2.0])


def test_local_minima():
    assert local_minima([5, 3, 4, 2, 6]) == [1, 3]
    assert local_minima([1, 2, 3]) == []
    assert local_minima([3, 3, 3]) == []


def _synthetic(n, cores, bs, k):
    w = CostWeights()
    recs = []
    for b in bs:
        t = k * levelsum("spin", CostParams(n, b, cores, w)).total
        recs.append(BenchRecord("spin", n, n // b, b, cores, "0", wall_ms=t))
    return recs


def test_compare_on_model_generated_data():
    recs = _synthetic(8192, 30, [2, 4, 8, 16, 32], 2.5e-9)
    cmp_ = compare_model(recs, 8192, 30)
    assert cmp_.constant == pytest.approx(2.5e-9, rel=1e-12)
    assert all(r["ratio"] == pytest.approx(1.0, rel=1e-12) for r in cmp_.rows)
    assert cmp_.measured_argmin == cmp_.predicted_argmin == 16
    assert cmp_.argmin_agree and cmp_.sign_agreement == 1.0
    assert len(cmp_.csv_rows()[0]) == 5


def test_compare_needs_three_points():
    recs = _synthetic(1024, 4, [2, 4], 1.0)
    with pytest.raises(InsufficientData):
        compare_model(recs, 1024, 4)
    with pytest.raises(InsufficientData):
        compare_model(recs, 2048, 4)


def test_scalability_rows():
    a = gen(GenSpec(64, 16, 0))
    rows = bench.scalability(a, "spin", (2, 1), repeats=1)
    assert [r[0] for r in rows] == [1, 2]
    c, w, ideal, eff = rows[0]
    assert ideal == w and eff == 1.0
    assert rows[1][2] == pytest.approx(w / 2)
