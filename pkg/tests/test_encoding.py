import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spiking_rc.dataset import Dataset, MadelonParams, generate_madelon
from spiking_rc.encoding import (
    DriveConfig,
    DriveScale,
    Mask,
    encode_datapoint,
    encode_dataset,
    make_mask,
    mask_features,
    write_signals_csv,
)
from spiking_rc.errors import ParameterError


def test_mask_default_shape():
    m = make_mask(500, 2048, "uniform01", seed=1)
    assert m.matrix.shape == (500, 2048)
    assert m.n_v == 2048


def test_mask_single_binary():
    m = make_mask(1, 1, "binary_pm1", seed=4)
    assert m.matrix.shape == (1, 1)
    assert m.matrix[0, 0] in (-1.0, 1.0)


def test_mask_uniform_statistics():
    m = make_mask(10, 64, "uniform01", seed=2).matrix
    assert 0.4 <= m.mean() <= 0.6
    assert m.min() >= 0 and m.max() <= 1


@pytest.mark.parametrize("dist,lo,hi", [("uniform_pm1", -1, 1), ("binary_pm1", -1, 1)])
def test_mask_supports(dist, lo, hi):
    m = make_mask(20, 30, dist, seed=0).matrix
    assert m.min() >= lo and m.max() <= hi
    if dist == "binary_pm1":
        assert set(np.unique(m)) == {-1.0, 1.0}


def test_mask_seeded():
    a = make_mask(5, 7, seed=9).matrix
    b = make_mask(5, 7, seed=9).matrix
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("args", [(0, 5), (5, 0)])
def test_mask_zero_dims(args):
    with pytest.raises(ParameterError):
        make_mask(*args)


def test_mask_unknown_distribution():
    with pytest.raises(ParameterError):
        make_mask(2, 2, "gaussian")


def test_zero_features_give_offset():
    mask = make_mask(6, 10, seed=3)
    sig = encode_datapoint(np.zeros(6), mask, DriveConfig(), DriveScale(gain=2.0, offset=0.3))
    np.testing.assert_array_equal(sig.node_values[:10], 0.3)
    np.testing.assert_array_equal(sig.node_values[10:], 0.0)
    assert sig.node_values.size == 18


def test_hand_matrix_product():
    mask = Mask(np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]), seed=0)
    sig = encode_datapoint(np.array([2.0, 3.0]), mask)
    np.testing.assert_array_equal(sig.node_values[:3], [2.0, 3.0, 5.0])
    assert sig.n_v == 3


def test_masking_matches_triple_loop(rng):
    f, nv = 7, 11
    mask = Mask(rng.normal(size=(f, nv)), seed=0)
    x = rng.normal(size=f)
    expected = [sum(x[i] * mask.matrix[i, j] for i in range(f)) for j in range(nv)]
    sig = encode_datapoint(x, mask)
    assert np.max(np.abs(sig.node_values[:nv] - expected)) < 1e-12


def test_dimension_mismatch():
    with pytest.raises(ParameterError):
        encode_datapoint(np.ones(3), make_mask(4, 5))


def test_padding_and_duration():
    cfg = DriveConfig()
    assert cfg.n_pad * cfg.theta_s == pytest.approx(2e-9)
    ds = generate_madelon(MadelonParams(n_points=300, seed=7))
    signals = encode_dataset(ds, make_mask(500, 2048, seed=1), cfg)
    assert len(signals) == 300
    assert all(s.n_nodes == 2056 for s in signals)
    # non-padding segment of one datapoint lasts 512 ns
    assert signals[0].n_v * signals[0].theta_s == pytest.approx(512e-9, rel=1e-12)
    total = sum(s.duration_s for s in signals)
    assert total == pytest.approx(300 * 2056 * 250e-12, rel=1e-12)
    assert total == pytest.approx(154.2e-6, rel=1e-12)
    for s in signals:
        assert np.all(s.node_values[-8:] == 0.0)
        assert s.node_values[:-8].min() >= 0.0 and s.node_values[:-8].max() <= 1.0


def test_empty_dataset():
    ds = Dataset(np.zeros((0, 4)), np.zeros(0, dtype=int), ("unknown",) * 4)
    assert encode_dataset(ds, make_mask(4, 3)) == []


def test_shared_scale_spans_drive_range():
    ds = generate_madelon(MadelonParams(n_points=20, seed=2))
    signals = encode_dataset(ds, make_mask(500, 64, seed=5))
    body = np.stack([s.node_values[:-8] for s in signals])
    assert body.min() == pytest.approx(0.0, abs=1e-12)
    assert body.max() == pytest.approx(1.0, abs=1e-12)
    assert len({id(s.scale) for s in signals}) == 1


@settings(max_examples=50, deadline=None)
@given(
    a=st.floats(-10, 10),
    b=st.floats(-10, 10),
    seed=st.integers(0, 2**16),
)
def test_linearity_before_scaling(a, b, seed):
    rng = np.random.default_rng(seed)
    mask = make_mask(8, 12, "uniform_pm1", seed=seed)
    x, y = rng.normal(size=8), rng.normal(size=8)
    lhs = mask_features(a * x + b * y, mask)
    rhs = a * mask_features(x, mask) + b * mask_features(y, mask)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_padding_purity(seed):
    rng = np.random.default_rng(seed)
    mask = make_mask(5, 9, seed=seed)
    scale = DriveScale(gain=0.7, offset=0.1, clip=(0.0, 1.0))
    sig = encode_datapoint(rng.normal(size=5) * 100, mask, DriveConfig(reset_level=0.0), scale)
    np.testing.assert_array_equal(sig.node_values[-8:], 0.0)
    again = encode_datapoint(sig.node_values[:5] * 0 + rng.normal(size=5), mask, DriveConfig(), scale)
    np.testing.assert_array_equal(again.node_values[-8:], sig.node_values[-8:])


def test_determinism():
    ds = generate_madelon(MadelonParams(n_points=10, seed=2))
    mask = make_mask(500, 32, seed=5)
    a = encode_dataset(ds, mask)
    b = encode_dataset(ds, mask)
    assert all(x.node_values.tobytes() == y.node_values.tobytes() for x, y in zip(a, b))


def test_signals_csv(tmp_path):
    mask = Mask(np.eye(2), seed=0)
    sigs = [encode_datapoint(np.array([1.0, 2.0]), mask, DriveConfig(n_pad=1))] * 2
    write_signals_csv(sigs, tmp_path / "drive.csv")
    rows = (tmp_path / "drive.csv").read_text().splitlines()
    assert rows[0] == "time_s,value"
    assert len(rows) == 1 + 6
    assert rows[4].startswith("7.500000e-10,1")
