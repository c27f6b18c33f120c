import numpy as np
import pytest

from arcm import Dataset, SyntheticSpec, gen_synthetic, load_csv, load_libsvm, standardize
from arcm.data import subsample, write_csv, write_libsvm
from arcm.errors import ConfigurationError, ParseError


def test_libsvm_single_line(tmp_path):
    path = tmp_path / "one.libsvm"
    path.write_text("1 1:0.5 3:-2\n")
    ds = load_libsvm(path)
    assert ds.n == 1 and ds.dim == 3
    assert np.array_equal(ds.features[0], [0.5, 0.0, -2.0])
    assert ds.labels[0] == 1.0


def test_libsvm_label_mapping(tmp_path):
    path = tmp_path / "two.libsvm"
    path.write_text("+1 1:1\n-1 2:1\n")
    ds = load_libsvm(path)
    assert ds.dim == 2
    assert np.array_equal(ds.labels, [1.0, 0.0])

    path2 = tmp_path / "onetwo.libsvm"
    path2.write_text("1 1:1\n2 1:2\n")
    assert np.array_equal(load_libsvm(path2).labels, [0.0, 1.0])

    path3 = tmp_path / "verbatim.libsvm"
    path3.write_text("3 1:1\n7 1:2\n")
    assert np.array_equal(load_libsvm(path3).labels, [3.0, 7.0])


def test_libsvm_roundtrip_bit_identical(tmp_path):
    ds = gen_synthetic(SyntheticSpec(n=100, d=7, label_noise=0.1,
                                     task="classification", seed=5))
    path = tmp_path / "rt.libsvm"
    write_libsvm(ds, path)
    back = load_libsvm(path)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)


def test_libsvm_parse_errors(tmp_path):
    bad_tok = tmp_path / "bad.libsvm"
    bad_tok.write_text("1 1:0.5\n1 2:oops\n")
    with pytest.raises(ParseError, match=":2"):
        load_libsvm(bad_tok)

    non_incr = tmp_path / "order.libsvm"
    non_incr.write_text("1 2:1 2:3\n")
    with pytest.raises(ParseError, match="strictly increasing"):
        load_libsvm(non_incr)

    non_finite = tmp_path / "inf.libsvm"
    non_finite.write_text("1 1:inf\n")
    with pytest.raises(ParseError, match="non-finite"):
        load_libsvm(non_finite)


def test_csv_basic_and_header(tmp_path):
    plain = tmp_path / "a.csv"
    plain.write_text("0.1,0.2,1\n0.3,0.4,0\n")
    ds = load_csv(plain, label_col=2)
    assert ds.n == 2 and ds.dim == 2
    assert np.array_equal(ds.labels, [1.0, 0.0])
    assert np.array_equal(ds.features, [[0.1, 0.2], [0.3, 0.4]])

    headed = tmp_path / "b.csv"
    headed.write_text("a,b,y\n0.1,0.2,1\n0.3,0.4,0\n")
    ds2 = load_csv(headed, label_col=2)
    assert np.array_equal(ds2.features, ds.features)
    assert np.array_equal(ds2.labels, ds.labels)


def test_csv_roundtrip(tmp_path):
    ds = gen_synthetic(SyntheticSpec(n=60, d=5, task="regression", seed=9))
    path = tmp_path / "rt.csv"
    write_csv(ds, path)
    back = load_csv(path, label_col=5)
    assert np.max(np.abs(back.features - ds.features)) <= 1e-12
    assert np.max(np.abs(back.labels - ds.labels)) <= 1e-12


def test_csv_parse_errors(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2,3\n4,5\n")
    with pytest.raises(ParseError, match="row 2"):
        load_csv(ragged, label_col=2)

    alpha = tmp_path / "alpha.csv"
    alpha.write_text("1,2,3\n4,x,6\n")
    with pytest.raises(ParseError, match="row 2, column 1"):
        load_csv(alpha, label_col=2)

    nan_cell = tmp_path / "nan.csv"
    nan_cell.write_text("1,2,3\n4,nan,6\n")
    with pytest.raises(ParseError, match="non-finite"):
        load_csv(nan_cell, label_col=2)


def test_standardize_two_point_population_convention():
    ds = Dataset(np.array([[1.0], [3.0]]), np.array([0.0, 1.0]))
    out = standardize(ds)
    assert np.allclose(out.features[:, 0], [-1.0, 1.0], atol=1e-15)


def test_standardize_constant_column_and_moments():
    ds = Dataset(np.array([[5.0, 1.0], [5.0, 2.0], [5.0, 6.0]]),
                 np.zeros(3))
    out = standardize(ds)
    assert np.array_equal(out.features[:, 0], [0.0, 0.0, 0.0])

    rng = np.random.Generator(np.random.Philox(2))
    big = Dataset(rng.standard_normal((300, 12)) * 3 + 1, np.zeros(300))
    std = standardize(big)
    mu = std.features.mean(axis=0)
    var = np.mean((std.features - mu) ** 2, axis=0)
    assert np.max(np.abs(mu)) <= 1e-12
    assert np.max(np.abs(var - 1.0)) <= 1e-10


def test_standardize_needs_two_samples():
    ds = Dataset(np.array([[1.0, 2.0]]), np.array([0.0]))
    with pytest.raises(ConfigurationError):
        standardize(ds)


def test_synthetic_determinism():
    spec = SyntheticSpec(n=10, d=3, seed=42)
    a = gen_synthetic(spec)
    b = gen_synthetic(spec)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)


def test_synthetic_noiseless_labels_follow_hidden_score():
    spec = SyntheticSpec(n=50, d=4, label_noise=0.0, task="classification",
                         seed=7)
    ds = gen_synthetic(spec)
    # regenerate the hidden scorer by replaying the stream
    rng = np.random.Generator(np.random.Philox(7))
    feats = rng.standard_normal((50, 4))
    hidden = rng.standard_normal(4)
    assert np.array_equal(ds.features, feats)
    assert np.array_equal(ds.labels, (feats @ hidden > 0).astype(float))


def test_synthetic_flip_rate_matches_label_noise():
    flipped = total = 0
    for seed in range(20):
        noisy = gen_synthetic(SyntheticSpec(n=200, d=50, label_noise=0.05,
                                            task="classification", seed=seed))
        clean = gen_synthetic(SyntheticSpec(n=200, d=50, label_noise=0.0,
                                            task="classification", seed=seed))
        flipped += int(np.sum(noisy.labels != clean.labels))
        total += 200
    assert abs(flipped / total - 0.05) <= 0.04


def test_synthetic_regression_labels_have_noise():
    ds = gen_synthetic(SyntheticSpec(n=100, d=3, task="regression", seed=1))
    rng = np.random.Generator(np.random.Philox(1))
    feats = rng.standard_normal((100, 3))
    hidden = rng.standard_normal(3)
    assert not np.allclose(ds.labels, feats @ hidden)


def test_subsample_is_deterministic_and_ordered():
    ds = gen_synthetic(SyntheticSpec(n=100, d=3, seed=4))
    a = subsample(ds, 20, seed=1)
    b = subsample(ds, 20, seed=1)
    assert np.array_equal(a.features, b.features)
    assert a.n == 20
    # rows keep their original relative order
    idx = [int(np.flatnonzero((ds.features == row).all(axis=1))[0])
           for row in a.features]
    assert idx == sorted(idx)


def test_dataset_rejects_bad_shapes_and_nonfinite():
    with pytest.raises(ConfigurationError):
        Dataset(np.zeros((3, 2)), np.zeros(2))
    with pytest.raises(ConfigurationError):
        Dataset(np.array([[np.nan, 1.0]]), np.zeros(1))
