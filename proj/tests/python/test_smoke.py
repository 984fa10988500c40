import numpy as np
import pytest

import mkmh


@pytest.fixture(scope="module")
def data():
    return mkmh.generate_synthetic(
        n_clusters=8, points_per_cluster=50, dim=16, spread=0.2, seed=3,
        n_queries=20, n_learning=500, gt_k=10)


def test_synthetic_shapes(data):
    assert data["base"].shape == (400, 16)
    assert data["queries"].shape == (20, 16)
    assert data["gt"].shape == (20, 10)
    assert len(data["base_labels"]) == 400


def test_train_and_encode_variants(data):
    cb = mkmh.train(data["learning"], 16, seed=1)
    assert cb.k == 16 and cb.dim == 16
    hist = cb.objective_history
    assert all(b <= a * (1 + 1e-9) for a, b in zip(hist, hist[1:]))
    x = data["queries"][0]
    assert mkmh.Encoder("n", cb, n=4).encode(x).sum() == 4
    assert mkmh.Encoder("t", cb).encode(x).sum() >= 1
    dual = mkmh.train_dual(data["learning"], 8, seed=1)
    code = mkmh.Encoder("n2", dual, n=3).encode(x)
    assert code.shape == (16,) and code.sum() == 6


def test_threshold_and_metrics():
    assert mkmh.threshold_delta([2.0, 8.0], "geom") == pytest.approx(4.0)
    assert mkmh.threshold_delta([2.0, 8.0]) == 5.0
    assert mkmh.average_precision([1, 0, 1], 2) == pytest.approx(5 / 6, abs=1e-12)
    assert mkmh.mean_average_precision([1.0, 0.5]) == 0.75


def test_full_shortlist_matches_ground_truth(data):
    cb = mkmh.train(data["learning"], 16, seed=2)
    index = mkmh.Index.build(mkmh.Encoder("t", cb), data["base"])
    assert len(index) == 400
    ids, scores = index.search(data["queries"], L=400, R=10)
    assert ids.shape == (20, 10)
    assert np.all(np.diff(scores, axis=1) >= 0)
    np.testing.assert_array_equal(ids, mkmh.brute_force_gt(data["base"], data["queries"], 10))
    assert mkmh.recall_at_r(ids, data["gt"], 1) == 1.0


def test_round_trips(tmp_path, data):
    path = str(tmp_path / "base.fvecs")
    mkmh.write_vectors(path, data["base"])
    np.testing.assert_array_equal(mkmh.read_vectors(path), data["base"])
    np.testing.assert_array_equal(mkmh.read_vectors(path, first=10, count=5), data["base"][10:15])

    cb = mkmh.train(data["learning"], 16, seed=4)
    cb.save(str(tmp_path / "cb.bin"))
    assert mkmh.Codebook.load(str(tmp_path / "cb.bin")) == cb

    index = mkmh.Index.build(mkmh.Encoder("n", cb, n=5), data["base"])
    index.save(str(tmp_path / "idx.bin"))
    for base in (data["base"], path):
        back = mkmh.Index.load(str(tmp_path / "idx.bin"), base)
        a = index.search(data["queries"], L=50, R=5)
        b = back.search(data["queries"], L=50, R=5)
        np.testing.assert_array_equal(a[0], b[0])


def test_errors(tmp_path):
    bad = tmp_path / "bad.fvecs"
    bad.write_bytes(b"\x02\x00\x00\x00\x00\x00")
    with pytest.raises(mkmh.FormatError):
        mkmh.read_vectors(str(bad))
    with pytest.raises(ValueError):
        mkmh.write_vectors(str(tmp_path / "x.bvecs"), np.array([[300.0, 1.0]]), "bvecs")
    with pytest.raises(ValueError):
        mkmh.train(np.zeros((3, 2), dtype=np.float32), 1)
