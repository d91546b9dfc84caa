import warnings

import numpy as np
import pytest

from fraudbench import data, lowprec, resample
from fraudbench.errors import InsufficientMinority, KTooLarge, SingleClass
from fraudbench.lowprec import HALF16
from fraudbench.resample import ResampleKind, ResampleMode

from tests.conftest import toy_dataset


def _rows(d):
    return sorted(map(tuple, np.column_stack([d.features, d.labels]).tolist()))


@pytest.fixture
def imbalanced():
    return data.synth_generate(300, 0.1, 3.0, seed=4)


# --------------------------------------------------
# under / over
# --------------------------------------------------

def test_undersample_counts(imbalanced):
    out = resample.undersample(imbalanced, seed=0)
    assert out.class_counts() == (30, 30)
    minority = imbalanced.features[imbalanced.labels == 1]
    np.testing.assert_array_equal(
        np.sort(out.features[out.labels == 1], axis=0), np.sort(minority, axis=0)
    )


def test_undersample_balanced_keeps_counts():
    d = toy_dataset([[0], [1], [2], [3]], [0, 1, 0, 1])
    assert resample.undersample(d, seed=0).class_counts() == (2, 2)


def test_single_class_rejected():
    d = toy_dataset([[0], [1]], [0, 0])
    with pytest.raises(SingleClass):
        resample.undersample(d, seed=0)
    with pytest.raises(SingleClass):
        resample.oversample_duplicate(d, seed=0)
    with pytest.raises(SingleClass):
        resample.smote(d)


def test_oversample_duplicates_minority():
    d = toy_dataset(np.arange(13), [0] * 10 + [1] * 3)
    out = resample.oversample_duplicate(d, seed=5)
    assert out.class_counts() == (10, 10)
    assert out.n - d.n == 7
    originals = set(map(tuple, d.features[d.labels == 1].tolist()))
    added = out.features[d.n:]
    assert all(tuple(row) in originals for row in added.tolist())


def test_oversample_balanced_is_identity():
    d = toy_dataset([[0], [1]], [0, 1])
    assert resample.oversample_duplicate(d, seed=0) is d


# --------------------------------------------------
# k-NN
# --------------------------------------------------

def _brute_force_knn(points, k):
    out = []
    for i, p in enumerate(points):
        dist = [(float(np.sum((q.astype(np.float32) - p) ** 2, dtype=np.float32)), j) for j, q in enumerate(points) if j != i]
        out.append([j for _, j in sorted(dist)[:k]])
    return np.array(out)


@pytest.mark.parametrize("n_jobs", [1, 4])
def test_knn_matches_brute_force(n_jobs):
    rng = np.random.default_rng(8)
    points = rng.integers(0, 6, size=(60, 30)).astype(np.float32)
    got = resample.nearest_minority_neighbors(points, 5, n_jobs)
    np.testing.assert_array_equal(got, _brute_force_knn(points, 5))


def test_knn_ties_prefer_lower_index():
    points = np.zeros((4, 30), dtype=np.float32)
    got = resample.nearest_minority_neighbors(points, 2)
    assert got.tolist() == [[1, 2], [0, 2], [0, 1], [0, 1]]


# --------------------------------------------------
# SMOTE
# --------------------------------------------------

def test_smote_balances_and_keeps_originals(imbalanced):
    out, prov = resample.smote_with_provenance(imbalanced, k=5, seed=1)
    n0, _ = imbalanced.class_counts()
    assert out.class_counts() == (n0, n0)
    assert out.n == 2 * n0
    np.testing.assert_array_equal(out.features[: imbalanced.n], imbalanced.features)
    assert prov.base_index.size == out.n - imbalanced.n


def test_smote_points_lie_on_segments(imbalanced):
    out, prov = resample.smote_with_provenance(imbalanced, k=5, seed=2)
    synthetic = out.features[imbalanced.n:].astype(np.float64)
    base = imbalanced.features[prov.base_index].astype(np.float64)
    neighbor = imbalanced.features[prov.neighbor_index].astype(np.float64)
    assert np.all(imbalanced.labels[prov.base_index] == 1)
    assert np.all(imbalanced.labels[prov.neighbor_index] == 1)
    assert np.all((prov.gap >= 0) & (prov.gap < 1))
    # float32 の丸め1回分だけ区間からはみ出しうる
    slack = np.maximum(np.abs(base), np.abs(neighbor)) * 2.0 ** -23
    assert np.all(synthetic >= np.minimum(base, neighbor) - slack)
    assert np.all(synthetic <= np.maximum(base, neighbor) + slack)

    minority = np.flatnonzero(imbalanced.labels == 1)
    knn = resample.nearest_minority_neighbors(imbalanced.features[minority], 5)
    local = {int(g): i for i, g in enumerate(minority)}
    for b, nb in zip(prov.base_index, prov.neighbor_index):
        assert minority[knn[local[int(b)]]].tolist().count(nb) == 1


def test_smote_round_robin_bases(imbalanced):
    _, prov = resample.smote_with_provenance(imbalanced, k=3, seed=0)
    minority = np.flatnonzero(imbalanced.labels == 1)
    expected = minority[np.arange(prov.base_index.size) % minority.size]
    np.testing.assert_array_equal(prov.base_index, expected)


def test_smote_is_deterministic_across_threads(imbalanced):
    a = resample.smote(imbalanced, k=5, seed=7, n_jobs=1)
    b = resample.smote(imbalanced, k=5, seed=7, n_jobs=4)
    np.testing.assert_array_equal(a.features, b.features)
    np.testing.assert_array_equal(a.labels, b.labels)


def test_smote_balanced_input_is_identity():
    d = toy_dataset([[0], [1], [2], [3]], [0, 1, 0, 1])
    assert resample.smote(d, k=1) is d


def test_smote_clamps_k():
    d = toy_dataset([[0], [1], [2], [3], [4], [10], [11]], [0, 0, 0, 0, 0, 1, 1])
    with pytest.warns(KTooLarge) as record:
        out = resample.smote(d, k=5, seed=0)
    assert record[0].message.clamped == 1
    assert out.class_counts() == (5, 5)


def test_smote_needs_two_minority_rows():
    d = toy_dataset([[0], [1], [2]], [0, 0, 1])
    with pytest.raises(InsufficientMinority):
        resample.smote(d)


def test_smote_requantizes_to_dataset_precision():
    d = data.synth_generate(200, 0.1, 3.0, seed=3, precision=HALF16)
    out = resample.smote(d, k=5, seed=0)
    assert out.precision == HALF16
    np.testing.assert_array_equal(out.features, lowprec.round_trip(out.features, HALF16))
    assert out.storage.dtype == np.uint16
    np.testing.assert_array_equal(out.storage[: d.n], d.storage)


def test_smote_handles_infinite_coordinates():
    x = np.zeros((6, 30))
    x[:, 0] = 100000.0
    x[:, 1] = [0, 1, 2, 3, 4, 5]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        d = data.Dataset.from_arrays(x, [0, 0, 0, 0, 1, 1], HALF16)
    out = resample.smote(d, k=1, seed=0)
    assert np.all(np.isinf(out.features[:, 0]))
    assert not np.isnan(out.features).any()


def test_resample_dispatch(imbalanced):
    assert resample.resample(imbalanced, ResampleMode(), seed=0) is imbalanced
    under = resample.resample(imbalanced, ResampleMode(kind=ResampleKind.under), seed=0)
    assert under.class_counts() == (30, 30)
    smoted = resample.resample(imbalanced, ResampleMode(kind="smote", k=3), seed=0)
    assert smoted.class_counts() == (270, 270)


def test_resample_mode_rejects_zero_k():
    with pytest.raises(ValueError):
        ResampleMode(kind="smote", k=0)
