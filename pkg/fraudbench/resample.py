"""学習データのクラス不均衡を補正する（アンダー／オーバーサンプリング、SMOTE）。

テスト用データには絶対に適用しない。呼び出し側（bench）の責任。
"""

import logging
import warnings
from enum import Enum
from typing import Tuple

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from fraudbench.data import Dataset
from fraudbench.errors import InsufficientMinority, KTooLarge, SingleClass

logger = logging.getLogger(__name__)

# k-NN の距離計算で一度に展開するセル数の上限
KNN_CELL_BUDGET = 4_000_000


class ResampleKind(str, Enum):
    none = "none"
    under = "under"
    over = "over"
    smote = "smote"


class ResampleMode(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ResampleKind = ResampleKind.none
    k: int = Field(default=5, ge=1)


class SmoteProvenance(BaseModel):
    """合成行ごとの (基準行, 近傍行, 係数)。行番号は入力データセット内の位置。"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    base_index: np.ndarray
    neighbor_index: np.ndarray
    gap: np.ndarray


def _split_classes(d: Dataset) -> Tuple[np.ndarray, np.ndarray, int]:
    """(少数クラスの行, 多数クラスの行, 少数クラスのラベル) を返す。同数なら 1 を少数扱い。"""
    idx0 = np.flatnonzero(d.labels == 0)
    idx1 = np.flatnonzero(d.labels == 1)
    if idx0.size == 0 or idx1.size == 0:
        present = [label for label, idx in ((0, idx0), (1, idx1)) if idx.size]
        raise SingleClass(present)
    if idx1.size <= idx0.size:
        return idx1, idx0, 1
    return idx0, idx1, 0


def undersample(train: Dataset, seed: int) -> Dataset:
    minority, majority, _ = _split_classes(train)
    rng = np.random.default_rng(seed)
    kept = rng.choice(majority, size=minority.size, replace=False)
    rows = np.concatenate([minority, kept])
    rows = rows[rng.permutation(rows.size)]
    logger.info("undersampled %d majority rows to %d", majority.size, kept.size)
    return train.take(rows)


def oversample_duplicate(train: Dataset, seed: int) -> Dataset:
    minority, majority, _ = _split_classes(train)
    missing = majority.size - minority.size
    if missing == 0:
        return train
    rng = np.random.default_rng(seed)
    copies = rng.choice(minority, size=missing, replace=True)
    logger.info("duplicated %d minority rows", missing)
    return train.take(np.concatenate([np.arange(train.n), copies]))


# --------------------------------------------------
# SMOTE
# --------------------------------------------------

def _safe_diff(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # 同じ値（inf 同士を含む）の差は 0
    with np.errstate(invalid="ignore"):
        return np.where(a == b, np.float32(0), a - b)


def _knn_chunk(points: np.ndarray, start: int, stop: int, k: int) -> np.ndarray:
    diff = _safe_diff(points[start:stop, None, :], points[None, :, :])
    dist = np.square(diff, dtype=np.float32).sum(axis=2, dtype=np.float32).astype(np.float64)
    # 自分自身は NaN にして末尾へ
    dist[np.arange(stop - start), np.arange(start, stop)] = np.nan
    # stable ソートなので同距離は元の行番号の小さい方が先
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


def nearest_minority_neighbors(points: np.ndarray, k: int, n_jobs: int = 1) -> np.ndarray:
    """各点の k 近傍（自分を除く）の行番号。ユークリッド距離、float32 で計算。"""
    points = np.asarray(points, dtype=np.float32)
    m, width = points.shape
    step = max(1, KNN_CELL_BUDGET // max(1, m * width))
    bounds = [(s, min(s + step, m)) for s in range(0, m, step)]
    chunks = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_knn_chunk)(points, start, stop, k) for start, stop in bounds
    )
    if not chunks:
        return np.empty((0, k), dtype=np.int64)
    return np.concatenate(chunks).astype(np.int64)


def _interpolate(base: np.ndarray, neighbor: np.ndarray, gap: np.ndarray) -> np.ndarray:
    base = base.astype(np.float64)
    step = _safe_diff(neighbor.astype(np.float64), base)
    with np.errstate(invalid="ignore"):
        moved = base + gap[:, None] * step
    # 差が 0、または係数が 0 の座標は基準点の値をそのまま使う
    keep = (step == 0) | (gap[:, None] == 0)
    return np.where(keep, base, moved)


def smote_with_provenance(
    train: Dataset, k: int = 5, seed: int = 0, n_jobs: int = 1
) -> Tuple[Dataset, SmoteProvenance]:
    minority, majority, minority_label = _split_classes(train)
    if minority.size < 2:
        raise InsufficientMinority(int(minority.size))
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k >= minority.size:
        clamped = minority.size - 1
        warning = KTooLarge(k, clamped)
        logger.warning("%s", warning)
        warnings.warn(warning, stacklevel=2)
        k = clamped

    missing = majority.size - minority.size
    if missing == 0:
        empty = np.empty(0, dtype=np.int64)
        return train, SmoteProvenance(base_index=empty, neighbor_index=empty, gap=np.empty(0))

    # k-NN と補間に使うのは少数クラスの行だけ。そこだけ float32 に広げる
    points = train.rows(minority)
    neighbors = nearest_minority_neighbors(points, k, n_jobs)

    rng = np.random.default_rng(seed)
    # 基準点は少数クラスを順番に巡回する
    base_local = np.arange(missing) % minority.size
    choice = rng.integers(0, k, size=missing)
    gap = rng.random(missing)
    neighbor_local = neighbors[base_local, choice]

    synthetic = _interpolate(points[base_local], points[neighbor_local], gap)
    out = train.extend(synthetic, np.full(missing, minority_label, dtype=np.int8))

    logger.info(
        "smote generated %d synthetic rows from %d minority rows (k=%d)",
        missing, minority.size, k,
    )
    provenance = SmoteProvenance(
        base_index=minority[base_local],
        neighbor_index=minority[neighbor_local],
        gap=gap,
    )
    return out, provenance


def smote(train: Dataset, k: int = 5, seed: int = 0, n_jobs: int = 1) -> Dataset:
    return smote_with_provenance(train, k, seed, n_jobs)[0]


def resample(d: Dataset, mode: ResampleMode, seed: int, n_jobs: int = 1) -> Dataset:
    if mode.kind is ResampleKind.none:
        return d
    if mode.kind is ResampleKind.under:
        return undersample(d, seed)
    if mode.kind is ResampleKind.over:
        return oversample_duplicate(d, seed)
    return smote(d, mode.k, seed, n_jobs)
