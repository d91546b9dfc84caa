"""決定木（CART）とランダムフォレスト。

- 分岐規則は「特徴量 < 閾値 なら左」
- 閾値は隣り合う異なる値の中点（float32 で保持）
- 不純度の減少が同じなら特徴量番号の小さい方、次に閾値の小さい方を選ぶ
- 木 i の乱数シードは derive_seed(seed, i)。並列数に関係なく同じモデルになる
"""

import json
import logging
import math
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from joblib import Parallel, delayed, effective_n_jobs
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from fraudbench import lowprec
from fraudbench.data import Dataset
from fraudbench.errors import InvalidThreshold
from fraudbench.lowprec import SINGLE32, PrecisionFormat

logger = logging.getLogger(__name__)

# これ以下の不純度減少では分岐しない
MIN_IMPURITY_DECREASE = 1e-12
# この差以内の不純度減少は同点として扱う
GAIN_TIE_TOLERANCE = 1e-12

_MASK64 = (1 << 64) - 1


class Criterion(str, Enum):
    gini = "gini"
    entropy = "entropy"


class ForestConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n_trees: int = Field(default=100, ge=1)
    max_depth: Optional[int] = Field(default=None, ge=0)
    min_samples_leaf: int = Field(default=1, ge=1)
    min_samples_split: int = Field(default=2, ge=2)
    features_per_split: Union[int, Literal["sqrt", "all"]] = "sqrt"
    criterion: Criterion = Criterion.gini
    bootstrap: bool = True
    seed: int = Field(default=0, ge=0, le=_MASK64)

    @field_validator("features_per_split", mode="before")
    @classmethod
    def parse_features_per_split(cls, value):
        if isinstance(value, str) and value.strip().isdigit():
            value = int(value)
        if isinstance(value, int) and value < 1:
            raise ValueError("features_per_split must be >= 1")
        return value

    def features_for(self, n_features: int) -> int:
        if self.features_per_split == "sqrt":
            return max(1, int(math.sqrt(n_features)))
        if self.features_per_split == "all":
            return n_features
        return min(self.features_per_split, n_features)


class SplitRule(BaseModel):
    model_config = ConfigDict(frozen=True)

    feature_index: int = Field(ge=0)
    threshold: float


class Leaf(BaseModel):
    class_counts: Tuple[int, int]


class Internal(BaseModel):
    rule: SplitRule
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Internal, Leaf]
Internal.model_rebuild()


# --------------------------------------------------
# 不純度
# --------------------------------------------------

def gini(counts) -> float:
    c = np.asarray(counts, dtype=np.float64)
    total = c.sum()
    if total == 0:
        return 0.0
    p = c / total
    return max(0.0, float(1.0 - np.dot(p, p)))


def entropy(counts) -> float:
    c = np.asarray(counts, dtype=np.float64)
    total = c.sum()
    if total == 0:
        return 0.0
    p = c[c > 0] / total
    return max(0.0, float(-(p * np.log2(p)).sum()))


def _impurity(c0: np.ndarray, c1: np.ndarray, criterion: Criterion) -> np.ndarray:
    total = c0 + c1
    with np.errstate(divide="ignore", invalid="ignore"):
        p0 = np.where(total > 0, c0 / total, 0.0)
        p1 = np.where(total > 0, c1 / total, 0.0)
        if criterion is Criterion.gini:
            return 1.0 - p0 * p0 - p1 * p1
        h0 = np.where(p0 > 0, p0 * np.log2(np.where(p0 > 0, p0, 1.0)), 0.0)
        h1 = np.where(p1 > 0, p1 * np.log2(np.where(p1 > 0, p1, 1.0)), 0.0)
    return -(h0 + h1)


def derive_seed(master: int, index: int) -> int:
    """SplitMix64 の finalizer。(master, index) から木ごとの64ビットシードを作る。"""
    z = (master + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


# --------------------------------------------------
# 木の表現
# --------------------------------------------------

class DecisionTree:
    """配列で持つ決定木。feature が -1 の節点は葉。子の番号は常に親より大きい。"""

    __slots__ = ("feature", "threshold", "left", "right", "counts", "seed")

    def __init__(self, feature, threshold, left, right, counts, seed: int):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float32)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.counts = np.asarray(counts, dtype=np.int64).reshape(-1, 2)
        self.seed = int(seed)
        for arr in (self.feature, self.threshold, self.left, self.right, self.counts):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def apply(self, X: np.ndarray, fmt: PrecisionFormat = SINGLE32) -> np.ndarray:
        """各行が到達する葉の番号。X は fmt の格納形式のままでよい。"""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            current = node[active]
            values = lowprec.widen(X[active, self.feature[current]], fmt)
            go_left = values < self.threshold[current]
            node[active] = np.where(go_left, self.left[current], self.right[current])
            active = active[self.feature[node[active]] >= 0]
        return node

    def fraud_fraction(self, X: np.ndarray, fmt: PrecisionFormat = SINGLE32) -> np.ndarray:
        leaves = self.counts[self.apply(X, fmt)]
        return leaves[:, 1] / leaves.sum(axis=1)

    def to_node(self) -> TreeNode:
        built: Dict[int, TreeNode] = {}
        for i in reversed(range(self.n_nodes)):
            if self.feature[i] < 0:
                built[i] = Leaf(class_counts=(int(self.counts[i, 0]), int(self.counts[i, 1])))
            else:
                rule = SplitRule(feature_index=int(self.feature[i]), threshold=float(self.threshold[i]))
                built[i] = Internal(
                    rule=rule, left=built.pop(int(self.left[i])), right=built.pop(int(self.right[i]))
                )
        return built[0]

    def to_dict(self) -> dict:
        built: Dict[int, dict] = {}
        for i in reversed(range(self.n_nodes)):
            if self.feature[i] < 0:
                built[i] = {"class_counts": [int(self.counts[i, 0]), int(self.counts[i, 1])]}
            else:
                built[i] = {
                    "rule": {"feature_index": int(self.feature[i]), "threshold": float(self.threshold[i])},
                    "left": built.pop(int(self.left[i])),
                    "right": built.pop(int(self.right[i])),
                }
        return built[0]

    @classmethod
    def from_dict(cls, root: dict, seed: int) -> "DecisionTree":
        feature: List[int] = []
        threshold: List[float] = []
        left: List[int] = []
        right: List[int] = []
        counts: List[Tuple[int, int]] = []
        stack = [(root, -1, "")]
        while stack:
            node, parent, side = stack.pop()
            i = len(feature)
            if parent >= 0:
                (left if side == "left" else right)[parent] = i
            left.append(-1)
            right.append(-1)
            if "class_counts" in node:
                feature.append(-1)
                threshold.append(0.0)
                counts.append(tuple(node["class_counts"]))
            else:
                feature.append(int(node["rule"]["feature_index"]))
                threshold.append(float(node["rule"]["threshold"]))
                counts.append((0, 0))
                stack.append((node["right"], i, "right"))
                stack.append((node["left"], i, "left"))
        return cls(feature, threshold, left, right, counts, seed)


class ForestModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    trees: List[DecisionTree]
    config: ForestConfig
    feature_count: int = 30

    @model_validator(mode="after")
    def check_trees(self) -> "ForestModel":
        if len(self.trees) != self.config.n_trees:
            raise ValueError(f"expected {self.config.n_trees} trees, got {len(self.trees)}")
        return self

    @property
    def seeds(self) -> List[int]:
        return [t.seed for t in self.trees]


# --------------------------------------------------
# 学習
# --------------------------------------------------

def _midpoint(a: np.float32, b: np.float32) -> np.float32:
    mid = np.float32((np.float64(a) + np.float64(b)) / 2.0)
    # a < mid <= b を満たさない（丸めで a に戻った、inf を含む）ときは上側の値
    if not (a < mid <= b):
        mid = np.float32(b)
    return mid


def _best_threshold(
    xs: np.ndarray, ys: np.ndarray, total1: int, parent: float, config: ForestConfig
) -> Optional[Tuple[float, np.float32]]:
    n = xs.size
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    left1 = np.cumsum(ys[:-1], dtype=np.float64)
    left0 = n_left - left1
    right1 = total1 - left1
    right0 = n_right - right1
    valid = (
        (xs[:-1] < xs[1:])
        & (n_left >= config.min_samples_leaf)
        & (n_right >= config.min_samples_leaf)
    )
    if not valid.any():
        return None
    child = (
        n_left * _impurity(left0, left1, config.criterion)
        + n_right * _impurity(right0, right1, config.criterion)
    ) / n
    gain = np.where(valid, parent - child, -np.inf)
    top = float(gain.max())
    # 同点なら閾値の小さい方（ソート順で先）
    pos = int(np.flatnonzero(gain >= top - GAIN_TIE_TOLERANCE)[0])
    return top, _midpoint(xs[pos], xs[pos + 1])


def _gather(X: np.ndarray, rows: np.ndarray, f: int, fmt: PrecisionFormat) -> np.ndarray:
    """格納形式の行列から1列分を取り出し、float32 に広げる。"""
    return lowprec.widen(X[rows, f], fmt)


def _find_split(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    counts: Tuple[int, int],
    rng: np.random.Generator,
    max_features: int,
    config: ForestConfig,
    fmt: PrecisionFormat = SINGLE32,
) -> Optional[Tuple[int, np.float32]]:
    parent = float(_impurity(np.float64(counts[0]), np.float64(counts[1]), config.criterion))
    y_node = y[idx]
    best: Optional[Tuple[int, np.float32]] = None
    best_gain = MIN_IMPURITY_DECREASE
    informative = 0
    # 一定値の特徴量は数えずに、max_features 個の有効な特徴量を調べるまで続ける
    for f in rng.permutation(X.shape[1]):
        if informative >= max_features:
            break
        values = _gather(X, idx, f, fmt)
        order = np.argsort(values, kind="stable")
        xs = values[order]
        if not xs[0] < xs[-1]:
            continue
        informative += 1
        found = _best_threshold(xs, y_node[order], counts[1], parent, config)
        if found is None:
            continue
        gain, threshold = found
        if best is None:
            better = gain > best_gain
        elif abs(gain - best_gain) <= GAIN_TIE_TOLERANCE:
            better = f < best[0]
        else:
            better = gain > best_gain
        if better:
            best_gain = max(best_gain, gain)
            best = (int(f), threshold)
    return best


def _grow(
    X: np.ndarray,
    y: np.ndarray,
    config: ForestConfig,
    rng: np.random.Generator,
    seed: int,
    fmt: PrecisionFormat = SINGLE32,
) -> DecisionTree:
    max_features = config.features_for(X.shape[1])
    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    counts: List[Tuple[int, int]] = []

    def add(rows: np.ndarray) -> int:
        n1 = int(y[rows].sum())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((rows.size - n1, n1))
        return len(feature) - 1

    root_rows = np.arange(X.shape[0])
    stack = [(add(root_rows), root_rows, 0)]
    while stack:
        node, rows, depth = stack.pop()
        c0, c1 = counts[node]
        if c0 == 0 or c1 == 0 or rows.size < config.min_samples_split:
            continue
        if config.max_depth is not None and depth >= config.max_depth:
            continue
        found = _find_split(X, y, rows, (c0, c1), rng, max_features, config, fmt)
        if found is None:
            continue
        f, thr = found
        go_left = _gather(X, rows, f, fmt) < thr
        left_rows, right_rows = rows[go_left], rows[~go_left]
        li = add(left_rows)
        ri = add(right_rows)
        feature[node], threshold[node], left[node], right[node] = f, float(thr), li, ri
        stack.append((ri, right_rows, depth + 1))
        stack.append((li, left_rows, depth + 1))

    return DecisionTree(feature, threshold, left, right, counts, seed)


def train_tree(data: Dataset, config: ForestConfig, tree_seed: int) -> DecisionTree:
    if data.n < 1:
        raise ValueError("cannot train a tree on an empty dataset")
    rng = np.random.default_rng(tree_seed)
    return _grow(data.storage, data.labels.astype(np.int64), config, rng, tree_seed, data.precision)


def _train_member(
    X: np.ndarray, y: np.ndarray, config: ForestConfig, seed: int, fmt: PrecisionFormat
) -> DecisionTree:
    rng = np.random.default_rng(seed)
    if config.bootstrap:
        rows = rng.integers(0, X.shape[0], size=X.shape[0])
        return _grow(X[rows], y[rows], config, rng, seed, fmt)
    return _grow(X, y, config, rng, seed, fmt)


def train_forest(data: Dataset, config: ForestConfig, n_jobs: int = 1) -> ForestModel:
    """格納形式（16ビットならビット列）のまま学習する。float32 に広げるのは節点ごとの1列だけ。"""
    if data.n < 1:
        raise ValueError("cannot train a forest on an empty dataset")
    X = data.storage
    y = data.labels.astype(np.int64)
    seeds = [derive_seed(config.seed, i) for i in range(config.n_trees)]
    # スレッドで並列化するとプロセス CPU 時間に全ワーカー分が入る
    trees = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_train_member)(X, y, config, s, data.precision) for s in seeds
    )
    logger.info(
        "trained %d trees on %d rows, %d bytes at %s (%d nodes total)",
        len(trees), data.n, data.matrix_bytes, data.precision.kind.value,
        sum(t.n_nodes for t in trees),
    )
    return ForestModel(trees=list(trees), config=config, feature_count=X.shape[1])


# --------------------------------------------------
# 予測
# --------------------------------------------------

def _mean_fraction(model: ForestModel, X: np.ndarray, fmt: PrecisionFormat) -> np.ndarray:
    total = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        total += tree.fraud_fraction(X, fmt)
    return total / len(model.trees)


def predict_proba_batch(model: ForestModel, rows, n_jobs: int = 1) -> np.ndarray:
    """rows は Dataset（格納形式のまま読む）か float32 に変換できる行列。"""
    if isinstance(rows, Dataset):
        X, fmt = rows.storage, rows.precision
    else:
        X, fmt = np.asarray(rows, dtype=np.float32), SINGLE32
    if X.ndim != 2 or X.shape[1] != model.feature_count:
        raise ValueError(f"expected rows with {model.feature_count} features, got shape {X.shape}")
    if n_jobs == 1 or X.shape[0] < 2:
        return _mean_fraction(model, X, fmt)
    # 行ごとの和の順序は木の順で固定なので、分割しても結果は同じ
    parts = np.array_split(np.arange(X.shape[0]), effective_n_jobs(n_jobs))
    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_mean_fraction)(model, X[part], fmt) for part in parts
    )
    return np.concatenate(results)


def predict_proba(model: ForestModel, row) -> float:
    x = np.asarray(row, dtype=np.float32)
    if x.shape != (model.feature_count,):
        raise ValueError(f"expected a row of {model.feature_count} features, got shape {x.shape}")
    return float(_mean_fraction(model, x[None, :], SINGLE32)[0])


def check_threshold(threshold: float) -> None:
    if not 0.0 <= threshold <= 1.0:
        raise InvalidThreshold(threshold)


def predict(model: ForestModel, rows, threshold: float = 0.5, n_jobs: int = 1) -> np.ndarray:
    check_threshold(threshold)
    return (predict_proba_batch(model, rows, n_jobs) >= threshold).astype(np.int8)


def labels_from_scores(scores: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    check_threshold(threshold)
    return (np.asarray(scores) >= threshold).astype(np.int8)


# --------------------------------------------------
# JSON
# --------------------------------------------------

def model_to_json(model: ForestModel, indent: Optional[int] = None) -> str:
    doc = {
        "feature_count": model.feature_count,
        "config": model.config.model_dump(mode="json"),
        "trees": [{"seed": t.seed, "root": t.to_dict()} for t in model.trees],
    }
    return json.dumps(doc, indent=indent)


def model_from_json(text: str) -> ForestModel:
    doc = json.loads(text)
    trees = [DecisionTree.from_dict(t["root"], t["seed"]) for t in doc["trees"]]
    return ForestModel(
        trees=trees,
        config=ForestConfig.model_validate(doc["config"]),
        feature_count=doc["feature_count"],
    )
