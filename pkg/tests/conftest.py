import os

# fraudbench.database はインポート時にエンジンを作るので先に設定する
os.environ["DATABASE_URL"] = "sqlite://"

import numpy as np
import pytest

from fraudbench import data
from fraudbench.data import COLUMNS


@pytest.fixture
def synth_small():
    return data.synth_generate(400, 0.1, 4.0, seed=1)


@pytest.fixture
def write_csv_rows(tmp_path):
    """ヘッダー + 行（文字列のリスト）から CSV を書く。"""

    def _write(rows, header=COLUMNS, name="data.csv"):
        path = tmp_path / name
        lines = [",".join(header)] + [",".join(str(v) for v in row) for row in rows]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return _write


def make_row(label=0, time=0.0, amount=1.0, fill=0.0):
    return [time, *([fill] * 28), amount, label]


def toy_dataset(features, labels):
    """任意の幅の特徴量を 30 列に広げた Single32 データセット（残りの列は 0）。"""
    x = np.zeros((len(labels), data.N_FEATURES), dtype=np.float32)
    f = np.asarray(features, dtype=np.float32).reshape(len(labels), -1)
    x[:, : f.shape[1]] = f
    return data.Dataset.from_arrays(x, np.asarray(labels))
