"""16ビット浮動小数点（binary16 / bfloat16）への量子化。

保存だけを16ビットで行い、計算は常に32ビットへ戻してから行う。
encode / decode はビット単位で決定的（最近接偶数丸め、非正規化数あり）。
"""

import logging
import warnings
from enum import Enum
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from fraudbench.errors import NonFiniteInput, OverflowToInfinity, UnsupportedRounding

logger = logging.getLogger(__name__)

# 警告に載せるオーバーフローセルの上限
MAX_REPORTED_CELLS = 20


class FormatKind(str, Enum):
    single32 = "single32"
    half16 = "half16"
    brain16 = "brain16"


class RoundingMode(str, Enum):
    nearest_even = "nearest_even"
    truncate = "truncate"


class PrecisionFormat(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: FormatKind
    sign_bits: int = 1
    exponent_bits: int
    mantissa_bits: int
    bias: int

    @model_validator(mode="after")
    def check_layout(self) -> "PrecisionFormat":
        if self.sign_bits != 1:
            raise ValueError("sign_bits must be 1")
        if self.width not in (16, 32):
            raise ValueError(f"unsupported width {self.width}")
        if self.bias != 2 ** (self.exponent_bits - 1) - 1:
            raise ValueError("bias must equal 2^(exponent_bits-1) - 1")
        return self

    @property
    def width(self) -> int:
        return self.sign_bits + self.exponent_bits + self.mantissa_bits

    @property
    def is_16bit(self) -> bool:
        return self.width == 16

    @property
    def bytes_per_cell(self) -> int:
        return self.width // 8

    @property
    def max_finite(self) -> float:
        return (2.0 - 2.0 ** -self.mantissa_bits) * 2.0 ** self.bias

    @property
    def min_normal(self) -> float:
        return 2.0 ** (1 - self.bias)

    @property
    def min_subnormal(self) -> float:
        return 2.0 ** (1 - self.bias - self.mantissa_bits)

    @property
    def infinity_bits(self) -> int:
        return ((1 << self.exponent_bits) - 1) << self.mantissa_bits

    @property
    def quiet_nan(self) -> int:
        return self.infinity_bits | (1 << (self.mantissa_bits - 1))

    @property
    def numpy_dtype_name(self) -> str:
        return {"single32": "float32", "half16": "float16", "brain16": "bfloat16"}[self.kind.value]


SINGLE32 = PrecisionFormat(kind=FormatKind.single32, exponent_bits=8, mantissa_bits=23, bias=127)
HALF16 = PrecisionFormat(kind=FormatKind.half16, exponent_bits=5, mantissa_bits=10, bias=15)
BRAIN16 = PrecisionFormat(kind=FormatKind.brain16, exponent_bits=8, mantissa_bits=7, bias=127)

FORMATS = {fmt.kind: fmt for fmt in (SINGLE32, HALF16, BRAIN16)}


def get_format(kind: Union[str, FormatKind, PrecisionFormat]) -> PrecisionFormat:
    if isinstance(kind, PrecisionFormat):
        return kind
    return FORMATS[FormatKind(kind)]


class Packed16(BaseModel):
    model_config = ConfigDict(frozen=True)

    bits: int = Field(ge=0, le=0xFFFF)
    format: PrecisionFormat

    @model_validator(mode="after")
    def check_format(self) -> "Packed16":
        if not self.format.is_16bit:
            raise ValueError("Packed16 requires a 16-bit format")
        return self

    def __repr__(self) -> str:
        return f"Packed16(0x{self.bits:04X}, {self.format.kind.value})"


class QuantizedMatrix(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    rows: int
    cols: int
    format: PrecisionFormat
    storage: np.ndarray
    overflow_cells: int = 0
    overflow_preview: List[Tuple[int, int]] = []

    @property
    def nbytes(self) -> int:
        return self.rows * self.cols * self.format.bytes_per_cell

    def decode(self) -> np.ndarray:
        return np.array(widen(self.storage, self.format), dtype=np.float32)


class QuantizationErrorReport(BaseModel):
    max_abs: float
    max_rel: float
    mean_rel: float
    overflow_cells: int = 0


# --------------------------------------------------
# ビット単位の変換
# --------------------------------------------------

def _require_16bit(fmt: PrecisionFormat) -> None:
    if not fmt.is_16bit:
        raise ValueError(f"{fmt.kind.value} is not a 16-bit storage format")


def _encode_brain16(bits: np.ndarray, rounding: RoundingMode) -> np.ndarray:
    if rounding is RoundingMode.truncate:
        out = (bits >> 16).astype(np.uint16)
    else:
        # 上位16ビットに偶数丸め。uint32 の加算は NaN 以外で桁あふれしない
        lsb = (bits >> 16) & np.uint32(1)
        out = ((bits + np.uint32(0x7FFF) + lsb) >> 16).astype(np.uint16)
    nan = (bits & np.uint32(0x7FFFFFFF)) > np.uint32(0x7F800000)
    out[nan] = BRAIN16.quiet_nan
    return out


def _encode_half16(values: np.ndarray, bits: np.ndarray) -> np.ndarray:
    sign = ((bits >> 16) & np.uint32(0x8000)).astype(np.uint16)
    mag = bits & np.uint32(0x7FFFFFFF)
    out = np.zeros(mag.shape, dtype=np.uint16)

    nan = mag > np.uint32(0x7F800000)
    # 65520 以上は偶数丸めで 65504 を超える
    overflow = (mag >= np.uint32(0x477FF000)) & ~nan
    normal = (mag >= np.uint32(0x38800000)) & ~overflow & ~nan
    low = mag < np.uint32(0x38800000)

    m = mag[normal]
    odd = (m >> 13) & np.uint32(1)
    out[normal] = ((m + np.uint32(0xFFF) + odd - np.uint32(0x38000000)) >> 13).astype(np.uint16)

    # 非正規化数: |x| * 2^24 は float64 で正確、rint は偶数丸め
    scaled = np.abs(values[low]).astype(np.float64) * 2.0 ** 24
    out[low] = np.rint(scaled).astype(np.uint16)

    out[overflow] = HALF16.infinity_bits
    out |= sign
    out[nan] = HALF16.quiet_nan
    return out


def encode_array(
    values,
    fmt: PrecisionFormat,
    rounding: Union[str, RoundingMode] = RoundingMode.nearest_even,
) -> np.ndarray:
    _require_16bit(fmt)
    rounding = RoundingMode(rounding)
    if rounding is RoundingMode.truncate and fmt.kind is not FormatKind.brain16:
        raise UnsupportedRounding("truncation is only offered for brain16")
    shape = np.shape(values)
    flat = np.ascontiguousarray(values, dtype=np.float32).reshape(-1)
    bits = flat.view(np.uint32)
    if fmt.kind is FormatKind.brain16:
        out = _encode_brain16(bits, rounding)
    else:
        out = _encode_half16(flat, bits)
    return out.reshape(shape)


def decode_array(bits, fmt: PrecisionFormat) -> np.ndarray:
    _require_16bit(fmt)
    shape = np.shape(bits)
    b = np.ascontiguousarray(bits, dtype=np.uint16).reshape(-1).astype(np.uint32)
    if fmt.kind is FormatKind.brain16:
        return (b << 16).view(np.float32).reshape(shape)

    sign = (b & np.uint32(0x8000)) << 16
    exp = (b >> 10) & np.uint32(0x1F)
    mant = b & np.uint32(0x3FF)
    out = np.zeros(b.shape, dtype=np.uint32)

    normal = (exp > 0) & (exp < 31)
    out[normal] = ((exp[normal] + np.uint32(112)) << 23) | (mant[normal] << 13)
    special = exp == 31
    out[special] = np.uint32(0x7F800000) | (mant[special] << 13)
    low = exp == 0
    out[low] = (mant[low].astype(np.float32) * np.float32(2.0 ** -24)).view(np.uint32)

    out |= sign
    return out.view(np.float32).reshape(shape)


def encode(
    value: float,
    fmt: PrecisionFormat,
    rounding: Union[str, RoundingMode] = RoundingMode.nearest_even,
) -> Packed16:
    bits = encode_array(np.array([value], dtype=np.float32), fmt, rounding)
    return Packed16(bits=int(bits[0]), format=fmt)


def decode(p: Packed16) -> np.float32:
    return decode_array(np.array([p.bits], dtype=np.uint16), p.format)[0]


def widen(storage, fmt: PrecisionFormat) -> np.ndarray:
    """格納値（16ビットならビット列）を計算用の float32 に戻す。Single32 はコピーしない。"""
    if not fmt.is_16bit:
        return np.asarray(storage, dtype=np.float32)
    return decode_array(storage, fmt)


def round_trip(values, fmt: PrecisionFormat, rounding=RoundingMode.nearest_even) -> np.ndarray:
    """保存精度での値を float32 で返す（Single32 はそのまま）。"""
    arr = np.asarray(values, dtype=np.float32)
    if not fmt.is_16bit:
        return arr.copy()
    return decode_array(encode_array(arr, fmt, rounding), fmt)


# --------------------------------------------------
# 行列単位の量子化
# --------------------------------------------------

def _as_finite_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    bad = ~np.isfinite(arr)
    if bad.any():
        raise NonFiniteInput(int(bad.sum()))
    return arr


def pack(
    m,
    fmt: PrecisionFormat,
    rounding: Union[str, RoundingMode] = RoundingMode.nearest_even,
) -> QuantizedMatrix:
    """量子化済みの行列（±inf を含みうる）をそのまま格納する。検査・警告なし。"""
    arr = np.asarray(m, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    rows, cols = arr.shape
    if not fmt.is_16bit:
        storage = arr.copy()
        storage.setflags(write=False)
        overflow = int(np.isinf(storage).sum())
        return QuantizedMatrix(
            rows=rows, cols=cols, format=fmt, storage=storage, overflow_cells=overflow
        )

    storage = encode_array(arr, fmt, rounding)
    storage.setflags(write=False)
    inf_rows, inf_cols = np.nonzero((storage & 0x7FFF) == fmt.infinity_bits)
    preview = list(
        zip(inf_rows[:MAX_REPORTED_CELLS].tolist(), inf_cols[:MAX_REPORTED_CELLS].tolist())
    )
    return QuantizedMatrix(
        rows=rows,
        cols=cols,
        format=fmt,
        storage=storage,
        overflow_cells=int(inf_rows.size),
        overflow_preview=preview,
    )


def quantize_matrix(
    m,
    fmt: PrecisionFormat,
    rounding: Union[str, RoundingMode] = RoundingMode.nearest_even,
) -> QuantizedMatrix:
    qm = pack(_as_finite_matrix(m), fmt, rounding)
    if qm.overflow_cells:
        # 致命的ではない。セルは ±inf のまま残す
        warning = OverflowToInfinity(qm.overflow_cells, qm.overflow_preview, fmt.kind.value)
        logger.warning("%s", warning)
        warnings.warn(warning, stacklevel=2)
    return qm


def quantization_error(
    m,
    fmt: PrecisionFormat,
    rounding: Union[str, RoundingMode] = RoundingMode.nearest_even,
) -> QuantizationErrorReport:
    arr = _as_finite_matrix(m)
    back = round_trip(arr, fmt, rounding)
    x = arr.astype(np.float64).reshape(-1)
    y = back.astype(np.float64).reshape(-1)
    finite = np.isfinite(y)
    x, y = x[finite], y[finite]
    diff = np.abs(y - x)
    nonzero = x != 0
    rel = diff[nonzero] / np.abs(x[nonzero])
    return QuantizationErrorReport(
        max_abs=float(diff.max()) if diff.size else 0.0,
        max_rel=float(rel.max()) if rel.size else 0.0,
        mean_rel=float(rel.mean()) if rel.size else 0.0,
        overflow_cells=int((~finite).sum()),
    )


def _raw_dtype(fmt: PrecisionFormat) -> str:
    return "<u2" if fmt.is_16bit else "<f4"


def dump_raw(qm: QuantizedMatrix, path: Union[str, Path]) -> Path:
    """行優先・リトルエンディアンでそのまま書き出す。"""
    path = Path(path)
    np.ascontiguousarray(qm.storage, dtype=_raw_dtype(qm.format)).tofile(path)
    logger.debug("dumped %dx%d %s matrix to %s", qm.rows, qm.cols, qm.format.kind.value, path)
    return path


def load_raw(path: Union[str, Path], rows: int, cols: int, fmt: PrecisionFormat) -> QuantizedMatrix:
    data = np.fromfile(Path(path), dtype=_raw_dtype(fmt))
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} cells, found {data.size}")
    storage = data.astype(np.uint16 if fmt.is_16bit else np.float32).reshape(rows, cols)
    storage.setflags(write=False)
    overflow = 0
    if fmt.is_16bit:
        overflow = int(((storage & 0x7FFF) == fmt.infinity_bits).sum())
    return QuantizedMatrix(rows=rows, cols=cols, format=fmt, storage=storage, overflow_cells=overflow)
