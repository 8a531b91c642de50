"""Tensor representation, dtypes, and the shared error taxonomy."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

MAX_NDIM = 5
_MAX_ELEMENT_BYTES = 2**63 - 1


class DType(enum.Enum):
    F32 = 1
    I64 = 2
    U8 = 3

    @property
    def size_bytes(self) -> int:
        return _DTYPE_SIZES[self]

    @property
    def numpy_dtype(self) -> np.dtype:
        return _DTYPE_NUMPY[self]


_DTYPE_SIZES = {DType.F32: 4, DType.I64: 8, DType.U8: 1}
_DTYPE_NUMPY = {
    DType.F32: np.dtype("<f4"),
    DType.I64: np.dtype("<i8"),
    DType.U8: np.dtype("u1"),
}
_NUMPY_DTYPE = {v: k for k, v in _DTYPE_NUMPY.items()}


class ErrorCode(enum.Enum):
    INVALID_SHAPE = 1
    DTYPE_MISMATCH = 2
    MODEL_NOT_FOUND = 3
    PROTOCOL_VERSION_MISMATCH = 4
    MESSAGE_TOO_LARGE = 5
    TRANSPORT_FAILURE = 6
    BACKEND_FAILURE = 7
    TIMEOUT = 8
    MALFORMED_FRAME = 9


class EdgeInferError(Exception):
    """Every surfaced error carries exactly one ErrorCode."""

    def __init__(self, code: ErrorCode, message: str):
        super().__init__(message)
        self.code = code

    def __repr__(self) -> str:
        return f"EdgeInferError({self.code.name}, {self.args[0]!r})"


def tensor_num_bytes(dtype: DType, shape: tuple[int, ...] | list[int]) -> int:
    """Payload size in bytes; rejects empty/zero/overflowing shapes."""
    if len(shape) == 0 or len(shape) > MAX_NDIM:
        raise EdgeInferError(
            ErrorCode.INVALID_SHAPE, f"shape must have 1..{MAX_NDIM} dims, got {len(shape)}"
        )
    total = dtype.size_bytes
    for dim in shape:
        if dim < 1:
            raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"dimension {dim} < 1 in {shape}")
        total *= dim
        if total > _MAX_ELEMENT_BYTES:
            raise EdgeInferError(ErrorCode.INVALID_SHAPE, f"byte size overflow for {shape}")
    return total


@dataclass(frozen=True)
class Tensor:
    """Immutable dtype + shape + contiguous row-major payload."""

    dtype: DType
    shape: tuple[int, ...]
    data: bytes = field(repr=False)

    def __post_init__(self):
        expected = tensor_num_bytes(self.dtype, self.shape)
        if len(self.data) != expected:
            raise EdgeInferError(
                ErrorCode.INVALID_SHAPE,
                f"payload is {len(self.data)} bytes, expected {expected} "
                f"for {self.dtype.name}{list(self.shape)}",
            )

    @property
    def num_elements(self) -> int:
        n = 1
        for d in self.shape:
            n *= d
        return n

    def to_numpy(self) -> np.ndarray:
        arr = np.frombuffer(self.data, dtype=self.dtype.numpy_dtype)
        return arr.reshape(self.shape)

    @classmethod
    def from_numpy(cls, arr: np.ndarray) -> "Tensor":
        key = np.dtype(arr.dtype).newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
        dtype = _NUMPY_DTYPE.get(np.dtype(key))
        if dtype is None:
            raise EdgeInferError(ErrorCode.DTYPE_MISMATCH, f"unsupported numpy dtype {arr.dtype}")
        return cls(dtype, tuple(int(d) for d in arr.shape), np.ascontiguousarray(arr).tobytes())


def tensor_create(dtype: DType, shape, data: bytes) -> Tensor:
    return Tensor(dtype, tuple(shape), bytes(data))


def tensor_equal_bitwise(a: Tensor, b: Tensor) -> bool:
    """True iff dtype, shape, and every payload byte match (NaNs by bytes)."""
    return a.dtype == b.dtype and a.shape == b.shape and a.data == b.data
