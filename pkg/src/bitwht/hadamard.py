"""Hadamard/Walsh matrix construction and blockwise fast transforms.

Matrices are kept as exact +-1 integer grids (int8 storage).  Fast
transforms run an in-place butterfly in int64 for integer inputs and
float64 otherwise, so integer transforms are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

RowOrder = Literal["natural", "sequency"]

# Largest supported matrix order (2^MAX_ORDER rows).
MAX_ORDER = 12


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class WalshMatrix:
    """A 2^k x 2^k +-1 transform matrix in natural or sequency row order."""

    order_k: int
    entries: np.ndarray
    row_order: RowOrder

    def __post_init__(self) -> None:
        m = 1 << self.order_k
        if self.entries.shape != (m, m):
            raise ValueError(f"expected shape {(m, m)}, got {self.entries.shape}")
        if not np.all(np.abs(self.entries) == 1):
            raise ValueError("matrix entries must be +-1")

    @property
    def size(self) -> int:
        return 1 << self.order_k

    def to_csv(self, path) -> None:
        """Write the +-1 entries as integer CSV, row-major."""
        np.savetxt(path, self.entries, fmt="%d", delimiter=",")


@dataclass(frozen=True)
class BwhtPlan:
    """Blocking layout for a transform of arbitrary input dimension.

    The input is split into `num_blocks` chunks of `block_size`; only the
    last chunk is zero-padded (by `pad_len`).
    """

    input_dim: int
    block_size: int
    num_blocks: int
    pad_len: int

    @property
    def padded_dim(self) -> int:
        return self.num_blocks * self.block_size


def build_hadamard(k: int) -> WalshMatrix:
    """Construct the natural-order (Sylvester) Hadamard matrix of order 2^k."""
    if k < 0:
        raise ValueError("order k must be >= 0")
    if k > MAX_ORDER:
        raise ValueError(f"order k={k} exceeds the supported cap {MAX_ORDER}")
    h = np.array([[1]], dtype=np.int8)
    for _ in range(k):
        h = np.block([[h, h], [h, -h]]).astype(np.int8)
    return WalshMatrix(order_k=k, entries=h, row_order="natural")


def sign_changes(rows: np.ndarray) -> np.ndarray:
    """Count adjacent sign changes per row of a +-1 matrix."""
    if rows.shape[1] < 2:
        return np.zeros(rows.shape[0], dtype=np.int64)
    return np.count_nonzero(rows[:, 1:] != rows[:, :-1], axis=1)


@lru_cache(maxsize=None)
def sequency_permutation(k: int) -> tuple[int, ...]:
    """Row permutation taking the natural Hadamard matrix to sequency order.

    Rows are sorted by adjacent sign-change count; for a Hadamard matrix
    the counts are a permutation of 0..2^k-1, so the sort is a bijection.
    """
    h = build_hadamard(k).entries
    return tuple(int(i) for i in np.argsort(sign_changes(h), kind="stable"))


def to_sequency(h: WalshMatrix) -> WalshMatrix:
    """Reorder a natural-order matrix so row r has exactly r sign changes."""
    if h.row_order != "natural":
        raise ValueError("to_sequency expects a natural-order matrix")
    perm = np.array(sequency_permutation(h.order_k), dtype=np.int64)
    return WalshMatrix(order_k=h.order_k, entries=h.entries[perm], row_order="sequency")


def build_walsh(k: int) -> WalshMatrix:
    """Sequency-ordered Walsh matrix of order 2^k."""
    return to_sequency(build_hadamard(k))


def fwht(x: np.ndarray, order: RowOrder = "natural") -> np.ndarray:
    """Fast Walsh-Hadamard transform along the last axis (unnormalized).

    Equals the explicit matrix-vector product with the natural- or
    sequency-ordered matrix; exact for integer inputs.  Accepts batched
    input (transform applied to each row of the trailing axis).
    """
    a = np.asarray(x)
    n = a.shape[-1]
    if not _is_pow2(n):
        raise ValueError(f"transform length must be a power of two, got {n}")
    k = n.bit_length() - 1
    dtype = np.int64 if np.issubdtype(a.dtype, np.integer) else np.float64
    y = a.astype(dtype, copy=True)
    lead = y.shape[:-1]
    h = 1
    while h < n:
        y = y.reshape(lead + (n // (2 * h), 2, h))
        top = y[..., 0, :] + y[..., 1, :]
        bot = y[..., 0, :] - y[..., 1, :]
        y = np.stack((top, bot), axis=-2).reshape(lead + (n,))
        h *= 2
    y = y.reshape(lead + (n,))
    if order == "sequency":
        perm = np.array(sequency_permutation(k), dtype=np.int64)
        y = y[..., perm]
    elif order != "natural":
        raise ValueError(f"unknown row order {order!r}")
    return y


def bwht_plan(input_dim: int, block_size: int) -> BwhtPlan:
    """Plan a blockwise transform: uniform power-of-two blocks, last one padded."""
    if input_dim <= 0:
        raise ValueError("input_dim must be positive")
    if not _is_pow2(block_size):
        raise ValueError(f"block_size must be a power of two, got {block_size}")
    num_blocks = -(-input_dim // block_size)
    pad_len = num_blocks * block_size - input_dim
    return BwhtPlan(input_dim=input_dim, block_size=block_size,
                    num_blocks=num_blocks, pad_len=pad_len)


def _blocks(plan: BwhtPlan, x: np.ndarray) -> np.ndarray:
    """Zero-pad to the planned length and reshape to (..., num_blocks, block_size)."""
    if plan.pad_len:
        pad = [(0, 0)] * (x.ndim - 1) + [(0, plan.pad_len)]
        x = np.pad(x, pad)
    return x.reshape(x.shape[:-1] + (plan.num_blocks, plan.block_size))


def bwht_forward(plan: BwhtPlan, x: np.ndarray, order: RowOrder = "natural") -> np.ndarray:
    """Blockwise forward transform; output length num_blocks * block_size."""
    x = np.asarray(x)
    if x.shape[-1] != plan.input_dim:
        raise ValueError(f"expected input length {plan.input_dim}, got {x.shape[-1]}")
    y = fwht(_blocks(plan, x), order)
    return y.reshape(x.shape[:-1] + (plan.padded_dim,))


def bwht_inverse(plan: BwhtPlan, y: np.ndarray, order: RowOrder = "natural") -> np.ndarray:
    """Invert bwht_forward: per-block transform scaled by 1/block_size, padding dropped."""
    y = np.asarray(y)
    if y.shape[-1] != plan.padded_dim:
        raise ValueError(f"expected input length {plan.padded_dim}, got {y.shape[-1]}")
    blocks = y.reshape(y.shape[:-1] + (plan.num_blocks, plan.block_size))
    x = fwht(blocks, order) / plan.block_size
    x = x.reshape(y.shape[:-1] + (plan.padded_dim,))
    return x[..., : plan.input_dim]
