"""Sign-magnitude fixed-point codec and bitplane slicing.

Real vectors are coded as sign * code with code in [0, 2^B - 1] on the
scale (2^B - 1) / x_max, rounding half away from zero.  Planes are
indexed b = 1 (LSB) .. B (MSB); the sign applies uniformly to all
bitplanes of an element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def code_scale(num_bits: int, x_max: float) -> float:
    """Codes per unit of real magnitude: (2^B - 1) / x_max."""
    return ((1 << num_bits) - 1) / x_max


def quantize_codes(x: np.ndarray, num_bits: int, x_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized codec core: (codes, signs) for any input shape.

    Out-of-range magnitudes clamp to full scale; ties round away from zero.
    """
    if num_bits < 1:
        raise ValueError("num_bits must be >= 1")
    if x_max <= 0:
        raise ValueError("x_max must be positive")
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    full = (1 << num_bits) - 1
    t = np.abs(x) * (full / x_max)
    codes = np.minimum(np.floor(t + 0.5), full).astype(np.int64)
    signs = np.where(x >= 0, 1, -1).astype(np.int8)
    return codes, signs


def codes_to_planes(codes: np.ndarray, num_bits: int) -> np.ndarray:
    """Slice integer codes into a (B, N) binary plane stack, b=1 at index 0."""
    shifts = np.arange(num_bits, dtype=np.int64)
    return ((codes[None, :] >> shifts[:, None]) & 1).astype(np.uint8)


@dataclass(frozen=True)
class BitplaneMatrix:
    """Bitplane-sliced sign-magnitude codes for one input vector.

    planes has shape (B, N) with plane index b stored at row b-1;
    signs is a length-N +-1 vector shared by all planes of an element.
    """

    planes: np.ndarray
    signs: np.ndarray
    x_max: float

    def __post_init__(self) -> None:
        if self.planes.ndim != 2:
            raise ValueError("planes must be a (B, N) array")
        if self.signs.shape != (self.planes.shape[1],):
            raise ValueError("signs length must match the number of elements")
        if not np.all((self.planes == 0) | (self.planes == 1)):
            raise ValueError("plane entries must be 0/1")
        if not np.all(np.abs(self.signs) == 1):
            raise ValueError("signs must be +-1")
        if self.x_max <= 0:
            raise ValueError("x_max must be positive")

    @property
    def num_bits(self) -> int:
        return self.planes.shape[0]

    @property
    def num_elems(self) -> int:
        return self.planes.shape[1]

    @property
    def codes(self) -> np.ndarray:
        """Reassembled magnitude codes, one per element."""
        weights = (1 << np.arange(self.num_bits, dtype=np.int64))
        return (self.planes.astype(np.int64) * weights[:, None]).sum(axis=0)

    @classmethod
    def from_codes(cls, codes: np.ndarray, signs: np.ndarray, num_bits: int,
                   x_max: float = 1.0) -> "BitplaneMatrix":
        codes = np.asarray(codes, dtype=np.int64)
        if codes.min(initial=0) < 0 or codes.max(initial=0) > (1 << num_bits) - 1:
            raise ValueError("codes out of range for the given bit width")
        return cls(planes=codes_to_planes(codes, num_bits),
                   signs=np.asarray(signs, dtype=np.int8), x_max=x_max)


@dataclass(frozen=True)
class SignedBitplane:
    """One bitplane with the per-element signs folded in."""

    b: int
    bits: np.ndarray
    signs: np.ndarray

    @property
    def values(self) -> np.ndarray:
        """Element-wise sign * bit, in {-1, 0, +1}."""
        return (self.signs.astype(np.int64) * self.bits.astype(np.int64))


def quantize(x: np.ndarray, num_bits: int, x_max: float) -> BitplaneMatrix:
    """Quantize a real vector into bitplane-sliced sign-magnitude codes."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.ndim != 1:
        raise ValueError("quantize expects a 1-D vector")
    codes, signs = quantize_codes(x, num_bits, x_max)
    return BitplaneMatrix(planes=codes_to_planes(codes, num_bits),
                          signs=signs, x_max=x_max)


def dequantize(bp: BitplaneMatrix) -> np.ndarray:
    """Map codes back to reals: sign * code * x_max / (2^B - 1)."""
    return bp.signs * bp.codes * (bp.x_max / ((1 << bp.num_bits) - 1))


def signed_plane(bp: BitplaneMatrix, b: int) -> SignedBitplane:
    """Extract plane b (1 = LSB .. B = MSB) with signs applied."""
    if not 1 <= b <= bp.num_bits:
        raise IndexError(f"plane index {b} outside 1..{bp.num_bits}")
    return SignedBitplane(b=b, bits=bp.planes[b - 1].copy(), signs=bp.signs.copy())
