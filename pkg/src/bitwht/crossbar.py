"""Digital twin of the analog array: per-bitplane signed product sums,
1-bit comparator decisions, the approximate bit-serial transform, the
exact integer oracle, and the Gaussian PSUM-noise failure model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fixedpoint import BitplaneMatrix, SignedBitplane

_U64_MAX = (1 << 64) - 1


@dataclass(frozen=True)
class CrossbarConfig:
    """A +-1 transform matrix mapped onto the array; cols is the input length."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2:
            raise ValueError("matrix must be 2-D")
        if not np.all(np.abs(self.matrix) == 1):
            raise ValueError("matrix entries must be +-1")

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian PSUM perturbation: std = cols * sigma_ant, seeded stream."""

    sigma_ant: float
    safety_margin: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.sigma_ant < 0:
            raise ValueError("sigma_ant must be >= 0")
        if self.safety_margin < 0:
            raise ValueError("safety_margin must be >= 0")
        if not 0 <= self.seed <= _U64_MAX:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class PsumRecord:
    """One comparator event: exact and noisy product sums plus the decision."""

    row: int
    bitplane: int
    exact_psum: int
    noisy_psum: float
    decision: int


def psum_row(row: np.ndarray, plane: SignedBitplane) -> int:
    """Exact integer dot product of a +-1 row with one signed bitplane."""
    row = np.asarray(row, dtype=np.int64)
    values = plane.values
    if row.shape != values.shape:
        raise ValueError(f"length mismatch: row {row.shape}, plane {values.shape}")
    return int(row @ values)


def comparator(psum: float) -> int:
    """1-bit quantizer: +1 for strictly positive input, otherwise -1."""
    if not np.isfinite(psum):
        raise ValueError("comparator input must be finite")
    return 1 if psum > 0 else -1


def _exact_psums(cfg: CrossbarConfig, bp: BitplaneMatrix) -> np.ndarray:
    """All (rows, B) product sums of the matrix against signed bitplanes."""
    if cfg.cols != bp.num_elems:
        raise ValueError(f"matrix has {cfg.cols} columns, input has {bp.num_elems} elements")
    signed = bp.signs.astype(np.int64) * bp.planes.astype(np.int64)  # (B, N)
    return cfg.matrix.astype(np.int64) @ signed.T                     # (rows, B)


def _decisions(cfg: CrossbarConfig, bp: BitplaneMatrix,
               noise: NoiseModel | None) -> np.ndarray:
    """Comparator decisions (rows, B) as +-1, with optional seeded PSUM noise."""
    psums = _exact_psums(cfg, bp).astype(np.float64)
    if noise is not None:
        rng = np.random.default_rng(noise.seed)
        psums = psums + rng.normal(0.0, cfg.cols * noise.sigma_ant, size=psums.shape)
    return np.where(psums > 0, 1, -1).astype(np.int64)


def f0_apply(cfg: CrossbarConfig, bp: BitplaneMatrix,
             noise: NoiseModel | None = None) -> np.ndarray:
    """Bit-serial approximate transform: sum of comparator decisions times 2^(b-1).

    Per row i: y_i = sum_b comparator(psum_ib + eps_ib) * 2^(b-1).  Outputs
    are odd integers in [-(2^B - 1), 2^B - 1].
    """
    decisions = _decisions(cfg, bp, noise)
    weights = 1 << np.arange(bp.num_bits, dtype=np.int64)
    return decisions @ weights


def f0_apply_codes(cfg: CrossbarConfig, codes: np.ndarray, signs: np.ndarray,
                   num_bits: int) -> np.ndarray:
    """Batched noiseless f0: codes/signs shaped (..., N) -> outputs (..., rows)."""
    codes = np.asarray(codes, dtype=np.int64)
    signs = np.asarray(signs, dtype=np.int64)
    if codes.shape[-1] != cfg.cols:
        raise ValueError(f"matrix has {cfg.cols} columns, input has {codes.shape[-1]} elements")
    shifts = np.arange(num_bits, dtype=np.int64)
    planes = (codes[..., None, :] >> shifts[:, None]) & 1       # (..., B, N)
    signed = signs[..., None, :] * planes
    psums = signed @ cfg.matrix.astype(np.int64).T              # (..., B, rows)
    decisions = np.where(psums > 0, 1, -1)
    weights = 1 << shifts
    return np.einsum("...br,b->...r", decisions, weights)


def exact_oracle(cfg: CrossbarConfig, bp: BitplaneMatrix) -> np.ndarray:
    """Ground truth: the full-precision integer product, no per-plane quantization."""
    if cfg.cols != bp.num_elems:
        raise ValueError(f"matrix has {cfg.cols} columns, input has {bp.num_elems} elements")
    signed_codes = bp.signs.astype(np.int64) * bp.codes
    return cfg.matrix.astype(np.int64) @ signed_codes


def psum_records(cfg: CrossbarConfig, bp: BitplaneMatrix,
                 noise: NoiseModel | None = None) -> list[PsumRecord]:
    """Per-(row, plane) comparator trace, for inspection and cross-checking."""
    exact = _exact_psums(cfg, bp)
    noisy = exact.astype(np.float64)
    if noise is not None:
        rng = np.random.default_rng(noise.seed)
        noisy = noisy + rng.normal(0.0, cfg.cols * noise.sigma_ant, size=noisy.shape)
    records = []
    for i in range(cfg.rows):
        for b in range(1, bp.num_bits + 1):
            records.append(PsumRecord(row=i, bitplane=b,
                                      exact_psum=int(exact[i, b - 1]),
                                      noisy_psum=float(noisy[i, b - 1]),
                                      decision=comparator(noisy[i, b - 1])))
    return records


def failure_stats(cfg: CrossbarConfig, noise: NoiseModel, trials: int,
                  num_bits: int = 8) -> float:
    """Monte Carlo processing-failure rate over random input/weight trials.

    Each trial draws a fresh +-1 matrix of cfg's shape, uniform codes in
    [0, 2^B - 1] and uniform signs.  A per-plane comparator decision fails
    iff the noisy decision differs from the noiseless one AND the exact
    product sum lies outside the safety band |psum| < cols * SM.  The trial
    stream depends only on the seed, so grids sweeping (sigma_ant, SM) with
    a shared seed reuse identical trials and noise draws.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rows, cols = cfg.rows, cfg.cols
    rng = np.random.default_rng(noise.seed)
    codes = rng.integers(0, 1 << num_bits, size=(trials, cols), dtype=np.int64)
    signs = rng.integers(0, 2, size=(trials, cols), dtype=np.int64) * 2 - 1
    weights = rng.integers(0, 2, size=(trials, rows, cols), dtype=np.int64) * 2 - 1
    z = rng.standard_normal(size=(trials, rows, num_bits))

    shifts = np.arange(num_bits, dtype=np.int64)
    planes = (codes[:, None, :] >> shifts[:, None]) & 1          # (T, B, N)
    signed = (signs[:, None, :] * planes).astype(np.int64)
    psums = np.einsum("trn,tbn->trb", weights, signed)           # (T, rows, B)

    clean = psums > 0
    noisy = (psums + cols * noise.sigma_ant * z) > 0
    flipped = clean != noisy
    outside_margin = np.abs(psums) >= cols * noise.safety_margin
    return float(np.mean(flipped & outside_margin))
