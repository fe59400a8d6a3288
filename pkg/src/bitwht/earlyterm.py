"""Predictive early termination for bit-serial outputs.

Planes are consumed MSB-first.  After each comparator decision the final
output is bracketed by running bounds; once the bracket fits inside the
activation dead zone [-T, T] the element is provably zero post-activation
and its remaining cycles are skipped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .crossbar import CrossbarConfig, NoiseModel, _decisions
from .fixedpoint import BitplaneMatrix, code_scale


@dataclass(frozen=True)
class RunningBounds:
    """Running output and bracket after an MSB-first prefix of planes.

    next_b is the next plane to process (B down to 0); planes next_b+1..B
    are already consumed.
    """

    num_bits: int
    next_b: int
    y: int

    @property
    def processed(self) -> frozenset[int]:
        return frozenset(range(self.next_b + 1, self.num_bits + 1))

    @property
    def remaining(self) -> int:
        """Total weight still undecided: sum of 2^(b-1) over unprocessed planes."""
        return (1 << self.next_b) - 1

    @property
    def y_ub(self) -> int:
        return self.y + self.remaining

    @property
    def y_lb(self) -> int:
        return self.y - self.remaining


def start_bounds(num_bits: int) -> RunningBounds:
    if num_bits < 1:
        raise ValueError("num_bits must be >= 1")
    return RunningBounds(num_bits=num_bits, next_b=num_bits, y=0)


def update_bounds(rb: RunningBounds, decision: int, b: int) -> RunningBounds:
    """Consume plane b with comparator decision +-1; planes must go MSB-first."""
    if decision not in (-1, 1):
        raise ValueError("decision must be +-1")
    if b != rb.next_b:
        if b in rb.processed:
            raise ValueError(f"plane {b} already processed")
        raise ValueError(f"planes are consumed MSB-first; expected {rb.next_b}, got {b}")
    return RunningBounds(num_bits=rb.num_bits, next_b=b - 1,
                         y=rb.y + decision * (1 << (b - 1)))


def should_terminate(rb: RunningBounds, threshold: int) -> bool:
    """True iff every completion lands in the dead zone: y_UB <= T and y_LB >= -T."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return rb.y_ub <= threshold and rb.y_lb >= -threshold


@dataclass(frozen=True)
class TerminationTrace:
    """Per-output-element termination record for one or many array runs."""

    num_bits: int
    cycles: np.ndarray
    terminated: np.ndarray
    values: np.ndarray

    @property
    def mean_cycles(self) -> float:
        return float(np.mean(self.cycles))

    @property
    def lockstep_cycles(self) -> int:
        """Cycles a lockstep array needs: the slowest row wins."""
        return int(np.max(self.cycles))


def threshold_to_code(t: float, num_bits: int, x_max: float) -> int:
    """Convert a real-valued trained threshold to reconstructed-output units."""
    return int(np.floor(abs(t) * code_scale(num_bits, x_max) + 0.5))


def _walk_terminate(decisions: np.ndarray,
                    thresholds: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized MSB-first bound walk.

    decisions: (R, B) +-1 per (element, plane); thresholds: (R,) >= 0 ints.
    Returns (values, cycles, terminated); terminated elements report 0.
    """
    num_rows, num_bits = decisions.shape
    y = np.zeros(num_rows, dtype=np.int64)
    cycles = np.zeros(num_rows, dtype=np.int64)
    terminated = np.zeros(num_rows, dtype=bool)
    alive = np.ones(num_rows, dtype=bool)
    for b in range(num_bits, 0, -1):
        y[alive] += decisions[alive, b - 1] << (b - 1)
        cycles[alive] += 1
        if b > 1:  # bracket width is 0 after the last plane: nothing early about stopping there
            remaining = (1 << (b - 1)) - 1
            fire = alive & (np.abs(y) + remaining <= thresholds)
            terminated |= fire
            alive &= ~fire
    values = np.where(terminated, 0, y)
    return values, cycles, terminated


def f0_with_early_term(cfg: CrossbarConfig, bp: BitplaneMatrix,
                       thresholds: np.ndarray,
                       noise: NoiseModel | None = None) -> tuple[np.ndarray, TerminationTrace]:
    """Bit-serial transform with per-row predictive termination.

    thresholds holds one non-negative integer per output row, in the same
    reconstructed-output units as the running sum.  Terminated rows report
    0 (their post-activation value); all other rows match f0_apply exactly,
    including the noise stream when a noise model is supplied.
    """
    thresholds = np.asarray(thresholds, dtype=np.int64)
    if thresholds.shape != (cfg.rows,):
        raise ValueError(f"expected {cfg.rows} thresholds, got shape {thresholds.shape}")
    if np.any(thresholds < 0):
        raise ValueError("thresholds must be >= 0")
    decisions = _decisions(cfg, bp, noise)
    values, cycles, terminated = _walk_terminate(decisions, thresholds)
    trace = TerminationTrace(num_bits=bp.num_bits, cycles=cycles,
                             terminated=terminated, values=values)
    return values, trace


def random_termination_study(num_bits: int, length: int, trials: int,
                             thresholds: np.ndarray, seed: int) -> TerminationTrace:
    """Monte Carlo cycle study: one random input/weight pair per trial.

    Inputs use uniform codes in [0, 2^B - 1] with uniform +-1 signs; each
    trial's weight row is uniform +-1.  thresholds supplies one integer
    per trial, already in reconstructed-output units.
    """
    thresholds = np.asarray(thresholds, dtype=np.int64)
    if thresholds.shape != (trials,):
        raise ValueError("need one threshold per trial")
    if np.any(thresholds < 0):
        raise ValueError("thresholds must be >= 0")
    rng = np.random.default_rng(seed)
    codes = rng.integers(0, 1 << num_bits, size=(trials, length), dtype=np.int64)
    signs = rng.integers(0, 2, size=(trials, length), dtype=np.int64) * 2 - 1
    weights = rng.integers(0, 2, size=(trials, length), dtype=np.int64) * 2 - 1

    shifts = np.arange(num_bits, dtype=np.int64)
    planes = (codes[:, None, :] >> shifts[:, None]) & 1
    signed = signs[:, None, :] * planes
    psums = np.einsum("tn,tbn->tb", weights, signed)
    decisions = np.where(psums > 0, 1, -1)
    values, cycles, terminated = _walk_terminate(decisions, thresholds)
    return TerminationTrace(num_bits=num_bits, cycles=cycles,
                            terminated=terminated, values=values)


@dataclass(frozen=True)
class CycleHistogram:
    """Counts of termination cycles 1..B plus the mean."""

    num_bits: int
    counts: np.ndarray
    mean: float


def cycle_histogram(traces: TerminationTrace | Iterable[TerminationTrace]) -> CycleHistogram:
    """Histogram of cycles over one or more traces; errors on empty input."""
    if isinstance(traces, TerminationTrace):
        traces = [traces]
    traces = list(traces)
    if not traces:
        raise ValueError("no traces supplied")
    num_bits = traces[0].num_bits
    if any(t.num_bits != num_bits for t in traces):
        raise ValueError("traces mix different bit widths")
    cycles = np.concatenate([t.cycles for t in traces])
    if cycles.size == 0:
        raise ValueError("traces contain no elements")
    counts = np.bincount(cycles, minlength=num_bits + 1)[1:]
    return CycleHistogram(num_bits=num_bits, counts=counts,
                          mean=float(cycles.mean()))
