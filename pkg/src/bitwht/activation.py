"""Soft-threshold activation with trainable dead-zone widths.

S_T(x) shrinks x toward zero by |T| and zeroes everything inside the
dead zone (-|T|, |T|).  T itself may be negative; only its magnitude
shapes the function, which keeps the parameter free to roam during
gradient training while the activation stays well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ThresholdVector:
    """One trainable threshold per channel, with the codec full scale attached."""

    values: np.ndarray
    t_max: float

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("thresholds must be 1-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("thresholds must be finite")
        if not (self.t_max > 0):
            raise ValueError("t_max must be > 0")

    @property
    def g(self) -> np.ndarray:
        """Normalized magnitudes |T|/T_max, clamped away from 0 for log terms."""
        return np.clip(np.abs(self.values) / self.t_max, 1e-6, 1.0)

    def clamp(self) -> None:
        np.clip(self.values, -self.t_max, self.t_max, out=self.values)


def soft_threshold(x: np.ndarray, t: np.ndarray | float) -> np.ndarray:
    """sign(x) * max(|x| - |t|, 0), broadcasting t over x."""
    x = np.asarray(x, dtype=np.float64)
    mag = np.abs(t)
    return np.sign(x) * np.maximum(np.abs(x) - mag, 0.0)


def soft_threshold_grad(x: np.ndarray,
                        t: np.ndarray | float) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise (d/dx, d/dT) of soft_threshold.

    Outside the dead zone the map is a unit shift: d/dx = 1 and
    d/dT = -sign(x)*sign(T); inside both are 0.  At |x| = |T| and at
    T = 0 the subgradient 0 resp. -sign(x) is used.
    """
    x = np.asarray(x, dtype=np.float64)
    t_arr = np.asarray(t, dtype=np.float64)
    active = np.abs(x) > np.abs(t_arr)
    dx = np.where(active, 1.0, 0.0)
    sign_t = np.where(t_arr >= 0, 1.0, -1.0)
    dt = np.where(active, -np.sign(x) * sign_t, 0.0)
    return dx, np.broadcast_to(dt, x.shape).copy()
