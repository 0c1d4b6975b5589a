"""Synthetic two-state MIMO benchmark plant and staircase excitation.

The plant has two control inputs, one exogenous input, a stable linear
part, quadratic state coupling and state-dependent input gains, so it is
control-affine but not linear. Its outputs equal its states; the
identification code only ever sees the returned dataset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .embedding import TimeSeriesDataset
from .errors import InputOutOfRange

SAMPLE_PERIOD = 0.1
N_STATES = 2
N_CONTROLS = 2
N_EXOGENOUS = 1


def plant_step(x, u, d) -> np.ndarray:
    """Advance the plant one sample. ``u`` in [-1, 1]^2, ``d`` in [0, 1]."""
    x1, x2 = (float(v) for v in np.asarray(x, dtype=float).reshape(N_STATES))
    u1, u2 = (float(v) for v in np.asarray(u, dtype=float).reshape(N_CONTROLS))
    d1 = float(np.asarray(d, dtype=float).reshape(N_EXOGENOUS)[0])
    if not (-1.0 <= u1 <= 1.0 and -1.0 <= u2 <= 1.0):
        raise InputOutOfRange(f"u = ({u1}, {u2}) outside [-1, 1]^2")
    if not 0.0 <= d1 <= 1.0:
        raise InputOutOfRange(f"d = {d1} outside [0, 1]")
    return np.array([
        0.7 * x1 + 0.1 * x2 - 0.05 * x1 * x2 + (0.5 + 0.3 * x2) * u1 + 0.1 * d1,
        -0.1 * x1 + 0.8 * x2 + 0.05 * x1 ** 2 + (0.4 - 0.2 * x1) * u2 + 0.05 * d1,
    ])


@dataclass
class ExcitationConfig:
    seed: int = 42
    length: int = 5000
    hold_range: tuple[int, int] = (5, 40)
    u_range: list = field(default_factory=lambda: [(-0.7, 0.7), (-0.7, 0.7)])
    d_range: list = field(default_factory=lambda: [(0.0, 1.0)])

    def __post_init__(self):
        lo, hi = self.hold_range
        if lo < 1 or hi < lo:
            raise ValueError(f"invalid hold_range {self.hold_range}")
        for lo, hi in list(self.u_range) + list(self.d_range):
            if hi < lo:
                raise ValueError(f"empty range [{lo}, {hi}]")
        if self.length < 1:
            raise ValueError("length must be positive")


def _staircase(rng: np.random.Generator, length: int, lo: float, hi: float,
               hold: tuple[int, int]) -> np.ndarray:
    out = np.empty(length)
    k = 0
    while k < length:
        level = rng.uniform(lo, hi)
        n = int(rng.integers(hold[0], hold[1] + 1))
        out[k:k + n] = level
        k += n
    return out


def generate_excitation(cfg: ExcitationConfig) -> tuple[np.ndarray, np.ndarray]:
    """Independent random staircases for every input channel."""
    rng = np.random.default_rng(cfg.seed)
    u = np.column_stack([_staircase(rng, cfg.length, lo, hi, cfg.hold_range)
                         for lo, hi in cfg.u_range])
    d = np.column_stack([_staircase(rng, cfg.length, lo, hi, cfg.hold_range)
                         for lo, hi in cfg.d_range]) if cfg.d_range else np.zeros((cfg.length, 0))
    return u, d


def simulate(u: np.ndarray, d: np.ndarray, x0=(0.0, 0.0)) -> np.ndarray:
    """State trajectory with ``x[0] = x0`` and ``x[k+1] = f(x[k], u[k], d[k])``."""
    n = len(u)
    x = np.empty((n, N_STATES))
    x[0] = x0
    for k in range(n - 1):
        x[k + 1] = plant_step(x[k], u[k], d[k])
    return x


def generate_dataset(cfg: ExcitationConfig | None = None) -> TimeSeriesDataset:
    cfg = cfg or ExcitationConfig()
    u, d = generate_excitation(cfg)
    return TimeSeriesDataset(simulate(u, d), u, d, sample_period=SAMPLE_PERIOD)


def reference_configs() -> tuple[ExcitationConfig, ExcitationConfig]:
    """Train/test excitation of the reference experiment."""
    return ExcitationConfig(seed=42, length=5000), ExcitationConfig(seed=43, length=2000)
