"""One-step and multi-step prediction, and the R^2 score."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .embedding import (EmbeddedSequence, TimeSeriesDataset, apply_normalization,
                        build_embedded_sequence, denormalize_outputs)
from .errors import ConstantReference, DimensionMismatch, Diverged, LengthMismatch
from .lifting import IDENTITY, POLYNOMIAL, RBF, LiftingConfig
from .realization import KoopmanModel

DIVERGENCE_BOUND = 50.0

_KIND_CODES = {IDENTITY: _kernels.KIND_IDENTITY, RBF: _kernels.KIND_RBF,
               POLYNOMIAL: _kernels.KIND_POLY}


@dataclass(frozen=True, eq=False)
class PredictionResult:
    """Predicted and reference outputs, denormalized when stats are known.

    ``start_index`` is the sample index of the first row.
    """

    y_hat: np.ndarray
    y_true: np.ndarray
    r2_per_channel: np.ndarray
    mode: str
    horizon: int
    start_index: int
    sample_period: float = 0.1


def r_squared(y_true, y_hat) -> np.ndarray:
    """Per-channel coefficient of determination ``1 - SSE / SST``."""
    y_true = np.asarray(y_true, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y_true.ndim == 1:
        y_true, y_hat = y_true[:, None], y_hat.reshape(-1, 1)
    if y_true.shape != y_hat.shape:
        raise LengthMismatch(f"y_true has shape {y_true.shape}, y_hat has shape {y_hat.shape}")
    if y_true.shape[0] < 2:
        raise LengthMismatch("need at least two samples")
    sse = np.sum((y_true - y_hat) ** 2, axis=0)
    sst = np.sum((y_true - y_true.mean(axis=0)) ** 2, axis=0)
    for i, s in enumerate(sst):
        if s == 0.0:
            raise ConstantReference(i)
    return 1.0 - sse / sst


def _score(y_true: np.ndarray, y_hat: np.ndarray) -> np.ndarray:
    # a single predicted sample has no defined R^2
    if len(y_true) < 2:
        return np.full(y_true.shape[1], np.nan)
    return r_squared(y_true, y_hat)


def prepare_data(model: KoopmanModel, data: TimeSeriesDataset) -> TimeSeriesDataset:
    """Check channel counts and normalize raw data with the model's stats."""
    if (data.n_h, data.m, data.l) != (model.n_h, model.m, model.l):
        raise DimensionMismatch(
            f"model expects (n_h, m, l) = {(model.n_h, model.m, model.l)}, "
            f"data has {(data.n_h, data.m, data.l)}")
    if data.norm_stats is None and model.norm_stats is not None:
        return apply_normalization(data, model.norm_stats)
    return data


def _to_output_units(model: KoopmanModel, y: np.ndarray) -> np.ndarray:
    if model.norm_stats is None:
        return y
    return denormalize_outputs(y, model.norm_stats)


def one_step_normalized(model: KoopmanModel, seq: EmbeddedSequence) -> np.ndarray:
    """``C (A z_k + B0 w_k + B (z_w,k (x) w_k))`` from measured states."""
    R = model.regressors(seq.zeta[:-1], seq.w[:-1])
    return (R @ model.H.T) @ model.C.T


def predict_one_step(model: KoopmanModel, data: TimeSeriesDataset) -> PredictionResult:
    data = prepare_data(model, data)
    seq = build_embedded_sequence(data, model.n_d)
    y_hat = one_step_normalized(model, seq)
    y_true = seq.zeta[1:, :model.n_h]
    y_hat, y_true = _to_output_units(model, y_hat), _to_output_units(model, y_true)
    return PredictionResult(y_hat, y_true, _score(y_true, y_hat), "one_step",
                            1, model.n_d + 1, data.sample_period)


def _cfg_args(cfg: LiftingConfig | None, n_zeta: int, n_y: int):
    if cfg is None:
        return _kernels.KIND_IDENTITY, 0, np.zeros((0, 0)), 0
    centers = np.ascontiguousarray(cfg.centers, dtype=float)
    if centers.ndim != 2:
        centers = centers.reshape(0, 0)
    return (_KIND_CODES[cfg.kind], cfg.arg_dim(n_zeta, n_y), centers, cfg.polynomial_order)


def propagate(model: KoopmanModel, z0, W, relift: bool = False,
              bound: float = DIVERGENCE_BOUND):
    """Run the model recursion from lifted state ``z0`` under inputs ``W``.

    The scheduling vector at each step is recomputed from the leading
    ``n_zeta`` coordinates of the current predicted state. Returns
    ``(y_hat, bad)`` with ``y_hat[j] = C z_{j+1}`` and ``bad`` the 1-based
    step at which an output left ``[-bound, bound]`` (0 if none).
    """
    B = model.B if model.B is not None else np.zeros((model.dim_z, 0))
    return _kernels.rollout(
        np.ascontiguousarray(model.A, dtype=float), np.ascontiguousarray(model.B0, dtype=float),
        np.ascontiguousarray(B, dtype=float), np.ascontiguousarray(model.C, dtype=float),
        np.ascontiguousarray(z0, dtype=float), np.ascontiguousarray(W, dtype=float),
        model.n_zeta,
        *_cfg_args(model.psi_cfg, model.n_zeta, model.n_y),
        *_cfg_args(model.phi_cfg, model.n_zeta, model.n_y),
        model.B is not None, bool(relift), float(bound))


def rollout_normalized(model: KoopmanModel, seq: EmbeddedSequence, horizon: int | None = None,
                       relift: bool = False, bound: float = DIVERGENCE_BOUND):
    """Multi-step prediction in normalized units from the first state of ``seq``.

    ``y_hat[j]`` predicts the output one sample after ``seq[j]``.
    """
    max_h = len(seq) - 1
    horizon = max_h if horizon is None else horizon
    if not 1 <= horizon <= max_h:
        raise LengthMismatch(f"horizon must be in [1, {max_h}], got {horizon}")
    z0 = model.lift(seq.zeta[:1])[0]
    return propagate(model, z0, seq.w[:horizon], relift, bound)


def predict_multi_step(model: KoopmanModel, data: TimeSeriesDataset, relift: bool = False,
                       horizon: int | None = None) -> PredictionResult:
    """Recursive prediction from the first ``n_d + 1`` measured outputs.

    Raises :class:`Diverged` (carrying the partial trajectory in output
    units) when a normalized prediction exceeds the divergence bound.
    """
    data = prepare_data(model, data)
    seq = build_embedded_sequence(data, model.n_d)
    y_hat, bad = rollout_normalized(model, seq, horizon, relift)
    if bad:
        raise Diverged(bad, partial=_to_output_units(model, y_hat[:bad - 1]))
    y_true = seq.zeta[1:len(y_hat) + 1, :model.n_h]
    y_hat, y_true = _to_output_units(model, y_hat), _to_output_units(model, y_true)
    return PredictionResult(y_hat, y_true, _score(y_true, y_hat), "multi_step",
                            len(y_hat), model.n_d + 1, data.sample_period)
