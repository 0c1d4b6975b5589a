"""Particle-swarm search over RBF centers against the multi-step error."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .embedding import TimeSeriesDataset, build_embedded_sequence, embedded_dim
from .errors import KoopmanError, UnsupportedVariant
from .lifting import FULL_ZETA, OUTPUT_ONLY, LiftingConfig, Variant
from .prediction import rollout_normalized
from .realization import KoopmanModel, RealizationOptions, realize_model

log = logging.getLogger(__name__)

PENALTY = 1e12


@dataclass
class PsoConfig:
    swarm_size: int = 50
    max_iterations: int = 30
    inertia: float = 0.729
    cognitive: float = 1.49445
    social: float = 1.49445
    bounds: tuple[float, float] = (-3.0, 3.0)
    velocity_clamp: float = 0.2
    seed: int = 0
    early_stop: float = 0.0
    parallel: bool = False
    n_workers: int | None = None

    def __post_init__(self):
        if self.swarm_size < 2:
            raise ValueError("swarm_size must be >= 2")
        b = np.asarray(self.bounds, dtype=float)
        lo, hi = (b[0], b[1]) if b.ndim == 1 else (b[:, 0], b[:, 1])
        if not np.all(lo < hi):
            raise ValueError(f"bounds must satisfy lo < hi, got {self.bounds}")
        if not 0.0 < self.velocity_clamp <= 1.0:
            raise ValueError("velocity_clamp must be in (0, 1]")

    def bound_arrays(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        """Per-dimension ``(lo, hi)``; ``bounds`` may be a pair or (dim, 2)."""
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim == 1:
            return np.full(dim, b[0]), np.full(dim, b[1])
        if b.shape != (dim, 2):
            raise ValueError(f"bounds have shape {b.shape}, expected ({dim}, 2)")
        return b[:, 0].copy(), b[:, 1].copy()


@dataclass
class Swarm:
    positions: np.ndarray
    velocities: np.ndarray
    values: np.ndarray
    best_positions: np.ndarray
    best_values: np.ndarray
    global_best_position: np.ndarray
    global_best_value: float
    lo: np.ndarray
    hi: np.ndarray
    iteration: int = 0


Evaluator = Callable[[np.ndarray], np.ndarray]


def batch_evaluator(objective: Callable[[np.ndarray], float], parallel: bool = False,
                    n_workers: int | None = None) -> Evaluator:
    """Lift a scalar objective to a function of stacked positions.

    Results are collected in particle order, so threading does not change
    them.
    """
    def evaluate(X: np.ndarray) -> np.ndarray:
        if parallel:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                return np.fromiter(pool.map(objective, X), dtype=float, count=len(X))
        return np.fromiter((objective(x) for x in X), dtype=float, count=len(X))
    return evaluate


def particle_streams(seed: int, n: int) -> list[np.random.Generator]:
    """Independent generators, one per particle, spawned from ``seed``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _uniform(streams, lo, hi, n: int) -> np.ndarray:
    # one row per particle, each from that particle's own stream
    if isinstance(streams, np.random.Generator):
        return streams.uniform(lo, hi, (n, np.size(lo)))
    return np.stack([g.uniform(lo, hi) for g in streams])


def init_swarm(evaluate: Evaluator, dim: int, cfg: PsoConfig, streams) -> Swarm:
    lo, hi = cfg.bound_arrays(dim)
    vmax = cfg.velocity_clamp * (hi - lo)
    X = _uniform(streams, lo, hi, cfg.swarm_size)
    V = _uniform(streams, -vmax, vmax, cfg.swarm_size)
    f = evaluate(X)
    g = int(np.argmin(f))
    return Swarm(X, V, f, X.copy(), f.copy(), X[g].copy(), float(f[g]), lo, hi)


def pso_step(swarm: Swarm, cfg: PsoConfig, streams, evaluate: Evaluator) -> Swarm:
    """One inertia-weight update followed by re-evaluation and best bookkeeping.

    ``streams`` is one generator per particle (or a single shared one).
    All random draws happen before any evaluation, so the order in which
    particles are evaluated cannot affect the result.
    """
    n, dim = swarm.positions.shape
    zeros, ones = np.zeros(dim), np.ones(dim)
    r1 = _uniform(streams, zeros, ones, n)
    r2 = _uniform(streams, zeros, ones, n)
    X = swarm.positions
    V = (cfg.inertia * swarm.velocities
         + cfg.cognitive * r1 * (swarm.best_positions - X)
         + cfg.social * r2 * (swarm.global_best_position - X))
    vmax = cfg.velocity_clamp * (swarm.hi - swarm.lo)
    V = np.clip(V, -vmax, vmax)
    X = np.clip(X + V, swarm.lo, swarm.hi)
    f = evaluate(X)
    improved = f < swarm.best_values
    best_positions = np.where(improved[:, None], X, swarm.best_positions)
    best_values = np.where(improved, f, swarm.best_values)
    g = int(np.argmin(best_values))
    if best_values[g] < swarm.global_best_value:
        gpos, gval = best_positions[g].copy(), float(best_values[g])
    else:
        gpos, gval = swarm.global_best_position, swarm.global_best_value
    return replace(swarm, positions=X, velocities=V, values=f, best_positions=best_positions,
                   best_values=best_values, global_best_position=gpos, global_best_value=gval,
                   iteration=swarm.iteration + 1)


@dataclass
class PsoResult:
    best_position: np.ndarray
    best_value: float
    iterations: int
    # one row per iteration: (iteration, best_J, mean_J, elapsed_seconds)
    log: list = field(default_factory=list)

    @property
    def trace(self) -> np.ndarray:
        return np.array([row[1] for row in self.log])


def particle_swarm(objective: Callable[[np.ndarray], float], dim: int, cfg: PsoConfig,
                   callback: Callable[[Swarm], None] | None = None) -> PsoResult:
    """Minimize ``objective`` over the box ``cfg.bounds``.

    Runs up to ``cfg.max_iterations`` swarm updates and stops early once
    the best value drops below ``cfg.early_stop``. ``callback`` sees the
    swarm after initialization and after every update.
    """
    streams = particle_streams(cfg.seed, cfg.swarm_size)
    evaluate = batch_evaluator(objective, cfg.parallel, cfg.n_workers)
    start = time.perf_counter()
    swarm = init_swarm(evaluate, dim, cfg, streams)
    if callback:
        callback(swarm)
    rows = []
    for it in range(1, cfg.max_iterations + 1):
        swarm = pso_step(swarm, cfg, streams, evaluate)
        if callback:
            callback(swarm)
        rows.append((it, swarm.global_best_value, float(np.mean(swarm.values)),
                     time.perf_counter() - start))
        log.info("pso iteration %d: best J = %.6g", it, swarm.global_best_value)
        if swarm.global_best_value < cfg.early_stop:
            break
    return PsoResult(swarm.global_best_position.copy(), swarm.global_best_value, len(rows), rows)


# -- lifting problem ----------------------------------------------------------

@dataclass
class LiftingProblem:
    """What the optimizer searches over and how a candidate is scored.

    ``holdout`` > 0 fits on the leading part of the data and scores the
    rollout on the trailing ``holdout`` fraction instead of the training
    window.
    """

    variant: Variant
    n_h: int
    m: int
    l: int
    n_l: int = 10
    n_w: int = 0
    realization: RealizationOptions = field(default_factory=RealizationOptions)
    relift: bool = False
    holdout: float = 0.0

    def __post_init__(self):
        self.variant = Variant.parse(self.variant)

    @classmethod
    def for_data(cls, data: TimeSeriesDataset, variant, **kwargs) -> "LiftingProblem":
        variant = Variant.parse(variant)
        if variant == Variant.GBLK:
            kwargs.setdefault("n_l", 5)
            kwargs.setdefault("n_w", 5)
        return cls(variant, data.n_h, data.m, data.l, **kwargs)

    @property
    def n_d(self) -> int:
        return self.realization.n_d

    @property
    def n_zeta(self) -> int:
        return embedded_dim(self.n_d, self.n_h, self.m, self.l)

    @property
    def n_y(self) -> int:
        return (self.n_d + 1) * self.n_h

    @property
    def psi_arg_dim(self) -> int:
        return self.n_y if self.variant == Variant.GBLK else self.n_zeta

    @property
    def theta_size(self) -> int:
        size = self.n_l * self.psi_arg_dim
        if self.variant == Variant.GBLK:
            size += self.n_w * self.n_zeta
        return size

    def unpack(self, theta) -> tuple[LiftingConfig, LiftingConfig | None]:
        """Centers for psi first, then phi (GBLK only), row-major."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.theta_size,):
            raise ValueError(f"theta must have length {self.theta_size}, got {theta.shape}")
        k = self.n_l * self.psi_arg_dim
        if self.variant == Variant.GBLK:
            psi = LiftingConfig.rbf(theta[:k].reshape(self.n_l, self.n_y), OUTPUT_ONLY)
            phi = LiftingConfig.rbf(theta[k:].reshape(self.n_w, self.n_zeta), FULL_ZETA)
            return psi, phi
        psi = LiftingConfig.rbf(theta.reshape(self.n_l, self.n_zeta), FULL_ZETA)
        return psi, (psi if self.variant == Variant.BLK else None)

    def pack(self, psi: LiftingConfig, phi: LiftingConfig | None = None) -> np.ndarray:
        parts = [psi.centers.ravel()]
        if self.variant == Variant.GBLK:
            parts.append(phi.centers.ravel())
        return np.concatenate(parts)

    def realize(self, data: TimeSeriesDataset, theta) -> KoopmanModel:
        psi, phi = self.unpack(theta)
        return realize_model(data, self.variant, psi, phi, self.realization)


def _squared_error(model: KoopmanModel, data: TimeSeriesDataset, relift: bool) -> float:
    seq = build_embedded_sequence(data, model.n_d)
    y_hat, bad = rollout_normalized(model, seq, relift=relift)
    if bad:
        return PENALTY
    J = float(np.sum((seq.zeta[1:, :model.n_h] - y_hat) ** 2))
    return J if np.isfinite(J) else PENALTY


def evaluate_candidate(theta, data: TimeSeriesDataset, variant, options: LiftingProblem) -> float:
    """Sum of squared normalized multi-step output errors for centers ``theta``.

    Any failure (divergence, non-finite values, numerical errors) scores
    :data:`PENALTY` instead of raising.
    """
    problem = options if options.variant == Variant.parse(variant) else \
        replace(options, variant=Variant.parse(variant))
    if problem.holdout > 0.0:
        fit_data, score_data = data.split(problem.holdout)
    else:
        fit_data = score_data = data
    try:
        model = problem.realize(fit_data, theta)
        return _squared_error(model, score_data, problem.relift)
    except (KoopmanError, np.linalg.LinAlgError, FloatingPointError):
        return PENALTY


@dataclass
class LiftingOptimization:
    theta: np.ndarray
    model: KoopmanModel
    objective: float
    pso: PsoResult

    def __iter__(self):
        # allows ``theta, model = optimize_lifting(...)``
        return iter((self.theta, self.model))


def optimize_lifting(data: TimeSeriesDataset, variant, pso_cfg: PsoConfig | None = None,
                     problem: LiftingProblem | None = None,
                     callback: Callable[[Swarm], None] | None = None) -> LiftingOptimization:
    """Search RBF centers with PSO and refit the model at the best centers."""
    variant = Variant.parse(variant)
    if not variant.optimizable:
        raise UnsupportedVariant(f"{variant.value} has no RBF centers to optimize")
    pso_cfg = pso_cfg or PsoConfig()
    problem = problem or LiftingProblem.for_data(data, variant)
    if problem.variant != variant:
        raise UnsupportedVariant(f"problem is set up for {problem.variant.value}, not {variant.value}")
    result = particle_swarm(lambda th: evaluate_candidate(th, data, variant, problem),
                            problem.theta_size, pso_cfg, callback)
    fit_data = data.split(problem.holdout)[0] if problem.holdout > 0.0 else data
    model = problem.realize(fit_data, result.best_position)
    return LiftingOptimization(result.best_position, model, result.best_value, result)
