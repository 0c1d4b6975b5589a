"""Lifting dictionaries, scheduling functions and the bilinear Kronecker term.

A lifted vector always starts with the embedded state itself, followed by
the dictionary features. Because the output history ``zeta_y`` is the
leading block of ``zeta``, the "output only" argument is simply a prefix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .embedding import EmbeddedSequence, EmbeddedState
from .errors import ConfigMismatch, DimensionMismatch


class Variant(str, enum.Enum):
    HDMD = "HDMD"
    LK = "LK"
    BLK = "BLK"
    BLK_POLY = "BLK_POLY"
    GBLK = "GBLK"

    @property
    def bilinear(self) -> bool:
        return self in (Variant.BLK, Variant.BLK_POLY, Variant.GBLK)

    @property
    def optimizable(self) -> bool:
        return self in (Variant.LK, Variant.BLK, Variant.GBLK)

    @classmethod
    def parse(cls, name) -> "Variant":
        if isinstance(name, cls):
            return name
        key = str(name).upper().replace("-", "").replace("(", "_").replace(")", "")
        aliases = {"HDMD": "HDMD", "HANKELDMD": "HDMD", "BLKPOLY": "BLK_POLY", "BLK_POLY": "BLK_POLY"}
        return cls(aliases.get(key, key))


IDENTITY = "identity"
RBF = "polyharmonic_rbf"
POLYNOMIAL = "polynomial"

FULL_ZETA = "full_zeta"
OUTPUT_ONLY = "output_only_zeta_y"


@dataclass(frozen=True, eq=False)
class LiftingConfig:
    """Dictionary description.

    ``centers`` has shape (count, argument dimension) for the RBF kind and
    shape (0, 0) otherwise.
    """

    kind: str = IDENTITY
    centers: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    argument: str = FULL_ZETA
    polynomial_order: int = 0

    def __post_init__(self):
        centers = np.array(self.centers, dtype=float, copy=True)
        if centers.size == 0:
            centers = centers.reshape(0, centers.shape[-1] if centers.ndim == 2 else 0)
        if centers.ndim != 2:
            raise ConfigMismatch("centers must be a 2-D array (count, dim)")
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        if self.kind not in (IDENTITY, RBF, POLYNOMIAL):
            raise ConfigMismatch(f"unknown lifting kind {self.kind!r}")
        if self.argument not in (FULL_ZETA, OUTPUT_ONLY):
            raise ConfigMismatch(f"unknown argument selector {self.argument!r}")
        if self.kind != RBF and len(centers):
            raise ConfigMismatch(f"{self.kind} lifting takes no centers")
        if self.kind == POLYNOMIAL and self.polynomial_order < 2:
            raise ConfigMismatch("polynomial order must be >= 2")

    @classmethod
    def identity(cls) -> "LiftingConfig":
        return cls()

    @classmethod
    def rbf(cls, centers, argument: str = FULL_ZETA) -> "LiftingConfig":
        return cls(RBF, np.atleast_2d(centers), argument)

    @classmethod
    def polynomial(cls, order: int) -> "LiftingConfig":
        return cls(POLYNOMIAL, polynomial_order=order)

    @property
    def count(self) -> int:
        return self.centers.shape[0]

    def n_features(self, n_zeta: int) -> int:
        if self.kind == RBF:
            return self.count
        if self.kind == POLYNOMIAL:
            return n_zeta * (self.polynomial_order - 1)
        return 0

    def arg_dim(self, n_zeta: int, n_y: int) -> int:
        return n_y if self.argument == OUTPUT_ONLY else n_zeta

    def to_dict(self) -> dict:
        return {"kind": self.kind, "centers": self.centers.tolist(),
                "argument": self.argument, "polynomial_order": self.polynomial_order}

    @classmethod
    def from_dict(cls, d: dict) -> "LiftingConfig":
        centers = np.asarray(d["centers"], dtype=float)
        if centers.size == 0:
            centers = np.zeros((0, 0))
        return cls(d["kind"], centers, d["argument"], int(d["polynomial_order"]))


def polyharmonic_rbf(x, center) -> float:
    """Thin-plate spline ``r log r`` of the distance to ``center``; 0 at r = 0."""
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)
    if x.shape != center.shape:
        raise DimensionMismatch(f"x has shape {x.shape}, center has shape {center.shape}")
    r = float(np.linalg.norm(x - center))
    return r * np.log(r) if r > 0.0 else 0.0


def rbf_features(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    """Evaluate every center on every row of ``X``; returns (N, count)."""
    X = np.atleast_2d(X)
    if X.shape[1] != centers.shape[1]:
        raise DimensionMismatch(f"argument dim {X.shape[1]} != center dim {centers.shape[1]}")
    diff = X[:, None, :] - centers[None, :, :]
    r = np.sqrt(np.einsum("nci,nci->nc", diff, diff))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = r * np.log(r)
    out[r == 0.0] = 0.0
    return out


def polynomial_lift(zeta, order: int) -> np.ndarray:
    """Append per-coordinate powers ``zeta_i**j`` for ``j = 2..order``.

    Works on a single vector or on rows of a matrix. Features are grouped by
    power: all squares, then all cubes, and so on.
    """
    if order < 2:
        raise ConfigMismatch("polynomial order must be >= 2")
    zeta = np.asarray(zeta, dtype=float)
    powers = [zeta ** j for j in range(2, order + 1)]
    return np.concatenate([zeta] + powers, axis=-1)


def bilinear_term(z_w, w) -> np.ndarray:
    """Kronecker product ``z_w (x) w`` stacked as ``[w_1 z_w, ..., w_q z_w]``.

    Row-wise when given matrices of shape (N, dim z_w) and (N, q).
    """
    z_w = np.asarray(z_w, dtype=float)
    w = np.asarray(w, dtype=float)
    if z_w.ndim == 1:
        return np.kron(w, z_w)
    n = z_w.shape[0]
    return (w[:, :, None] * z_w[:, None, :]).reshape(n, -1)


def _check_state_cfg(cfg: LiftingConfig, variant: Variant) -> None:
    expected = {
        Variant.HDMD: (IDENTITY, None),
        Variant.LK: (RBF, FULL_ZETA),
        Variant.BLK: (RBF, FULL_ZETA),
        Variant.BLK_POLY: (POLYNOMIAL, None),
        Variant.GBLK: (RBF, OUTPUT_ONLY),
    }[variant]
    kind, arg = expected
    if cfg.kind != kind or (arg is not None and cfg.argument != arg):
        raise ConfigMismatch(
            f"{variant.value} expects a {kind} lifting"
            + (f" over {arg}" if arg else "") + f", got {cfg.kind} over {cfg.argument}")


def _features(Z: np.ndarray, n_y: int, cfg: LiftingConfig) -> np.ndarray:
    n_zeta = Z.shape[1]
    if cfg.kind == IDENTITY:
        return Z[:, :0]
    if cfg.kind == POLYNOMIAL:
        return polynomial_lift(Z, cfg.polynomial_order)[:, n_zeta:]
    dim = cfg.arg_dim(n_zeta, n_y)
    if cfg.centers.shape[1] != dim:
        raise ConfigMismatch(
            f"center dimension {cfg.centers.shape[1]} != argument dimension {dim} ({cfg.argument})")
    return rbf_features(Z[:, :dim], cfg.centers)


def lift_rows(Z: np.ndarray, n_y: int, cfg: LiftingConfig) -> np.ndarray:
    """``[zeta; features(arg)]`` for every row of ``Z``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    return np.hstack([Z, _features(Z, n_y, cfg)])


def _as_rows(zeta) -> tuple[np.ndarray, int, bool]:
    if isinstance(zeta, EmbeddedState):
        return zeta.zeta[None, :], len(zeta.zeta_y), True
    if isinstance(zeta, EmbeddedSequence):
        return zeta.zeta, zeta.n_y, False
    raise TypeError("expected an EmbeddedState or EmbeddedSequence")


def lift_state(zeta, cfg: LiftingConfig, variant) -> np.ndarray:
    """State lifting ``psi_x``.

    Returns a vector for a single :class:`EmbeddedState` and a matrix with
    one lifted row per state for an :class:`EmbeddedSequence`.
    """
    variant = Variant.parse(variant)
    _check_state_cfg(cfg, variant)
    Z, n_y, single = _as_rows(zeta)
    out = lift_rows(Z, n_y, cfg)
    return out[0] if single else out


def lift_scheduling(zeta, cfg: LiftingConfig, variant) -> np.ndarray:
    """Scheduling lifting ``phi_w`` multiplied into the inputs.

    For BLK and BLK_POLY ``cfg`` is the state dictionary itself; for GBLK it
    is a separate RBF dictionary over the full embedded state.
    """
    variant = Variant.parse(variant)
    if not variant.bilinear:
        raise ConfigMismatch(f"{variant.value} has no scheduling function")
    if variant == Variant.GBLK:
        if cfg.kind != RBF or cfg.argument != FULL_ZETA:
            raise ConfigMismatch("GBLK scheduling expects an RBF lifting over the full zeta")
    else:
        _check_state_cfg(cfg, variant)
    Z, n_y, single = _as_rows(zeta)
    out = lift_rows(Z, n_y, cfg)
    return out[0] if single else out


def check_configs(variant, psi_cfg: LiftingConfig, phi_cfg: LiftingConfig | None) -> LiftingConfig | None:
    """Validate the pair for ``variant`` and return the effective scheduling config."""
    variant = Variant.parse(variant)
    _check_state_cfg(psi_cfg, variant)
    if not variant.bilinear:
        if phi_cfg is not None and phi_cfg.kind != IDENTITY:
            raise ConfigMismatch(f"{variant.value} takes no scheduling function")
        return None
    if variant == Variant.GBLK:
        if phi_cfg is None or phi_cfg.kind != RBF or phi_cfg.argument != FULL_ZETA:
            raise ConfigMismatch("GBLK scheduling expects an RBF lifting over the full zeta")
        return phi_cfg
    return psi_cfg


def random_configs(variant, n_zeta: int, n_y: int, n_l: int, n_w: int,
                   rng: np.random.Generator, bounds=(-3.0, 3.0), poly_order: int = 10):
    """Configs with centers drawn uniformly in ``bounds``."""
    variant = Variant.parse(variant)
    lo, hi = bounds
    if variant == Variant.HDMD:
        return LiftingConfig.identity(), None
    if variant == Variant.BLK_POLY:
        cfg = LiftingConfig.polynomial(poly_order)
        return cfg, cfg
    if variant == Variant.GBLK:
        psi = LiftingConfig.rbf(rng.uniform(lo, hi, (n_l, n_y)), OUTPUT_ONLY)
        phi = LiftingConfig.rbf(rng.uniform(lo, hi, (n_w, n_zeta)), FULL_ZETA)
        return psi, phi
    psi = LiftingConfig.rbf(rng.uniform(lo, hi, (n_l, n_zeta)), FULL_ZETA)
    return psi, (psi if variant == Variant.BLK else None)
