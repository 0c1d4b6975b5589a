"""Snapshot assembly and least-squares realization of Koopman matrices."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .embedding import EmbeddedSequence, NormStats, TimeSeriesDataset, build_embedded_sequence
from .errors import LengthMismatch, NonFinite, ShapeMismatch
from .lifting import LiftingConfig, Variant, bilinear_term, check_configs, lift_rows

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SnapshotMatrices:
    """Regression pair: ``Z_plus`` (dim z, N_s) and ``Z_w`` (regressors, N_s).

    Column ``j`` of ``Z_w`` stacks ``[z_j; w_j; z_w_j (x) w_j]`` (the last
    block only for bilinear variants) and column ``j`` of ``Z_plus`` is
    ``z_{j+1}``.
    """

    Z_plus: np.ndarray
    Z_w: np.ndarray
    dim_z: int
    dim_zw: int
    n_inputs: int

    @property
    def n_columns(self) -> int:
        return self.Z_plus.shape[1]


@dataclass
class RealizationOptions:
    n_d: int = 2
    enforce_shift_structure: bool = False
    ridge: float = 0.0
    rcond: float = 1e-10


@dataclass(frozen=True, eq=False)
class KoopmanModel:
    """Fitted lifted model ``z+ = A z + B0 w + B (z_w (x) w)``, ``y = C z``.

    ``B`` is None for the HDMD and LK variants. ``phi_cfg`` is the
    dictionary that produces ``z_w``; for BLK and BLK_POLY it is the state
    dictionary.
    """

    variant: Variant
    A: np.ndarray
    B0: np.ndarray
    B: np.ndarray | None
    C: np.ndarray
    psi_cfg: LiftingConfig
    phi_cfg: LiftingConfig | None
    n_d: int
    n_h: int
    m: int
    l: int
    norm_stats: NormStats | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_inputs(self) -> int:
        return self.m + self.l

    @property
    def n_y(self) -> int:
        return (self.n_d + 1) * self.n_h

    @property
    def n_zeta(self) -> int:
        return self.n_y + self.n_d * self.n_inputs

    @property
    def dim_z(self) -> int:
        return self.A.shape[0]

    @property
    def dim_zw(self) -> int:
        if self.phi_cfg is None:
            return 0
        return self.n_zeta + self.phi_cfg.n_features(self.n_zeta)

    @property
    def H(self) -> np.ndarray:
        blocks = [self.A, self.B0] + ([self.B] if self.B is not None else [])
        return np.hstack(blocks)

    def lift(self, Z: np.ndarray) -> np.ndarray:
        """State lifting of rows of embedded states."""
        return lift_rows(Z, self.n_y, self.psi_cfg)

    def schedule(self, Z: np.ndarray) -> np.ndarray:
        return lift_rows(Z, self.n_y, self.phi_cfg)

    def regressors(self, Z: np.ndarray, W: np.ndarray) -> np.ndarray:
        """Rows ``[z; w; z_w (x) w]`` for measured embedded states ``Z``."""
        Zl = self.lift(Z)
        blocks = [Zl, W]
        if self.B is not None:
            blocks.append(bilinear_term(self.schedule(Z), W))
        return np.hstack(blocks)


def assemble_snapshots(embedded: EmbeddedSequence, w, psi_cfg: LiftingConfig,
                       phi_cfg: LiftingConfig | None, variant) -> SnapshotMatrices:
    """Pair consecutive lifted states with the inputs applied in between."""
    variant = Variant.parse(variant)
    phi_cfg = check_configs(variant, psi_cfg, phi_cfg)
    w = np.asarray(w, dtype=float).reshape(len(w), -1)
    if len(w) != len(embedded):
        raise LengthMismatch(f"{len(embedded)} embedded states but {len(w)} input samples")
    if len(embedded) < 2:
        raise LengthMismatch("need at least two embedded states")
    Z = lift_rows(embedded.zeta, embedded.n_y, psi_cfg)
    blocks = [Z[:-1], w[:-1]]
    dim_zw = 0
    if phi_cfg is not None:
        Zw = lift_rows(embedded.zeta[:-1], embedded.n_y, phi_cfg)
        dim_zw = Zw.shape[1]
        blocks.append(bilinear_term(Zw, w[:-1]))
    return SnapshotMatrices(Z[1:].T.copy(), np.hstack(blocks).T.copy(),
                            Z.shape[1], dim_zw, w.shape[1])


def _solve(Z_plus: np.ndarray, Z_w: np.ndarray, ridge: float = 0.0,
           rcond: float = 1e-10) -> tuple[np.ndarray, int]:
    if not (np.all(np.isfinite(Z_plus)) and np.all(np.isfinite(Z_w))):
        raise NonFinite("snapshot matrices contain non-finite entries")
    U, s, Vt = np.linalg.svd(Z_w, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((Z_plus.shape[0], Z_w.shape[0])), 0
    keep = s > rcond * s[0]
    rank = int(keep.sum())
    if ridge > 0.0:
        inv = s / (s ** 2 + ridge)
    else:
        inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    # H = Z+ V diag(inv) U^T
    H = ((Z_plus @ Vt.T) * inv) @ U.T
    return H, rank


def fit_least_squares(snap: SnapshotMatrices, ridge: float = 0.0, rcond: float = 1e-10) -> np.ndarray:
    """Minimum-norm solution of ``min_H ||Z+ - H Z_w||_F`` via truncated SVD.

    With ``ridge > 0`` the Tikhonov-regularized solution is returned instead.
    """
    return _solve(snap.Z_plus, snap.Z_w, ridge, rcond)[0]


def extract_matrices(H: np.ndarray, dims, variant):
    """Split ``H = [A, B0, B]``.

    ``dims`` is ``(dim_z, n_inputs, dim_zw)``; ``dim_zw`` is ignored for
    non-bilinear variants.
    """
    variant = Variant.parse(variant)
    dim_z, q, dim_zw = dims
    expected = dim_z + q + (dim_zw * q if variant.bilinear else 0)
    if H.ndim != 2 or H.shape != (dim_z, expected):
        raise ShapeMismatch(f"H has shape {H.shape}, expected {(dim_z, expected)}")
    A = H[:, :dim_z].copy()
    B0 = H[:, dim_z:dim_z + q].copy()
    B = H[:, dim_z + q:].copy() if variant.bilinear else None
    return A, B0, B


def shift_pattern(n_d: int, n_h: int, n_inputs: int, dim_z: int, n_regressors: int):
    """Rows of ``H`` fixed by the delay-shift structure.

    Returns ``(rows, pattern)`` where ``pattern[i]`` is the exact row of
    ``H`` producing lifted coordinate ``rows[i]``: older outputs and inputs
    are copied from the previous state and the newest stored input is
    injected from ``w`` through the ``B0`` columns.
    """
    n_y = (n_d + 1) * n_h
    n_zeta = n_y + n_d * n_inputs
    rows = np.arange(n_h, n_zeta)
    pattern = np.zeros((rows.size, n_regressors))
    for i, r in enumerate(rows):
        if r < n_y:
            pattern[i, r - n_h] = 1.0
        elif r < n_y + n_inputs:
            pattern[i, dim_z + (r - n_y)] = 1.0
        else:
            pattern[i, r - n_inputs] = 1.0
    return rows, pattern


def realize_model(data: TimeSeriesDataset, variant, psi_cfg: LiftingConfig,
                  phi_cfg: LiftingConfig | None = None,
                  options: RealizationOptions | None = None) -> KoopmanModel:
    """Embed, lift, assemble, fit and split into a :class:`KoopmanModel`."""
    options = options or RealizationOptions()
    variant = Variant.parse(variant)
    phi_cfg = check_configs(variant, psi_cfg, phi_cfg)
    seq = build_embedded_sequence(data, options.n_d)
    snap = assemble_snapshots(seq, seq.w, psi_cfg, phi_cfg, variant)
    H, rank = _solve(snap.Z_plus, snap.Z_w, options.ridge, options.rcond)
    n_reg = snap.Z_w.shape[0]
    if options.enforce_shift_structure:
        rows, pattern = shift_pattern(options.n_d, data.n_h, snap.n_inputs, snap.dim_z, n_reg)
        H[rows] = pattern
    A, B0, B = extract_matrices(H, (snap.dim_z, snap.n_inputs, snap.dim_zw), variant)
    C = np.zeros((data.n_h, snap.dim_z))
    C[:, :data.n_h] = np.eye(data.n_h)
    rank_deficient = rank < n_reg
    if rank_deficient:
        log.warning("regressor matrix is rank deficient (%d < %d); using minimum-norm solution",
                    rank, n_reg)
    metadata = {"rank": rank, "n_regressors": n_reg, "n_snapshots": snap.n_columns,
                "rank_deficient": bool(rank_deficient),
                "enforce_shift_structure": options.enforce_shift_structure,
                "ridge": options.ridge}
    return KoopmanModel(variant, A, B0, B, C, psi_cfg, phi_cfg, options.n_d,
                        data.n_h, data.m, data.l, data.norm_stats, metadata)
