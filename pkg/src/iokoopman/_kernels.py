"""Compiled inner loop of the multi-step rollout.

The optimizer runs thousands of rollouts over thousands of steps each, so
the per-step work (dictionary evaluation, Kronecker product, matrix-vector
products) is compiled with numba. Lifting kinds are passed as integer codes.
"""

import numpy as np
from numba import njit

KIND_IDENTITY = 0
KIND_RBF = 1
KIND_POLY = 2


@njit(cache=True)
def n_features(kind, n_centers, n_zeta, order):
    if kind == KIND_RBF:
        return n_centers
    if kind == KIND_POLY:
        return n_zeta * (order - 1)
    return 0


@njit(cache=True)
def lift_into(zeta, kind, arg_dim, centers, order, out):
    """Write ``[zeta; features]`` into ``out``."""
    n_zeta = zeta.shape[0]
    for i in range(n_zeta):
        out[i] = zeta[i]
    if kind == KIND_RBF:
        for c in range(centers.shape[0]):
            acc = 0.0
            for i in range(arg_dim):
                diff = zeta[i] - centers[c, i]
                acc += diff * diff
            r = np.sqrt(acc)
            out[n_zeta + c] = r * np.log(r) if r > 0.0 else 0.0
    elif kind == KIND_POLY:
        pos = n_zeta
        for p in range(2, order + 1):
            for i in range(n_zeta):
                out[pos] = zeta[i] ** p
                pos += 1


@njit(cache=True)
def rollout(A, B0, B, C, z0, W, n_zeta,
            psi_kind, psi_arg, psi_centers, psi_order,
            phi_kind, phi_arg, phi_centers, phi_order,
            bilinear, relift, bound):
    """Propagate ``z`` for ``W.shape[0]`` steps.

    Returns ``(Y, bad)`` where ``Y[j] = C z_{j+1}`` and ``bad`` is the
    1-based step at which an output left ``[-bound, bound]`` or became
    non-finite (0 if none). Rows of ``Y`` from ``bad`` on are NaN.
    """
    horizon = W.shape[0]
    q = W.shape[1]
    dim_z = A.shape[0]
    n_out = C.shape[0]
    dim_zw = n_zeta + n_features(phi_kind, phi_centers.shape[0], n_zeta, phi_order)
    Y = np.full((horizon, n_out), np.nan)
    z = z0.copy()
    zeta = np.empty(n_zeta)
    zw = np.empty(dim_zw)
    kron = np.empty(dim_zw * q)
    for j in range(horizon):
        for i in range(n_zeta):
            zeta[i] = z[i]
        if relift and j > 0:
            lift_into(zeta, psi_kind, psi_arg, psi_centers, psi_order, z)
        w = W[j]
        znew = A @ z + B0 @ w
        if bilinear:
            lift_into(zeta, phi_kind, phi_arg, phi_centers, phi_order, zw)
            for i in range(q):
                for k in range(dim_zw):
                    kron[i * dim_zw + k] = w[i] * zw[k]
            znew += B @ kron
        z = znew
        y = C @ z
        for i in range(n_out):
            if not abs(y[i]) <= bound:
                return Y, j + 1
            Y[j, i] = y[i]
    return Y, 0
