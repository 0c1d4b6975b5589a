"""Input-output datasets, z-score normalization and delay embedding."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, MissingStats, NonFinite, ParseError, TooShort, ZeroVariance


@dataclass(frozen=True)
class NormStats:
    """Per-channel mean and sample standard deviation.

    Channels are ordered ``[y..., u..., d...]``.
    """

    mean: np.ndarray
    std: np.ndarray
    n_h: int
    m: int
    l: int

    @property
    def output_mean(self) -> np.ndarray:
        return self.mean[:self.n_h]

    @property
    def output_std(self) -> np.ndarray:
        return self.std[:self.n_h]

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist(),
                "n_h": self.n_h, "m": self.m, "l": self.l}

    @classmethod
    def from_dict(cls, d: dict) -> "NormStats":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float),
                   int(d["n_h"]), int(d["m"]), int(d["l"]))


@dataclass(frozen=True)
class TimeSeriesDataset:
    """Sampled outputs ``y`` (N, n_h), control inputs ``u`` (N, m) and
    exogenous inputs ``d`` (N, l).

    ``norm_stats`` is set once the arrays hold normalized values.
    """

    y: np.ndarray
    u: np.ndarray
    d: np.ndarray
    sample_period: float = 0.1
    norm_stats: NormStats | None = None

    def __post_init__(self):
        y = np.atleast_2d(np.asarray(self.y, dtype=float))
        n = y.shape[0]
        u = np.asarray(self.u, dtype=float).reshape(n, -1) if np.size(self.u) else np.zeros((n, 0))
        d = np.asarray(self.d, dtype=float).reshape(n, -1) if np.size(self.d) else np.zeros((n, 0))
        if u.shape[0] != n or d.shape[0] != n:
            raise DimensionMismatch("y, u and d must have the same number of samples")
        for name, arr in (("y", y), ("u", u), ("d", d)):
            if not np.all(np.isfinite(arr)):
                raise NonFinite(f"{name} contains non-finite samples")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "d", d)

    @property
    def n_samples(self) -> int:
        return self.y.shape[0]

    @property
    def n_h(self) -> int:
        return self.y.shape[1]

    @property
    def m(self) -> int:
        return self.u.shape[1]

    @property
    def l(self) -> int:
        return self.d.shape[1]

    @property
    def w(self) -> np.ndarray:
        """Stacked inputs ``w_k = [u_k; d_k]``, shape (N, m + l)."""
        return np.hstack([self.u, self.d])

    @property
    def channel_names(self) -> list[str]:
        return ([f"y{i + 1}" for i in range(self.n_h)]
                + [f"u{i + 1}" for i in range(self.m)]
                + [f"d{i + 1}" for i in range(self.l)])

    def stacked(self) -> np.ndarray:
        return np.hstack([self.y, self.u, self.d])

    def split(self, fraction: float) -> tuple["TimeSeriesDataset", "TimeSeriesDataset"]:
        """Split in time; the second part holds ``fraction`` of the samples."""
        cut = self.n_samples - int(round(fraction * self.n_samples))
        first = replace(self, y=self.y[:cut], u=self.u[:cut], d=self.d[:cut])
        second = replace(self, y=self.y[cut:], u=self.u[cut:], d=self.d[cut:])
        return first, second


def _from_stacked(x: np.ndarray, like: TimeSeriesDataset, stats: NormStats | None) -> TimeSeriesDataset:
    n_h, m = like.n_h, like.m
    return replace(like, y=x[:, :n_h], u=x[:, n_h:n_h + m], d=x[:, n_h + m:], norm_stats=stats)


def normalize_dataset(raw: TimeSeriesDataset) -> TimeSeriesDataset:
    """Z-score every channel with its own sample mean and std (ddof=1)."""
    x = raw.stacked()
    mean = x.mean(axis=0)
    std = x.std(axis=0, ddof=1)
    for name, s in zip(raw.channel_names, std):
        if not s > 0.0:
            raise ZeroVariance(name)
    stats = NormStats(mean, std, raw.n_h, raw.m, raw.l)
    return _from_stacked((x - mean) / std, raw, stats)


def apply_normalization(raw: TimeSeriesDataset, stats: NormStats) -> TimeSeriesDataset:
    """Normalize ``raw`` with externally supplied (training) statistics."""
    if (raw.n_h, raw.m, raw.l) != (stats.n_h, stats.m, stats.l):
        raise MissingStats(
            f"stats cover (n_h, m, l) = {(stats.n_h, stats.m, stats.l)}, "
            f"dataset has {(raw.n_h, raw.m, raw.l)}")
    return _from_stacked((raw.stacked() - stats.mean) / stats.std, raw, stats)


def denormalize_dataset(data: TimeSeriesDataset) -> TimeSeriesDataset:
    if data.norm_stats is None:
        return data
    s = data.norm_stats
    return _from_stacked(data.stacked() * s.std + s.mean, data, None)


def denormalize_outputs(yhat_normalized, norm_stats: NormStats | None) -> np.ndarray:
    """Map normalized outputs of shape (N, n_h) back to physical units."""
    yhat = np.asarray(yhat_normalized, dtype=float)
    if norm_stats is None:
        raise MissingStats("no normalization statistics available")
    if yhat.ndim == 1:
        yhat = yhat[:, None]
    if yhat.shape[1] != norm_stats.n_h:
        raise MissingStats(
            f"stats cover {norm_stats.n_h} outputs, got {yhat.shape[1]} channels")
    return yhat * norm_stats.output_std + norm_stats.output_mean


@dataclass(frozen=True)
class EmbeddedState:
    """Delay-coordinate state ``zeta = [zeta_y; zeta_w]``.

    ``zeta_y`` stacks ``y_k, ..., y_{k-n_d}`` and ``zeta_w`` stacks
    ``w_{k-1}, ..., w_{k-n_d}``, newest first.
    """

    zeta_y: np.ndarray
    zeta_w: np.ndarray
    n_d: int

    @property
    def zeta(self) -> np.ndarray:
        return np.concatenate([self.zeta_y, self.zeta_w])


@dataclass(frozen=True)
class EmbeddedSequence:
    """Embedded states for ``k = n_d, ..., N-1`` as rows of ``zeta``.

    ``w[j]`` is the input applied at the same time index as ``zeta[j]``.
    """

    zeta: np.ndarray
    w: np.ndarray
    n_d: int
    n_h: int
    n_inputs: int = 0

    @property
    def n_y(self) -> int:
        """Length of the output-history block."""
        return (self.n_d + 1) * self.n_h

    @property
    def n_zeta(self) -> int:
        return self.zeta.shape[1]

    def __len__(self) -> int:
        return self.zeta.shape[0]

    def __getitem__(self, j: int) -> EmbeddedState:
        row = self.zeta[j]
        return EmbeddedState(row[:self.n_y].copy(), row[self.n_y:].copy(), self.n_d)

    def __iter__(self):
        return (self[j] for j in range(len(self)))


def embedded_dim(n_d: int, n_h: int, m: int, l: int) -> int:
    return (n_d + 1) * n_h + n_d * (m + l)


def build_embedded_sequence(data: TimeSeriesDataset, n_d: int) -> EmbeddedSequence:
    """Stack delay coordinates for every index with a full history."""
    if n_d < 1:
        raise ValueError(f"n_d must be >= 1, got {n_d}")
    n = data.n_samples
    if n < n_d + 2:
        raise TooShort(n, n_d)
    y, w = data.y, data.w
    blocks = [y[n_d - j:n - j] for j in range(n_d + 1)]
    blocks += [w[n_d - j:n - j] for j in range(1, n_d + 1)]
    zeta = np.hstack(blocks)
    return EmbeddedSequence(zeta, w[n_d:].copy(), n_d, data.n_h, w.shape[1])


# -- CSV ---------------------------------------------------------------------

def _header(n_h: int, m: int, l: int) -> list[str]:
    return (["t"] + [f"y{i + 1}" for i in range(n_h)] + [f"u{i + 1}" for i in range(m)]
            + [f"d{i + 1}" for i in range(l)])


def format_float(v: float) -> str:
    # repr is the shortest string that round-trips exactly
    return repr(float(v))


def dataset_to_csv(data: TimeSeriesDataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_header(data.n_h, data.m, data.l))
    x = data.stacked()
    for k in range(data.n_samples):
        writer.writerow([format_float(round(k * data.sample_period, 12))] + [format_float(v) for v in x[k]])
    return buf.getvalue()


def write_dataset_csv(data: TimeSeriesDataset, path) -> None:
    Path(path).write_text(dataset_to_csv(data), newline="")


def read_dataset_csv(path) -> TimeSeriesDataset:
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ParseError(f"{path}: empty file", line=1)
    header = rows[0]
    if not header or header[0] != "t":
        raise ParseError(f"{path}: header must start with 't'", line=1)
    groups = {"y": 0, "u": 0, "d": 0}
    order = "yud"
    last = 0
    for name in header[1:]:
        kind, idx = name[:1], name[1:]
        if kind not in groups or not idx.isdigit() or order.index(kind) < last:
            raise ParseError(f"{path}: unexpected column {name!r}", line=1)
        last = order.index(kind)
        groups[kind] += 1
        if int(idx) != groups[kind]:
            raise ParseError(f"{path}: column {name!r} out of sequence", line=1)
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: expected {len(header)} fields, got {len(row)}", line=lineno)
        try:
            values.append([float(v) for v in row])
        except ValueError as exc:
            raise ParseError(f"{path}: {exc}", line=lineno) from None
    arr = np.asarray(values, dtype=float).reshape(-1, len(header))
    n_h, m = groups["y"], groups["u"]
    t = arr[:, 0]
    period = float(t[1] - t[0]) if len(t) > 1 else 0.1
    return TimeSeriesDataset(arr[:, 1:1 + n_h], arr[:, 1 + n_h:1 + n_h + m],
                             arr[:, 1 + n_h + m:], sample_period=period)
