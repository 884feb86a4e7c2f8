"""Synthetic data lab: generation, one-sided corruption, splits, features.

The observation model is y = w . x + eps_sym with x ~ N(0, I) and symmetric
Gaussian noise eps_sym of standard deviation beta**-0.5 (beta acts as a
precision). Corruption then subtracts a half-normal draw from a chosen subset
of labels, so corrupted labels only ever move down: y' <= y always.

Two corruption modes:
  - "paper": the subtracted magnitude is |N(0, (scale * beta**-0.5)^2)|
    regardless of the row's own symmetric noise.
  - "strict": the magnitude is redrawn per row until it exceeds twice the
    row's |eps_sym|, which guarantees that any row the oracle places at or
    below its corrupted label is in fact uncorrupted.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .models import atomic_write_text
from .rngutil import derive_rng

CORRUPTION_MODES = ("paper", "strict")


@dataclass(frozen=True)
class SyntheticProcess:
    """Linear-Gaussian label process with one-sided label corruption."""

    dim: int
    weights: np.ndarray
    beta: float = 1.0
    k_percent: float = 50.0
    mode: str = "paper"
    corruption_scale: float = 2.0

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.dim,):
            raise ValueError(f"weights shape {w.shape} does not match dim {self.dim}")
        object.__setattr__(self, "weights", w)
        if self.beta <= 0:
            raise ValueError("beta (noise precision) must be positive")
        if not (0.0 <= self.k_percent <= 100.0):
            raise ValueError("k_percent must lie in [0, 100]")
        if self.mode not in CORRUPTION_MODES:
            raise ValueError(f"mode must be one of {CORRUPTION_MODES}")
        if self.corruption_scale <= 0:
            raise ValueError("corruption_scale must be positive")

    @staticmethod
    def draw(
        dim: int,
        seed: int,
        beta: float = 1.0,
        k_percent: float = 50.0,
        mode: str = "paper",
        corruption_scale: float = 2.0,
    ) -> "SyntheticProcess":
        """Draw oracle weights w ~ N(0, I_dim) from the process seed."""
        w = derive_rng(seed, "process-weights").standard_normal(dim)
        return SyntheticProcess(dim, w, beta, k_percent, mode, corruption_scale)

    @property
    def noise_std(self) -> float:
        return float(self.beta) ** -0.5

    def oracle(self, X: np.ndarray) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.weights

    def draw_clean(self, n: int, rng: np.random.Generator):
        """Fresh uncorrupted draws (X, y); used by Monte-Carlo oracles."""
        X = rng.standard_normal((n, self.dim))
        y = X @ self.weights + self.noise_std * rng.standard_normal(n)
        return X, y


@dataclass
class Dataset:
    """Feature matrix plus observed labels and optional provenance columns.

    ys_prime holds the labels a learner sees. ys_true and corrupted are only
    present when the generator is synthetic (or the CSV carried them).
    """

    xs: np.ndarray
    ys_prime: np.ndarray
    ys_true: np.ndarray | None = None
    corrupted: np.ndarray | None = None

    def __post_init__(self):
        self.xs = np.atleast_2d(np.asarray(self.xs, dtype=float))
        self.ys_prime = np.asarray(self.ys_prime, dtype=float)
        n = self.xs.shape[0]
        if self.ys_prime.shape != (n,):
            raise ValueError("ys_prime length does not match xs rows")
        if self.ys_true is not None:
            self.ys_true = np.asarray(self.ys_true, dtype=float)
            if self.ys_true.shape != (n,):
                raise ValueError("ys_true length does not match xs rows")
        if self.corrupted is not None:
            self.corrupted = np.asarray(self.corrupted, dtype=bool)
            if self.corrupted.shape != (n,):
                raise ValueError("corrupted mask length does not match xs rows")

    def __len__(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(
            self.xs[idx],
            self.ys_prime[idx],
            None if self.ys_true is None else self.ys_true[idx],
            None if self.corrupted is None else self.corrupted[idx],
        )

    # ----- CSV round trip ---------------------------------------------------

    def to_csv(self, path: str) -> None:
        atomic_write_text(path, self.to_csv_text())

    def to_csv_text(self) -> str:
        cols = [f"x{i}" for i in range(self.dim)] + ["y_prime"]
        arrays = [self.xs, self.ys_prime[:, None]]
        if self.ys_true is not None:
            cols.append("y_true")
            arrays.append(self.ys_true[:, None])
        if self.corrupted is not None:
            cols.append("corrupted")
            arrays.append(self.corrupted[:, None].astype(float))
        data = np.hstack(arrays)
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for row in data:
            buf.write(",".join(_fmt(v) for v in row) + "\n")
        return buf.getvalue()

    @staticmethod
    def from_csv(path: str) -> "Dataset":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            cols = [c.strip() for c in header.split(",")]
            body = fh.read()
        expected_front = [f"x{i}" for i in range(len([c for c in cols if c.startswith("x")]))]
        n_x = len(expected_front)
        if n_x == 0 or cols[:n_x] != expected_front:
            raise ValueError(f"bad dataset header: {header!r}")
        rest = cols[n_x:]
        if not rest or rest[0] != "y_prime":
            raise ValueError("dataset CSV must have a y_prime column after the features")
        allowed = [["y_prime"], ["y_prime", "y_true"], ["y_prime", "corrupted"],
                   ["y_prime", "y_true", "corrupted"]]
        if rest not in allowed:
            raise ValueError(f"unexpected label columns {rest}")
        data = np.loadtxt(io.StringIO(body), delimiter=",", ndmin=2)
        if data.shape[1] != len(cols):
            raise ValueError("row width does not match header")
        xs = data[:, :n_x]
        ys_prime = data[:, n_x]
        ys_true = data[:, n_x + 1] if "y_true" in rest else None
        corrupted = data[:, cols.index("corrupted")].astype(bool) if "corrupted" in rest else None
        return Dataset(xs, ys_prime, ys_true, corrupted)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


# ---------------------------------------------------------------------------
# generation and corruption
# ---------------------------------------------------------------------------

def generate_uncorrupted(process: SyntheticProcess, n: int, seed: int) -> Dataset:
    """Draw n clean rows; ys_prime starts equal to ys_true."""
    if n < 1:
        raise ValueError("need at least one row")
    X, y = process.draw_clean(n, derive_rng(seed, "generate"))
    return Dataset(X, y.copy(), y, np.zeros(n, dtype=bool))


def corrupt(dataset: Dataset, process: SyntheticProcess, seed: int) -> Dataset:
    """Subtract half-normal noise from round(n * K / 100) labels.

    Rows are chosen uniformly without replacement. In strict mode each
    selected row's magnitude is rejection-sampled until it exceeds twice the
    row's own symmetric-noise magnitude, which requires ys_true.
    """
    if dataset.ys_true is None:
        raise ValueError("corrupt needs ys_true to anchor the corruption")
    n = len(dataset)
    n_corrupt = int(round(n * process.k_percent / 100.0))
    rng = derive_rng(seed, "corrupt")
    out = Dataset(
        dataset.xs.copy(),
        dataset.ys_true.copy(),
        dataset.ys_true.copy(),
        np.zeros(n, dtype=bool),
    )
    if n_corrupt == 0:
        return out
    picked = rng.choice(n, size=n_corrupt, replace=False)
    width = process.corruption_scale * process.noise_std
    mag = np.abs(rng.standard_normal(n_corrupt) * width)
    if process.mode == "strict":
        # eps_sym is recoverable because ys_true = oracle + eps_sym
        eps = dataset.ys_true[picked] - process.oracle(dataset.xs[picked])
        floor = 2.0 * np.abs(eps)
        bad = mag <= floor
        while np.any(bad):
            mag[bad] = np.abs(rng.standard_normal(int(bad.sum())) * width)
            bad = mag <= floor
    out.ys_prime[picked] = out.ys_true[picked] - mag
    out.corrupted[picked] = True
    return out


# ---------------------------------------------------------------------------
# standardization and splits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureStats:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.std


STD_FLOOR = 1e-12


def feature_stats(train_xs: np.ndarray) -> FeatureStats:
    mean = train_xs.mean(axis=0)
    std = train_xs.std(axis=0)
    return FeatureStats(mean, np.maximum(std, STD_FLOOR))


def standardize(train: Dataset, others: tuple[Dataset, ...] = ()) -> tuple[Dataset, list[Dataset], FeatureStats]:
    """Center and scale features by training statistics; labels untouched.

    Constant training columns get a floored denominator, so they map to
    exactly zero on the training split.
    """
    stats = feature_stats(train.xs)

    def mapped(d: Dataset) -> Dataset:
        return Dataset(stats.apply(d.xs), d.ys_prime.copy(),
                       None if d.ys_true is None else d.ys_true.copy(),
                       None if d.corrupted is None else d.corrupted.copy())

    return mapped(train), [mapped(d) for d in others], stats


def split_cv(
    dataset: Dataset,
    folds: int,
    val_fraction: float,
    seed: int,
    clean_test: bool = True,
) -> list[tuple[Dataset, Dataset, Dataset]]:
    """Seeded K-fold splits with a validation carve-out.

    Each fold's test block is one chunk of a seeded permutation; the rest is
    shuffled again and round(val_fraction * rest) rows become validation.
    When provenance is available and clean_test is set, corrupted rows are
    dropped from the test block: incomplete observations are not scored.
    """
    n = len(dataset)
    if not (2 <= folds <= n):
        raise ValueError("folds must lie in [2, n]")
    if not (0.0 < val_fraction < 1.0):
        raise ValueError("val_fraction must lie in (0, 1)")
    perm = derive_rng(seed, "cv-perm").permutation(n)
    chunks = np.array_split(perm, folds)
    out = []
    for fold_i, test_idx in enumerate(chunks):
        rest = np.concatenate([c for j, c in enumerate(chunks) if j != fold_i])
        rest = rest[derive_rng(seed, "cv-val", fold_i).permutation(rest.shape[0])]
        n_val = int(round(val_fraction * rest.shape[0]))
        n_val = min(max(n_val, 1), rest.shape[0] - 1)
        val_idx, train_idx = rest[:n_val], rest[n_val:]
        if clean_test and dataset.corrupted is not None:
            test_idx = test_idx[~dataset.corrupted[test_idx]]
        out.append((dataset.subset(train_idx), dataset.subset(val_idx), dataset.subset(test_idx)))
    return out


# ---------------------------------------------------------------------------
# sliding-window features for time series
# ---------------------------------------------------------------------------

WINDOW_STATS = ("mean", "std", "q05", "q25", "q50", "q75", "q95")
_QUANTILES = (0.05, 0.25, 0.50, 0.75, 0.95)


def window_features(series: np.ndarray, window_len: int, stride: int) -> np.ndarray:
    """Per-window summary features for a (T, channels) series.

    Produces floor((T - window_len) / stride) + 1 rows; each channel
    contributes its window mean, standard deviation and the 5/25/50/75/95
    percent quantiles, in that order, channels concatenated left to right.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    T, C = series.shape
    if window_len < 1 or window_len > T:
        raise ValueError("window_len must lie in [1, T]")
    if stride < 1:
        raise ValueError("stride must be positive")
    n_rows = (T - window_len) // stride + 1
    out = np.empty((n_rows, 7 * C))
    for r in range(n_rows):
        w = series[r * stride : r * stride + window_len]
        qs = np.quantile(w, _QUANTILES, axis=0)
        for c in range(C):
            out[r, 7 * c] = w[:, c].mean()
            out[r, 7 * c + 1] = w[:, c].std()
            out[r, 7 * c + 2 : 7 * c + 7] = qs[:, c]
    return out
