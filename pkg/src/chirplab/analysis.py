"""Correlation, equal-volume binning and monotone B-spline calibration of
CHIRP against SOPR."""
from __future__ import annotations

import csv
import dataclasses
import json
from typing import NamedTuple

import numpy as np
from scipy.interpolate import BSpline
from scipy.optimize import lsq_linear
from scipy.stats import rankdata

from .errors import UndefinedCorrelationError

DEFAULT_PERMUTATIONS = 10_000
DEGREE = 3


class PairedSample(NamedTuple):
    chirp: float
    sopr: float
    pair_id: object = None


class Bin(NamedTuple):
    chirp: float   # median
    sopr: float    # median
    count: int


@dataclasses.dataclass(frozen=True)
class CorrelationReport:
    pearson_rho: float
    spearman_rs: float
    p_pearson: float
    p_spearman: float
    n: int
    permutations: int = DEFAULT_PERMUTATIONS

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _columns(samples):
    x = np.array([s[0] for s in samples], dtype=np.float64)
    y = np.array([s[1] for s in samples], dtype=np.float64)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("samples must be finite")
    return x, y


def bin_equal_volume(samples, n_bins: int = 16) -> list:
    """Sort by CHIRP and cut into ``n_bins`` contiguous groups whose sizes
    differ by at most one; report per-bin medians."""
    if n_bins < 2:
        raise ValueError("need at least two bins")
    if len(samples) < n_bins:
        raise ValueError(f"{len(samples)} samples cannot fill {n_bins} bins")
    x, y = _columns(samples)
    order = np.argsort(x, kind="stable")
    return [
        Bin(float(np.median(x[idx])), float(np.median(y[idx])), len(idx))
        for idx in np.array_split(order, n_bins)
    ]


def _standardise(a):
    a = a - a.mean()
    norm = np.sqrt(a @ a)
    if norm == 0:
        raise UndefinedCorrelationError("a column has zero variance")
    return a / norm


def _perm_pvalue(x, y, permutations, rng, chunk=1000):
    """Two-sided permutation p-value for the Pearson correlation of x, y."""
    zx, zy = _standardise(x), _standardise(y)
    observed = abs(float(zx @ zy))
    hits = 0
    done = 0
    while done < permutations:
        m = min(chunk, permutations - done)
        perms = rng.permuted(np.broadcast_to(zy, (m, len(zy))), axis=1)
        hits += int(np.sum(np.abs(perms @ zx) >= observed - 1e-12))
        done += m
    return (hits + 1) / (permutations + 1)


def pearson(x, y) -> float:
    return float(np.clip(_standardise(np.asarray(x, float)) @ _standardise(np.asarray(y, float)), -1, 1))


def spearman(x, y) -> float:
    return pearson(rankdata(x), rankdata(y))


def correlate(samples, permutations: int = DEFAULT_PERMUTATIONS, seed=0) -> CorrelationReport:
    """Pearson and Spearman coefficients with permutation p-values."""
    x, y = _columns(samples)
    if len(x) < 3:
        raise ValueError("need at least three samples")
    if permutations < 100:
        raise ValueError("use at least 100 permutations")
    rho = pearson(x, y)
    rx, ry = rankdata(x), rankdata(y)
    rs = pearson(rx, ry)
    rng = np.random.default_rng(seed)
    p_rho = _perm_pvalue(x, y, permutations, rng)
    p_rs = _perm_pvalue(rx, ry, permutations, rng)
    return CorrelationReport(rho, rs, p_rho, p_rs, len(x), permutations)


# --- calibration -------------------------------------------------------------------

def isotonic(y, weights=None) -> np.ndarray:
    """Pool-adjacent-violators fit of a non-decreasing sequence."""
    y = np.asarray(y, dtype=np.float64)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=np.float64)
    vals, wts, sizes = [], [], []
    for yi, wi in zip(y, w):
        vals.append(yi)
        wts.append(wi)
        sizes.append(1)
        while len(vals) > 1 and vals[-2] > vals[-1]:
            wsum = wts[-2] + wts[-1]
            merged = (vals[-2] * wts[-2] + vals[-1] * wts[-1]) / wsum
            size = sizes[-2] + sizes[-1]
            del vals[-1], wts[-1], sizes[-1]
            vals[-1], wts[-1], sizes[-1] = merged, wsum, size
    return np.repeat(vals, sizes)


@dataclasses.dataclass(frozen=True)
class CalibrationCurve:
    knots: tuple
    coefficients: tuple
    domain: tuple
    degree: int = DEGREE

    @property
    def spline(self) -> BSpline:
        return BSpline(np.asarray(self.knots), np.asarray(self.coefficients), self.degree,
                       extrapolate=False)

    def __call__(self, chirp):
        return calibrate(self, chirp)

    def to_dict(self) -> dict:
        return {
            "degree": self.degree,
            "knots": list(self.knots),
            "coefficients": list(self.coefficients),
            "domain": list(self.domain),
        }

    @classmethod
    def from_dict(cls, d) -> "CalibrationCurve":
        return cls(tuple(d["knots"]), tuple(d["coefficients"]), tuple(d["domain"]),
                   int(d.get("degree", DEGREE)))

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=1)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "CalibrationCurve":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def fit_calibration(bins) -> CalibrationCurve:
    """Least-squares cubic B-spline through isotonised bin medians.

    Coefficients are constrained to be non-decreasing and inside [0, 1],
    which makes the curve itself non-decreasing and bounded.
    """
    if len(bins) < DEGREE + 2:
        raise ValueError(f"need at least {DEGREE + 2} bins, got {len(bins)}")
    x = np.array([b[0] for b in bins], dtype=np.float64)
    y = np.array([b[1] for b in bins], dtype=np.float64)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("bin medians must be finite")
    order = np.argsort(x, kind="stable")
    x, y = x[order], isotonic(y[order])
    lo, hi = float(x[0]), float(x[-1])
    if hi <= lo:
        raise ValueError("bin medians span an empty CHIRP range")

    n_interior = max(1, len(bins) - 4)
    interior = np.linspace(lo, hi, n_interior + 2)[1:-1]
    knots = np.concatenate([[lo] * (DEGREE + 1), interior, [hi] * (DEGREE + 1)])
    n_coef = len(knots) - DEGREE - 1

    design = BSpline.design_matrix(x, knots, DEGREE).toarray()
    # c = L @ z with z = (c_0, increments...) makes monotonicity a bound on z
    lower = np.tril(np.ones((n_coef, n_coef)))
    res = lsq_linear(design @ lower, y,
                     bounds=(np.r_[0.0, np.zeros(n_coef - 1)], np.r_[1.0, np.ones(n_coef - 1)]),
                     method="bvls")
    coef = np.minimum(lower @ res.x, 1.0)
    return CalibrationCurve(tuple(knots.tolist()), tuple(coef.tolist()), (lo, hi), DEGREE)


def calibrate(curve: CalibrationCurve, chirp):
    """Predicted SOPR for raw CHIRP value(s); inputs clamp to the domain."""
    lo, hi = curve.domain
    x = np.clip(np.asarray(chirp, dtype=np.float64), lo, hi)
    out = np.clip(curve.spline(x), 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


# --- pairs.csv ---------------------------------------------------------------------

def write_pairs_csv(samples, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["pair_id", "chirp", "sopr"])
        for s in samples:
            w.writerow([s.pair_id, repr(float(s.chirp)), repr(float(s.sopr))])


def read_pairs_csv(path) -> list:
    with open(path, newline="") as f:
        return [PairedSample(float(r["chirp"]), float(r["sopr"]), r["pair_id"])
                for r in csv.DictReader(f)]


def holdout_mae(samples, n_bins=16, splits=5, train_fraction=0.8, seed=0) -> list:
    """Held-out MAE of calibrated predictions over random train/test splits."""
    rng = np.random.default_rng(seed)
    x, y = _columns(samples)
    maes = []
    for _ in range(splits):
        order = rng.permutation(len(x))
        cut = int(round(train_fraction * len(x)))
        train, test = order[:cut], order[cut:]
        curve = fit_calibration(bin_equal_volume(list(zip(x[train], y[train])), n_bins))
        maes.append(float(np.mean(np.abs(calibrate(curve, x[test]) - y[test]))))
    return maes
