"""Empirical spectral statistics: ESDs, folded arguments, summaries, KS fits.

Arguments are always folded to [0, pi] (|theta| for lambda = r e^{i theta}),
so a conjugate pair maps to a single angle: +i and -i both report pi/2,
positive reals 0, negative reals pi. Eigenvalues with modulus below
ZERO_MODULUS are excluded from argument statistics and counted separately;
their argument is meaningless and they dominate rank-deficient Jacobians.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

# below this modulus an eigenvalue counts as zero for argument purposes
ZERO_MODULUS = 1e-12

QUANTILE_POINTS = (0.0, 0.25, 0.5, 0.75, 0.95, 1.0)


@dataclass(frozen=True)
class EsdSample:
    """Eigenvalue multiset carrying uniform weight 1/n per value."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.complex128))
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("an ESD needs a nonempty 1-D value multiset")

    @property
    def weight(self) -> float:
        return 1.0 / self.values.size


def esd_cdf(sample: EsdSample, x: float, y: float) -> float:
    """Fraction of eigenvalues with real part <= x and imaginary part <= y."""
    v = sample.values
    return float(np.mean((v.real <= x) & (v.imag <= y)))


def fold_argument(value: complex) -> float:
    """|theta| of a complex value in [0, pi]; exact zero reports 0."""
    return float(abs(np.angle(complex(value))))


def folded_arguments(values) -> np.ndarray:
    """Vectorized fold of a complex array to [0, pi]."""
    return np.abs(np.angle(np.asarray(values, dtype=np.complex128)))


@dataclass
class SpectralSummary:
    """Box-plot statistics of pooled eigenvalues for one (epoch, d) cell.

    Quantiles are (min, q25, median, q75, p95, max) by linear interpolation
    between order statistics; whiskers follow the 1.5*IQR rule with points
    beyond the fences listed as outliers. Argument statistics skip the
    `n_zero_eigs` near-zero eigenvalues.
    """

    latent_dim: int
    epoch: int
    sample_points: int
    eigen_count: int
    n_zero_eigs: int
    modulus_quantiles: tuple[float, float, float, float, float, float]
    argument_quantiles: tuple[float, float, float, float, float, float]
    modulus_whiskers: tuple[float, float]
    argument_whiskers: tuple[float, float]
    modulus_outliers: list[float]
    argument_outliers: list[float]

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(d: dict) -> "SpectralSummary":
        d = dict(d)
        for key in ("modulus_quantiles", "argument_quantiles",
                    "modulus_whiskers", "argument_whiskers"):
            d[key] = tuple(d[key])
        return SpectralSummary(**d)


def _box_stats(x: np.ndarray):
    q = tuple(float(v) for v in np.quantile(x, QUANTILE_POINTS, method="linear"))
    iqr = q[3] - q[1]
    lo_fence = q[1] - 1.5 * iqr
    hi_fence = q[3] + 1.5 * iqr
    inside = x[(x >= lo_fence) & (x <= hi_fence)]
    whiskers = (float(inside.min()), float(inside.max()))
    outliers = sorted(float(v) for v in x[(x < lo_fence) | (x > hi_fence)])
    return q, whiskers, outliers


def summarize(spectra, epoch: int, latent_dim: int) -> SpectralSummary:
    """Pool eigenvalues from many spectra into one box-plot summary."""
    spectra = list(spectra)
    if not spectra:
        raise ValueError("cannot summarize zero spectra")
    pooled = np.concatenate([np.asarray(s, dtype=np.complex128) for s in spectra])
    moduli = np.abs(pooled)
    nonzero = moduli >= ZERO_MODULUS
    n_zero = int(np.sum(~nonzero))
    mod_q, mod_w, mod_out = _box_stats(moduli)
    if nonzero.any():
        args = folded_arguments(pooled[nonzero])
    else:
        args = np.zeros(1)
    arg_q, arg_w, arg_out = _box_stats(args)
    return SpectralSummary(
        latent_dim=latent_dim,
        epoch=epoch,
        sample_points=len(spectra),
        eigen_count=int(pooled.size),
        n_zero_eigs=n_zero,
        modulus_quantiles=mod_q,
        argument_quantiles=arg_q,
        modulus_whiskers=mod_w,
        argument_whiskers=arg_w,
        modulus_outliers=mod_out,
        argument_outliers=arg_out,
    )


def ks_statistic(samples, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance between a sample and a CDF.

    `cdf` may be scalar or vectorized; samples are sorted internally.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    if x.size == 0:
        raise ValueError("KS statistic needs a nonempty sample")
    n = x.size
    try:
        f = np.asarray(cdf(x), dtype=np.float64)
        if f.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):  # scalar-only cdf
        f = np.array([cdf(v) for v in x], dtype=np.float64)
    grid = np.arange(1, n + 1) / n
    d_plus = float(np.max(grid - f))
    d_minus = float(np.max(f - (grid - 1.0 / n)))
    return max(d_plus, d_minus)


def save_summaries_json(path, summaries) -> None:
    payload = [s.to_dict() for s in summaries]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_summaries_json(path) -> list[SpectralSummary]:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return [SpectralSummary.from_dict(d) for d in payload]
