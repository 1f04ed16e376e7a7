"""Random-matrix ensembles, their limiting spectral laws, and chain predictions.

Samplers cover the three ensembles compared against theory: square
matrices with i.i.d. uniform entries (circular law after 1/sqrt(n)
scaling), symmetric Gaussian matrices (semicircle law), and chains of
rectangular Gaussian matrices whose product returns to the smallest
dimension. Densities/CDFs for the limiting laws live alongside, plus the
quantile predictions for the squared eigenvalue moduli of a rescaled
rectangular chain.

Chains are stated for matrices scaled by 1/sqrt(n1) with unit-variance
entries; real Gaussians stand in for the complex ones of the limiting
theorem, which loosens radial fits and says nothing about arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .rng import Stream, derive


@dataclass(frozen=True)
class ChainSpec:
    """Dimensions (n1, ..., nk) of a rectangular chain returning to n1.

    The j-th factor is n_j x n_{j+1} with n_{k+1} = n1; n1 must be the
    smallest dimension, so every ratio alpha_j = n_j / n1 is >= 1.
    """

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.dims)
        if len(dims) < 1 or any(n < 1 for n in dims):
            raise ValueError(f"chain dims must be positive integers, got {dims}")
        if dims[0] != min(dims):
            raise ValueError(f"first chain dim must be the smallest, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def k(self) -> int:
        return len(self.dims)

    @property
    def alphas(self) -> tuple[float, ...]:
        """Ratios alpha_j = n_j / n1 for j = 2..k."""
        n1 = self.dims[0]
        return tuple(n / n1 for n in self.dims[1:])


def autoencoder_chain(n1: int) -> ChainSpec:
    """The 8-factor chain matching the autoencoder layer widths."""
    return ChainSpec((n1, 32, 64, 128, 784, 128, 64, 32))


@dataclass
class LawSample:
    """One sampled ensemble member together with its computed spectrum."""

    law: str  # "semicircle" | "circular" | "product_square" | "rect_chain"
    matrix_order: int
    seed: int
    spectrum: np.ndarray
    m: int | None = None
    chain: ChainSpec | None = None

    def __post_init__(self):
        if len(self.spectrum) != self.matrix_order:
            raise ValueError("spectrum length must equal the matrix order")


def sample_uniform_matrix(n: int, seed: int) -> np.ndarray:
    """n x n matrix with i.i.d. entries uniform on [-1, 1]."""
    if n < 1:
        raise ValueError("matrix order must be >= 1")
    return Stream(seed).uniform(n * n, -1.0, 1.0).reshape(n, n)


def sample_wigner(n: int, seed: int) -> np.ndarray:
    """Symmetric n x n matrix, upper triangle i.i.d. standard Gaussian."""
    if n < 1:
        raise ValueError("matrix order must be >= 1")
    g = Stream(seed).normal(n * n).reshape(n, n)
    return np.triu(g) + np.triu(g, 1).T


def sample_gaussian_square(n: int, seed: int) -> np.ndarray:
    """n x n matrix with i.i.d. standard Gaussian entries."""
    return Stream(seed).normal(n * n).reshape(n, n)


def sample_gaussian_chain(spec: ChainSpec, seed: int) -> list[np.ndarray]:
    """Chain factors of shapes n_j x n_{j+1} with i.i.d. Gaussian entries."""
    dims = spec.dims + (spec.dims[0],)
    out = []
    for j in range(spec.k):
        rows, cols = dims[j], dims[j + 1]
        s = Stream(derive(seed, j))
        out.append(s.normal(rows * cols).reshape(rows, cols))
    return out


def chain_product(factors: list[np.ndarray], scale_each: float) -> np.ndarray:
    """Product of the scaled chain factors (square, n1 x n1)."""
    prod = factors[0] * scale_each
    for f in factors[1:]:
        prod = linalg.matmul(prod, f * scale_each)
    return prod


# ---------------------------------------------------------------------------
# limiting laws

def semicircle_density(x: float) -> float:
    """Density (1/2pi) sqrt(4 - x^2) on |x| <= 2, zero outside."""
    x = float(x)
    if abs(x) > 2.0:
        return 0.0
    return np.sqrt(4.0 - x * x) / (2.0 * np.pi)


def semicircle_cdf(x):
    """CDF of the semicircle law; vectorized over x."""
    x = np.clip(np.asarray(x, dtype=np.float64), -2.0, 2.0)
    return 0.5 + (x * np.sqrt(4.0 - x * x)) / (4.0 * np.pi) + np.arcsin(x / 2.0) / np.pi


def product_law_density(m: int, re: float, im: float) -> float:
    """Limiting eigenvalue density of an m-fold product of scaled squares.

    Equals 1 / (pi * m * r^(2(m-1)/m)) inside the closed unit disc and 0
    outside; m = 1 recovers the uniform disc density.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    r2 = float(re) * float(re) + float(im) * float(im)
    if r2 > 1.0:
        return 0.0
    return 1.0 / (np.pi * m * r2 ** ((m - 1) / m))


def product_sq_modulus_cdf(m: int, t):
    """CDF of |eig|^2 for the m-fold square product law: t^(1/m) on [0, 1]."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    t = np.clip(np.asarray(t, dtype=np.float64), 0.0, 1.0)
    return t ** (1.0 / m)


def uniform_disc_sq_modulus_cdf(radius: float, t):
    """CDF of |eig|^2 when eigenvalues are uniform on a disc of `radius`."""
    r2 = radius * radius
    return np.clip(np.asarray(t, dtype=np.float64) / r2, 0.0, 1.0)


def chain_sq_modulus_quantile(alphas, u):
    """Quantile u of the chain law U * prod(U - 1 + alpha_j); vectorized."""
    u = np.asarray(u, dtype=np.float64)
    out = np.array(u, dtype=np.float64, copy=True)
    for a in alphas:
        out *= u - 1.0 + a
    return out


def chain_sq_modulus_cdf(alphas, t):
    """CDF of the chain law U * prod(U - 1 + alpha_j), by monotone inversion."""
    t = np.asarray(t, dtype=np.float64)
    lo = np.zeros_like(t, dtype=np.float64)
    hi = np.ones_like(t, dtype=np.float64)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        below = chain_sq_modulus_quantile(alphas, mid) < t
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return np.clip(0.5 * (lo + hi), 0.0, 1.0)


# ---------------------------------------------------------------------------
# rescaled chain predictions (fan-in uniform initialization)

def predicted_sq_modulus(spec: ChainSpec, u: float):
    """Quantile u of the predicted squared eigenvalue modulus for a chain
    of 1/sqrt(n_j)-scaled factors with entries uniform on [-1, 1].

    Evaluates (1/3^k) * prod_j((u - 1)/alpha_j + 1); the leading uniform
    factor of the underlying law is held at its maximum so that the
    median/maximum substitutions reproduce the published predictions
    (see predicted_modulus_stats).
    """
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise ValueError("quantile u must lie in [0, 1]")
    out = np.full_like(u, 3.0 ** -spec.k, dtype=np.float64)
    for a in spec.alphas:
        out *= (u - 1.0) / a + 1.0
    if out.ndim == 0:
        return float(out)
    return out


def predicted_modulus_stats(spec: ChainSpec) -> tuple[float, float]:
    """(median, maximum) predicted eigenvalue modulus (not squared)."""
    med = float(np.sqrt(predicted_sq_modulus(spec, 0.5)))
    mx = float(np.sqrt(predicted_sq_modulus(spec, 1.0)))
    return med, mx


def sample_predicted_distribution(spec: ChainSpec, count: int, seed: int) -> np.ndarray:
    """Monte Carlo draws from the predicted squared-modulus distribution."""
    if count < 1:
        raise ValueError("count must be >= 1")
    u = Stream(seed).uniform(count)
    return np.asarray(predicted_sq_modulus(spec, u), dtype=np.float64)


# ---------------------------------------------------------------------------
# law sampling helpers used by the verification suite

def circular_law_spectrum(n: int, seed: int) -> np.ndarray:
    """Spectrum of (1/sqrt(n)) times a uniform [-1, 1] square matrix."""
    return linalg.eigenvalues(sample_uniform_matrix(n, seed) / np.sqrt(n))


def semicircle_spectrum(n: int, seed: int) -> np.ndarray:
    """Spectrum of (1/sqrt(n)) times a Wigner matrix (real up to round-off)."""
    return linalg.eigenvalues(sample_wigner(n, seed) / np.sqrt(n))


def product_square_spectrum(n: int, m: int, seed: int) -> np.ndarray:
    """Spectrum of the product of m independent (1/sqrt(n))-scaled Gaussians."""
    prod = np.eye(n)
    root = np.sqrt(n)
    for j in range(m):
        prod = prod @ (sample_gaussian_square(n, derive(seed, j)) / root)
    return linalg.eigenvalues(prod)


def rect_chain_spectrum(spec: ChainSpec, seed: int) -> np.ndarray:
    """Spectrum of the 1/sqrt(n1)-scaled Gaussian chain product."""
    factors = sample_gaussian_chain(spec, seed)
    return linalg.eigenvalues(chain_product(factors, 1.0 / np.sqrt(spec.dims[0])))
