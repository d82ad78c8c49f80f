"""Unit-norm streaming measurement models.

Every model produces unit Euclidean-norm vectors ``a`` such that
``sqrt(d) * a`` is mean-zero and isotropic.  The quantity

    ctilde(model) = inf_u  sqrt(d) * E|<u, a>| / ||u||_2

is the anti-concentration constant that controls how much signal a
single sign observation carries; for directions drawn uniformly from
the sphere it converges to sqrt(2/pi) as d grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.linalg import solve_triangular

#: Relative tolerance used everywhere a vector is required to be unit norm.
UNIT_NORM_RTOL = 1e-9

#: Large-d limit of the sphere constant, sqrt(2/pi).
GAUSSIAN_LIMIT_CONSTANT = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class GaussianSphere:
    """Directions uniform on the unit sphere S^{d-1}."""

    d: int

    def __post_init__(self):
        _check_dimension(self.d)


@dataclass(frozen=True)
class NormalizedRademacher:
    """Uniform random sign vectors scaled by 1/sqrt(d)."""

    d: int

    def __post_init__(self):
        _check_dimension(self.d)


@dataclass(frozen=True)
class NormalizedIIDSubGaussian:
    """IID mean-zero unit-variance entries, normalized to the sphere.

    ``base`` selects the entry distribution: "gaussian", "rademacher",
    or "uniform" (uniform on [-sqrt(3), sqrt(3)]).
    """

    d: int
    base: str = "uniform"

    def __post_init__(self):
        _check_dimension(self.d)
        if self.base not in ("gaussian", "rademacher", "uniform"):
            raise ValueError(f"unknown sub-Gaussian base {self.base!r}")


class DatasetRows:
    """Measurement vectors drawn from the rows of a fixed matrix.

    Rows are normalized to unit norm at sampling time; ``row_norms``
    holds the original norms so responses can be rescaled to keep the
    regression system unchanged.  Sampling is uniform with replacement.
    """

    def __init__(self, rows, mode: str = "uniform_with_replacement"):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise ValueError("dataset has no rows")
        if mode != "uniform_with_replacement":
            raise ValueError(f"unknown sampling mode {mode!r}")
        norms = np.linalg.norm(rows, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("dataset contains a zero row; cannot normalize")
        self.rows = rows
        self.mode = mode
        self.row_norms = norms
        self.unit_rows = rows / norms[:, None]
        self.d = rows.shape[1]
        self.n_rows = rows.shape[0]

    def __repr__(self):
        return f"DatasetRows(n_rows={self.n_rows}, d={self.d}, mode={self.mode!r})"


MeasurementModel = Union[
    GaussianSphere, NormalizedRademacher, NormalizedIIDSubGaussian, DatasetRows
]


@dataclass(frozen=True)
class CtildeEstimate:
    """Monte Carlo estimate of the measurement anti-concentration constant."""

    value: float
    stderr: float
    n_samples: int
    n_directions: int

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("ctilde estimate must be positive")
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")


def _check_dimension(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")


def _normalize_rows(g: np.ndarray, rng: np.random.Generator, redraw) -> np.ndarray:
    """Normalize rows of g in place, redrawing any exact-zero rows."""
    norms = np.linalg.norm(g, axis=1)
    while np.any(norms == 0.0):  # measure-zero event in exact arithmetic
        bad = norms == 0.0
        g[bad] = redraw(rng, int(bad.sum()))
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]


def sample_block(model: MeasurementModel, rng: np.random.Generator, n: int):
    """Draw ``n`` measurement vectors.

    Returns ``(A, idx)`` where ``A`` is an (n, d) array of unit-norm
    rows and ``idx`` is the (n,) array of source row indices for
    DatasetRows models (None otherwise).
    """
    if isinstance(model, GaussianSphere):
        g = rng.standard_normal((n, model.d))
        return _normalize_rows(g, rng, lambda r, m: r.standard_normal((m, model.d))), None
    if isinstance(model, NormalizedRademacher):
        signs = rng.integers(0, 2, size=(n, model.d)) * 2 - 1
        return signs / math.sqrt(model.d), None
    if isinstance(model, NormalizedIIDSubGaussian):
        if model.base == "gaussian":
            draw = lambda r, m: r.standard_normal((m, model.d))
        elif model.base == "rademacher":
            draw = lambda r, m: (r.integers(0, 2, size=(m, model.d)) * 2 - 1).astype(float)
        else:
            s3 = math.sqrt(3.0)
            draw = lambda r, m: r.uniform(-s3, s3, size=(m, model.d))
        return _normalize_rows(draw(rng, n), rng, draw), None
    if isinstance(model, DatasetRows):
        idx = rng.integers(0, model.n_rows, size=n)
        return model.unit_rows[idx], idx
    raise TypeError(f"unknown measurement model {model!r}")


def sample_measurement(model: MeasurementModel, rng: np.random.Generator) -> np.ndarray:
    """Draw a single unit-norm measurement vector."""
    A, _ = sample_block(model, rng, 1)
    return A[0]


def exact_sphere_constant(d: int) -> float:
    """sqrt(d) * E|<u, a>| for a uniform on S^{d-1} and any fixed unit u.

    Equals sqrt(d) * Gamma(d/2) / (sqrt(pi) * Gamma((d+1)/2)); decreases
    to sqrt(2/pi) as d -> infinity, and is 1 at d = 1.
    """
    _check_dimension(d)
    return math.exp(
        0.5 * math.log(d)
        + math.lgamma(d / 2.0)
        - 0.5 * math.log(math.pi)
        - math.lgamma((d + 1) / 2.0)
    )


def estimate_ctilde(
    model: MeasurementModel,
    n_samples: int,
    rng: np.random.Generator,
    n_directions: int = 32,
    directions=None,
    chunk: int = 50_000,
) -> CtildeEstimate:
    """Estimate the anti-concentration constant of a measurement model.

    Draws ``n_directions`` random unit directions u (shared across one
    pool of ``n_samples`` measurement draws), computes the Monte Carlo
    mean of sqrt(d)*|<u, a>| for each, and reports the minimum across
    directions as a lower-confidence proxy for the infimum over all u.

    Parameters
    ----------
    directions : optional (J, d) array of unit directions. When given,
        overrides ``n_directions`` and the internal direction draw.
    """
    if n_samples < 100:
        raise ValueError("n_samples must be at least 100")
    d = model.d
    if directions is None:
        if n_directions < 1:
            raise ValueError("n_directions must be at least 1")
        g = rng.standard_normal((n_directions, d))
        U = _normalize_rows(g, rng, lambda r, m: r.standard_normal((m, d)))
    else:
        U = np.atleast_2d(np.asarray(directions, dtype=float))
        norms = np.linalg.norm(U, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("directions must be nonzero")
        U = U / norms[:, None]
    n_dir = U.shape[0]

    sums = np.zeros(n_dir)
    sumsqs = np.zeros(n_dir)
    remaining = n_samples
    scale = math.sqrt(d)
    while remaining > 0:
        m = min(chunk, remaining)
        A, _ = sample_block(model, rng, m)
        z = scale * np.abs(A @ U.T)  # (m, n_dir)
        sums += z.sum(axis=0)
        sumsqs += (z * z).sum(axis=0)
        remaining -= m

    means = sums / n_samples
    var = np.maximum(sumsqs / n_samples - means**2, 0.0) * n_samples / max(n_samples - 1, 1)
    stderrs = np.sqrt(var / n_samples)
    j = int(np.argmin(means))
    return CtildeEstimate(
        value=float(means[j]),
        stderr=float(stderrs[j]),
        n_samples=n_samples,
        n_directions=n_dir,
    )


def whiten(rows, covariance) -> np.ndarray:
    """Standardize rows drawn with a known covariance.

    Computes the Cholesky factor L of the SPD ``covariance`` and returns
    L^{-1} row for each row, so that whitened sqrt(d)-scaled rows are
    asymptotically isotropic.  Raises ``numpy.linalg.LinAlgError`` when
    the covariance is not positive definite.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    covariance = np.asarray(covariance, dtype=float)
    L = np.linalg.cholesky(covariance)
    return solve_triangular(L, rows.T, lower=True).T
