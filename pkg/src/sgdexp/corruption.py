"""Response corruption channels.

Two families are covered: semi-random channels where each response is
independently selected for corruption with probability p and then
replaced adversarially (sign flips, residual-sign reflection), and
oblivious channels that add symmetric random noise independent of the
measurement vector and the signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


def _check_probability(p: float) -> None:
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"corruption probability must lie in [0, 1], got {p!r}")


@dataclass(frozen=True)
class Uniform:
    """Uniform noise on [-half_width, half_width], symmetric about 0."""

    half_width: float

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    def draw(self, rng: np.random.Generator, size=None):
        return rng.uniform(-self.half_width, self.half_width, size=size)


@dataclass(frozen=True)
class Gaussian:
    """Mean-zero Gaussian noise with the given variance."""

    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("variance must be positive")

    def draw(self, rng: np.random.Generator, size=None):
        return rng.normal(0.0, math.sqrt(self.variance), size=size)


NoiseLaw = Union[Uniform, Gaussian]


@dataclass(frozen=True)
class NoCorruption:
    """Identity channel."""

    @property
    def p(self) -> float:
        return 0.0


@dataclass(frozen=True)
class SignFlip:
    """Replace y with -y on corrupted draws."""

    p: float

    def __post_init__(self):
        _check_probability(self.p)


@dataclass(frozen=True)
class ResidualSignAdversary:
    """Reflect y about the current prediction on corrupted draws.

    With prediction m at the solver's iterate, the corrupted response is
    2m - y: the residual keeps its magnitude but flips its sign.  This
    is the worst semi-random adversary for sign-driven updates.
    """

    p: float

    def __post_init__(self):
        _check_probability(self.p)


@dataclass(frozen=True)
class AdditiveOblivious:
    """Add symmetric random noise, independent of the measurement and signal."""

    p: float
    law: NoiseLaw

    def __post_init__(self):
        _check_probability(self.p)
        if not isinstance(self.law, (Uniform, Gaussian)):
            raise ValueError(f"unsupported noise law {self.law!r}")


CorruptionSpec = Union[NoCorruption, SignFlip, ResidualSignAdversary, AdditiveOblivious]


def relu(u: float) -> float:
    return u if u > 0.0 else 0.0


def corrupt(
    spec: CorruptionSpec,
    clean_y: float,
    rng: np.random.Generator,
    a=None,
    x_true=None,
    x_iter=None,
    relu_model: bool = False,
):
    """Pass one clean response through the corruption channel.

    Returns ``(y, was_corrupted)``.  The corruption indicator is drawn
    first; additive noise (when applicable) is drawn only on corrupted
    calls.  ResidualSignAdversary requires ``a`` and ``x_iter`` since it
    reflects about the prediction at the current iterate.
    """
    if isinstance(spec, ResidualSignAdversary) and x_iter is None:
        raise ValueError("ResidualSignAdversary requires the current iterate x_iter")
    p = spec.p
    if p == 0.0:
        return clean_y, False
    was = bool(rng.random() < p)
    if not was:
        return clean_y, False
    if isinstance(spec, SignFlip):
        return -clean_y, True
    if isinstance(spec, ResidualSignAdversary):
        m = float(np.dot(x_iter, a))
        if relu_model:
            m = relu(m)
        return 2.0 * m - clean_y, True
    if isinstance(spec, AdditiveOblivious):
        return clean_y + float(spec.law.draw(rng)), True
    # NoCorruption has p == 0 and never reaches here.
    raise TypeError(f"unknown corruption spec {spec!r}")


def corruption_rate_audit(spec: CorruptionSpec, n_trials: int, rng: np.random.Generator) -> float:
    """Empirical fraction of corrupted draws over n_trials channel calls."""
    if n_trials < 1000:
        raise ValueError("n_trials must be at least 1000")
    a = np.array([1.0])
    x0 = np.zeros(1)
    hits = 0
    for _ in range(n_trials):
        _, was = corrupt(spec, 1.0, rng, a=a, x_true=x0, x_iter=x0)
        hits += was
    return hits / n_trials
