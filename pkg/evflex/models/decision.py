"""
Plug-in decision model.

Drivers plug in when their arrival SOC is below a threshold drawn from a
normal distribution truncated to [0, inf). The survival function of that
distribution is the plug-in probability at a given arrival SOC. After a
positive decision the charging target is 0.80 with probability p80, else 1.00.
"""
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy.special import ndtr, ndtri

from evflex.core.config import SimulationConfig

TARGET_LOW = 0.80
TARGET_HIGH = 1.00

ArrayLike = Union[float, np.ndarray]


class TruncatedNormalThreshold:
    def __init__(self, mu: float = 0.6, sigma: float = 0.2, lower: float = 0.0):
        """
        Args:
            mu: mean of the untruncated normal
            sigma: standard deviation of the untruncated normal (> 0)
            lower: truncation point; there is no upper truncation
        """
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.mu = mu
        self.sigma = sigma
        self.lower = lower
        self._cdf_lower = float(ndtr((lower - mu) / sigma))
        # P(X > lower) of the untruncated normal
        self._mass = float(ndtr((mu - lower) / sigma))

    def survival(self, soc: ArrayLike) -> ArrayLike:
        """P(threshold > soc)."""
        soc_arr = np.maximum(np.asarray(soc, dtype=float), self.lower)
        out = ndtr((self.mu - soc_arr) / self.sigma) / self._mass
        return float(out) if np.ndim(out) == 0 else out

    def ppf(self, u: ArrayLike) -> ArrayLike:
        """Inverse CDF of the truncated distribution for u in [0, 1)."""
        p = self._cdf_lower + np.asarray(u, dtype=float) * self._mass
        out = np.maximum(self.mu + self.sigma * ndtri(p), self.lower)
        return float(out) if np.ndim(out) == 0 else out

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> ArrayLike:
        return self.ppf(rng.random(size))

    def mean(self) -> float:
        alpha = (self.lower - self.mu) / self.sigma
        pdf_alpha = np.exp(-0.5 * alpha * alpha) / np.sqrt(2.0 * np.pi)
        return float(self.mu + self.sigma * pdf_alpha / self._mass)


@lru_cache(maxsize=32)
def threshold_model(mu: float, sigma: float) -> TruncatedNormalThreshold:
    return TruncatedNormalThreshold(mu=mu, sigma=sigma)


def sample_plugin_threshold(rng: np.random.Generator, config: Optional[SimulationConfig] = None,
                            size: Optional[int] = None) -> ArrayLike:
    """Draw plug-in SOC thresholds from T(mu, sigma) truncated at 0. Samples may exceed 1.0."""
    config = config or SimulationConfig()
    return threshold_model(config.mu, config.sigma).sample(rng, size)


def survival_probability(soc: ArrayLike, config: Optional[SimulationConfig] = None) -> ArrayLike:
    config = config or SimulationConfig()
    return threshold_model(config.mu, config.sigma).survival(soc)


def targets_from_uniform(u: ArrayLike, p80: float) -> ArrayLike:
    out = np.where(np.asarray(u) < p80, TARGET_LOW, TARGET_HIGH)
    return float(out) if np.ndim(out) == 0 else out


def sample_target_soc(rng: np.random.Generator, config: Optional[SimulationConfig] = None,
                      size: Optional[int] = None) -> ArrayLike:
    """0.80 with probability p80, else 1.00."""
    config = config or SimulationConfig()
    return targets_from_uniform(rng.random(size), config.p80)
