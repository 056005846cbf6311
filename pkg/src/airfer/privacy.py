"""Gaussian-noise calibration for model-level DP, plus randomized response.

Noise is calibrated with the analytical Gaussian mechanism and, under random
client participation, amplified by subsampling. Channel noise and fading are
never counted toward the privacy budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT2 = math.sqrt(2.0)

SIGMA_BRACKET = (1e-6, 1e6)


class CalibrationError(ValueError):
    """Raised when a privacy target cannot be met inside the search bracket."""


class InfeasibleAmplificationError(ValueError):
    """Raised when the amplified base delta would reach or exceed 1."""


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be finite and > 0, got {value!r}")
    return value


def normal_cdf(x: float) -> float:
    """Standard normal CDF through erfc, accurate in both tails."""
    return 0.5 * math.erfc(-x / SQRT2)


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon_target: float
    delta_target: float
    sensitivity: float = SQRT2

    def __post_init__(self):
        _check_positive("epsilon_target", self.epsilon_target)
        if not 0.0 < self.delta_target < 1.0:
            raise ValueError(f"delta_target must be in (0, 1), got {self.delta_target!r}")
        _check_positive("sensitivity", self.sensitivity)


@dataclass(frozen=True)
class PrivacySpec:
    budget: PrivacyBudget
    participation_p: float
    num_clients: int
    base_epsilon: float
    base_delta: float
    sigma_total: float

    @property
    def eta(self) -> float:
        return sampling_ratio(self.participation_p, self.num_clients)


@dataclass(frozen=True)
class ClientNoiseShare:
    sigma_client: float
    participants: int


def delta_for_sigma(epsilon: float, sigma: float, sensitivity: float = SQRT2) -> float:
    """Smallest delta for which N(0, sigma^2) noise gives (epsilon, delta)-DP."""
    eps = _check_positive("epsilon", epsilon)
    sigma = _check_positive("sigma", sigma)
    c = _check_positive("sensitivity", sensitivity)
    a = c / (2.0 * sigma)
    b = eps * sigma / c
    # the second term underflows to 0 long before exp(eps) overflows for sane eps
    second = normal_cdf(-a - b)
    second = math.exp(eps) * second if second > 0.0 else 0.0
    delta = normal_cdf(a - b) - second
    return min(1.0, max(0.0, delta))


def calibrate_sigma(epsilon: float, delta: float, sensitivity: float = SQRT2) -> float:
    """Invert :func:`delta_for_sigma` in sigma by bisection.

    The returned sigma satisfies ``delta_for_sigma(...) <= delta`` and is within
    relative width 1e-12 of the exact inverse.
    """
    eps = _check_positive("epsilon", epsilon)
    c = _check_positive("sensitivity", sensitivity)
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta!r}")

    lo, hi = SIGMA_BRACKET
    d_lo = delta_for_sigma(eps, lo, c)
    d_hi = delta_for_sigma(eps, hi, c)
    if d_lo < d_hi:
        raise CalibrationError("delta_for_sigma is not decreasing in sigma on the bracket")
    if d_hi > delta:
        raise CalibrationError(
            f"target delta={delta:g} unreachable for sigma in [{lo:g}, {hi:g}] (eps={eps:g})"
        )
    if d_lo <= delta:
        return lo

    # invariant: delta(lo) > delta >= delta(hi)
    while (hi - lo) > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if delta_for_sigma(eps, mid, c) > delta:
            lo = mid
        else:
            hi = mid
    return hi


def sampling_ratio(p: float, n: int) -> float:
    """Probability that a given client participates, conditioned on a non-empty round."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"participation p must be in (0, 1], got {p!r}")
    if int(n) < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if p == 1.0:
        return 1.0
    return p / -math.expm1(int(n) * math.log1p(-p))


def amplify_by_sampling(target: PrivacyBudget, p: float, n: int) -> PrivacySpec:
    """Map a target (eps', delta') under Bernoulli(p) participation to the base
    (eps, delta) each round must satisfy, and the total noise scale for it."""
    eta = sampling_ratio(p, n)
    if p == 1.0:
        base_eps = target.epsilon_target
        base_delta = target.delta_target
    else:
        base_eps = math.log1p(math.expm1(target.epsilon_target) / eta)
        base_delta = target.delta_target / eta
    if base_delta >= 1.0:
        raise InfeasibleAmplificationError(
            f"base delta {base_delta:g} >= 1 for delta'={target.delta_target:g}, p={p:g}, n={n}"
        )
    sigma = calibrate_sigma(base_eps, base_delta, target.sensitivity)
    return PrivacySpec(
        budget=target,
        participation_p=float(p),
        num_clients=int(n),
        base_epsilon=base_eps,
        base_delta=base_delta,
        sigma_total=sigma,
    )


def client_noise_share(spec: PrivacySpec, participants: int) -> ClientNoiseShare:
    if int(participants) < 1:
        raise ValueError(f"participants must be >= 1, got {participants!r}")
    return ClientNoiseShare(spec.sigma_total / math.sqrt(participants), int(participants))


def add_privacy_noise(vector, sigma_client: float, rng: np.random.Generator) -> np.ndarray:
    v = np.asarray(vector, dtype=float)
    if not np.all(np.isfinite(v)) or not math.isfinite(sigma_client) or sigma_client < 0:
        raise ValueError("add_privacy_noise needs finite inputs and sigma_client >= 0")
    if sigma_client == 0.0:
        return v.copy()
    return v + sigma_client * rng.standard_normal(v.shape)


def rr_truth_probability(epsilon: float, k: int) -> float:
    # e^eps / (e^eps + k), written to stay finite for large eps
    if math.isinf(epsilon):
        return 1.0
    return 1.0 / (1.0 + k * math.exp(-epsilon))


def rr_perturb(label: int, epsilon: float, k: int, rng: np.random.Generator) -> int:
    """Report ``label`` with probability e^eps/(e^eps+k), else a uniform wrong label."""
    if k < 2:
        raise ValueError(f"randomized response needs k >= 2, got {k}")
    if not 0 <= label < k:
        raise ValueError(f"label {label} outside [0, {k})")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if rng.random() < rr_truth_probability(epsilon, k):
        return int(label)
    return int((label + rng.integers(1, k)) % k)


def rr_perturb_many(labels, epsilon: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`rr_perturb` over an integer array of labels."""
    labels = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValueError(f"randomized response needs k >= 2, got {k}")
    keep = rng.random(labels.shape) < rr_truth_probability(epsilon, k)
    shift = rng.integers(1, k, size=labels.shape)
    return np.where(keep, labels, (labels + shift) % k)
