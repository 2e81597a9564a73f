"""Observation encoding: running normalization, clipping, and thermometer bitcodes.

Real observations are normalized per dimension with running statistics,
clipped to [-10, 10], and turned into unary-style bitvectors by comparing
against a fixed ladder of thresholds. The ladder places thresholds at the
quantiles of a Gaussian stretched so that the outermost quantiles land
exactly on the clip boundaries, which concentrates resolution near zero
where normalized observations live.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError, ShapeError, StateError

CLIP_LO = -10.0
CLIP_HI = 10.0

# Variance floor applied during normalization so constant observation
# dimensions do not divide by zero.
SIGMA_FLOOR = 1e-8

# Acklam's rational approximation to the standard normal quantile
# (max |rel err| ~1.15e-9 on its own; one Newton step below brings it
# to near machine precision).
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)

_P_LOW = 0.02425


def _phi_cdf(z: float) -> float:
    """Standard normal CDF via erfc (accurate in the left tail for z <= 0)."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _phi_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _acklam_lower(p: float) -> float:
    """Rational approximation for p in (0, 0.5]."""
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
               ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
           (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def inverse_normal_cdf(p: float) -> float:
    """Standard normal quantile z with Phi(z) = p.

    Rational approximation refined by one Newton step against an
    erfc-based CDF. Antisymmetry around p = 0.5 is structural: values for
    p > 0.5 are computed as the negated mirror of 1 - p.

    Raises DomainError unless 0 < p < 1.
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"quantile probability must lie in (0, 1), got {p!r}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -inverse_normal_cdf(1.0 - p)
    z = _acklam_lower(p)
    # One Newton step: z <- z - (Phi(z) - p) / phi(z). The pdf is well away
    # from underflow for any double p > 0.
    z -= (_phi_cdf(z) - p) / _phi_pdf(z)
    return z


@dataclass
class ThermometerSpec:
    """Fixed threshold ladder shared by all observation dimensions."""

    bits: int
    thresholds: np.ndarray
    clip_lo: float = CLIP_LO
    clip_hi: float = CLIP_HI

    def validate(self) -> None:
        b = self.bits
        t = self.thresholds
        if b % 2 == 0 or b < 3:
            raise ConfigError(f"thermometer bit count must be odd and >= 3, got {b}")
        if t.shape != (b,):
            raise ConfigError(f"threshold vector has shape {t.shape}, expected ({b},)")
        if not np.all(np.diff(t) > 0):
            raise ConfigError("thresholds must be strictly increasing")
        if t[0] != self.clip_lo or t[-1] != self.clip_hi or t[(b - 1) // 2] != 0.0:
            raise ConfigError("threshold endpoints/center are not exact")


def compute_thresholds(bits: int) -> ThermometerSpec:
    """Threshold ladder at stretched-Gaussian quantiles.

    Candidate quantiles are m/bits for m = 1..bits-1 plus an extra one at
    1/2, all mapped through the normal quantile function and scaled so the
    outermost thresholds land on the clip boundaries. The first, center,
    and last entries are overwritten with exact -10 / 0 / +10 to remove
    rounding drift.
    """
    if bits % 2 == 0:
        raise ConfigError(f"thermometer bit count must be odd, got {bits}")
    if bits < 3:
        raise ConfigError(f"thermometer bit count must be >= 3, got {bits}")
    stretch = CLIP_HI / abs(inverse_normal_cdf(1.0 / bits))
    quantiles = [m / bits for m in range(1, bits)]
    quantiles.insert((bits - 1) // 2, 0.5)
    taus = np.array([stretch * inverse_normal_cdf(q) for q in quantiles], dtype=np.float64)
    taus[0] = CLIP_LO
    taus[-1] = CLIP_HI
    taus[(bits - 1) // 2] = 0.0
    spec = ThermometerSpec(bits=bits, thresholds=taus)
    spec.validate()
    return spec


@dataclass
class RunningStats:
    """Welford running mean/variance per observation dimension.

    `m2` is the running sum of squared deviations; variance = m2 / count.
    Once `frozen` is set the statistics are read-only (deployment uses the
    constants fixed at the end of training).
    """

    count: int = 0
    mean: np.ndarray = field(default_factory=lambda: np.zeros(0))
    m2: np.ndarray = field(default_factory=lambda: np.zeros(0))
    frozen: bool = False

    @classmethod
    def for_dim(cls, dim: int) -> "RunningStats":
        return cls(count=0, mean=np.zeros(dim), m2=np.zeros(dim), frozen=False)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def update(self, obs: np.ndarray) -> None:
        if self.frozen:
            raise StateError("running statistics are frozen")
        obs = np.asarray(obs, dtype=np.float64)
        if obs.shape != self.mean.shape:
            raise ShapeError(f"observation shape {obs.shape} != stats shape {self.mean.shape}")
        self.count += 1
        delta = obs - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (obs - self.mean)

    def sigma(self) -> np.ndarray:
        if self.count < 2:
            raise StateError(f"need at least 2 samples for a standard deviation, have {self.count}")
        var = np.maximum(self.m2 / self.count, 0.0)
        return np.maximum(np.sqrt(var), SIGMA_FLOOR)

    def freeze(self) -> None:
        self.frozen = True

    def copy(self) -> "RunningStats":
        return RunningStats(count=self.count, mean=self.mean.copy(),
                            m2=self.m2.copy(), frozen=self.frozen)


def update_stats(stats: RunningStats, obs: np.ndarray) -> RunningStats:
    """In-place Welford update; returns the same object for convenience."""
    stats.update(obs)
    return stats


def normalize_clip(obs: np.ndarray, stats: RunningStats) -> np.ndarray:
    """(obs - mean) / sigma, clipped to [-10, 10]. Works on 1-D or batched rows."""
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape[-1] != stats.dim:
        raise ShapeError(f"observation dim {obs.shape[-1]} != stats dim {stats.dim}")
    return np.clip((obs - stats.mean) / stats.sigma(), CLIP_LO, CLIP_HI)


def encode(normalized: np.ndarray, spec: ThermometerSpec) -> np.ndarray:
    """Thermometer bitcode: bit m of dimension j is 1{x_j >= tau_m}.

    Per-dimension blocks of length `spec.bits` are concatenated in
    dimension order. Accepts a 1-D vector or a batch of rows; the bit axis
    is always last. Inputs must already be clipped, so set bits form a
    contiguous prefix within every block.
    """
    x = np.asarray(normalized, dtype=np.float64)
    bits = (x[..., :, None] >= spec.thresholds).astype(np.uint8)
    return bits.reshape(*x.shape[:-1], x.shape[-1] * spec.bits)
