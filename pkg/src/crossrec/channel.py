"""Correlated Gaussian source, SNR/efficiency conversions, error counting.

The physical channel is y = x + z with i.i.d. Gaussian noise z of variance
sigma2 (shot-noise units); the receiver-side sequence y is the one the
reconciliation rotates.  Signal variance defaults to 1, so the SNR sweep is
a sigma2 sweep.

Reconciliation efficiency ties a code rate to an operating SNR through the
Gaussian capacity C(snr) = 0.5*log2(1+snr):

    beta = r_code / C(snr)      and      snr(beta) = 2^(2*r_code/beta) - 1.

Randomness comes from counter-based Philox streams keyed by
(master seed, *path indices), so trials and blocks can be sampled in any
order, on any worker, with identical results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np


def rng_for(master_seed: int, *path: int) -> np.random.Generator:
    """Independent Philox stream for (master_seed, *path)."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(path))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class ChannelParams:
    sigma2: float
    signal_var: float = 1.0

    def __post_init__(self):
        if self.sigma2 <= 0 or self.signal_var <= 0:
            raise ValueError("variances must be positive")

    @property
    def snr(self) -> float:
        return self.signal_var / self.sigma2

    @property
    def snr_db(self) -> float:
        return 10.0 * np.log10(self.snr)

    @classmethod
    def from_snr_db(cls, snr_db: float, signal_var: float = 1.0) -> "ChannelParams":
        return cls(sigma2=signal_var / 10.0 ** (snr_db / 10.0),
                   signal_var=signal_var)


def sample_pair(n: int, params: ChannelParams,
                seed_or_rng) -> tuple[np.ndarray, np.ndarray]:
    """Draw (x, y) with x ~ N(0, signal_var) and y = x + N(0, sigma2)."""
    if isinstance(seed_or_rng, np.random.Generator):
        rng = seed_or_rng
    else:
        rng = rng_for(int(seed_or_rng))
    x = rng.standard_normal(n) * np.sqrt(params.signal_var)
    y = x + rng.standard_normal(n) * np.sqrt(params.sigma2)
    return x, y


def capacity(snr: float) -> float:
    """Gaussian channel capacity in bits per symbol."""
    return 0.5 * np.log2(1.0 + snr)


def beta_to_snr(r_code: float, beta: float) -> float:
    """Linear SNR at which the code rate meets efficiency beta."""
    if not 0 < beta <= 1:
        raise ValueError("beta must be in (0, 1]")
    return 2.0 ** (2.0 * r_code / beta) - 1.0


def snr_to_beta(r_code: float, snr: float) -> float:
    """Efficiency of the code rate at a given linear SNR."""
    if snr <= 0:
        raise ValueError("snr must be positive")
    return r_code / capacity(snr)


@dataclass(frozen=True)
class SnrEfficiency:
    """A (code rate, efficiency, SNR) triple satisfying beta*C(snr) = r_code."""

    r_code: float
    beta: float
    snr: float

    @property
    def snr_db(self) -> float:
        return 10.0 * np.log10(self.snr)

    @classmethod
    def from_beta(cls, r_code: float, beta: float) -> "SnrEfficiency":
        return cls(r_code=r_code, beta=beta, snr=beta_to_snr(r_code, beta))

    @classmethod
    def from_snr(cls, r_code: float, snr: float) -> "SnrEfficiency":
        return cls(r_code=r_code, beta=snr_to_beta(r_code, snr), snr=snr)


class FrameOutcome(NamedTuple):
    bit_errors: int
    n_bits: int
    frame_error: bool
    iterations: int
    seconds: float = 0.0


@dataclass
class ErrorStats:
    frames: int
    frame_errors: int
    bit_errors: int
    total_bits: int
    mean_iterations: float
    total_seconds: float

    @property
    def ber(self) -> float:
        return self.bit_errors / self.total_bits if self.total_bits else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.frames if self.frames else 0.0


def ber_fer_accumulate(outcomes: Iterable[FrameOutcome]) -> ErrorStats:
    """Aggregate per-frame results into BER = sum(N_e)/(N*F), FER = F_e/F."""
    frames = frame_errors = bit_errors = total_bits = 0
    iters = 0
    seconds = 0.0
    for out in outcomes:
        frames += 1
        frame_errors += bool(out.frame_error)
        bit_errors += out.bit_errors
        total_bits += out.n_bits
        iters += out.iterations
        seconds += out.seconds
    if frames == 0:
        raise ValueError("no frame outcomes supplied")
    return ErrorStats(frames=frames, frame_errors=frame_errors,
                      bit_errors=bit_errors, total_bits=total_bits,
                      mean_iterations=iters / frames, total_seconds=seconds)
