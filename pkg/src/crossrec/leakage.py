"""Executable evidence that the revealed rotation coefficients leak nothing.

Two layers:

1.  Exact reconstruction identities.  With unit-norm y and the coefficient
    vectors a_j = u^T A_j y and b_j = u2^T A_j u, both

        y  = sum_j a_j A_j^T u        and        u2 = sum_j b_j A_j u

    hold to machine precision.  Knowing the coefficients therefore maps any
    CANDIDATE secret to a consistent source vector: the coefficients pin the
    relation between the secret and the data, not the secret itself.

2.  Statistical independence.  Mutual information between every revealed
    scalar (each coefficient, and the revealed block norm) and every secret
    bit is estimated from protocol samples with a binned plug-in estimator
    (Miller-Madow corrected) and a multinomial bootstrap CI.  Calibration
    controls bound the estimator's bias before the protocol estimates are
    interpreted: a secret against itself must read ~1 bit, and against fresh
    independent noise ~0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import rng_for
from .rotation import OrthoBasis, build_basis, spherical_from_bits

LN2 = np.log(2.0)


def verify_reconstruction(u: np.ndarray, u2: np.ndarray, y: np.ndarray,
                          basis: OrthoBasis | None = None) -> float:
    """Max entrywise error of the two reconstruction identities.

    ``u`` and ``u2`` are spherical vectors, ``y`` a unit-norm vector of the
    same closed-form dimension.
    """
    u = np.asarray(u, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    y = np.asarray(y, dtype=float)
    if basis is None:
        basis = build_basis(y.shape[0])
    A = basis.matrices
    a = (A @ y) @ u            # a_j = u^T A_j y
    b = (A @ u) @ u2           # b_j = u2^T A_j u
    y_rec = np.einsum("j,jba,b->a", a, A, u)    # sum_j a_j A_j^T u
    u2_rec = np.einsum("j,jab,b->a", b, A, u)   # sum_j b_j A_j u
    return float(max(np.max(np.abs(y_rec - y)), np.max(np.abs(u2_rec - u2))))


def protocol_samples(n_samples: int, dim: int, seed: int) -> dict:
    """Draw protocol rounds: secrets, revealed coefficients, revealed norm.

    y is Gaussian (its norm is revealed, as in the real protocol); u and u2
    are spherical images of uniform bits.  Coefficients use the unit-norm
    direction of y, matching what the encoder transmits.
    """
    rng = rng_for(seed)
    A = build_basis(dim).matrices
    y = rng.standard_normal((n_samples, dim))
    norms = np.linalg.norm(y, axis=1)
    yn = y / norms[:, None]
    u_bits = rng.integers(0, 2, size=(n_samples, dim)).astype(np.uint8)
    u2_bits = rng.integers(0, 2, size=(n_samples, dim)).astype(np.uint8)
    u = spherical_from_bits(u_bits, dim)
    u2 = spherical_from_bits(u2_bits, dim)
    alpha = np.einsum("sa,jab,sb->sj", u, A, yn)
    beta = np.einsum("sa,jab,sb->sj", u2, A, u)
    return {"alpha": alpha, "beta": beta, "norm": norms,
            "u_bits": u_bits, "u2_bits": u2_bits}


def _joint_counts(x: np.ndarray, bits: np.ndarray, n_bins: int) -> np.ndarray:
    """Contingency table of an equal-frequency binning of x against bits."""
    qs = np.quantile(x, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    bx = np.searchsorted(qs, x, side="right")
    table = np.bincount(bx * 2 + bits, minlength=2 * n_bins).astype(float)
    return table.reshape(n_bins, 2)


def _mi_from_table(table: np.ndarray, corrected: bool = True) -> float:
    n = table.sum()
    if n == 0:
        return 0.0
    p = table / n
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    mask = p > 0
    mi = float(np.sum(p[mask] * np.log(p[mask] / (px @ py)[mask])) / LN2)
    if corrected:
        # Miller-Madow: subtract the first-order positive bias of plug-in MI
        kx = int(np.sum(table.sum(axis=1) > 0))
        ky = int(np.sum(table.sum(axis=0) > 0))
        knz = int(np.sum(table > 0))
        mi -= (knz - kx - ky + 1) / (2.0 * n * LN2)
    return mi


def estimate_mi(x: np.ndarray, bits: np.ndarray, n_bins: int = 16,
                n_boot: int = 200, seed: int = 0,
                ci: float = 0.95) -> tuple[float, float, float]:
    """Mutual information (bits) between a revealed scalar and a secret bit,
    with a multinomial-bootstrap confidence interval.

    Needs at least 1e4 paired samples for the binning to be meaningful.
    """
    x = np.asarray(x, dtype=float)
    bits = np.asarray(bits).astype(np.int64)
    if x.shape != bits.shape or x.ndim != 1:
        raise ValueError("x and bits must be equal-length vectors")
    if x.size < 10_000:
        raise ValueError("at least 1e4 samples are required")
    table = _joint_counts(x, bits, n_bins)
    mi = _mi_from_table(table)
    rng = rng_for(seed)
    n = int(table.sum())
    probs = (table / n).reshape(-1)
    draws = rng.multinomial(n, probs, size=n_boot).reshape(
        n_boot, n_bins, 2).astype(float)
    boot = np.array([_mi_from_table(tb) for tb in draws])
    lo, hi = np.quantile(boot, [(1 - ci) / 2, 1 - (1 - ci) / 2])
    return float(mi), float(lo), float(hi)


@dataclass
class LeakageReport:
    dim: int
    samples: int
    identity_max_error: float
    mi_threshold_bits: float
    calibration_self: tuple[float, float, float]
    calibration_independent: tuple[float, float, float]
    pairs: list[dict] = field(default_factory=list)

    @property
    def max_mi_upper(self) -> float:
        return max(p["ci_hi"] for p in self.pairs)

    @property
    def passed(self) -> bool:
        cal_ok = (abs(self.calibration_self[0] - 1.0) < 0.05
                  and self.calibration_independent[2] < self.mi_threshold_bits)
        return (cal_ok and self.identity_max_error <= 1e-10
                and self.max_mi_upper <= self.mi_threshold_bits)

    def to_json(self, **kwargs) -> str:
        payload = {
            "dim": self.dim,
            "samples": self.samples,
            "identity_max_error": self.identity_max_error,
            "mi_threshold_bits": self.mi_threshold_bits,
            "calibration": {
                "self_mi": list(self.calibration_self),
                "independent_mi": list(self.calibration_independent),
            },
            "max_mi_upper_bits": self.max_mi_upper,
            "passed": self.passed,
            "pairs": self.pairs,
        }
        return json.dumps(payload, indent=2, **kwargs)


def run_audit(samples: int = 100_000, dim: int = 8, seed: int = 0,
              threshold_bits: float = 1e-2, n_bins: int = 16,
              n_boot: int = 200, identity_trials: int = 10_000) -> LeakageReport:
    """Full audit: identity check over random triples, calibration controls,
    then MI of every revealed scalar against every secret bit."""
    rng = rng_for(seed, 0)
    basis = build_basis(dim)
    worst = 0.0
    for chunk in range(identity_trials):
        y = rng.standard_normal(dim)
        y /= np.linalg.norm(y)
        u = spherical_from_bits(rng.integers(0, 2, dim), dim)
        u2 = spherical_from_bits(rng.integers(0, 2, dim), dim)
        worst = max(worst, verify_reconstruction(u, u2, y, basis))

    data = protocol_samples(samples, dim, seed + 1)
    cal_rng = rng_for(seed, 2)
    some_bits = data["u_bits"][:, 0]
    cal_self = estimate_mi(some_bits.astype(float)
                           + 1e-3 * cal_rng.standard_normal(samples),
                           some_bits, n_bins=n_bins, n_boot=n_boot, seed=seed + 3)
    cal_indep = estimate_mi(cal_rng.standard_normal(samples), some_bits,
                            n_bins=n_bins, n_boot=n_boot, seed=seed + 4)

    revealed = [(f"alpha[{j}]", data["alpha"][:, j]) for j in range(dim)]
    revealed += [(f"beta[{j}]", data["beta"][:, j]) for j in range(dim)]
    revealed.append(("block_norm", data["norm"]))
    secrets = [(f"u_bit[{i}]", data["u_bits"][:, i]) for i in range(dim)]
    secrets += [(f"key_bit[{i}]", data["u2_bits"][:, i]) for i in range(dim)]

    pairs = []
    k = 0
    for rname, rvals in revealed:
        for sname, sbits in secrets:
            mi, lo, hi = estimate_mi(rvals, sbits, n_bins=n_bins,
                                     n_boot=n_boot, seed=seed + 10 + k)
            pairs.append({"revealed": rname, "secret": sname,
                          "mi_bits": mi, "ci_lo": lo, "ci_hi": hi})
            k += 1

    return LeakageReport(dim=dim, samples=samples,
                         identity_max_error=worst,
                         mi_threshold_bits=threshold_bits,
                         calibration_self=cal_self,
                         calibration_independent=cal_indep,
                         pairs=pairs)
