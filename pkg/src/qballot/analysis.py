"""Checks for support structure, ballot secrecy, and sampler agreement."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from . import fastsim
from .qudit import ATOL, QuditState, states_equal

CHI_SQUARE_ALPHA = 0.001


@dataclass(frozen=True)
class SupportReport:
    passed: bool
    support_size: int
    expected_size: int
    max_magnitude_error: float
    offending_index: tuple[int, ...] | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.passed


def check_support(state: QuditState, shifts: Sequence[int], m: int | None = None) -> SupportReport:
    """Check that ``state`` is the uniform superposition over the shifted constraint slice.

    Passes iff every supported index ``o`` satisfies ``sum(o_k - a_k) = 0 mod m``,
    there are exactly ``m**(n-1)`` of them, and every magnitude equals
    ``m**(-(n-1)/2)`` within 1e-9.
    """
    m = state.m if m is None else m
    if m != state.m:
        raise ValueError(f"modulus {m} does not match state dimension {state.m}")
    n = state.registers
    if len(shifts) != n:
        raise ValueError(f"{len(shifts)} shifts for {n} registers")

    digits = state.digits()
    expected = m ** (n - 1)
    mags = np.abs(state.amplitude_array)
    mag_err = float(np.max(np.abs(mags - m ** (-(n - 1) / 2)))) if mags.size else float("inf")

    residue = (digits.sum(axis=1) - int(np.sum(shifts))) % m
    bad = np.flatnonzero(residue != 0)
    if bad.size:
        idx = tuple(int(v) for v in digits[bad[0]])
        return SupportReport(False, len(state), expected, mag_err, idx, "index violates the congruence")
    if len(state) != expected:
        return SupportReport(False, len(state), expected, mag_err, None, "wrong support size")
    if mag_err > ATOL:
        worst = tuple(int(v) for v in digits[np.argmax(np.abs(mags - m ** (-(n - 1) / 2)))])
        return SupportReport(False, len(state), expected, mag_err, worst, "non-uniform magnitude")
    return SupportReport(True, len(state), expected, mag_err)


def marginal_from_dense(state: QuditState, register: int) -> np.ndarray:
    """Outcome distribution of a single register, other registers summed out."""
    if not 0 <= register < state.registers:
        raise ValueError(f"register {register} out of range [0, {state.registers})")
    digits = state.digits()[:, register]
    return np.bincount(digits, weights=state.probabilities(), minlength=state.m)


@dataclass(frozen=True)
class UniformityReport:
    register: int
    distribution: tuple[float, ...]
    max_abs_deviation_from_1_over_m: float
    chi_square_statistic: float
    sample_count: int
    passed: bool

    def __bool__(self) -> bool:
        return self.passed

    def as_record(self) -> dict:
        return {
            "register": self.register,
            "distribution": list(self.distribution),
            "max_abs_deviation_from_1_over_m": self.max_abs_deviation_from_1_over_m,
            "chi_square_statistic": self.chi_square_statistic,
            "sample_count": self.sample_count,
            "pass": self.passed,
        }


def chi_square_critical(m: int, alpha: float = CHI_SQUARE_ALPHA) -> float:
    return float(stats.chi2.ppf(1.0 - alpha, df=m - 1))


def chi_square_uniform(
    samples, m: int, register: int = 0, alpha: float = CHI_SQUARE_ALPHA
) -> UniformityReport:
    """Pearson goodness-of-fit of integer samples against uniform on ``[0, m)``.

    Raises:
        ValueError: fewer than ``10*m`` samples, or a sample outside ``[0, m)``.
    """
    samples = np.asarray(samples, dtype=np.int64).reshape(-1)
    if samples.size < 10 * m:
        raise ValueError(f"need at least {10 * m} samples for m={m}, got {samples.size}")
    if samples.min() < 0 or samples.max() >= m:
        raise ValueError(f"samples must lie in [0, {m})")
    counts = np.bincount(samples, minlength=m)
    expected = samples.size / m
    statistic = float(np.sum((counts - expected) ** 2) / expected)
    freq = counts / samples.size
    return UniformityReport(
        register=register,
        distribution=tuple(float(x) for x in freq),
        max_abs_deviation_from_1_over_m=float(np.max(np.abs(freq - 1.0 / m))),
        chi_square_statistic=statistic,
        sample_count=int(samples.size),
        passed=statistic < chi_square_critical(m, alpha),
    )


def exact_uniformity(distribution, register: int = 0, tol: float = 1e-12) -> UniformityReport:
    """Uniformity verdict for an exactly computed marginal (no sampling)."""
    dist = np.asarray(distribution, dtype=float)
    m = dist.size
    dev = float(np.max(np.abs(dist - 1.0 / m)))
    return UniformityReport(
        register=register,
        distribution=tuple(float(x) for x in dist),
        max_abs_deviation_from_1_over_m=dev,
        chi_square_statistic=0.0,
        sample_count=0,
        passed=dev <= tol,
    )


def total_variation(p, q) -> float:
    """Half the L1 distance between two probability vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    for name, dist in (("p", p), ("q", q)):
        if abs(dist.sum() - 1.0) > 1e-6:
            raise ValueError(f"{name} does not sum to 1 (sum = {dist.sum():.9g})")
    return 0.5 * float(np.sum(np.abs(p - q)))


def born_distribution(state: QuditState) -> dict[tuple[int, ...], float]:
    return {idx: float(p) for idx, p in zip(state.support(), state.probabilities())}


def empirical_distribution(samples) -> dict[tuple[int, ...], float]:
    rows, counts = np.unique(np.asarray(samples), axis=0, return_counts=True)
    total = counts.sum()
    return {tuple(int(v) for v in row): c / total for row, c in zip(rows, counts)}


def distribution_tv(p: Mapping, q: Mapping) -> float:
    """Total variation between two sparse outcome distributions."""
    keys = sorted(set(p) | set(q))
    return total_variation([p.get(k, 0.0) for k in keys], [q.get(k, 0.0) for k in keys])


@dataclass(frozen=True)
class EquivalenceReport:
    m: int
    n: int
    support_equal: bool
    states_equal: bool
    tv: float
    samples: int
    passed: bool


def dense_vs_structured(
    dense: QuditState,
    structured: fastsim.StructuredBallotState,
    rng: np.random.Generator,
    samples: int = 100_000,
    tv_bound: float = 0.02,
) -> EquivalenceReport:
    """Compare a dense post-vote state with its structured counterpart."""
    exact = fastsim.to_dense(structured)
    support_equal = bool(np.array_equal(exact.flat_indices, dense.flat_indices))
    same = states_equal(exact, dense)
    drawn = fastsim.sample_outcomes(structured, rng, samples, batch_size=samples)
    tv = distribution_tv(empirical_distribution(drawn), born_distribution(dense))
    return EquivalenceReport(
        dense.m, dense.registers, support_equal, same, tv, samples,
        support_equal and same and tv <= tv_bound,
    )
