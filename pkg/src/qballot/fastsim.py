"""Symbolic post-vote states and measurement sampling at any register count.

After voting, the shared state is the uniform-magnitude superposition over
``{(l_1 + a_1, ..., l_n + a_n) mod m : l_1 + ... + l_n = 0 mod m}``. Its
Born distribution is therefore uniform on a coset of a subgroup of Z_m^n,
which can be sampled by drawing ``l_1..l_{n-1}`` freely and solving for
``l_n``. Nothing here ever materializes ``m**n`` amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .qudit import QuditState, check_dense_cap

#: Trials drawn per vectorized batch; bounded so one batch stays ~100 MB at n = 10**6.
DEFAULT_BATCH = 8

_BATCH_ELEMENTS = 2**23


@dataclass(frozen=True, eq=False)
class StructuredBallotState:
    """Post-vote state described by its modulus and per-register shifts."""

    m: int
    shifts: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.m < 2:
            raise ValueError(f"modulus must be >= 2, got {self.m}")
        shifts = np.array(self.shifts, dtype=np.int64).reshape(-1) % self.m
        if shifts.size < 2:
            raise ValueError("structured ballot state needs n >= 2 registers")
        shifts.setflags(write=False)
        object.__setattr__(self, "shifts", shifts)

    @classmethod
    def from_votes(cls, m: int, votes: Sequence[int]) -> StructuredBallotState:
        return cls(m, np.asarray(votes, dtype=np.int64))

    @property
    def n(self) -> int:
        return int(self.shifts.size)

    @property
    def shift_total(self) -> int:
        """Sum of the shifts mod m; every outcome tuple sums to this."""
        return int(self.shifts.sum() % self.m)

    def __repr__(self) -> str:
        return f"StructuredBallotState(m={self.m}, n={self.n}, shift_total={self.shift_total})"


def _draw(state: StructuredBallotState, rng: np.random.Generator, trials: int) -> np.ndarray:
    m, n = state.m, state.n
    out = np.empty((trials, n), dtype=np.int64)
    out[:, :-1] = rng.integers(0, m, size=(trials, n - 1), dtype=np.int64)
    out[:, -1] = (-out[:, :-1].sum(axis=1)) % m
    out += state.shifts
    out %= m
    return out


def iter_sample_batches(
    state: StructuredBallotState,
    rng: np.random.Generator,
    trials: int,
    batch_size: int = DEFAULT_BATCH,
) -> Iterator[np.ndarray]:
    """Yield outcome arrays of shape ``(<=batch_size, n)`` totalling ``trials`` rows."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    done = 0
    while done < trials:
        b = min(batch_size, trials - done)
        yield _draw(state, rng, b)
        done += b


def sample_outcomes(
    state: StructuredBallotState,
    rng: np.random.Generator,
    trials: int,
    batch_size: int = DEFAULT_BATCH,
) -> np.ndarray:
    """Sample ``trials`` measurement outcomes as a ``(trials, n)`` array.

    The result is the same as concatenating :func:`iter_sample_batches`
    with the same ``batch_size``, which is the memory-friendly route for large n.
    """
    return np.concatenate(list(iter_sample_batches(state, rng, trials, batch_size)))


def sample_register(
    state: StructuredBallotState,
    rng: np.random.Generator,
    trials: int,
    register: int,
    batch_size: int | None = None,
) -> np.ndarray:
    """Outcomes of a single register across ``trials`` full joint samples.

    Only the requested column of each batch is kept. The default batch size
    holds each batch to about 2**23 entries.
    """
    _check_register(state, register)
    if batch_size is None:
        batch_size = max(1, _BATCH_ELEMENTS // state.n)
    return np.concatenate(
        [b[:, register].copy() for b in iter_sample_batches(state, rng, trials, batch_size)]
    )


def _check_register(state: StructuredBallotState, register: int) -> None:
    if not 0 <= register < state.n:
        raise ValueError(f"register {register} out of range [0, {state.n})")


def marginal(state: StructuredBallotState, register: int) -> np.ndarray:
    """Exact outcome distribution of one register.

    Fixing one register's value leaves ``m**(n-2)`` completions out of
    ``m**(n-1)`` support points, whatever the shifts, so every value has
    probability ``1/m``.
    """
    _check_register(state, register)
    return np.full(state.m, 1.0 / state.m)


def support_digits(state: StructuredBallotState) -> np.ndarray:
    """All ``m**(n-1)`` support tuples as an integer array (dense-cap bound)."""
    check_dense_cap(state.m, state.n)
    m, n = state.m, state.n
    free = np.indices((m,) * (n - 1)).reshape(n - 1, -1).T
    digits = np.empty((free.shape[0], n), dtype=np.int64)
    digits[:, :-1] = free
    digits[:, -1] = (-free.sum(axis=1)) % m
    digits += state.shifts
    digits %= m
    return digits


def to_dense(state: StructuredBallotState) -> QuditState:
    """Materialize the state with amplitude ``m**(-(n-1)/2)`` on each support index."""
    m, n = state.m, state.n
    digits = support_digits(state)
    weights = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    flat = np.sort(digits @ weights)
    amp = m ** (-(n - 1) / 2)
    return QuditState(m, n, flat, np.full(flat.size, amp, dtype=np.complex128), _trusted=True)
