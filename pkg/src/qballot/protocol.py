"""Election variants built on the shared entangled ballot state.

Every variant reduces to the same primitive: ``n`` registers of dimension
``m`` prepared in ``m**-0.5 * sum_j |j>^n``, a Fourier transform per
register, a cyclic shift by each register's vote, a full measurement, and
a sum of the outcomes mod ``m``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from . import fastsim, gates
from .qudit import QuditState, apply_single, check_dense_cap, measure_all

#: ``backend="auto"`` picks the dense simulator up to this many basis states.
AUTO_DENSE_LIMIT = 2**20

BACKENDS = ("dense", "structured", "auto")


class Version(str, enum.Enum):
    """Where the Fourier transform happens in the two-alternative protocol."""

    #: Each voter applies ``shift**a @ dft`` to their own register.
    PER_VOTER_FOURIER = "per-voter-fourier"
    #: The authority applies ``dft`` everywhere first; voters only shift.
    PRE_FOURIER = "pre-fourier"


@dataclass(frozen=True)
class VoteVector:
    """Per-voter choices, each in ``range(alphabet)``."""

    votes: tuple[int, ...]
    alphabet: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "votes", tuple(int(v) for v in self.votes))
        if self.alphabet < 2:
            raise ValueError("alphabet must have at least two alternatives")
        for k, v in enumerate(self.votes):
            if not 0 <= v < self.alphabet:
                raise ValueError(f"vote {k} = {v} is outside [0, {self.alphabet})")

    def __len__(self) -> int:
        return len(self.votes)

    def __iter__(self):
        return iter(self.votes)

    def histogram(self) -> tuple[int, ...]:
        counts = [0] * self.alphabet
        for v in self.votes:
            counts[v] += 1
        return tuple(counts)


def as_votes(votes, alphabet: int = 2) -> VoteVector:
    if isinstance(votes, VoteVector):
        if votes.alphabet > alphabet:
            return VoteVector(votes.votes, alphabet)
        return votes
    return VoteVector(tuple(votes), alphabet)


@dataclass(frozen=True)
class ElectionSpec:
    m: int
    n: int
    version: Version = Version.PER_VOTER_FOURIER
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "version", Version(self.version))
        if self.m < 2:
            raise ValueError(f"modulus must be >= 2, got m={self.m}")
        if self.n < 2:
            raise ValueError(f"need at least two voter slots, got n={self.n}")
        if self.m <= self.n:
            raise ValueError(f"constraint m > n violated (m={self.m}, n={self.n})")


@dataclass(frozen=True)
class TallyOutcome:
    outcomes: tuple[int, ...]
    sum_mod_m: int
    yes_count: int
    fictional_votes: int = 0
    backend: str = "dense"


@dataclass(frozen=True)
class BoxElectionSpec:
    m: int
    votes_per_box: tuple[tuple[int, ...], ...]
    seed: int = 0

    def __post_init__(self) -> None:
        boxes = tuple(tuple(as_votes(b).votes) for b in self.votes_per_box)
        object.__setattr__(self, "votes_per_box", boxes)
        if not boxes:
            raise ValueError("need at least one ballot box")
        if self.m < 2:
            raise ValueError(f"modulus must be >= 2, got m={self.m}")
        if self.m <= self.total_voters:
            raise ValueError(
                f"constraint m > total voters violated (m={self.m}, voters={self.total_voters})"
            )

    @property
    def boxes(self) -> int:
        return len(self.votes_per_box)

    @property
    def total_voters(self) -> int:
        return sum(len(b) for b in self.votes_per_box)


@dataclass(frozen=True)
class CongruenceSystem:
    moduli: tuple[int, ...]
    residues: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        moduli = tuple(int(x) for x in self.moduli)
        residues = tuple(int(x) for x in self.residues)
        object.__setattr__(self, "moduli", moduli)
        object.__setattr__(self, "residues", residues)
        if not moduli:
            raise ValueError("need at least one modulus")
        if len(moduli) != len(residues):
            raise ValueError(f"{len(moduli)} moduli but {len(residues)} residues")
        for mod in moduli:
            if mod < 2:
                raise ValueError(f"moduli must be >= 2, got {mod}")
        check_coprime(moduli)
        for c, mod in zip(residues, moduli):
            if not 0 <= c < mod:
                raise ValueError(f"residue {c} outside [0, {mod})")

    @property
    def product(self) -> int:
        return math.prod(self.moduli)


def check_coprime(moduli: Sequence[int]) -> None:
    for a, b in combinations(moduli, 2):
        if math.gcd(a, b) != 1:
            raise ValueError(f"moduli are not pairwise coprime: gcd({a}, {b}) = {math.gcd(a, b)}")


def resolve_backend(m: int, n: int, backend: str) -> str:
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "auto":
        return "dense" if m**n <= AUTO_DENSE_LIMIT else "structured"
    return backend


def _copy_rng(seed: int, copy_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, copy_index])


# -- state preparation and voting ---------------------------------------------


def build_w(m: int, copies: int) -> QuditState:
    """``m**-0.5 * sum_j |j, j, ..., j>`` over ``copies`` registers."""
    if m < 2:
        raise ValueError(f"modulus must be >= 2, got {m}")
    if copies < 1:
        raise ValueError(f"need at least one copy, got {copies}")
    check_dense_cap(m, copies)
    repunit = sum(m**p for p in range(copies))
    flat = np.arange(m, dtype=np.int64) * repunit
    return QuditState(m, copies, flat, np.full(m, m**-0.5, dtype=np.complex128), _trusted=True)


def cast_votes(state: QuditState, votes, version: Version | str = Version.PER_VOTER_FOURIER) -> QuditState:
    """Apply every voter's operation to their register.

    A vote ``a`` shifts its register by ``a``; YES/NO ballots use 1/0, the
    multi-candidate rules use larger shifts.
    """
    votes = as_votes(votes, alphabet=state.m)
    if len(votes) != state.registers:
        raise ValueError(f"{len(votes)} votes for {state.registers} registers")
    version = Version(version)
    m = state.m
    if version is Version.PER_VOTER_FOURIER:
        for r, a in enumerate(votes):
            state = apply_single(state, gates.shift(m, a) @ gates.dft(m), r)
    else:
        f = gates.dft(m)
        for r in range(state.registers):
            state = apply_single(state, f, r)
        for r, a in enumerate(votes):
            if a:
                state = apply_single(state, gates.shift(m, a), r)
    return state


def post_vote_state(m: int, votes, version: Version | str = Version.PER_VOTER_FOURIER) -> QuditState:
    """Dense post-vote state for a fresh ballot state with one register per vote."""
    votes = as_votes(votes, alphabet=m)
    return cast_votes(build_w(m, len(votes)), votes, version)


@lru_cache(maxsize=32)
def _fourier_w(m: int, n: int) -> QuditState:
    state = build_w(m, n)
    f = gates.dft(m)
    for r in range(n):
        state = apply_single(state, f, r)
    return state


def _shifted_state(m: int, shifts: Sequence[int], version: Version) -> QuditState:
    """Post-vote state for arbitrary per-register shifts in ``[0, m)``."""
    if version is Version.PER_VOTER_FOURIER:
        return cast_votes(build_w(m, len(shifts)), VoteVector(shifts, m), version)
    state = _fourier_w(m, len(shifts))
    for r, a in enumerate(shifts):
        if a:
            state = apply_single(state, gates.shift(m, a), r)
    return state


def _measure_shifted(
    m: int, shifts: Sequence[int], rng: np.random.Generator, backend: str, version: Version
) -> tuple[tuple[int, ...], str]:
    backend = resolve_backend(m, len(shifts), backend)
    if len(shifts) == 1:
        # one register: the structured form needs n >= 2, and dense is trivial
        backend = "dense"
    if backend == "dense":
        outcome = measure_all(_shifted_state(m, shifts, version), rng)
    else:
        row = fastsim.sample_outcomes(fastsim.StructuredBallotState(m, shifts), rng, 1)[0]
        outcome = tuple(int(v) for v in row)
    return outcome, backend


# -- two-alternative election ---------------------------------------------------


def run_election(
    spec: ElectionSpec, votes, real_voters: int | None = None, backend: str = "auto"
) -> TallyOutcome:
    """Pad to ``spec.n`` slots with NO votes, vote, measure, and tally.

    Fictional votes are NO, so they add nothing to the YES count; the number
    padded is reported in ``fictional_votes``.
    """
    votes = as_votes(votes)
    if real_voters is None:
        real_voters = len(votes)
    if real_voters != len(votes):
        raise ValueError(f"got {len(votes)} votes but real_voters={real_voters}")
    if real_voters > spec.n:
        raise ValueError(f"real_voters={real_voters} exceeds the {spec.n} voter slots")
    fictional = spec.n - real_voters
    shifts = votes.votes + (0,) * fictional
    rng = np.random.default_rng(spec.seed)
    outcomes, used = _measure_shifted(spec.m, shifts, rng, backend, spec.version)
    total = sum(outcomes) % spec.m
    return TallyOutcome(outcomes, total, total, fictional, used)


# -- ballot boxes -------------------------------------------------------------


def box_ballot_state(spec: BoxElectionSpec) -> QuditState:
    """Dense pre-measurement state: one register per box, a shift per YES vote."""
    m = spec.m
    state = build_w(m, spec.boxes)
    f = gates.dft(m)
    for r in range(spec.boxes):
        state = apply_single(state, f, r)
    step = gates.shift(m, 1)
    for r, box in enumerate(spec.votes_per_box):
        for a in box:
            if a:
                state = apply_single(state, step, r)
    return state


def run_box_election(spec: BoxElectionSpec, backend: str = "auto") -> TallyOutcome:
    rng = np.random.default_rng(spec.seed)
    box_sums = [sum(b) % spec.m for b in spec.votes_per_box]
    used = resolve_backend(spec.m, spec.boxes, backend)
    if used == "dense":
        outcomes = measure_all(box_ballot_state(spec), rng)
    elif spec.boxes == 1:
        # a single register after the transform is the basis state |sum>
        outcomes = (box_sums[0],)
    else:
        row = fastsim.sample_outcomes(fastsim.StructuredBallotState(spec.m, box_sums), rng, 1)[0]
        outcomes = tuple(int(v) for v in row)
    total = sum(outcomes) % spec.m
    return TallyOutcome(outcomes, total, total, 0, used)


# -- more than two candidates ------------------------------------------------------

#: Shift applied to each copy for candidates I, II, III.
THREE_CANDIDATE_SHIFTS = ((0, 0), (1, 1), (2, 1))


def multicandidate_tallies(
    m: int,
    n: int,
    votes,
    seed: int = 0,
    backend: str = "auto",
    version: Version | str = Version.PER_VOTER_FOURIER,
) -> tuple[int, int]:
    """Measured sums of the two ballot copies for a three-candidate vote.

    Copy 1 tallies ``n_II + 2*n_III`` and copy 2 tallies ``n_II + n_III``.
    """
    votes = as_votes(votes, alphabet=3)
    if votes.alphabet != 3:
        raise ValueError("three-candidate rule needs votes in {0, 1, 2}")
    if len(votes) != n:
        raise ValueError(f"{len(votes)} votes for n={n}")
    if n < 1:
        raise ValueError(f"need at least one voter, got n={n}")
    if m <= 2 * n:
        raise ValueError(f"constraint m > 2n violated (m={m}, n={n})")
    version = Version(version)
    tallies = []
    for copy in range(2):
        shifts = [THREE_CANDIDATE_SHIFTS[c][copy] for c in votes]
        outcomes, _ = _measure_shifted(m, shifts, _copy_rng(seed, copy), backend, version)
        tallies.append(sum(outcomes) % m)
    return tallies[0], tallies[1]


def run_multicandidate(
    m: int,
    n: int,
    votes,
    seed: int = 0,
    backend: str = "auto",
    version: Version | str = Version.PER_VOTER_FOURIER,
) -> tuple[int, int, int]:
    """Counts ``(n_I, n_II, n_III)`` inferred from the two copy tallies."""
    t1, t2 = multicandidate_tallies(m, n, votes, seed, backend, version)
    n_iii = t1 - t2
    n_ii = t2 - n_iii
    return n - n_ii - n_iii, n_ii, n_iii


def run_multicandidate_cumulative(
    m: int,
    n: int,
    votes,
    candidates: int,
    seed: int = 0,
    backend: str = "auto",
    version: Version | str = Version.PER_VOTER_FOURIER,
) -> tuple[int, ...]:
    """General rule for any number of candidates.

    Uses ``candidates - 1`` copies; copy ``t`` (1-based) shifts by one for
    every vote ``>= t``, so it tallies the number of voters choosing
    candidate ``t`` or later. Since each tally is at most ``n``, ``m > n``
    suffices.
    """
    votes = as_votes(votes, alphabet=candidates)
    if len(votes) != n:
        raise ValueError(f"{len(votes)} votes for n={n}")
    if n < 1:
        raise ValueError(f"need at least one voter, got n={n}")
    if m <= n:
        raise ValueError(f"constraint m > n violated (m={m}, n={n})")
    version = Version(version)
    at_least = [n]
    for t in range(1, candidates):
        shifts = [int(c >= t) for c in votes]
        outcomes, _ = _measure_shifted(m, shifts, _copy_rng(seed, t - 1), backend, version)
        at_least.append(sum(outcomes) % m)
    at_least.append(0)
    return tuple(at_least[c] - at_least[c + 1] for c in range(candidates))


# -- Chinese remainder elections ------------------------------------------------------


def crt_solve(system: CongruenceSystem) -> int:
    """Unique ``x`` in ``[0, prod(moduli))`` matching every congruence."""
    total = system.product
    x = 0
    for c, mod in zip(system.residues, system.moduli):
        rest = total // mod
        x += c * rest * pow(rest, -1, mod)
    return x % total


def crt_residues(
    moduli: Sequence[int],
    votes,
    seed: int = 0,
    backend: str = "auto",
    version: Version | str = Version.PER_VOTER_FOURIER,
) -> tuple[int, ...]:
    """Per-modulus tallies of parallel elections, each with ``prod(moduli)`` copies."""
    moduli = tuple(int(x) for x in moduli)
    for mod in moduli:
        if mod < 2:
            raise ValueError(f"moduli must be >= 2, got {mod}")
    check_coprime(moduli)
    votes = as_votes(votes)
    n = math.prod(moduli)
    if len(votes) > n:
        raise ValueError(f"{len(votes)} votes exceed n = prod(moduli) = {n}")
    if n < 2:
        raise ValueError("need at least two voter slots")
    shifts = votes.votes + (0,) * (n - len(votes))
    version = Version(version)
    residues = []
    for idx, mod in enumerate(moduli):
        outcomes, _ = _measure_shifted(mod, shifts, _copy_rng(seed, idx), backend, version)
        residues.append(sum(outcomes) % mod)
    return tuple(residues)


def run_crt_election(
    moduli: Sequence[int],
    votes,
    seed: int = 0,
    backend: str = "auto",
    version: Version | str = Version.PER_VOTER_FOURIER,
) -> int:
    """YES count recombined from the per-modulus residues.

    The answer is only determined mod ``prod(moduli)``; a count equal to
    ``prod(moduli)`` comes back as 0.
    """
    residues = crt_residues(moduli, votes, seed, backend, version)
    return crt_solve(CongruenceSystem(tuple(moduli), residues))


# -- classical comparison -----------------------------------------------------------


def classical_baseline(votes, m: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Pre-shared random pads: store ``l_k + a_k mod m``, subtract ``sum(l)`` at the end.

    Returns:
        The stored values and the recovered YES count.
    """
    votes = as_votes(votes)
    n = len(votes)
    if m <= n:
        raise ValueError(f"constraint m > n violated (m={m}, n={n})")
    pads = rng.integers(0, m, size=n, dtype=np.int64)
    pad_total = int(pads.sum())
    stored = (pads + np.asarray(votes.votes, dtype=np.int64)) % m
    recovered = (int(stored.sum()) - pad_total) % m
    return stored, recovered
