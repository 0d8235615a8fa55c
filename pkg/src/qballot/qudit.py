"""Sparse state vectors over ``n`` registers of dimension ``m``.

Amplitudes are stored as a sorted array of flat (mixed-radix, register 0 most
significant) indices together with a parallel array of complex values.
Entries whose magnitude drops below :data:`PRUNE_ATOL` are discarded, so the
support of a state is exactly its set of stored indices.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np

#: Largest number of basis states (m**n) a dense-capable state may span.
DENSE_CAP = 2**24

#: Tolerance for algebraic identities (unitarity, state equality).
ATOL = 1e-9

#: Norm gate applied before measurement.
NORM_ATOL = 1e-6

#: Amplitudes below this magnitude are treated as exact cancellations.
PRUNE_ATOL = 1e-12


class DenseCapError(ValueError):
    """Raised when a state would span more than ``DENSE_CAP`` basis states."""


def check_dense_cap(m: int, registers: int) -> None:
    size = m**registers
    if size > DENSE_CAP:
        raise DenseCapError(
            f"m**n = {m}**{registers} = {size} exceeds the dense cap of 2**24 "
            "basis states; use the structured backend (qballot.fastsim) instead"
        )


class Unitary:
    """An ``m x m`` unitary acting on a single register."""

    __slots__ = ("_matrix",)

    def __init__(self, matrix, *, check: bool = True) -> None:
        mat = np.array(matrix, dtype=np.complex128)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"unitary must be a square matrix, got shape {mat.shape}")
        if mat.shape[0] < 2:
            raise ValueError("unitary dimension must be at least 2")
        if not np.all(np.isfinite(mat)):
            raise ValueError("unitary has non-finite entries")
        if check:
            err = np.max(np.abs(mat @ mat.conj().T - np.eye(mat.shape[0])))
            if err > ATOL:
                raise ValueError(f"matrix is not unitary (max |UU^dag - I| = {err:.3g})")
        mat.setflags(write=False)
        self._matrix = mat

    @property
    def m(self) -> int:
        return self._matrix.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    def dagger(self) -> Unitary:
        return Unitary(self._matrix.conj().T, check=False)

    def __matmul__(self, other: Unitary) -> Unitary:
        if not isinstance(other, Unitary):
            return NotImplemented
        if other.m != self.m:
            raise ValueError(f"dimension mismatch: {self.m} vs {other.m}")
        return Unitary(self._matrix @ other._matrix, check=False)

    def __pow__(self, power: int) -> Unitary:
        if power < 0:
            return self.dagger() ** (-power)
        return Unitary(np.linalg.matrix_power(self._matrix, power), check=False)

    def allclose(self, other: Unitary, tol: float = ATOL) -> bool:
        return self.m == other.m and bool(np.max(np.abs(self._matrix - other._matrix)) <= tol)

    def __repr__(self) -> str:
        return f"Unitary(m={self.m})"


def identity(m: int) -> Unitary:
    return Unitary(np.eye(m), check=False)


class QuditState:
    """Pure state of ``registers`` qudits, each of dimension ``m``.

    Instances are immutable; every operation returns a new state. Use
    :meth:`from_amplitudes` or :meth:`basis` rather than the raw constructor.
    """

    __slots__ = ("m", "registers", "_flat", "_amps")

    def __init__(self, m: int, registers: int, flat, amps, *, _trusted: bool = False) -> None:
        if m < 2:
            raise ValueError(f"register dimension must be >= 2, got {m}")
        if registers < 1:
            raise ValueError(f"need at least one register, got {registers}")
        check_dense_cap(m, registers)
        self.m = int(m)
        self.registers = int(registers)

        flat = np.asarray(flat, dtype=np.int64).reshape(-1)
        amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
        if not _trusted:
            if flat.shape != amps.shape:
                raise ValueError("index and amplitude arrays differ in length")
            if flat.size and (flat.min() < 0 or flat.max() >= self.m**self.registers):
                raise ValueError("basis index out of range")
            if not np.all(np.isfinite(amps)):
                raise ValueError("amplitudes must be finite")
            flat, amps = _coalesce(flat, amps)
            norm = float(np.sum(np.abs(amps) ** 2))
            if abs(norm - 1.0) > ATOL:
                raise ValueError(f"state is not normalized (sum |a|^2 = {norm:.12g})")
        flat.setflags(write=False)
        amps.setflags(write=False)
        self._flat = flat
        self._amps = amps

    # -- construction ------------------------------------------------------

    @classmethod
    def from_amplitudes(
        cls, m: int, registers: int, amplitudes: Mapping[Sequence[int], complex]
    ) -> QuditState:
        """Build a state from a ``{basis tuple: amplitude}`` mapping."""
        flat = [encode_index(idx, m, registers) for idx in amplitudes]
        return cls(m, registers, flat, list(amplitudes.values()))

    @classmethod
    def basis(cls, m: int, values: Sequence[int]) -> QuditState:
        """The computational basis state ``|values[0], values[1], ...>``."""
        values = tuple(values)
        return cls(m, len(values), [encode_index(values, m, len(values))], [1.0])

    @classmethod
    def from_vector(cls, m: int, registers: int, vector) -> QuditState:
        vector = np.asarray(vector, dtype=np.complex128).reshape(-1)
        if vector.size != m**registers:
            raise ValueError(f"vector length {vector.size} != {m}**{registers}")
        flat = np.flatnonzero(np.abs(vector) > PRUNE_ATOL)
        return cls(m, registers, flat, vector[flat])

    # -- views ---------------------------------------------------------------

    @property
    def flat_indices(self) -> np.ndarray:
        return self._flat

    @property
    def amplitude_array(self) -> np.ndarray:
        return self._amps

    @property
    def amplitudes(self) -> dict[tuple[int, ...], complex]:
        return {
            idx: complex(a) for idx, a in zip(self.support(), self._amps)
        }

    def support(self) -> list[tuple[int, ...]]:
        """Basis indices with nonzero amplitude, in ascending flat order."""
        digits = decode_indices(self._flat, self.m, self.registers)
        return [tuple(int(v) for v in row) for row in digits]

    def digits(self) -> np.ndarray:
        """Support as an ``(nnz, registers)`` integer array."""
        return decode_indices(self._flat, self.m, self.registers)

    def amplitude(self, index: Sequence[int]) -> complex:
        key = encode_index(index, self.m, self.registers)
        pos = np.searchsorted(self._flat, key)
        if pos < self._flat.size and self._flat[pos] == key:
            return complex(self._amps[pos])
        return 0j

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self._amps) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self._amps) ** 2

    def to_vector(self) -> np.ndarray:
        vec = np.zeros(self.m**self.registers, dtype=np.complex128)
        vec[self._flat] = self._amps
        return vec

    def __len__(self) -> int:
        return int(self._flat.size)

    def __mul__(self, scalar: complex) -> QuditState:
        scalar = complex(scalar)
        if abs(abs(scalar) - 1.0) > ATOL:
            raise ValueError("only unit-modulus scalars keep the state normalized")
        return QuditState(self.m, self.registers, self._flat, self._amps * scalar, _trusted=True)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"QuditState(m={self.m}, registers={self.registers}, nnz={len(self)})"


def encode_index(values: Sequence[int], m: int, registers: int) -> int:
    values = tuple(int(v) for v in values)
    if len(values) != registers:
        raise ValueError(f"index {values} has length {len(values)}, expected {registers}")
    flat = 0
    for v in values:
        if not 0 <= v < m:
            raise ValueError(f"index {values} has an entry outside [0, {m})")
        flat = flat * m + v
    return flat


def decode_indices(flat: np.ndarray, m: int, registers: int) -> np.ndarray:
    flat = np.asarray(flat, dtype=np.int64)
    out = np.empty((flat.size, registers), dtype=np.int64)
    rest = flat.copy()
    for r in range(registers - 1, -1, -1):
        out[:, r] = rest % m
        rest //= m
    return out


#: Coalesce by direct bincount over the whole basis up to this size.
_BINCOUNT_LIMIT = 2**22


def _coalesce(
    flat: np.ndarray, amps: np.ndarray, size: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Sum duplicate indices, sort, and prune numerical zeros."""
    if size is not None and size <= _BINCOUNT_LIMIT:
        re = np.bincount(flat, weights=amps.real, minlength=size)
        im = np.bincount(flat, weights=amps.imag, minlength=size)
        summed = re + 1j * im
        keep = np.flatnonzero(np.abs(summed) > PRUNE_ATOL)
        return keep.astype(np.int64), summed[keep]
    uniq, inverse = np.unique(flat, return_inverse=True)
    re = np.bincount(inverse, weights=amps.real, minlength=uniq.size)
    im = np.bincount(inverse, weights=amps.imag, minlength=uniq.size)
    summed = re + 1j * im
    keep = np.abs(summed) > PRUNE_ATOL
    return uniq[keep], summed[keep]


def apply_single(state: QuditState, u: Unitary, register: int) -> QuditState:
    """Apply ``u`` to one register, identity on the rest.

    Raises:
        ValueError: ``u`` has the wrong dimension or ``register`` is out of range.
    """
    if u.m != state.m:
        raise ValueError(f"unitary dimension {u.m} does not match register dimension {state.m}")
    if not 0 <= register < state.registers:
        raise ValueError(f"register {register} out of range [0, {state.registers})")

    m = state.m
    stride = m ** (state.registers - 1 - register)
    flat = state.flat_indices
    amps = state.amplitude_array
    digit = (flat // stride) % m
    base = flat - digit * stride
    mat = u.matrix

    new_flat = []
    new_amps = []
    for v in range(m):
        coeff = mat[v, digit]
        hit = coeff != 0
        if not np.any(hit):
            continue
        new_flat.append(base[hit] + v * stride)
        new_amps.append(coeff[hit] * amps[hit])
    if not new_flat:
        raise ValueError("unitary annihilated the state")
    flat_out, amps_out = _coalesce(
        np.concatenate(new_flat), np.concatenate(new_amps), m**state.registers
    )
    return QuditState(m, state.registers, flat_out, amps_out, _trusted=True)


def apply_each(state: QuditState, unitaries: Iterable[Unitary]) -> QuditState:
    """Apply ``unitaries[k]`` to register ``k`` for every register."""
    unitaries = list(unitaries)
    if len(unitaries) != state.registers:
        raise ValueError(f"got {len(unitaries)} unitaries for {state.registers} registers")
    for r, u in enumerate(unitaries):
        state = apply_single(state, u, r)
    return state


def _normalized_probabilities(state: QuditState) -> np.ndarray:
    p = state.probabilities()
    total = float(p.sum())
    if abs(total - 1.0) > NORM_ATOL:
        raise ValueError(f"cannot measure an unnormalized state (norm^2 = {total:.12g})")
    return p / total


def measure_many(state: QuditState, rng: np.random.Generator, shots: int) -> np.ndarray:
    """Sample ``shots`` full computational-basis outcomes.

    Returns:
        Integer array of shape ``(shots, registers)``.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    p = _normalized_probabilities(state)
    picks = rng.choice(p.size, size=shots, p=p)
    return decode_indices(state.flat_indices[picks], state.m, state.registers)


def measure_all(state: QuditState, rng: np.random.Generator) -> tuple[int, ...]:
    """Measure every register; returns the observed basis index."""
    row = measure_many(state, rng, 1)[0]
    return tuple(int(v) for v in row)


def states_equal(a: QuditState, b: QuditState, tol: float = ATOL) -> bool:
    """True iff ``a == exp(i*theta) * b`` entrywise within ``tol`` for some theta."""
    if a.m != b.m or a.registers != b.registers:
        raise ValueError(
            f"shape mismatch: (m={a.m}, n={a.registers}) vs (m={b.m}, n={b.registers})"
        )
    union = np.union1d(a.flat_indices, b.flat_indices)
    va = np.zeros(union.size, dtype=np.complex128)
    vb = np.zeros(union.size, dtype=np.complex128)
    va[np.searchsorted(union, a.flat_indices)] = a.amplitude_array
    vb[np.searchsorted(union, b.flat_indices)] = b.amplitude_array

    overlap = np.vdot(vb, va)
    if abs(overlap) <= tol:
        return False
    phase = overlap / abs(overlap)
    return bool(np.max(np.abs(va - phase * vb)) <= tol)
