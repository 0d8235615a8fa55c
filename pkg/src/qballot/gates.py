"""Protocol unitaries, the basis-state copier, and a static gate-count model."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .qudit import QuditState, Unitary


def dft(m: int) -> Unitary:
    """Discrete Fourier transform of order ``m``.

    Entry ``(l, j)`` is ``exp(2*pi*i*j*l/m) / sqrt(m)``, so ``dft(m)`` maps
    ``|j>`` to the phase-weighted uniform superposition over ``|l>``.
    """
    if m < 2:
        raise ValueError(f"DFT order must be >= 2, got {m}")
    jl = np.outer(np.arange(m), np.arange(m)) % m
    return Unitary(np.exp(2j * np.pi * jl / m) / np.sqrt(m), check=False)


def shift(m: int, a: int = 1) -> Unitary:
    """Cyclic shift ``|j> -> |j + a mod m>``."""
    if m < 2:
        raise ValueError(f"shift dimension must be >= 2, got {m}")
    a %= m
    mat = np.zeros((m, m), dtype=np.complex128)
    mat[(np.arange(m) + a) % m, np.arange(m)] = 1.0
    return Unitary(mat, check=False)


def vote_unitary(m: int, a: int) -> Unitary:
    """``shift(m, a)`` applied after ``dft(m)``: the per-voter operation."""
    return shift(m, a) @ dft(m)


def copy_basis(state: QuditState) -> QuditState:
    """Fan register 0 out to every other register: ``|j,0,...,0> -> |j,j,...,j>``.

    Acts as a linear map on the sparse amplitudes, so each input amplitude
    moves unchanged to its copied index.

    Raises:
        ValueError: some supported index has a nonzero value outside register 0.
    """
    n = state.registers
    digits = state.digits()
    dirty = np.any(digits[:, 1:] != 0, axis=1) if n > 1 else np.zeros(len(state), bool)
    if np.any(dirty):
        bad = tuple(int(v) for v in digits[np.argmax(dirty)])
        raise ValueError(f"copier needs ancilla registers in |0>; found support on {bad}")
    m = state.m
    j = digits[:, 0]
    # |j,...,j> has flat index j * (1 + m + ... + m^(n-1))
    repunit = sum(m**p for p in range(n))
    return QuditState(m, n, j * repunit, state.amplitude_array, _trusted=True)


@dataclass(frozen=True)
class GateCountReport:
    """Gate tallies for an ``n``-register election with ``m = 2**k``."""

    m: int
    n: int
    k: int
    hadamard_gates: int
    copier_gates: int
    fourier_gates_per_register: int
    increment_gates_per_vote: int
    total: int

    def as_record(self) -> dict:
        return asdict(self)


def log2_exact(m: int) -> int:
    if m < 2 or m & (m - 1):
        raise ValueError(f"gate counts require m to be a power of two >= 2, got {m}")
    return m.bit_length() - 1


def gate_counts(m: int, n: int) -> GateCountReport:
    """Count gates for preparing the entangled state, voting, and transforming.

    Per-stage model with ``k = log2(m)``:

    * ``k`` Hadamards to prepare the uniform superposition on register 0;
    * ``2k`` CNOTs for every additional copy (``2k(n-1)`` in total);
    * ``k(k+1)/2`` gates per textbook QFT (``k`` Hadamards plus
      ``k(k-1)/2`` controlled rotations), one per register;
    * ``k`` gates per ripple increment, one per register.
    """
    if n < 1:
        raise ValueError(f"need at least one register, got n={n}")
    k = log2_exact(m)
    hadamard = k
    copier = 2 * k * (n - 1)
    fourier = k * (k + 1) // 2
    increment = k
    total = hadamard + copier + n * fourier + n * increment
    return GateCountReport(
        m=m,
        n=n,
        k=k,
        hadamard_gates=hadamard,
        copier_gates=copier,
        fourier_gates_per_register=fourier,
        increment_gates_per_vote=increment,
        total=total,
    )
