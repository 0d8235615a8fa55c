"""Exhaustive small-instance suites run by ``qballot verify``."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from . import analysis, fastsim, protocol
from .protocol import Version
from .qudit import states_equal

GRID_M = (3, 4, 5, 8)
GRID_N = (2, 3)


@dataclass
class SuiteResult:
    name: str
    checks: int = 0
    failures: int = 0
    first_failure: str = ""

    @property
    def passed(self) -> bool:
        return self.checks > 0 and self.failures == 0

    def record(self, ok: bool, what: str) -> None:
        self.checks += 1
        if not ok:
            self.failures += 1
            if not self.first_failure:
                self.first_failure = what

    def as_record(self) -> dict:
        return {
            "suite": self.name,
            "checks": self.checks,
            "failures": self.failures,
            "pass": self.passed,
            "first_failure": self.first_failure or None,
        }


def grid(ms=GRID_M, ns=GRID_N) -> Iterator[tuple[int, int, tuple[int, ...]]]:
    for m in ms:
        for n in ns:
            for votes in itertools.product((0, 1), repeat=n):
                yield m, n, votes


def suite_support() -> SuiteResult:
    res = SuiteResult("support")
    for m, n, votes in grid():
        for version in Version:
            state = protocol.post_vote_state(m, votes, version)
            report = analysis.check_support(state, votes, m)
            res.record(report.passed, f"m={m} votes={votes} {version.value}: {report.reason}")
    return res


def suite_equivalence() -> SuiteResult:
    res = SuiteResult("equivalence")
    for m, n, votes in grid():
        a = protocol.post_vote_state(m, votes, Version.PER_VOTER_FOURIER)
        b = protocol.post_vote_state(m, votes, Version.PRE_FOURIER)
        res.record(states_equal(a, b, 1e-9), f"m={m} votes={votes}")
    return res


def suite_secrecy() -> SuiteResult:
    res = SuiteResult("secrecy")
    for m in GRID_M:
        for n in GRID_N:
            reference = None
            for votes in itertools.product((0, 1), repeat=n):
                state = protocol.post_vote_state(m, votes)
                margs = np.array([analysis.marginal_from_dense(state, r) for r in range(n)])
                uniform = np.max(np.abs(margs - 1.0 / m)) <= 1e-12
                res.record(bool(uniform), f"m={m} votes={votes}: marginal not uniform")
                if reference is None:
                    reference = margs
                else:
                    res.record(
                        bool(np.max(np.abs(margs - reference)) <= 1e-12),
                        f"m={m} votes={votes}: marginal depends on the votes",
                    )
    # a single ballot box carries no randomness; the check must notice
    lone = protocol.box_ballot_state(protocol.BoxElectionSpec(4, ((1, 1),)))
    flagged = not analysis.exact_uniformity(analysis.marginal_from_dense(lone, 0)).passed
    res.record(flagged, "single-box marginal was not flagged as non-uniform")
    return res


def suite_oracle(samples: int = 100_000, seed: int = 0) -> SuiteResult:
    res = SuiteResult("oracle")
    for m in (2, 3, 4):
        for n in (2, 3):
            for votes in itertools.product((0, 1), repeat=n):
                dense = protocol.post_vote_state(m, votes)
                structured = fastsim.StructuredBallotState(m, votes)
                res.record(
                    states_equal(fastsim.to_dense(structured), dense, 1e-9),
                    f"m={m} votes={votes}: to_dense differs from cast_votes",
                )
    rng = np.random.default_rng(seed)
    votes = (1, 0, 0)
    report = analysis.dense_vs_structured(
        protocol.post_vote_state(3, votes), fastsim.StructuredBallotState(3, votes), rng, samples
    )
    res.record(report.passed, f"m=3 n=3 votes={votes}: TV={report.tv:.4f}")
    return res


def suite_boxes(seed: int = 0) -> SuiteResult:
    res = SuiteResult("boxes")
    rng = np.random.default_rng(seed)
    m = 16
    for boxes in (1, 2, 3):
        for _ in range(5):
            voters = int(rng.integers(boxes, m))
            votes = rng.integers(0, 2, size=voters)
            cuts = np.sort(rng.choice(np.arange(1, voters), size=boxes - 1, replace=False))
            parts = tuple(tuple(int(v) for v in p) for p in np.split(votes, cuts))
            spec = protocol.BoxElectionSpec(m, parts)
            state = protocol.box_ballot_state(spec)
            sums = state.digits().sum(axis=1) % m
            res.record(
                bool(np.all(sums == int(votes.sum()))),
                f"N={boxes} parts={parts}: tally differs from YES total",
            )
            if boxes == 1:
                res.record(len(state) == 1, f"N=1 parts={parts}: support size {len(state)}")
    return res


def suite_multicandidate(max_n: int = 3, seed: int = 0) -> SuiteResult:
    res = SuiteResult("multicandidate")
    m = 16
    for n in range(2, max_n + 1):
        for votes in itertools.product((0, 1, 2), repeat=n):
            truth = protocol.VoteVector(votes, 3).histogram()
            verbatim = protocol.run_multicandidate(m, n, votes, seed)
            general = protocol.run_multicandidate_cumulative(m, n, votes, 3, seed)
            res.record(verbatim == truth, f"votes={votes}: verbatim {verbatim} != {truth}")
            res.record(general == truth, f"votes={votes}: cumulative {general} != {truth}")
    return res


def suite_crt(seed: int = 0) -> SuiteResult:
    """Recombined residues against the direct single-modulus election.

    Parallel elections only fix the count mod prod(moduli), so both sides
    are compared in that ring.
    """
    res = SuiteResult("crt")
    moduli = (2, 3)
    n = 6
    for votes in itertools.product((0, 1), repeat=n):
        crt = protocol.run_crt_election(moduli, votes, seed)
        direct = protocol.run_election(protocol.ElectionSpec(8, n, seed=seed), votes).yes_count
        res.record(crt == direct % n, f"votes={votes}: crt {crt} vs direct {direct}")
    for mods in ((2, 3), (3, 5), (4, 9)):
        total = int(np.prod(mods))
        for residues in itertools.product(*(range(x) for x in mods)):
            x = protocol.crt_solve(protocol.CongruenceSystem(mods, residues))
            brute = next(v for v in range(total) if all(v % q == c for q, c in zip(mods, residues)))
            res.record(x == brute, f"moduli={mods} residues={residues}")
    return res


SUITES: dict[str, Callable[[], SuiteResult]] = {
    "support": suite_support,
    "equivalence": suite_equivalence,
    "secrecy": suite_secrecy,
    "oracle": suite_oracle,
    "boxes": suite_boxes,
    "multicandidate": suite_multicandidate,
    "crt": suite_crt,
}


def run_suites(names=None) -> list[SuiteResult]:
    names = list(SUITES) if not names else list(names)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s) {unknown}; choose from {list(SUITES)}")
    return [SUITES[name]() for name in names]
