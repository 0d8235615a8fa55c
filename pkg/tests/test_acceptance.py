"""Exit criteria for the build; each test reports one PASS/FAIL line.

The per-criterion lines are printed in the "acceptance criteria" section of
the pytest terminal summary.
"""

import itertools
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from qballot import analysis, fastsim, protocol
from qballot.gates import gate_counts
from qballot.protocol import BoxElectionSpec, CongruenceSystem, Version, VoteVector
from qballot.qudit import states_equal

GRID_M = (3, 4, 5, 8)
GRID_N = (2, 3)
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small_grid():
    for m in GRID_M:
        for n in GRID_N:
            for votes in itertools.product((0, 1), repeat=n):
                yield m, n, votes


def test_c01_tally_correctness(acceptance_report):
    start = time.perf_counter()
    bad = []
    worst_mag = 0.0
    for m, n, votes in small_grid():
        for version in Version:
            state = protocol.post_vote_state(m, votes, version)
            sums = state.digits().sum(axis=1) % m
            if np.any(sums != sum(votes) % m) or len(state) != m ** (n - 1):
                bad.append((m, votes, version.value))
            worst_mag = max(worst_mag, float(np.max(np.abs(np.abs(state.amplitude_array) - m ** (-(n - 1) / 2)))))
    elapsed = time.perf_counter() - start
    ok = not bad and worst_mag <= 1e-9 and elapsed < 10
    acceptance_report(1, ok, f"bad={len(bad)} max|mag err|={worst_mag:.2e} time={elapsed:.2f}s")
    assert not bad
    assert worst_mag <= 1e-9
    assert elapsed < 10


def test_c02_version_equivalence(acceptance_report):
    differ = [
        (m, votes)
        for m, n, votes in small_grid()
        if not states_equal(
            protocol.post_vote_state(m, votes, Version.PER_VOTER_FOURIER),
            protocol.post_vote_state(m, votes, Version.PRE_FOURIER),
            1e-9,
        )
    ]
    acceptance_report(2, not differ, f"instances differing={len(differ)}")
    assert not differ


def test_c03_secrecy(acceptance_report):
    worst_uniform = 0.0
    worst_spread = 0.0
    for m in GRID_M:
        for n in GRID_N:
            margs = np.array(
                [
                    [analysis.marginal_from_dense(protocol.post_vote_state(m, votes), r) for r in range(n)]
                    for votes in itertools.product((0, 1), repeat=n)
                ]
            )
            worst_uniform = max(worst_uniform, float(np.max(np.abs(margs - 1.0 / m))))
            worst_spread = max(worst_spread, float(np.max(np.abs(margs - margs[0]))))

    rng = np.random.default_rng(2024)
    n = 10**4
    votes = rng.integers(0, 2, size=n)
    state = fastsim.StructuredBallotState(4, votes)
    reports = []
    for register in (0, n - 1):
        col = fastsim.sample_register(state, np.random.default_rng([7, register]), 10**5, register)
        reports.append(analysis.chi_square_uniform(col, 4, register, alpha=0.001))
    chi_ok = all(r.passed for r in reports)
    ok = worst_uniform <= 1e-12 and worst_spread <= 1e-12 and chi_ok
    stats_txt = ", ".join(f"reg {r.register}: chi2={r.chi_square_statistic:.2f}" for r in reports)
    acceptance_report(
        3, ok, f"max|p-1/m|={worst_uniform:.1e} max spread={worst_spread:.1e}; {stats_txt}"
    )
    assert worst_uniform <= 1e-12
    assert worst_spread <= 1e-12
    assert chi_ok


def test_c04_structured_vs_dense(acceptance_report):
    rng = np.random.default_rng(11)
    tvs = []
    support_ok = True
    for votes in itertools.product((0, 1), repeat=3):
        dense = protocol.post_vote_state(3, votes)
        structured = fastsim.StructuredBallotState(3, votes)
        support_ok &= fastsim.to_dense(structured).support() == dense.support()
        drawn = fastsim.sample_outcomes(structured, rng, 10**5, batch_size=10**5)
        emp = analysis.empirical_distribution(drawn)
        support_ok &= set(emp) == set(dense.support())
        tvs.append(analysis.distribution_tv(emp, analysis.born_distribution(dense)))
    grid_bad = [
        (m, votes, v.value)
        for m, n, votes in small_grid()
        for v in Version
        if not states_equal(
            fastsim.to_dense(fastsim.StructuredBallotState(m, votes)),
            protocol.post_vote_state(m, votes, v),
            1e-9,
        )
    ]
    ok = support_ok and max(tvs) <= 0.02 and not grid_bad
    acceptance_report(4, ok, f"support equal={support_ok} max TV={max(tvs):.4f} grid mismatches={len(grid_bad)}")
    assert support_ok
    assert max(tvs) <= 0.02
    assert not grid_bad


def random_partition(rng, boxes, m):
    voters = int(rng.integers(boxes, m))
    votes = rng.integers(0, 2, size=voters)
    cuts = np.sort(rng.choice(np.arange(1, voters), size=boxes - 1, replace=False))
    return tuple(tuple(int(v) for v in part) for part in np.split(votes, cuts))


def test_c05_ballot_boxes(acceptance_report):
    rng = np.random.default_rng(5)
    m = 16
    failures = []
    for boxes in (1, 2, 3):
        for _ in range(10):
            parts = random_partition(rng, boxes, m)
            total_yes = sum(map(sum, parts))
            state = protocol.box_ballot_state(BoxElectionSpec(m, parts))
            if np.any(state.digits().sum(axis=1) % m != total_yes):
                failures.append(("tally", parts))
            if boxes == 1 and len(state) != 1:
                failures.append(("N=1 support", parts))
            if boxes == 2:
                for r in range(2):
                    marg = analysis.marginal_from_dense(state, r)
                    if np.max(np.abs(marg - 1 / m)) > 1e-12:
                        failures.append(("N=2 marginal", parts))
            out = protocol.run_box_election(BoxElectionSpec(m, parts, seed=int(rng.integers(2**31))))
            if out.yes_count != total_yes:
                failures.append(("measured", parts))
    acceptance_report(5, not failures, f"failures={failures[:3]}")
    assert not failures


def test_c06_multicandidate(acceptance_report):
    m = 16
    wrong = []
    checked = 0
    for n in range(1, 5):
        for votes in itertools.product((0, 1, 2), repeat=n):
            truth = VoteVector(votes, 3).histogram()
            verbatim = protocol.run_multicandidate(m, n, votes, seed=checked)
            general = protocol.run_multicandidate_cumulative(m, n, votes, 3, seed=checked)
            if verbatim != truth or general != truth or verbatim != general:
                wrong.append((votes, verbatim, general, truth))
            checked += 1
    acceptance_report(6, not wrong, f"assignments={checked} wrong={len(wrong)}")
    assert not wrong


def test_c07_crt(acceptance_report):
    mismatches = []
    for votes in itertools.product((0, 1), repeat=6):
        got = protocol.run_crt_election((2, 3), votes, seed=sum(votes))
        if got != sum(votes):
            mismatches.append((votes, got))
    solver_bad = []
    for moduli in ((2, 3), (3, 5), (4, 9)):
        total = math.prod(moduli)
        for residues in itertools.product(*(range(q) for q in moduli)):
            brute = next(x for x in range(total) if all(x % q == c for q, c in zip(moduli, residues)))
            if protocol.crt_solve(CongruenceSystem(moduli, residues)) != brute:
                solver_bad.append((moduli, residues))
    ok = not mismatches and not solver_bad
    acceptance_report(7, ok, f"election mismatches={mismatches} solver mismatches={len(solver_bad)}")
    assert not solver_bad
    assert not mismatches


def test_c08_gate_counts(acceptance_report):
    copier = gate_counts(2, 2).copier_gates
    n = 1000
    ratios = [gate_counts(2**k, n).total / (n * k**2) for k in (5, 10, 20, 40)]
    steps = np.diff(ratios)
    monotone = bool(np.all(steps < 0))
    shrinking = bool(np.all(np.abs(steps[1:]) < np.abs(steps[:-1])))
    # the n*k(k+1)/2 Fourier stage dominates, so the ratio tends to 1/2
    approaching = abs(ratios[-1] - 0.5) < abs(ratios[0] - 0.5)
    ok = copier == 2 and monotone and shrinking and approaching
    acceptance_report(8, ok, f"copier={copier} ratios={[round(r, 4) for r in ratios]}")
    assert copier == 2
    assert monotone and shrinking and approaching


def test_c09_scale(acceptance_report):
    m, n, trials = 2**20, 10**6, 10**3
    votes = np.random.default_rng(9).integers(0, 2, size=n)
    state = fastsim.StructuredBallotState(m, votes)
    rng = np.random.default_rng(10)
    start = time.perf_counter()
    seen = 0
    congruent = True
    for batch in fastsim.iter_sample_batches(state, rng, trials):
        congruent &= bool(np.all(batch.sum(axis=1) % m == state.shift_total))
        seen += batch.shape[0]
    elapsed = time.perf_counter() - start
    ok = congruent and seen == trials and elapsed < 60
    acceptance_report(9, ok, f"trials={seen} time={elapsed:.1f}s congruent={congruent}")
    assert seen == trials
    assert congruent
    assert elapsed < 60


@pytest.mark.parametrize("config", ["simple.yaml", "crt.yaml", "boxes.yaml", "multicandidate.yaml", "large.yaml"])
def test_c10_reproducibility(acceptance_report, config):
    cmd = [sys.executable, "-m", "qballot", "run", "--config", str(CONFIGS / config)]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    ok = first == second and len(first) > 0
    acceptance_report(10, ok, f"{config}: {len(first)} bytes, identical={first == second}")
    assert ok
