"""Simulation and verification of an entangled-state secret ballot."""

from .fastsim import StructuredBallotState, marginal, sample_outcomes, to_dense
from .gates import GateCountReport, copy_basis, dft, gate_counts, shift
from .protocol import (
    BoxElectionSpec,
    CongruenceSystem,
    ElectionSpec,
    TallyOutcome,
    Version,
    VoteVector,
    build_w,
    cast_votes,
    classical_baseline,
    crt_solve,
    run_box_election,
    run_crt_election,
    run_election,
    run_multicandidate,
    run_multicandidate_cumulative,
)
from .qudit import DenseCapError, QuditState, Unitary, apply_single, measure_all, states_equal

__version__ = "0.1.0"
