"""Sifting-free quantum key distribution over recycled entangled qudits.

A desk-scale simulator: dense state vectors, mutually unbiased bases in
prime dimension, teleportation with entanglement recycling, eavesdropper
channel models, and seeded protocol sessions (two-party, verification-first,
third-party-assisted, multi-hop chain) with a batch experiment harness.
"""

from .bases import (
    BellBasis,
    GeneralizedPauli,
    MubFamily,
    bell_basis,
    bell_pair,
    computational_basis,
    fourier_basis,
    ghz_basis,
    ghz_recycle_ops,
    ghz_state,
    is_prime,
    mub_family,
    omega,
    pauli_matrix,
)
from .channels import (
    AttackReport,
    ChannelResult,
    Depolarizing,
    EveStrategy,
    Ideal,
    Loss,
    PurifiedAttack,
    SubstitutedAttack,
    apply_channel,
    attack_report,
    bb84_correspondence_check,
    blind_guess_monte_carlo,
    controlled_shift,
    haar_state,
    haar_unitary,
)
from .harness import (
    ExperimentSpec,
    ExperimentSummary,
    TrialRecord,
    build_channel,
    emit_transcript,
    run_experiment,
    summary_csv,
    summary_document,
)
from .rng import Rng
from .sessions import (
    ChainConfig,
    ClassicalMessage,
    ConfigError,
    KeyResult,
    SessionConfig,
    parse_transcript,
    run_chain,
    run_pre_check,
    run_third_party,
    run_two_party,
    serialize_transcript,
)
from .states import (
    DimensionError,
    FactorizationError,
    LabelError,
    MeasurementBasis,
    StateVector,
    UnitaryOp,
    ZeroProbabilityError,
    apply_unitary,
    basis_state,
    factor,
    fidelity,
    measure,
    measure_forced,
    relabel,
    tensor,
)
from .teleport import (
    TeleportOutcome,
    correction_op,
    recycle,
    teleport,
    teleport_forced,
    teleport_ghz,
    teleport_ghz_forced,
)

__version__ = "0.1.0"
