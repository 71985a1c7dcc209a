"""Simulate OTOCs, their Kirkwood-Dirac quasiprobabilities and nonclassicality under dephasing."""

__version__ = "0.1.0"

from .operators import (  # noqa: E402
    EigenDecomposition,
    eigen_projector,
    embed_at_site,
    hermitian_eigendecompose,
    pauli,
    propagator,
    tensor,
)
from .spin_model import (  # noqa: E402
    NoiseModel,
    SpinChainParams,
    build_hamiltonian,
    build_noise_model,
    butterfly_operators,
    gibbs_state,
    infinite_temperature_state,
)
from .dynamics import (  # noqa: E402
    EvolutionConfig,
    FoldedEvolver,
    convergence_probe,
    decoherent_step,
    evolve,
    no_jump_operator,
)
from .protocols import (  # noqa: E402
    ProtocolKind,
    clock_otoc,
    clock_propagator,
    commutator_square,
    ideal_otoc,
    interferometric_otoc,
    protocol_otoc,
    weak_protocol_trace,
)
from .qpd import (  # noqa: E402
    QPD,
    NonclassicalitySeries,
    TimescaleReport,
    compute_qpd,
    direct_qpd,
    extract_timescales,
    nonclassicality_series,
    otoc_from_qpd,
    sweep_h_over_j,
    total_nonclassicality,
)
