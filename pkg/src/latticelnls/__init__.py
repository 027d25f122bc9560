"""Greedy large-neighborhood local search for lattice Ising models."""

from .lattice import (
    LatticeTopology,
    SubspaceSelection,
    SubspaceShape,
    build,
    build_cubic,
    build_toric_pegasus,
    enumerate_subspaces,
    selection_at,
)
from .ising import (
    IsingModel,
    Subproblem,
    apply_proposal,
    build_subproblem,
    energy,
    gauge_transform,
    local_fields,
    read_instance,
    write_instance,
)
from .generators import generate, gen_ferromagnet, gen_pm_j, gen_tile_planted
from .samplers import SaRun, SaSchedule, brute_force, run_sa, run_sgd
from .embedding import (
    DefectSpec,
    HardwareGraph,
    OriginEmbedding,
    build_hardware,
    make_origin_embeddings,
    program,
    readout,
    validate_embedding,
)
from .lnls import (
    BurnDownRecord,
    LnlsConfig,
    SubsolverSpec,
    TimingModel,
    run_lnls,
    run_workflow_variant,
)
from .bench import (
    GroundEstimate,
    aggregate_median,
    estimate_e0,
    relative_error,
)

__version__ = "0.1.0"

__all__ = [
    "LatticeTopology", "SubspaceSelection", "SubspaceShape", "build",
    "build_cubic", "build_toric_pegasus", "enumerate_subspaces",
    "selection_at",
    "IsingModel", "Subproblem", "apply_proposal", "build_subproblem",
    "energy", "gauge_transform", "local_fields", "read_instance",
    "write_instance",
    "generate", "gen_ferromagnet", "gen_pm_j", "gen_tile_planted",
    "SaRun", "SaSchedule", "brute_force", "run_sa", "run_sgd",
    "DefectSpec", "HardwareGraph", "OriginEmbedding", "build_hardware",
    "make_origin_embeddings", "program", "readout", "validate_embedding",
    "BurnDownRecord", "LnlsConfig", "SubsolverSpec", "TimingModel",
    "run_lnls", "run_workflow_variant",
    "GroundEstimate", "aggregate_median", "estimate_e0", "relative_error",
    "__version__",
]
