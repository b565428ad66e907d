"""Effective degrees of freedom of load-modulated backscatter MIMO channels."""

from .environment import EnvironmentSpec, environment_ladder, synth_environment, zero_mc
from .errors import (
    BsdofError,
    DegenerateInputError,
    InconsistentStateError,
    OptimizationFailedError,
    OracleError,
    PartitionError,
    PassivityError,
    SingularityError,
    UnsupportedOperationError,
)
from .fd import (
    ChannelMap,
    complex_step_jacobian,
    discrete_toggle_jacobian,
    linear_map_fd_jacobian,
)
from .loads import LoadConstraint, sample_loads, toggle
from .metrics import (
    ParticipationResult,
    benchmark_eemdof,
    bs_eemdof_point,
    column_space_residual,
    conventional_eemdof,
    participation_from_singular_values,
    participation_number,
)
from .network import (
    Jacobian,
    ScatteringBlocks,
    ScatteringSystem,
    b_factor,
    closed_form_jacobian,
    coupling_resolvent,
    end_to_end_channel,
    extract_blocks,
    illumination_matrix,
    load_system,
    output_wavefront,
    save_system,
    woodbury_channel_update,
)
from .optimize import (
    OptimizationConfig,
    OptimizationResult,
    embed,
    mean_dof_objective,
    optimize_illumination,
    project,
    sample_load_set,
)
from .sampling import (
    DofDistribution,
    IlluminationPolicy,
    histogram,
    sample_distribution,
    sample_random_illumination,
    summarize,
)

__version__ = "0.1.0"
