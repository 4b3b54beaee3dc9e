"""Exchangeable Feller processes on k-colorings and bounded-block partitions.

Discrete-time cut-and-paste chains driven by random stochastic matrices, their
matrix-product frequency chains, continuous-time processes built from a
characteristic pair (matrix measure, flip rates) via a Poisson event loop,
homogeneous partition-valued projections, and a brute-force oracle verifying
the structural claims (exchangeability, consistency under subsampling,
detailed balance, Monte Carlo agreement) at desk scale.
"""

from .coloring import (
    DNA,
    Codec,
    Coloring,
    FrequencyVector,
    Partition,
    distance,
    empirical_frequency,
    enumerate_partitions,
    project_to_partition,
    read_sequence_array,
    relabel,
    symmetric_associate,
)
from .continuous import (
    ContinuousTrace,
    RateTable,
    flip_generator,
    frequency_flow,
    level_rates,
    simulate,
    transition_rate_matrix,
)
from .cosets import (
    CosetMap,
    StochasticMatrix,
    apply_coset_map,
    compose,
    injection_indices,
    matrix_frequency,
    single_flip,
)
from .discrete import (
    DiscreteTrace,
    apply_stochastic,
    dirichlet_stationary_colorings,
    dirichlet_stationary_partitions,
    dirichlet_transition,
    exact_transition_matrix,
    initial_paintbox,
    initial_uniform,
    initial_word,
    run_chain,
    step,
)
from .kernels import BACKEND
from .measures import (
    CharacteristicPair,
    CountableAtomicMeasure,
    DirichletProductMeasure,
    FiniteAtomicMeasure,
    FlipRates,
    InadmissibleMeasureError,
    MatrixMeasure,
    ZeroOneMeasure,
    sample_coset_map,
    sample_coset_map_not_identity,
)
from .oracle import (
    CheckReport,
    ExactKernel,
    check_consistent,
    check_detailed_balance,
    check_exchangeable,
    check_stationary,
    compare_monte_carlo,
    dirichlet_kernel,
    discrete_kernel,
    ehrenfest_kernel,
    first_jump_comparison,
    generator_kernel,
    mixing_profile,
    project_kernel_to_partitions,
)
from .partitions import (
    HomogeneityError,
    HomogeneousPair,
    cp_operator,
    ranked_frequency,
    ranked_frequency_track,
    run_partition_chain,
    simulate_partition,
    symmetric_rate,
)

__version__ = "0.1.0"
