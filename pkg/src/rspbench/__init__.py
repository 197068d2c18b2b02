"""Classical fidelity benchmarks and protocol simulation for remote state preparation of qubits."""

from .classical import (
    BenchmarkResult,
    Partitioning,
    ProbabilisticStrategy,
    benchmark,
    certify,
    exact_threshold,
    heuristic_threshold,
    hull_perfect_check,
    insphere_radius,
    partition_fidelity,
    probabilistic_fidelity,
    upper_bound,
)
from .continuum import cap_average_radius, cap_upper_bound, lloyd_refine, voronoi_lower_bound
from .ensembles import TargetEnsemble, load_ensemble, platonic_ensemble, save_ensemble, uniform_sphere_sample
from .errors import EnsembleFileError, InconsistencyError, InputError, RSPError

__version__ = "0.1.0"
