"""Spectral minimal partitions of compact metric graphs.

Data model and catalog families (``graphs``), Laplacian eigensolvers
(``spectral``), cut/cluster semantics and partition energies
(``partition``), minimal-energy search and certified small-instance oracle
(``optimize``), executable bounds with audits (``bounds``), and closed-form
large-k analyses (``asymptotics``).
"""

from .graphs import (
    Edge,
    GraphStats,
    MetricGraph,
    build_standard,
    doubly_connected_pendants,
    eulerian_trail,
    is_doubly_connected,
    normalize,
    parse_graph,
    stats,
)
from .spectral import (
    BoundaryConditions,
    SpectralResult,
    eigenvalues,
    fd_oracle_eigenvalues,
    lambda1,
    mu2,
    star_eigenvalue_closed_form,
)
from .partition import (
    CutConfig,
    EnergyReport,
    Partition,
    apply_cuts,
    classify,
    energy,
    neighbours,
    parse_cut_config,
    serialize_cut_config,
)
from .optimize import (
    OptimizeRequest,
    OptimizeResult,
    enumerate_topologies,
    eulerian_equipartition,
    grid_oracle,
    minimize,
    rational_equipartition,
    subdivision_test_partition_dirichlet,
    subdivision_test_partition_neumann,
)
from .bounds import (
    BoundEntry,
    BoundReport,
    audit,
    dirichlet_lower_bounds,
    dirichlet_upper_bound,
    isoperimetric_lower,
    neumann_bounds,
    rational_equality_sequence,
)
from .asymptotics import (
    CkPoint,
    LimitSetEstimate,
    StarLimitSets,
    ck_sequence,
    limit_points,
    lmax_tracking,
    monotonicity_scan,
    rotation_orbit,
    star_dirichlet_energy,
    star_limit_sets,
    star_neumann_energy,
    two_interval_dirichlet_energy,
    two_interval_neumann_energy,
    weyl_fit,
)

__version__ = "0.1.0"
