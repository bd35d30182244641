"""Scalable Laplacian K-modes: joint clustering and density-mode estimation."""

from .affinity import (
    KernelSpec,
    SparseAffinity,
    build_knn_affinity,
    estimate_bandwidth,
    gaussian_kernel,
    laplacian_quadratic,
)
from .core import (
    ModeSet,
    SlkConfig,
    auxiliary_value,
    bound_coupling,
    discrete_objective,
    relaxed_objective,
)
from .dataset import Dataset, load_dataset, subsample
from .metrics import accuracy, nmi
from .modes import byproduct_mode, hard_max_mode_oracle, kde_at, mean_shift_mode
from .optimizer import (
    ClusterResult,
    Trace,
    UpdateBuffers,
    build_update_vectors,
    initialize_z,
    inner_loop,
    run_slk,
    z_update,
)
from .seeding import kmeanspp_seeds

__version__ = "0.1.0"
