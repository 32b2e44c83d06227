"""Element-projector TCL2 propagation of open quantum systems."""

from .bath import BathSpec, KernelTable, build_kernel_table, correlation_kernels, f_kernels, g_kernel, markov_limits, spectral_density
from .linalg import DensityMatrix, ElementIndex, canonical_indices, commutator, elementary_matrix, extract_element, reconstruct
from .models import (
    SingleQubitModel, TwoQubitModel, k_operator, markov_generator, single_qubit_generator, two_qubit_generator,
)
from .propagator import (
    Generator, SolverConfig, Trajectory, compare, solve_element_interval, solve_iterative, solve_markov, solve_traditional,
)

__version__ = "0.1.0"

__all__ = [
    "BathSpec", "KernelTable", "build_kernel_table", "correlation_kernels", "f_kernels", "g_kernel",
    "markov_limits", "spectral_density", "DensityMatrix", "ElementIndex", "canonical_indices", "commutator",
    "elementary_matrix", "extract_element", "reconstruct", "SingleQubitModel", "TwoQubitModel", "k_operator",
    "markov_generator", "single_qubit_generator", "two_qubit_generator", "Generator", "SolverConfig",
    "Trajectory", "compare", "solve_element_interval", "solve_iterative", "solve_markov", "solve_traditional",
]
