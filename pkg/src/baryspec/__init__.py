"""Pseudo-spectral physics-informed PDE solving with barycentric interpolants.

Models are plain node-value vectors on Chebyshev/Fourier tensor grids,
evaluated by barycentric Lagrange (or balanced trigonometric) interpolation
and differentiated spectrally or by finite-difference surrogates. Training
minimizes a physics-informed least-squares loss with gradient descent, Adam,
or Nystrom-preconditioned Newton-CG.
"""

from .grid import (
    Basis,
    Grid1D,
    TensorGrid,
    cgl_bary_weights,
    cgl_nodes,
    chebyshev_grid,
    clenshaw_curtis_weights,
    fourier_grid,
    fourier_nodes,
)
from .interp import NodeValues, bary_eval, fourier_eval, tensor_eval
from .diff import DiffMethod, DiffOperator, fornberg_weights, make_diff_operator
from .model import DerivSpec, GridModel, warm_start
from .pde import (
    CollocationKind,
    CollocationScheme,
    PdeProblem,
    exact_solution,
    ibc_residual,
    loss,
    make_problem,
    model_l2re,
    residual,
    sample_collocation,
)
from .optim import (
    NncgConfig,
    NumericalAbort,
    TrainHistory,
    run_adam,
    run_gd,
    run_nncg,
    run_stages,
)
from .analysis import (
    ExperimentReport,
    TheoryProbe,
    decomposition_experiment,
    epsilon_op,
    gram_matrices,
    interpolation_matrix,
    l2re,
    lebesgue_constant,
)

__version__ = "0.1.0"

__all__ = [
    "Basis",
    "Grid1D",
    "TensorGrid",
    "cgl_nodes",
    "cgl_bary_weights",
    "clenshaw_curtis_weights",
    "fourier_nodes",
    "chebyshev_grid",
    "fourier_grid",
    "NodeValues",
    "bary_eval",
    "fourier_eval",
    "tensor_eval",
    "DiffMethod",
    "DiffOperator",
    "fornberg_weights",
    "make_diff_operator",
    "DerivSpec",
    "GridModel",
    "warm_start",
    "CollocationKind",
    "CollocationScheme",
    "PdeProblem",
    "make_problem",
    "residual",
    "ibc_residual",
    "loss",
    "exact_solution",
    "sample_collocation",
    "model_l2re",
    "NncgConfig",
    "NumericalAbort",
    "TrainHistory",
    "run_gd",
    "run_adam",
    "run_nncg",
    "run_stages",
    "l2re",
    "interpolation_matrix",
    "gram_matrices",
    "lebesgue_constant",
    "epsilon_op",
    "decomposition_experiment",
    "TheoryProbe",
    "ExperimentReport",
    "__version__",
]
