"""Explicit reaction-diffusion solvers and deep five-point stencil networks that step past the CFL limit."""

from .grid import Field, GridSpec, laplacian_5pt, pad_neumann, unit_square
from .fdm import (
    BLOWUP_BOUND,
    DT_LARGE,
    DT_SMALL,
    BlowUpError,
    EquationKind,
    EquationParams,
    TimeStepping,
    Trajectory,
    fdm_rollout,
    fdm_step,
    reaction,
    reference_solution,
    stability_threshold,
)
from .fcnn import DeepFcnn, StencilLayer, backward, fcnn_rollout, forward, load_model, receptive_field, save_model
from .initcond import eps_m, make_shape, random_uniform
from .training import TrainConfig, make_training_pair, train
from .diagnostics import discrete_energy, minmax_series, normalized_energy_series, relative_l2

__version__ = "0.1.0"
