"""Multi-agent Bayesian optimization coordinated by consensus ADMM.

Each agent fits a Gaussian-process surrogate to its own observations and
picks its next query by minimizing an acquisition function plus a quadratic
coordination penalty supplied by a central coordinator.
"""

from mabo.box import Box
from mabo.errors import NumericalError
from mabo.gp import Dataset, GPPosterior, HyperBounds, KernelParams
from mabo.acquisition import AcquisitionKind, AcquisitionSpec, PenaltyParams
from mabo.admm import CoordinatorState, Residuals
from mabo.agent import AgentState, Theta
from mabo.platoon import FleetConfig, FuelModel
from mabo.runtime import RunConfig, RunError, RunTrace, run_mabo, run_model_based_admm

__all__ = [
    "AcquisitionKind",
    "AcquisitionSpec",
    "AgentState",
    "Box",
    "CoordinatorState",
    "Dataset",
    "FleetConfig",
    "FuelModel",
    "GPPosterior",
    "HyperBounds",
    "KernelParams",
    "NumericalError",
    "PenaltyParams",
    "Residuals",
    "RunConfig",
    "RunError",
    "RunTrace",
    "Theta",
    "run_mabo",
    "run_model_based_admm",
]

__version__ = "0.1.0"
