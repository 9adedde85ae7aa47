"""Binary RBMs trained with perturb-and-descend negative particles, plus CD and PCD baselines."""
from .errors import (
    CapacityError,
    FormatError,
    InvalidArgumentError,
    LengthError,
    ParseError,
    RBMError,
    StateError,
    VersionError,
)
from .model import (
    BinaryState,
    Dataset,
    ModelParams,
    avg_log_likelihood_exact,
    energy,
    exact_visible_distribution,
    unnorm_log_marginal,
    hidden_conditional,
    log_partition_exact,
    visible_conditional,
)
from .perturbation import Matching, NoiseSource, Order, PerturbedParams, perturb
from .matching import max_weight_matching
from .descend import DescendResult, perturb_and_descend
from .samplers import ChainState, cd_particles, logz_upper_bound_estimate, pcd_update, perturb_and_map_exact
from .training import Algorithm, MetricsRecord, NoiseSharing, TrainConfig, train
from .data_io import generate_bars_and_stripes, load_model, load_text_dataset, save_model, save_text_dataset

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "BinaryState",
    "CapacityError",
    "ChainState",
    "Dataset",
    "DescendResult",
    "FormatError",
    "InvalidArgumentError",
    "LengthError",
    "Matching",
    "MetricsRecord",
    "ModelParams",
    "NoiseSharing",
    "NoiseSource",
    "Order",
    "ParseError",
    "PerturbedParams",
    "RBMError",
    "StateError",
    "TrainConfig",
    "VersionError",
    "avg_log_likelihood_exact",
    "cd_particles",
    "energy",
    "exact_visible_distribution",
    "generate_bars_and_stripes",
    "hidden_conditional",
    "load_model",
    "load_text_dataset",
    "log_partition_exact",
    "logz_upper_bound_estimate",
    "max_weight_matching",
    "pcd_update",
    "perturb",
    "perturb_and_descend",
    "perturb_and_map_exact",
    "save_model",
    "save_text_dataset",
    "train",
    "unnorm_log_marginal",
    "visible_conditional",
]
