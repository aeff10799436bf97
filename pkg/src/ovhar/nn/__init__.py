from ovhar.nn.model import ModelConfig, RegressorModel
from ovhar.nn.loss import mse_loss
from ovhar.nn.optim import AdamState, adam_step
from ovhar.nn.gradcheck import GradCheckReport, grad_check, standard_check, well_conditioned_target
from ovhar.nn.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "ModelConfig",
    "RegressorModel",
    "mse_loss",
    "AdamState",
    "adam_step",
    "GradCheckReport",
    "grad_check",
    "standard_check",
    "well_conditioned_target",
    "load_checkpoint",
    "save_checkpoint",
]
