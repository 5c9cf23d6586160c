"""Meta-learned regret minimizers: network, self-play meta-loss and training."""

from .loss import meta_loss, prediction_error, rejected_loss_eq3, report
from .network import MetaNetwork, architecture, init_params
from .trainer import MetaTrainConfig, evaluate, train
