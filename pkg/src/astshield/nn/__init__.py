"""From-scratch embedding + LSTM/BiLSTM binary classifier (NumPy only)."""

from .model import (
    LstmCellParams,
    LstmState,
    ModelConfig,
    ModelParams,
    bilstm_forward,
    forward,
    forward_batch,
    gate_activations,
    init_params,
    lstm_step,
)
from .backprop import TrainingDiverged, batch_loss, gradients
from .checkpoint import load_checkpoint, save_checkpoint
from .train import (
    EpochStats,
    History,
    Splits,
    TrainConfig,
    split_traditional,
    train,
    write_history_csv,
)

__all__ = [
    "EpochStats",
    "History",
    "LstmCellParams",
    "LstmState",
    "ModelConfig",
    "ModelParams",
    "Splits",
    "TrainConfig",
    "TrainingDiverged",
    "batch_loss",
    "bilstm_forward",
    "forward",
    "forward_batch",
    "gate_activations",
    "gradients",
    "init_params",
    "load_checkpoint",
    "lstm_step",
    "save_checkpoint",
    "split_traditional",
    "train",
    "write_history_csv",
]
