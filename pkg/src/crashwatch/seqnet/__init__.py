"""From-scratch Simple RNN, LSTM and GRU classifiers."""
from .adam import AdamState, adam_step
from .network import RecurrentNet, RnnHyper, bce
from .train import EarlyStopping, TrainHistory, train

__all__ = [
    "AdamState", "adam_step", "RecurrentNet", "RnnHyper", "bce",
    "EarlyStopping", "TrainHistory", "train",
]
