"""Circuit-generated LSTM weights: a simulated quantum circuit and a small mapping
network generate every weight of a classical LSTM forecaster."""

from .data import WindowedDataset, prepare_dataset, synth_flood_series
from .evaluation import RegressionMetrics, WarningReport, classify_warnings, evaluate_regression
from .lstm import LstmSpec, param_count, qubits_for
from .mapping import MappingNet
from .quantum import AnsatzCircuit, StateVector, grad_probabilities, run_ansatz
from .trainer import QtModel, TrainConfig, TrainReport, generate_theta, train_classical, train_qt, trainable_counts

__version__ = "0.1.0"
