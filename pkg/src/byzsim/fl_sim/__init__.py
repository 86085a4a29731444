"""Federated training harness: data, local updates, server loop, metrics."""
from .data import (Dataset, IdxFormatError, dirichlet_partition, iid_partition, load_idx, load_mnist,
                   parse_idx, synth_dataset)
from .metrics import btr_trials, detection_accuracy, is_tolerant
from .training import (ModelState, RoundLog, TrainingConfig, accuracy, local_update, loss_and_grad,
                       make_synthetic_task, run_federated)
