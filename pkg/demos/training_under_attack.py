"""Federated logistic regression on a synthetic 10-class task, with and without a defense.

Run: python demos/training_under_attack.py [rounds]
"""
import sys

import numpy as np

from byzsim.aggregators import AggregatorSpec
from byzsim.attacks import AttackSpec
from byzsim.fl_sim.training import TrainingConfig, run_federated

rounds = int(sys.argv[1]) if len(sys.argv) > 1 else 100
base = TrainingConfig(num_clients=20, num_byzantine=6, rounds=rounds)

clean = run_federated(TrainingConfig(num_clients=20, num_byzantine=0, rounds=rounds))
print(f"no attackers, plain mean: accuracy {clean[-1].accuracy:.3f}")

for attack in ("same_value", "sign_flip", "gaussian", "multi_collusion", "mimic", "lie"):
    for defense in ("mean", "coordinate_median", "fedcut"):
        cfg = TrainingConfig(num_clients=20, num_byzantine=6, rounds=rounds,
                             attack=AttackSpec(attack), defense=AggregatorSpec(defense))
        logs = run_federated(cfg)
        det = np.mean([log.detection_accuracy for log in logs])
        print(f"{attack:<16} {defense:<18} accuracy {logs[-1].accuracy:.3f}  detection {det:.3f}")
