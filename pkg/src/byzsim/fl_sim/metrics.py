"""Detection accuracy and Byzantine tolerance rate (BTR) on the toy scenarios."""
from __future__ import annotations

import numpy as np

from ..aggregators import AggregatorSpec, make_aggregator
from ..attacks import toy_scenario


def detection_accuracy(benign_set, true_byzantine, num_clients: int) -> float:
    """Fraction of clients labelled correctly (benign kept, Byzantine dropped)."""
    reported = set(int(i) for i in benign_set)
    byz = set(int(i) for i in true_byzantine)
    everyone = set(range(num_clients))
    if not reported <= everyone or not byz <= everyone:
        raise ValueError(f"client indices must lie in [0, {num_clients})")
    correct = len((everyone - byz) & reported) + len(byz - reported)
    return correct / num_clients


def is_tolerant(benign_updates, aggregate) -> bool:
    return float(np.dot(np.mean(benign_updates, axis=0), np.ravel(aggregate))) >= 0.0


def btr_trials(scenario_id: str, defense, trials: int, seed: int = 0) -> float:
    """Share of ``trials`` toy draws in which the aggregate points with the benign mean.

    ``defense`` is an AggregatorSpec (a fresh aggregator per trial, so FedCut
    runs single-shot) or any callable ``(updates, benign_updates) -> aggregate``.
    Trial ``i`` draws its cohort from the seed pair ``[seed, i]``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tolerant = 0
    for i in range(trials):
        benign, byz = toy_scenario(scenario_id, [seed, i])
        updates = np.concatenate([benign, byz])[:, None]
        if isinstance(defense, AggregatorSpec):
            agg = make_aggregator(defense, updates.shape[0])(updates)
        else:
            agg = defense(updates, benign[:, None])
        tolerant += is_tolerant(benign[:, None], agg)
    return tolerant / trials
