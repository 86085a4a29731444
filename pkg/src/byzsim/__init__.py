"""Spectral (FedCut) defense against colluding Byzantine clients, with baselines and a simulator."""
from .aggregators import (AGGREGATOR_KINDS, Aggregator, AggregatorSpec, coordinate_median, geometric_median,
                          kmeans_defense, krum, make_aggregator, mean_aggregate, trimmed_mean)
from .attacks import ATTACK_KINDS, TOY_SCENARIOS, AttackSpec, craft_attack, flip_labels, lie_z, toy_scenario
from .fedcut import (DEFAULT_SIGMA_GRID, ClusterAssignment, FedCut, PdshResult, SpectralState, cncut_round,
                     fedcut_aggregate, geometric_grid, pdsh)
from .numerics import EigenPair, KmeansResult, jacobi_eigh, kmeans_cluster, sym_eigen
from .spectral import SpectrumSummary, build_adjacency, normalize_adjacency, spectrum_summary

__version__ = "0.1.0"
