"""Where each robust rule lands when a colluding group sits away from the benign cloud.

Run: python demos/aggregator_shapes.py
"""
import numpy as np

from byzsim.aggregators import coordinate_median, geometric_median, krum, mean_aggregate, trimmed_mean
from byzsim.fedcut import SpectralState, fedcut_aggregate

rng = np.random.default_rng(0)
benign = rng.normal(0.0, 0.3, size=(14, 2)) + [1.0, 0.0]
colluders = rng.normal(0.0, 0.01, size=(6, 2)) + [-3.0, 2.0]
g = np.vstack([benign, colluders])
target = benign.mean(axis=0)

rules = {
    "mean": mean_aggregate(g),
    "coordinate median": coordinate_median(g),
    "trimmed mean (0.3)": trimmed_mean(g, 0.3),
    "geometric median": geometric_median(g),
    "krum (q=6)": krum(g, 6),
    "fedcut": fedcut_aggregate(g, SpectralState.initial(20))[0],
}
print(f"benign mean {np.round(target, 3)}")
for name, agg in rules.items():
    print(f"{name:<20} {np.round(agg, 3)}  distance to benign mean {np.linalg.norm(agg - target):.3f}")
