"""How often does each defense keep the aggregate pointing the benign way on the 1-D toy cohorts?

Run: python demos/toy_btr.py [trials]
"""
import sys

import numpy as np

from byzsim.aggregators import AggregatorSpec
from byzsim.attacks import TOY_SCENARIOS, toy_scenario
from byzsim.fl_sim.metrics import btr_trials

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 200

benign, byz = toy_scenario("S2m", [7, 0])
print("one S2m draw: benign mean %.3f, attackers at %s" % (benign.mean(), np.sort(byz).round(2)))
print()

defenses = {
    "mean": AggregatorSpec("mean"),
    "median": AggregatorSpec("coordinate_median"),
    "krum(q=4)": AggregatorSpec("krum", byzantine_count=4),
    "kmeans": AggregatorSpec("kmeans_defense"),
    "fedcut": AggregatorSpec("fedcut"),
}
print(f"BTR over {trials} trials (seed 7)")
print("defense     " + "".join(f"{s:>7}" for s in TOY_SCENARIOS))
for name, spec in defenses.items():
    row = [btr_trials(s, spec, trials, seed=7) for s in TOY_SCENARIOS]
    print(f"{name:<12}" + "".join(f"{v:7.2f}" for v in row))
