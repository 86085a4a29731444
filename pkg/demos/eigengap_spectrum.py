"""The eigengap of the normalized adjacency counts communities, and PDSH reads it off.

Run: python demos/eigengap_spectrum.py
"""
import numpy as np

from byzsim.attacks import PLANTED_KINDS, planted_cohort
from byzsim.fedcut import pdsh
from byzsim.numerics import sym_eigvals
from byzsim.spectral import build_adjacency, normalize_adjacency, summarize_eigenvalues

for kind in PLANTED_KINDS:
    g, byz = planted_cohort(kind, 100, 30, rng_seed=1)
    result = pdsh(g)
    summary = summarize_eigenvalues(sym_eigvals(normalize_adjacency(build_adjacency(g, result.global_sigma))))
    c = summary.max_gap_pos
    around = summary.eigenvalues[max(0, c - 3):c + 3]
    print(f"{kind:<15} sigma={result.global_sigma:<8.4g} c={c:<3} gap={summary.max_gap:.3f} "
          f"mimic={len(result.mimic_set):<3} eigenvalues near the gap: {np.round(around, 3)}")

print()
print("non_collusion: 70 benign + 30 isolated attackers = 31 communities")
print("mimic: 30 copies of client 0 merge into one point, leaving 70 distinct updates;")
print("the mimic set (31) holds the copies and client 0 itself")
