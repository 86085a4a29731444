"""Byzantine update generators and the 1-D toy scenarios."""
from __future__ import annotations

from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .spectral import stack_updates

ATTACK_KINDS = ("none", "gaussian", "same_value", "sign_flip", "label_flip", "lie", "mimic", "multi_collusion")
TOY_SCENARIOS = ("S1", "S2s", "S2m", "S3", "S4")


@dataclass(frozen=True)
class AttackSpec:
    """Attack kind plus its parameters; parameters unused by ``kind`` are ignored.

    gaussian_variance is read as a variance unless ``gaussian_as_std`` is set.
    multi_collusion offsets default to ``+d, -d, +2d, -2d, +3d, ...`` with
    ``d = collusion_offset``.
    """

    kind: str = "none"
    gaussian_variance: float = 200.0
    gaussian_as_std: bool = False
    flip_scale: float = -4.0
    mimic_target: int = 0
    groups: int = 4
    collusion_offset: float = 1.0
    offsets: tuple | None = None
    group_variance: float = 1e-4

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.kind == "multi_collusion" and self.groups < 1:
            raise ValueError("multi_collusion needs at least one group")

    def group_offsets(self) -> np.ndarray:
        if self.offsets is not None:
            return np.asarray(self.offsets, dtype=float)
        steps = [(j // 2 + 1) * (1 if j % 2 == 0 else -1) for j in range(self.groups)]
        return self.collusion_offset * np.array(steps, dtype=float)


def lie_z(num_clients: int, num_byzantine: int) -> float:
    """z-score of the "a little is enough" attack for K clients, q of them Byzantine."""
    k, q = num_clients, num_byzantine
    s = k // 2 + 1 - q
    p = (k - q - s) / (k - q)
    return NormalDist().inv_cdf(p)


def _benign_stats(g: np.ndarray, byz: np.ndarray):
    mask = np.ones(g.shape[0], dtype=bool)
    mask[byz] = False
    if not mask.any():
        raise ValueError("attack needs at least one benign client")
    return g[mask]


def craft_attack(spec: AttackSpec, benign_updates, byz_indices, rng_seed=0) -> np.ndarray:
    """Overwrite the rows in ``byz_indices`` of the honest updates per ``spec``.

    ``benign_updates`` holds the honest update of every client. For
    ``sign_flip`` the attacker's own honest gradient is scaled; for
    ``label_flip`` the caller is expected to have computed the attacker rows
    on flipped labels already, so they pass through untouched.
    """
    if not isinstance(spec, AttackSpec):
        raise ValueError(f"expected AttackSpec, got {spec!r}")
    g = stack_updates(benign_updates)
    k, d = g.shape
    byz = np.array(sorted(set(int(i) for i in byz_indices)), dtype=int)
    if byz.size and (byz.min() < 0 or byz.max() >= k):
        raise ValueError(f"byzantine indices out of range for K={k}")
    out = g.copy()
    if byz.size == 0 or spec.kind in ("none", "label_flip"):
        return out
    rng = np.random.default_rng(rng_seed)
    q = byz.size

    if spec.kind == "gaussian":
        scale = spec.gaussian_variance if spec.gaussian_as_std else np.sqrt(spec.gaussian_variance)
        out[byz] = rng.normal(0.0, scale, size=(q, d))
    elif spec.kind == "same_value":
        out[byz] = 1.0
    elif spec.kind == "sign_flip":
        out[byz] = spec.flip_scale * g[byz]
    elif spec.kind == "mimic":
        if spec.mimic_target in set(byz.tolist()) or not 0 <= spec.mimic_target < k:
            raise ValueError(f"mimic target {spec.mimic_target} must be a benign client index")
        out[byz] = g[spec.mimic_target]
    elif spec.kind == "multi_collusion":
        mu = _benign_stats(g, byz).mean(axis=0)
        offsets = spec.group_offsets()
        std = np.sqrt(spec.group_variance)
        for j, members in enumerate(np.array_split(byz, len(offsets))):
            if members.size:
                out[members] = rng.normal(mu + offsets[j], std, size=(members.size, d))
    elif spec.kind == "lie":
        honest = _benign_stats(g, byz)
        z = lie_z(k, q)
        out[byz] = honest.mean(axis=0) + z * honest.std(axis=0)
    return out


def flip_labels(labels, num_classes: int) -> np.ndarray:
    """Map label ``y`` to ``num_classes - 1 - y``."""
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes})")
    return (num_classes - 1 - labels).astype(labels.dtype if labels.dtype.kind in "iu" else int)


def toy_scenario(scenario_id: str, rng_seed=0):
    """Draw one trial of a 1-D toy scenario: ``(benign[10], byzantine[...])``.

    Normal parameters are (mean, standard deviation). S3 and S4 centre their
    mimic colluders on the smallest benign draw of the same trial.
    """
    if scenario_id not in TOY_SCENARIOS:
        raise ValueError(f"unknown toy scenario {scenario_id!r}")
    rng = np.random.default_rng(rng_seed)
    benign = rng.normal(0.1, 0.1, size=10)
    mu = benign.min()
    if scenario_id == "S1":
        byz = rng.normal(0.1, 1.0, size=8)
    elif scenario_id == "S2s":
        byz = rng.normal(-2.0, 0.01, size=8)
    elif scenario_id == "S2m":
        byz = np.concatenate([rng.normal(-2.0, 0.01, size=4), rng.normal(4.0, 0.01, size=4)])
    elif scenario_id == "S3":
        byz = rng.normal(mu, 0.01, size=8)
    else:
        byz = np.concatenate([
            rng.normal(-2.0, 0.01, size=3),
            rng.normal(mu, 0.01, size=3),
            rng.normal(0.1, 1.0, size=1),
        ])
    return benign, byz


PLANTED_KINDS = ("non_collusion", "collusion_diff", "mimic", "mixture")


def benign_cloud(num_clients: int, dim: int, kappa: float = 1.0, rng_seed=0) -> np.ndarray:
    """Isotropic Gaussian updates about the origin, each about ``kappa`` from it."""
    rng = np.random.default_rng(rng_seed)
    return rng.normal(0.0, kappa / np.sqrt(dim), size=(num_clients, dim))


def planted_cohort(kind: str, num_clients: int = 100, num_byzantine: int = 30, dim: int = 20,
                   kappa: float = 1.0, separation: float = 10.0, spread: float = 100.0, rng_seed=0):
    """High-dimensional cohort with known community structure.

    Benign clients are the first ``K - q`` rows, scattered about the origin
    with typical distance ``kappa`` from it. Attackers are the last ``q`` rows:

    - non_collusion: independent draws at scale ``spread * kappa``, so every
      attacker is isolated;
    - collusion_diff: one group centred ``separation * kappa`` away, with the
      same dispersion as the benign clients;
    - mimic: exact copies of benign client 0;
    - mixture: 5 non-collusion, 5 collusion-diff, the rest mimic.

    Returns ``(updates, byzantine_indices)``.
    """
    if kind not in PLANTED_KINDS:
        raise ValueError(f"unknown planted cohort {kind!r}")
    k, q = num_clients, num_byzantine
    if not 0 < q < k:
        raise ValueError("need 0 < q < K")
    rng = np.random.default_rng(rng_seed)
    scale = kappa / np.sqrt(dim)
    g = benign_cloud(k, dim, kappa, rng)
    direction = rng.normal(size=dim)
    direction /= np.linalg.norm(direction)
    byz = np.arange(k - q, k)

    def far(rows):
        g[rows] = rng.normal(0.0, spread * scale, size=(len(rows), dim))

    def shifted(rows):
        g[rows] = separation * kappa * direction + rng.normal(0.0, scale, size=(len(rows), dim))

    if kind == "non_collusion":
        far(byz)
    elif kind == "collusion_diff":
        shifted(byz)
    elif kind == "mimic":
        g[byz] = g[0]
    else:
        if q < 10:
            raise ValueError("mixture needs q >= 10")
        far(byz[:5])
        shifted(byz[5:10])
        g[byz[10:]] = g[0]
    return g, frozenset(int(i) for i in byz)
