"""Measure how tight the composite Lipschitz bound is on simulated, perturbed logs.

Prints, per perturbation kind, the worst and median ratio |dR| / (K d).
A ratio above 1 would be a soundness failure.
"""

import argparse
import statistics

import numpy as np

from eri.blueprint import Blueprint, Section, Topic
from eri.components import aggregate
from eri.composite import WeightVector, component_lipschitz, eri, lipschitz_bound, log_distance
from eri.simulator import PERTURB_KINDS, SimConfig, TopicSim, perturb, simulate


def random_blueprint(rng: np.random.Generator, n_topics: int) -> Blueprint:
    w = rng.dirichlet(np.ones(n_topics))
    topics = tuple(Topic(f"t{i}", "S", float(w[i]), int(rng.integers(1, 10)), float(rng.uniform(0, 0.2)))
                   for i in range(n_topics))
    return Blueprint("audit", topics, (Section("S", 60.0),), 3600.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--days", type=int, default=10)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    ratios = {k: [] for k in PERTURB_KINDS}
    for i in range(args.pairs):
        bp = random_blueprint(rng, int(rng.integers(1, 5)))
        cfg = SimConfig(seed=i, horizon_days=args.days,
                        default_topic=TopicSim(float(rng.uniform(0.3, 0.9)), float(rng.uniform(0.5, 3))))
        a = simulate(cfg, bp)
        if not a.attempts:
            continue
        kind = PERTURB_KINDS[i % len(PERTURB_KINDS)]
        b, _ = perturb(a, kind, float(rng.uniform(-86400, 86400)), seed=i, bp=bp)
        now = max(a.last_timestamp, b.last_timestamp)
        alpha = WeightVector.from_sequence(rng.dirichlet(np.ones(6)))
        bound = lipschitz_bound(alpha, component_lipschitz(bp), log_distance(a, b, bp, now))
        if bound > 0:
            gap = abs(eri(aggregate(a, bp, now)[0], alpha) - eri(aggregate(b, bp, now)[0], alpha))
            ratios[kind].append(gap / bound)

    print(f"{'kind':<14}{'pairs':>7}{'median':>10}{'worst':>10}")
    for kind, r in ratios.items():
        if r:
            print(f"{kind:<14}{len(r):>7}{statistics.median(r):>10.4f}{max(r):>10.4f}")
    worst = max((max(r) for r in ratios.values() if r), default=0.0)
    print(f"sound: {worst <= 1.0 + 1e-9}")


if __name__ == "__main__":
    main()
