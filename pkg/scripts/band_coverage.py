"""Monte Carlo coverage of the inverted concentration band.

For a blueprint-weighted panel of Bernoulli topics, compares the nominal
miss probability delta with the simulated rate at which the weighted
accuracy estimate leaves the band.
"""

import argparse

import numpy as np

from eri.confidence import SampleProfile, effective_sample_size, invert_band


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--weights", type=float, nargs="+", default=[0.4, 0.3, 0.2, 0.1])
    ap.add_argument("--counts", type=int, nargs="+", default=[20, 80, 10, 200])
    ap.add_argument("--means", type=float, nargs="+", default=None, help="true accuracies (default 0.5 each)")
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    w = np.array(args.weights) / sum(args.weights)
    n = np.array(args.counts)
    mu = np.array(args.means if args.means else [0.5] * len(w))
    if not len(w) == len(n) == len(mu):
        ap.error("--weights, --counts and --means need the same length")

    prof = SampleProfile({f"t{i}": float(x) for i, x in enumerate(w)}, {f"t{i}": int(c) for i, c in enumerate(n)})
    rng = np.random.default_rng(args.seed)
    est = (rng.binomial(n, mu, size=(args.trials, len(w))) / n) @ w
    err = np.abs(est - w @ mu)
    print(f"effective sample size {effective_sample_size(prof):.1f}")
    print(f"{'delta':>7}{'halfwidth':>11}{'miss rate':>11}")
    for delta in (0.01, 0.05, 0.1, 0.2):
        eps = invert_band(prof, delta)
        print(f"{delta:>7.2f}{eps:>11.4f}{np.mean(err > eps):>11.4f}")


if __name__ == "__main__":
    main()
