#!/usr/bin/env python3
"""Noise-free deviation of the matched-filtered BD observation from its block model.

The deviation comes from the finite-K sample power of the primary symbols,
so it should shrink like K^-1/2; the fitted log-log slope is printed.
"""

import argparse

import numpy as np

from symradio.channel import SystemParams, draw_bd_symbols, make_rng, sample_channels
from symradio.rates import simulate_bd_observation


def deviation(K, trials, seed):
    params = SystemParams.from_db(J=4, K=K)
    devs = []
    for t in range(trials):
        real = sample_channels(params, seed, t)
        c = draw_bd_symbols(make_rng(seed, 99, t), real.J, params.bd_symbol_model)
        obs = simulate_bd_observation(real, params, c, seed=seed, stream=t, noise=False)
        devs.append(np.linalg.norm(obs.simulated - obs.model) / np.linalg.norm(obs.model))
    return float(np.mean(devs))


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()
    Ks = np.array([16, 64, 256, 1024, 4096])
    d = np.array([deviation(int(K), args.trials, args.seed) for K in Ks])
    for K, v in zip(Ks, d):
        print(f"K={K:5d}  mean relative deviation {v:.4e}")
    slope = np.polyfit(np.log(Ks), np.log(d), 1)[0]
    print(f"log-log slope {slope:+.3f}")
