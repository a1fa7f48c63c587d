#!/usr/bin/env python3
"""How the primary-rate gain from BDs depends on transmit power and link budgets.

Prints the mean gain over J = 0 at J = 1 and J = 500 (correlation-matrix
beamformer, exact Monte Carlo rate) for a grid of transmit powers and
PT-to-BD path gains. Used to check whether any nearby operating point
produces gains of roughly 0.19 and 3.83 bps/Hz.
"""

import argparse

import numpy as np

from symradio.cli import ExperimentConfig, Sweep, run_fig4_fig5


def gains(p_dbm, beta_h_db, n_real, seed):
    cfg = ExperimentConfig(sweep=Sweep.BD_COUNT, j_list=(0, 1, 500), p_dbm=(p_dbm,),
                           beta_h_db=beta_h_db, n_realizations=n_real, mc_trials=4000,
                           seed=seed)
    rows = {int(r.sweep_value): r.primary_rate for r in run_fig4_fig5(cfg)}
    return rows[0], rows[1] - rows[0], rows[500] - rows[0]


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--realizations", type=int, default=300)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()
    print(f"{'p_dBm':>6} {'beta_h_dB':>9} {'R(J=0)':>8} {'gain@1':>8} {'gain@500':>9}")
    for beta_h_db in (-110.0, -105.0, -100.0):
        for p_dbm in np.arange(-10.0, 31.0, 10.0):
            r0, g1, g500 = gains(p_dbm, beta_h_db, args.realizations, args.seed)
            print(f"{p_dbm:6.0f} {beta_h_db:9.0f} {r0:8.3f} {g1:8.3f} {g500:9.3f}")
