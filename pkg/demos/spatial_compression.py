"""
Spatial compression without an error bound
==========================================

Twenty-three sensors sample a shared daily cycle. Each time instant gives a
vector of 23 readings, and we compare the autoencoder code against PCA, DCT
and PAA at a few code sizes.
"""

import numpy as np

from sensorpress.bench import k_sweep
from sensorpress.autoencoder import Hyperparams
from sensorpress.dataset import kfold_split, make_vectors, synthesize

# one vector per time instant
m = synthesize(n_sensors=23, n_times=3000, noise_std=0.05, seed=0)
X = make_vectors(m, "spatial")
train_idx, test_idx = kfold_split(len(X), 10, seed=0)[0]

rows = k_sweep(X[train_idx], X[test_idx], ks=[2, 4, 8], hp=Hyperparams(max_iters=300))

print(f"{'codec':6s} {'CR% (payload)':>14s} {'RMSE':>8s} {'R2':>7s}")
for r in rows:
    if r.mode == "payload_only":
        print(f"{r.codec:6s} {r.cr_percent:14.2f} {r.rmse:8.4f} {r.r2:7.4f}")

###############################################################################
# The autoencoder and PCA both exploit the correlation across sensors. DCT
# and PAA treat the 23 readings as a signal in sensor order, which has no
# natural smoothness, so they do much worse at the same rate. At small codes
# the autoencoder edges out PCA; at K=8 PCA already sits at the noise floor
# while 300 training iterations leave the autoencoder short of it.
