"""Quickstart: forecast a synthetic wind-power series a few hours ahead.

Builds lag features from an autocorrelated per-unit power series,
trains the glass-box model plus every baseline, and prints the metric
table for a grid of forecasting horizons (15-minute steps here, so
horizon 16 means 4 hours ahead).
"""

import numpy as np

import windglass as wg

HORIZONS = {"0.5 h": 2, "1 h": 4, "2 h": 8, "4 h": 16}

frame = wg.make_autocorrelated_series(8_000, seed=0, step_seconds=900)
print(f"series: {len(frame)} points, "
      f"mean power {frame.target.mean():.3f} per unit\n")

config = wg.TrainConfig(learning_rate=0.02, max_rounds=400,
                        early_stop_patience=25, max_bins=64, pair_bins=16)

print(f"{'model':<12}{'horizon':<10}{'NRMSE':<9}{'NMAE':<9}{'R2':<9}")
for label, steps in HORIZONS.items():
    raw = wg.build_lag_features(frame, n_lags=16, horizon_steps=steps)
    split = wg.chronological_split(raw.n_rows)
    matrix = wg.normalize_fit_apply(raw, split.train)
    te = split.test_slice

    models = {
        "glass-box": wg.train(matrix, split, config),
        "ols": wg.fit_ols(matrix, split.train),
        "cart": wg.fit_rt_baseline(matrix, split.train, max_bins=64),
        "persistence": wg.PersistenceModel.from_matrix(matrix),
    }
    for name, model in models.items():
        rep = wg.evaluate(np.clip(model.predict(matrix.X[te]), 0, 1),
                          matrix.y[te])
        print(f"{name:<12}{label:<10}{rep.nrmse:<9.3f}{rep.nmae:<9.3f}"
              f"{rep.r2:<9.3f}")
    print()

print("Persistence is hard to beat at 30 minutes and falls apart by 4 hours;")
print("the glass-box model holds up while staying fully inspectable.")
