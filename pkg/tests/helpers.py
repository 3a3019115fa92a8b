"""Independent naive-loop oracles and fixture builders.

Everything here is deliberately slow and dumb: plain Python loops, no numpy
reductions, no reuse of the library code it checks. Fixture builders solve
for series that reproduce published-table metric triples exactly.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

SMAPE_EPS = 1e-8


# -- naive metric oracles -------------------------------------------------------

def naive_mae(y, p):
    total = 0.0
    for a, b in zip(y, p):
        total += abs(a - b)
    return total / len(y)


def naive_r2(y, p):
    mean = sum(y) / len(y)
    ss_tot = 0.0
    ss_res = 0.0
    for a, b in zip(y, p):
        ss_tot += (a - mean) ** 2
        ss_res += (a - b) ** 2
    return 1.0 - ss_res / ss_tot


def naive_smape(y, p):
    total = 0.0
    for a, b in zip(y, p):
        total += abs(a - b) / ((abs(a) + abs(b)) / 2.0 + SMAPE_EPS)
    return total / len(y) * 100.0


def naive_sr(true_res, pred_res, threshold):
    hits = 0
    for t, p in zip(true_res, pred_res):
        if abs(p - t) <= threshold + 1e-9:
            hits += 1
    return hits / len(true_res)


def naive_sample_std(values):
    n = len(values)
    mean = sum(values) / n
    acc = 0.0
    for v in values:
        acc += (v - mean) ** 2
    return math.sqrt(acc / (n - 1))


def naive_uniformity(bin_means):
    mu = sum(bin_means) / len(bin_means)
    sigma = naive_sample_std(bin_means)
    return mu, sigma, 1.0 / (1.0 + sigma / abs(mu))


def naive_light_robustness(mae_o, mae_c, i_o, i_c):
    di = abs(i_c / i_o - 1.0)
    de = abs(mae_c / mae_o - 1.0)
    return di / (di + de)


def naive_rolling_mean(values, window):
    h = window // 2
    out = []
    for i in range(len(values)):
        lo = max(0, i - h)
        hi = min(len(values), i + h + 1)
        chunk = values[lo:hi]
        out.append(sum(chunk) / len(chunk))
    return out


def naive_spatial_robustness(dist_means, depth_means, window):
    a = naive_sample_std(naive_rolling_mean(dist_means, window))
    b = naive_sample_std(naive_rolling_mean(depth_means, window))
    return 0.5 * (a + b)


def naive_repeatability(groups, columns):
    """groups: list of (depth_step, trials-array (N, 6)); columns: label indices."""
    total = 0.0
    for _, trials in groups:
        per_channel = [naive_sample_std([row[c] for row in trials]) for c in columns]
        total += sum(per_channel) / len(per_channel)
    return total / len(groups)


# -- fixture builders -----------------------------------------------------------

def build_metric_series(target_mae: float, target_r2: float, target_smape: float,
                        n: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Construct (truth, prediction) hitting all three metrics at once.

    Errors alternate +/-mae (MAE exact); truth spreads around a center c with
    a width fixed by R^2; c is solved so the sMAPE percentage lands on
    target. All values are strictly positive.
    """
    assert n % 2 == 0
    errors = np.tile([target_mae, -target_mae], n // 2)
    width = target_mae / math.sqrt(1.0 - target_r2)
    t = np.linspace(-1.0, 1.0, n)
    t = t - t.mean()
    t = t * math.sqrt(n / float(np.sum(t * t)))       # sum of squares == n

    def smape_at(c: float) -> float:
        y = c + width * t
        p = y - errors
        total = 0.0
        for a, b in zip(y, p):
            total += abs(a - b) / ((abs(a) + abs(b)) / 2.0 + SMAPE_EPS)
        return total / n * 100.0

    c_guess = 100.0 * target_mae / target_smape
    lo = max(width + 2.0 * target_mae, 0.25 * c_guess)
    hi = 4.0 * c_guess + width + 1.0
    center = brentq(lambda c: smape_at(c) - target_smape, lo, hi, xtol=1e-14)
    y = center + width * t
    return y, y - errors


def build_std_pattern(target_std: float, n: int, offset: float = 1.0) -> np.ndarray:
    """A length-n sequence with sample standard deviation exactly target."""
    raw = np.sin(np.linspace(0.0, 3.0, n)) + np.linspace(0.0, 0.5, n)
    raw = raw - raw.mean()
    return offset + raw * (target_std / naive_sample_std(list(raw)))


def build_smoothed_std_series(target_std: float, n: int, window: int,
                              offset: float = 1.0) -> np.ndarray:
    """Bin means whose sample STD *after* truncated rolling-mean smoothing is
    exactly target (smoothing is linear, so scaling the pattern scales the
    smoothed STD proportionally)."""
    raw = np.cos(np.linspace(0.0, 4.0, n)) + np.linspace(0.0, 1.0, n) ** 2
    raw = raw - raw.mean()
    smoothed_std = naive_sample_std(naive_rolling_mean(list(raw), window))
    return offset + raw * (target_std / smoothed_std)
