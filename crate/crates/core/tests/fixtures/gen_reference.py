"""Regenerates the reference fixtures consumed by the normality-test oracle tests.

Requires numpy + scipy. The values stored here are scipy's `shapiro` (AS R94)
and `anderson` (composite normal, raw A^2) outputs on the exact samples stored
alongside them.
"""
import json
import os

import numpy as np
from scipy import stats

HERE = os.path.dirname(os.path.abspath(__file__))


def entry(name, x):
    x = np.asarray(x, dtype=np.float64)
    sw = stats.shapiro(x)
    ad = stats.anderson(x, dist="norm")
    return {
        "name": name,
        "values": [float(v) for v in x],
        "w": float(sw.statistic),
        "p": float(sw.pvalue),
        "a2": float(ad.statistic),
    }


def battery():
    rng = np.random.default_rng(20200607)
    makers = [
        ("normal", lambda n: rng.normal(3.0, 2.0, n)),
        ("uniform", lambda n: rng.uniform(-1.0, 1.0, n)),
        ("exponential", lambda n: rng.exponential(1.0, n)),
        ("lognormal", lambda n: np.exp(rng.standard_normal(n) * 0.5)),
        ("student_t5", lambda n: rng.standard_t(5, n)),
        ("laplace", lambda n: rng.laplace(0.0, 1.0, n)),
        ("beta22", lambda n: rng.beta(2.0, 2.0, n)),
        ("logistic", lambda n: rng.logistic(0.0, 1.0, n)),
        ("chisq10", lambda n: rng.chisquare(10, n)),
        ("mixture", lambda n: np.where(rng.uniform(size=n) < 0.9,
                                       rng.standard_normal(n),
                                       rng.normal(0.0, 3.0, n))),
    ]
    sizes = [20, 37, 64, 150, 333, 500, 999, 1000, 1500, 2000]
    out = []
    for i in range(50):
        name, make = makers[i % len(makers)]
        n = sizes[(i * 3 + i // 10) % len(sizes)]
        out.append(entry(f"{name}_{n}_{i}", make(n)))
    return out


def examples():
    out = {}
    q100 = stats.norm.ppf((np.arange(1, 101) - 0.5) / 100)
    out["normal_quantiles_100"] = entry("normal_quantiles_100", q100)
    q1000 = stats.norm.ppf((np.arange(1, 1001) - 0.5) / 1000)
    out["normal_quantiles_1000"] = entry("normal_quantiles_1000", q1000)
    rng = np.random.default_rng(7)
    out["lognormal_100"] = entry("lognormal_100", np.exp(rng.standard_normal(100)))
    rng = np.random.default_rng(11)
    out["uniform_1000"] = entry("uniform_1000", rng.uniform(0.0, 1.0, 1000))
    rng = np.random.default_rng(13)
    out["normal_1000"] = entry("normal_1000", rng.standard_normal(1000))
    return out


if __name__ == "__main__":
    with open(os.path.join(HERE, "normality_reference.json"), "w") as f:
        json.dump({"battery": battery(), "examples": examples()}, f)
