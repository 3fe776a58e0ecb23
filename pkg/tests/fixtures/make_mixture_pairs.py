"""Regenerate mixture_pairs.json: 20 seeded pairs of 2-3 component Gaussian mixtures."""

import json
from pathlib import Path

import numpy as np


def make(seed=20240611, count=20):
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(count):
        sigma = float(rng.uniform(0.8, 1.2))
        entry = {"id": i, "q": float(np.round(rng.uniform(0.15, 0.85), 6))}
        for key in ("components0", "components1"):
            k = int(rng.integers(2, 4))
            w = rng.dirichlet(np.ones(k))
            m = rng.uniform(-3.0, 3.0, size=k)
            entry[key] = [[float(wi), float(mi), sigma] for wi, mi in zip(w, m)]
        pairs.append(entry)
    return {"seed": seed, "pairs": pairs}


if __name__ == "__main__":
    out = Path(__file__).with_name("mixture_pairs.json")
    out.write_text(json.dumps(make(), indent=1) + "\n")
