"""Shared builders for the test suite."""

import numpy as np

from slabsearch import Dataset


def random_dataset(seed, n, p, support=(), beta=(), noise=1.0):
    """Gaussian design with an optional planted signal; returns (ds, z, y)."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, p))
    y = noise * rng.standard_normal(n)
    for j, b in zip(support, beta):
        y = y + b * z[:, j]
    return Dataset.from_arrays(z, y), z, y


def write_csv(path, z, y=None, header=None):
    """Write a dense table, optionally with the response as the last column."""
    cols = np.column_stack([z, y]) if y is not None else np.asarray(z)
    lines = []
    if header is not None:
        lines.append(",".join(header))
    for row in cols:
        lines.append(",".join(f"{v:.17g}" for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
