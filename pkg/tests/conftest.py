import numpy as np
import pytest

from proprpca.data import ObservedMatrix, SiteFrame


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_observed(rng, n, p, miss=0.0):
    """Random matrix with optional MCAR holes, valid per the invariants."""
    vals = rng.standard_normal((n, p))
    mask = np.ones((n, p), dtype=bool)
    if miss:
        mask = rng.random((n, p)) >= miss
        for j in range(p):
            while mask[:, j].sum() < 2:
                mask[rng.integers(n), j] = True
        for i in range(n):
            if not mask[i].any():
                mask[i, rng.integers(p)] = True
    return ObservedMatrix(np.where(mask, vals, np.nan), mask)


def random_frame(rng, n, k=1, extent=100.0):
    coords = rng.uniform(0, extent, size=(n, 2))
    covars = rng.standard_normal((n, k)) if k else None
    return SiteFrame(coords, covars)
