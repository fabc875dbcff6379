"""Shared helpers for the test suite."""

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_psd(g: np.random.Generator, T: int, cond: float = 10.0) -> np.ndarray:
    """Random PSD matrix with eigenvalues in [1/cond, 1]."""
    A = g.standard_normal((T, T))
    Q, _ = np.linalg.qr(A)
    vals = np.linspace(1.0 / cond, 1.0, T)
    return (Q * vals) @ Q.T
