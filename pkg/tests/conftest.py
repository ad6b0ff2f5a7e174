import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from threadpoolctl import threadpool_limits

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session", autouse=True)
def _single_thread_blas():
    # tiny matrices: BLAS threading costs more than it saves
    with threadpool_limits(limits=1):
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- independent oracles -------------------------------------------------------
# plain numpy, written without the package's kernels

def oracle_basis(a, rel=1e-10):
    """Orthonormal basis of the column span via a full SVD."""
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return np.zeros((a.shape[0], 0))
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    return u[:, s > rel * max(1.0, s[0] if s.size else 0.0)]


def oracle_projector(a):
    b = oracle_basis(a)
    return b @ b.T


def oracle_null(a, rel=1e-10):
    """Orthonormal basis of ``{x : a x = 0}``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    n = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(a, full_matrices=True)
    r = int(np.sum(s > rel * max(1.0, s[0] if s.size else 0.0)))
    return vt[r:].T


def proj_gap(p, q):
    return float(np.linalg.norm(np.asarray(p) - np.asarray(q)))
