import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.register_profile("quick", deadline=None, max_examples=10)
settings.load_profile("default")

ALPHA, DELTA = 0.6, 1.0


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_invertible(rng, n, cond=20.0):
    # U diag(s) V^dagger with bounded condition number
    q1, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    q2, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    s = np.geomspace(1.0, cond, n)
    return (q1 * s) @ q2.conj().T


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)
