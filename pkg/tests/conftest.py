import numpy as np
import pytest
from hypothesis import strategies as st

finite = st.floats(-8.0, 8.0, allow_nan=False, allow_infinity=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)
speeds = st.sampled_from([1.0, 2.0, 10.0, 100.0])


@st.composite
def unit3(draw):
    v = np.array([draw(st.floats(-1, 1)) for _ in range(3)])
    n = np.linalg.norm(v)
    if n < 1e-3:
        return np.array([0.0, 0.0, 1.0])
    return v / n


def random_events(n, N=3, seed=0, scale=3.0):
    rng = np.random.default_rng(seed)
    p = scale * rng.standard_normal((n, N))
    q = scale * rng.standard_normal((n, N))
    om = rng.standard_normal((n, N))
    om /= np.linalg.norm(om, axis=1, keepdims=True)
    return p, q, om


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
