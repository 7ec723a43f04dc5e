"""Hypothesis strategies shared by the property tests."""

import numpy as np
from hypothesis import strategies as st

from dissipative_qml.qcore import random_density, random_unitary

seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def densities(draw, dim=2):
    return random_density(dim, np.random.default_rng(draw(seeds)))


@st.composite
def unitaries(draw, dim=2):
    return random_unitary(dim, np.random.default_rng(draw(seeds)))


probabilities = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
