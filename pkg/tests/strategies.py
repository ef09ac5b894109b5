"""Hypothesis strategies shared by the test modules."""

import numpy as np
from hypothesis import strategies as st


def complex_in_disc(radius=0.9):
    return st.tuples(st.floats(0, radius), st.floats(0, 2 * np.pi)).map(
        lambda p: p[0] * np.exp(1j * p[1]))


def ball_points(n, radius=0.9):
    coords = st.lists(st.floats(-1, 1), min_size=2 * n, max_size=2 * n)

    def build(args):
        x, s = args
        v = np.array(x[0::2]) + 1j * np.array(x[1::2])
        nrm = np.linalg.norm(v)
        if nrm < 1e-3:
            v, nrm = np.eye(n, dtype=complex)[0], 1.0
        return s * v / nrm
    return st.tuples(coords, st.floats(0, radius)).map(build)
