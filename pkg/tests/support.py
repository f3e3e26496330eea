"""Shared helpers for the test suite."""

import numpy as np

from proxflow.sampling import random_hurwitz, random_orthogonal, random_spd, random_system

__all__ = ["random_hurwitz", "random_orthogonal", "random_spd", "random_system", "spd_from"]


def spd_from(entries):
    from proxflow import SpdMatrix

    return SpdMatrix(np.asarray(entries, dtype=float))
