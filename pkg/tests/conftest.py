import random
from fractions import Fraction
from math import comb

import pytest
from hypothesis import settings

from bmepoly.distances import DistanceMatrix, additive_matrix
from bmepoly.trees import random_binary_tree

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_matrix(n, rng, top=100, den=10):
    return DistanceMatrix(n, tuple(Fraction(rng.randint(1, top), rng.randint(1, den)) for _ in range(comb(n, 2))))


def random_additive(n, rng):
    t = random_binary_tree(n, rng)
    lengths = {e: Fraction(rng.randint(1, 50), rng.randint(1, 8)) for e in t.edges}
    return t, lengths, additive_matrix(t, lengths)


@pytest.fixture
def rng():
    return random.Random(20240611)
