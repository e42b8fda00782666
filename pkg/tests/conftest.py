import math
from fractions import Fraction

import pytest


def brute_count(a, b, c, x, strict=False):
    """O(x) double loop over a box that surely contains {Q <= x}."""
    a, b, c, x = Fraction(a), Fraction(b), Fraction(c), Fraction(x)
    if x < 0:
        return 0
    D = 4 * a * c - b * b
    rm = math.isqrt(int(4 * c * x / D) + 1) + 1
    rn = math.isqrt(int(4 * a * x / D) + 1) + 1
    total = 0
    for m in range(-rm, rm + 1):
        for n in range(-rn, rn + 1):
            v = a * m * m + b * m * n + c * n * n
            total += v < x if strict else v <= x
    return total


@pytest.fixture
def brute():
    return brute_count
