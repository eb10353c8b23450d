import numpy as np
import pytest

from driftlab.algebra import FTPolynomial


def random_real_poly(rng, n, n_modes=4, max_k=3, max_deg=2, scale=1.0):
    """Random real-valued FTPolynomial: conjugate mode pairs, bounded support."""
    terms = {}
    zero = (0,) * n
    for _ in range(n_modes):
        k = tuple(int(x) for x in rng.integers(-max_k, max_k + 1, size=n))
        alpha = tuple(int(a) for a in rng.integers(0, max_deg + 1, size=n))
        c = complex(rng.uniform(-scale, scale), rng.uniform(-scale, scale))
        if all(x == 0 for x in k):
            c = complex(c.real, 0.0)
        neg = tuple(-x for x in k)
        terms[(k, alpha)] = terms.get((k, alpha), 0) + 0.5 * c
        terms[(neg, alpha)] = terms.get((neg, alpha), 0) + 0.5 * c.conjugate()
    # random pure action content as well
    alpha = tuple(int(a) for a in rng.integers(0, max_deg + 1, size=n))
    terms[(zero, alpha)] = terms.get((zero, alpha), 0) + rng.uniform(-scale, scale)
    return FTPolynomial(n, terms)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
