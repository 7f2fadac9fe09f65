"""Shared generators for tests."""
import numpy as np


def random_causal(rng, k, max_modulus=0.9):
    """Coefficients ``c`` of a causal ``1 - c_1 z - ... - c_k z^k`` built from
    random reciprocal roots (complex ones in conjugate pairs)."""
    roots = []
    while len(roots) < k:
        r = rng.uniform(0.05, max_modulus)
        if k - len(roots) >= 2 and rng.random() < 0.5:
            phi = rng.uniform(0, np.pi)
            roots += [r * np.exp(1j * phi), r * np.exp(-1j * phi)]
        else:
            roots.append(r * rng.choice([-1.0, 1.0]))
    return -np.real(np.poly(roots))[1:]


def random_pair(rng, max_p=4, max_q=4, min_q=1):
    p = int(rng.integers(1, max_p + 1))
    q = int(rng.integers(min_q, max_q + 1))
    return random_causal(rng, p), random_causal(rng, q)
