"""Independent reference implementations used by the tests.

Nothing here imports the library's product code, so agreement with these
oracles is a real cross-check rather than a tautology.
"""
import itertools

import numpy as np


def permutation_sign(seq):
    """Sign of the permutation sorting ``seq`` (distinct entries), by bubble sort."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(len(seq) - 1 - i):
            if seq[j] > seq[j + 1]:
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
                sign = -sign
    return sign


def brute_blade_product(a, b, metric):
    """Multiply two ascending index tuples by concatenating, sorting and contracting.

    Returns ``(sign, indices)``.  Each adjacent equal pair contracts to its
    metric value; the reordering sign is the parity of the sort.
    """
    word = list(a) + list(b)
    sign = 1
    # bubble sort, tracking every swap of distinct generators
    changed = True
    while changed:
        changed = False
        for k in range(len(word) - 1):
            if word[k] > word[k + 1]:
                word[k], word[k + 1] = word[k + 1], word[k]
                sign = -sign
                changed = True
    out = []
    k = 0
    while k < len(word):
        if k + 1 < len(word) and word[k] == word[k + 1]:
            sign *= metric[word[k]]
            k += 2
        else:
            out.append(word[k])
            k += 1
    return sign, tuple(out)


def all_blades(dim):
    for r in range(dim + 1):
        for c in itertools.combinations(range(dim), r):
            yield c


def cayley_table(metric):
    dim = len(metric)
    blades = list(all_blades(dim))
    return {(a, b): brute_blade_product(a, b, metric) for a in blades for b in blades}


def central_difference(f, x, h=1e-6):
    """Gradient of a scalar or array valued f by central differences."""
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(len(x)):
        step = np.zeros_like(x)
        step[k] = h
        cols.append((np.asarray(f(x + step)) - np.asarray(f(x - step))) / (2 * h))
    return np.array(cols)
