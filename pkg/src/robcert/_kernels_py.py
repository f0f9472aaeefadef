"""Pure-Python shattering kernels. Same API as the compiled ``_kernels`` module."""

from itertools import combinations


def shatters(masks, subset):
    """True iff the bitmask family ``masks`` shatters the bitmask ``subset``."""
    k = bin(subset).count("1")
    if len(masks) < (1 << k):
        return False
    return len({m & subset for m in masks}) == (1 << k)


def vc_dimension(masks, n):
    """Size of the largest subset of ``{0..n-1}`` shattered by ``masks``.

    Shattering is hereditary, so the search stops at the first size with no
    shattered subset.
    """
    fam = list(set(masks))
    best = 0
    for k in range(1, n + 1):
        if len(fam) < (1 << k):
            break
        found = False
        for bits in combinations(range(n), k):
            sub = 0
            for b in bits:
                sub |= 1 << b
            if len({m & sub for m in fam}) == (1 << k):
                found = True
                break
        if not found:
            break
        best = k
    return best
