"""VC dimension of set families over small finite domains, by enumeration."""

from __future__ import annotations

from typing import Iterable

from robcert import kernels
from robcert.core.types import point_key

MAX_DOMAIN = 20


def to_masks(sets: Iterable[Iterable], domain: Iterable | None = None) -> tuple[list[int], list]:
    """Encode a family as bitmasks over a sorted domain.

    Without an explicit ``domain`` the union of the sets is used.
    """
    sets = [frozenset(s) for s in sets]
    if domain is None:
        dom = set()
        for s in sets:
            dom |= s
    else:
        dom = set(domain)
        for s in sets:
            if not s <= dom:
                raise ValueError(f"set {sorted(s - dom, key=point_key)} leaves the domain")
    order = sorted(dom, key=point_key)
    bit = {x: 1 << i for i, x in enumerate(order)}
    masks = [sum(bit[x] for x in s) for s in sets]
    return masks, order


def vc_dimension(sets: Iterable[Iterable], domain: Iterable | None = None) -> int:
    """Largest size of a subset of ``domain`` shattered by ``sets``.

    Raises ``ValueError`` for an empty family or a domain above 20 points.
    """
    masks, order = to_masks(sets, domain)
    if not masks:
        raise ValueError("VC dimension of an empty family is undefined")
    if len(order) > MAX_DOMAIN:
        raise ValueError(f"domain has {len(order)} points; enumeration is capped at {MAX_DOMAIN}")
    return kernels.vc_dimension(masks, len(order))


def shatters(sets: Iterable[Iterable], subset: Iterable) -> bool:
    subset = frozenset(subset)
    masks, order = to_masks(sets, None)
    bit = {x: 1 << i for i, x in enumerate(order)}
    if not subset <= set(order):
        # points outside every set can never be "in"
        return len(subset) == 0
    return kernels.shatters(masks, sum(bit[x] for x in subset))
