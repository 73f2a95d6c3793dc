"""Combinatorial decodability checks for access codebooks.

All checks are exhaustive subset enumerations; beyond the configured budget
they refuse to answer rather than sample, since a probabilistic "yes" is
worthless in the ultra-reliability regime.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb, ceil
from typing import Optional, Sequence, Union

from .patterns import Codebook, exactly_once_mask

DEFAULT_SUBSET_BUDGET = 10**8


class BudgetExceeded(Exception):
    """Raised when an exhaustive check would exceed its subset budget."""


def peels_completely(masks: Sequence[int]) -> bool:
    """Peeling oracle: can iterated singleton removal decode every pattern?

    Removes, in each round, every pattern owning a slot currently covered
    exactly once.  The decoded set is order-independent (confluence), so the
    batched rounds are equivalent to one-at-a-time peeling.
    """
    remaining = list(masks)
    while remaining:
        once = exactly_once_mask(remaining)
        if once == 0:
            return False
        remaining = [m for m in remaining if not (m & once)]
    return True


@dataclass(frozen=True)
class StoppingSetReport:
    is_m_ic: Optional[bool]              # None = indeterminate (budget exceeded)
    m_checked: int
    witness: Optional[tuple[int, ...]] = None   # pattern indices of a stalling subset
    subsets_checked: int = 0


def is_m_ic(code: Codebook, m: int, budget: int = DEFAULT_SUBSET_BUDGET) -> StoppingSetReport:
    """Is every subset of <= m patterns fully recoverable by SIC peeling?

    Each candidate subset is run through the peeling oracle; the first subset
    where peeling stalls is returned as witness.  Size-1 and size-2 subsets
    cannot stall (codebook patterns are distinct and nonzero), so enumeration
    starts at size 3.
    """
    n_pat = code.size
    if not 1 <= m <= n_pat:
        raise ValueError(f"m={m} out of range 1..{n_pat}")
    masks = code.masks()
    checked = 0
    for size in range(3, m + 1):
        if checked + comb(n_pat, size) > budget:
            return StoppingSetReport(None, m, None, checked)
        for idx in combinations(range(n_pat), size):
            checked += 1
            if not peels_completely([masks[i] for i in idx]):
                return StoppingSetReport(False, m, idx, checked)
    return StoppingSetReport(True, m, None, checked)


def is_superimposed(code: Codebook, m: int, budget: int = DEFAULT_SUBSET_BUDGET) -> bool:
    """Does every m-subset of columns contain an m x m permutation submatrix?

    Equivalently: within any m chosen patterns, each one owns a slot where it
    alone transmits.
    """
    n_pat = code.size
    if not 1 <= m <= n_pat:
        raise ValueError(f"m={m} out of range 1..{n_pat}")
    if comb(n_pat, m) > budget:
        raise BudgetExceeded(f"C({n_pat},{m}) subsets exceed budget {budget}")
    masks = code.masks()
    for idx in combinations(range(n_pat), m):
        once = exactly_once_mask(masks[i] for i in idx)
        # every member must intersect the exactly-once slots
        if any(not (masks[i] & once) for i in idx):
            return False
    return True


def is_covering_free(code: Codebook, m: int, budget: int = DEFAULT_SUBSET_BUDGET) -> bool:
    """Is no pattern's support contained in the union of m-1 other supports?"""
    if m < 2:
        raise ValueError("covering-freeness needs m >= 2")
    n_pat = code.size
    masks = code.masks()
    total = n_pat * comb(n_pat - 1, m - 1)
    if total > budget:
        raise BudgetExceeded(f"{total} (pattern, cover-set) pairs exceed budget {budget}")
    others = list(range(n_pat))
    for x in range(n_pat):
        xm = masks[x]
        rest = others[:x] + others[x + 1:]
        for cover in combinations(rest, m - 1):
            union = 0
            for j in cover:
                union |= masks[j]
            if xm & ~union == 0:
                return False
    return True


def prop1_order(code: Codebook) -> Optional[int]:
    """Superimposition order guaranteed by minimum weight and max intersection.

    Returns ceil(k_min / v); None when all supports are pairwise disjoint
    (v = 0), where the bound is inapplicable.
    """
    masks = code.masks()
    k_min = min(m.bit_count() for m in masks)
    v = 0
    for i in range(len(masks)):
        for j in range(i + 1, len(masks)):
            inter = (masks[i] & masks[j]).bit_count()
            if inter > v:
                v = inter
    if v == 0:
        return None
    return ceil(k_min / v)


@dataclass(frozen=True)
class RcReport:
    rc: bool                             # every column pair shares <= 1 common slot
    max_pairwise_intersection: int
    pair_capacity: int                   # C(n,2), the 4-loop-free population ceiling
    within_bound: bool                   # N < C(n,2)
    violating_pair: Optional[tuple[int, int]] = None


def rc_condition(code: Codebook) -> RcReport:
    """Row-column condition (4-loop freeness) plus the N < C(n,2) population bound."""
    masks = code.masks()
    v = 0
    bad = None
    for i in range(len(masks)):
        for j in range(i + 1, len(masks)):
            inter = (masks[i] & masks[j]).bit_count()
            if inter > v:
                v = inter
                if inter > 1 and bad is None:
                    bad = (i, j)
    cap = comb(code.n, 2)
    return RcReport(v <= 1, v, cap, code.size < cap, bad)
