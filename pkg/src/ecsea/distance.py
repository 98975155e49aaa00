"""Damerau-Levenshtein distance (optimal string alignment variant) over label sequences."""

from __future__ import annotations

from typing import Hashable, Sequence


def dld(a: Sequence[Hashable], b: Sequence[Hashable]) -> int:
    """Edit distance with unit-cost insert, delete, substitute and adjacent swap.

    Restricted variant: no substring is edited after being transposed.
    """
    n, m = len(a), len(b)
    if n == 0:
        return m
    if m == 0:
        return n
    # three rolling rows: i-2, i-1, i
    prev2 = None
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        ai = a[i - 1]
        for j in range(1, m + 1):
            bj = b[j - 1]
            cost = 0 if ai == bj else 1
            d = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
            if i > 1 and j > 1 and ai == b[j - 2] and a[i - 2] == bj:
                d = min(d, prev2[j - 2] + 1)
            cur[j] = d
        prev2, prev = prev, cur
    return prev[m]


def normalized_similarity(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    """1 - dld(a, b) / max(|a|, |b|); two empty sequences score 1.0."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - dld(a, b) / longest
