"""Independent reference computations used to pin expected test values.

Everything here is deliberately written without reusing the library's
algorithms: direct series summation, eigenvector stationary laws, and a
memoized exhaustive cover search.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def direct_modulus_series(slope: float, ratio: float, scale: float,
                          n_terms: int = 400) -> float:
    """Plain term-by-term summation of min(slope * ratio^i * scale, 1)."""
    return math.fsum(min(slope * ratio ** i * scale, 1.0)
                     for i in range(n_terms))


def binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n)


def stationary_via_eig(p: np.ndarray) -> np.ndarray:
    """Stationary law of a row-stochastic matrix via its left eigenvector."""
    vals, vecs = np.linalg.eig(p.T)
    idx = int(np.argmin(np.abs(vals - 1.0)))
    pi = np.real(vecs[:, idx])
    return pi / pi.sum()


def enumerate_paths(edges: list[tuple[str, int, int]], length: int
                    ) -> list[tuple[str, ...]]:
    """All admissible edge-id words of the given length, by brute filtering.

    edges: (id, source, target) triples.
    """
    by_id = {e[0]: e for e in edges}
    words = []
    for combo in itertools.product(sorted(by_id), repeat=length):
        ok = all(by_id[combo[i]][2] == by_id[combo[i + 1]][1]
                 for i in range(length - 1))
        if ok:
            words.append(combo)
    return words


def brute_min_cover_cost(target: int, pieces: list[tuple[float, int]]) -> float:
    """Exhaustive minimum cost of a disjoint piece family covering `target`.

    pieces are (cost, bitmask) pairs; memoized on the union mask, no cost
    pruning, so the search is independent of the library's branch and bound.
    """
    memo: dict[tuple[int, int], float] = {}

    def solve(covered: int, used: int) -> float:
        remaining = target & ~covered
        if not remaining:
            return 0.0
        key = (covered, used)
        if key in memo:
            return memo[key]
        bit = remaining & -remaining
        best = math.inf
        for cost, mask in pieces:
            if mask & bit and not (mask & used):
                sub = solve(covered | mask, used | mask)
                if cost + sub < best:
                    best = cost + sub
        memo[key] = best
        return best

    return solve(0, 0)
