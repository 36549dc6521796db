"""Cylinder measures and the per-cylinder density table.

A depth-n cylinder is the set of sequences agreeing with an admissible edge
word on coordinates 1..n.  Three set functions are computed per word: the
chain mass M (stationary chain in exact mode, weighted average of chain
probabilities over an empirical measure in Monte Carlo mode), the base
measure phi0 (average of chain probabilities started at the support base
points), and their ratio Z with its logarithm.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    AbsoluteContinuityViolation,
    DepthOverflow,
    ExactModeUnavailable,
    InadmissibleWord,
)
from .model import MarkovSystem
from .simulate import EmpiricalMeasure

EXACT = "exact"
Measure = Union[EmpiricalMeasure, str]
Word = tuple[str, ...]

DEFAULT_WORD_CAP = 10_000_000


@dataclass(frozen=True)
class CylinderSet:
    """A finite union of distinct depth-n cylinders."""

    words: tuple[Word, ...]

    def __post_init__(self):
        if not self.words:
            raise InadmissibleWord("cylinder set needs at least one word")
        depths = {len(w) for w in self.words}
        if depths == {0}:
            raise InadmissibleWord("cylinder words must have depth >= 1")
        if len(depths) != 1:
            raise InadmissibleWord("cylinder words must share one depth")
        if len(set(self.words)) != len(self.words):
            raise InadmissibleWord("cylinder words must be distinct")

    @property
    def depth(self) -> int:
        return len(self.words[0])


def cylinder_set(sys: MarkovSystem, words: Iterable[Sequence[str]]) -> CylinderSet:
    """Validated cylinder set; every word must be admissible."""
    normalized = tuple(tuple(w) for w in words)
    for w in normalized:
        sys.require_admissible(w)
    return CylinderSet(words=normalized)


def full_cylinder_set(sys: MarkovSystem, depth: int,
                      cap: int = DEFAULT_WORD_CAP) -> CylinderSet:
    return CylinderSet(words=tuple(enumerate_words(sys, depth, cap=cap)))


def count_words(sys: MarkovSystem, n: int, start_vertex: int | None = None) -> int:
    """Number of admissible length-n words, by dynamic programming."""
    counts = {v.index: 1 for v in sys.vertices}
    for _ in range(n):
        counts = {v.index: sum(counts[e.target] for e in sys.out_edges(v.index))
                  for v in sys.vertices}
    if start_vertex is not None:
        return counts[start_vertex]
    return sum(counts.values())


def enumerate_words(sys: MarkovSystem, n: int, start_vertex: int | None = None,
                    cap: int = DEFAULT_WORD_CAP) -> list[Word]:
    """All admissible length-n words, lexicographic by edge id sequence."""
    if n < 1:
        raise ValueError("depth must be >= 1")
    total = count_words(sys, n, start_vertex)
    if total > cap:
        raise DepthOverflow(
            f"{total} admissible words of depth {n} exceed the cap {cap}")
    starts = ([start_vertex] if start_vertex is not None
              else sorted(v.index for v in sys.vertices))
    out: list[Word] = []

    def extend(prefix: list[str], vertex: int) -> None:
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for e in sys.out_edges(vertex):
            prefix.append(e.id)
            extend(prefix, e.target)
            prefix.pop()

    for v in starts:
        extend([], v)
    return out


def chain_cyl_prob(sys: MarkovSystem, state: tuple[int, np.ndarray],
                   word: Sequence[str]) -> float:
    """Probability that the chain started at `state` realizes the word."""
    edges = sys.require_admissible(word)
    vertex, x = state
    if edges[0].source != vertex:
        return 0.0
    y = np.asarray(x, dtype=float)
    prob = 1.0
    for e in edges:
        prob *= e.prob.value(y)
        y = e.map.apply(y)
    return prob


def chain_cyl_prob_samples(sys: MarkovSystem, mu: EmpiricalMeasure,
                           word: Sequence[str]) -> np.ndarray:
    """chain_cyl_prob of every mu sample, vectorized."""
    edges = sys.require_admissible(word)
    probs = (mu.vertices == edges[0].source).astype(float)
    pts = mu.points
    for e in edges:
        probs = probs * e.prob.value_many(pts)
        pts = e.map.apply_many(pts)
    return probs


def phi0_cyl(sys: MarkovSystem, word: Sequence[str]) -> float:
    """Base measure of a cylinder: the support-averaged chain probability
    from the base point of the word's start vertex."""
    edges = sys.require_admissible(word)
    start = edges[0].source
    if start not in sys.support_set:
        return 0.0
    prob = chain_cyl_prob(sys, (start, sys.base_point(start)), word)
    return prob / len(sys.support_set)


def stationary_vertex_distribution(sys: MarkovSystem) -> np.ndarray:
    """Stationary law of the vertex chain for constant probabilities."""
    if not sys.all_constant_probabilities:
        raise ExactModeUnavailable(
            "stationary vertex chain needs constant probability functions")
    n = len(sys.vertices)
    p = np.zeros((n, n))
    for e in sys.edges:
        p[e.source - 1, e.target - 1] += e.prob.alpha
    a = p.T - np.eye(n)
    a[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError:
        raise ExactModeUnavailable(
            "vertex chain has no unique stationary distribution") from None
    if np.any(pi < -1e-12):
        raise ExactModeUnavailable("stationary solve produced negative mass")
    return np.maximum(pi, 0.0)


def m_cyl(sys: MarkovSystem, word: Sequence[str],
          measure: Measure) -> tuple[float, float]:
    """Chain mass of a cylinder with its standard error.

    Exact mode (measure == EXACT) uses the stationary vertex distribution and
    is only available for constant probabilities; stderr is 0.  Monte Carlo
    mode averages chain probabilities over the empirical measure.
    """
    edges = sys.require_admissible(word)
    if isinstance(measure, str):
        if measure != EXACT:
            raise ValueError(f"unknown measure mode {measure!r}")
        pi = stationary_vertex_distribution(sys)
        value = float(pi[edges[0].source - 1])
        for e in edges:
            value *= e.prob.alpha
        return value, 0.0
    g = chain_cyl_prob_samples(sys, measure, word)
    value = float(measure.weights @ g)
    stderr = float(np.sqrt(np.sum((measure.weights * (g - value)) ** 2)))
    return value, stderr


@dataclass(frozen=True, eq=False)
class CylinderTable:
    """Per-word M, phi0, Z = M/phi0, log Z, and M standard errors at one depth."""

    depth: int
    words: tuple[Word, ...]
    m_values: np.ndarray
    phi0_values: np.ndarray
    z_values: np.ndarray
    logz_values: np.ndarray
    stderrs: np.ndarray
    mode: str

    def __len__(self) -> int:
        return len(self.words)

    def row(self, word: Sequence[str]) -> tuple[float, float, float, float, float]:
        idx = self.words.index(tuple(word))
        return (float(self.m_values[idx]), float(self.phi0_values[idx]),
                float(self.z_values[idx]), float(self.logz_values[idx]),
                float(self.stderrs[idx]))

    def z_by_word(self) -> dict[Word, float]:
        return {w: float(z) for w, z in zip(self.words, self.z_values)}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["word", "M", "phi0", "Z", "logZ", "stderr"])
            for i, w in enumerate(self.words):
                writer.writerow([
                    ".".join(w),
                    repr(float(self.m_values[i])),
                    repr(float(self.phi0_values[i])),
                    repr(float(self.z_values[i])),
                    repr(float(self.logz_values[i])),
                    repr(float(self.stderrs[i])),
                ])


def build_table(sys: MarkovSystem, n: int, measure: Measure,
                cap: int = DEFAULT_WORD_CAP) -> CylinderTable:
    """Depth-n cylinder table over every admissible word.

    Raises AbsoluteContinuityViolation when a word carries chain mass beyond
    sampling noise but zero base measure, which signals that the support set
    misses a vertex the chain visits.
    """
    words = enumerate_words(sys, n, cap=cap)
    exact = isinstance(measure, str)
    m_vals = np.empty(len(words))
    phi_vals = np.empty(len(words))
    errs = np.empty(len(words))
    for i, w in enumerate(words):
        m_vals[i], errs[i] = m_cyl(sys, w, measure)
        phi_vals[i] = phi0_cyl(sys, w)

    z_vals = np.zeros(len(words))
    logz_vals = np.zeros(len(words))
    for i, w in enumerate(words):
        if phi_vals[i] > 0.0:
            z_vals[i] = m_vals[i] / phi_vals[i]
            logz_vals[i] = math.log(z_vals[i]) if z_vals[i] > 0.0 else -math.inf
        else:
            tol = 0.0 if exact else 3.0 * errs[i]
            if m_vals[i] > tol:
                raise AbsoluteContinuityViolation(
                    f"word {'.'.join(w)} has chain mass {m_vals[i]:.3e} but zero "
                    f"base measure; the support set is too small")
            z_vals[i] = 0.0
            logz_vals[i] = 0.0

    total_m = math.fsum(m_vals)
    total_phi = math.fsum(phi_vals)
    m_tol = 1e-12 if exact else 3.0 * math.sqrt(float(np.sum(errs ** 2))) + 1e-12
    if abs(total_m - 1.0) > m_tol:
        raise AbsoluteContinuityViolation(
            f"depth-{n} chain masses sum to {total_m!r}, not 1")
    if abs(total_phi - 1.0) > 1e-12:
        raise AbsoluteContinuityViolation(
            f"depth-{n} base measures sum to {total_phi!r}, not 1")

    for arr in (m_vals, phi_vals, z_vals, logz_vals, errs):
        arr.setflags(write=False)
    return CylinderTable(depth=n, words=tuple(words), m_values=m_vals,
                         phi0_values=phi_vals, z_values=z_vals,
                         logz_values=logz_vals, stderrs=errs,
                         mode=EXACT if exact else "monte_carlo")


def m_of_cylinder_set(sys: MarkovSystem, q: CylinderSet,
                      measure: Measure) -> tuple[float, float]:
    """Chain mass of a finite cylinder union (words are disjoint by depth)."""
    values, variances = [], []
    for w in q.words:
        v, s = m_cyl(sys, w, measure)
        values.append(v)
        variances.append(s * s)
    return math.fsum(values), math.sqrt(math.fsum(variances))
