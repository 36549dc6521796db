"""Markov chain simulation and invariant measure estimation.

The chain lives on pairs (vertex, point): from (v, x) an out-edge e of v is
drawn with probability p_e(x) and the state moves to (t(e), w_e(x)).  The
invariant measure is estimated by a single long chain after burn-in; all
randomness is driven by numpy Generators seeded from 64-bit integers, with
worker substreams derived from (seed, worker index).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import DirectedEdge, MarkovSystem, estimate_c_hat

DEFAULT_BURN_IN = 1000

State = tuple[int, np.ndarray]


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    """Weighted samples (vertex, point, weight) with total weight 1."""

    vertices: np.ndarray
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=int)
        p = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float)
        if not (len(v) == len(p) == len(w)):
            raise ValidationError("measure arrays have mismatched lengths")
        if np.any(w <= 0.0):
            raise ValidationError("measure weights must be positive")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValidationError("measure weights must sum to 1 within 1e-12")
        for arr, name in ((v, "vertices"), (p, "points"), (w, "weights")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.weights)

    def validate_supports(self, sys: MarkovSystem) -> None:
        """Check every sample point lies in its vertex region."""
        for idx in np.unique(self.vertices):
            v = sys.vertex(int(idx))
            pts = self.points[self.vertices == idx]
            ok = np.all((pts >= v.lower - 1e-9) & (pts <= v.upper + 1e-9))
            if not ok:
                raise ValidationError(f"sample point outside region of vertex {idx}")

    def mean_point(self) -> np.ndarray:
        return self.weights @ self.points

    def to_csv(self, path) -> None:
        k = self.points.shape[1]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["vertex"] + [f"x_{i + 1}" for i in range(k)] + ["weight"])
            for v, p, w in zip(self.vertices, self.points, self.weights):
                writer.writerow([int(v)] + [repr(float(c)) for c in p]
                                + [repr(float(w))])

    @classmethod
    def from_csv(cls, path) -> "EmpiricalMeasure":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        k = len(header) - 2
        verts = np.array([int(r[0]) for r in body])
        pts = np.array([[float(c) for c in r[1:1 + k]] for r in body])
        wts = np.array([float(r[-1]) for r in body])
        return cls(vertices=verts, points=pts, weights=wts)


@dataclass(frozen=True)
class TrajectoryRecord:
    """One realized chain path: seed, start state, and (edge id, point) steps."""

    seed: int
    start: tuple[int, tuple[float, ...]]
    steps: tuple[tuple[str, tuple[float, ...]], ...]

    def check_admissible(self, sys: MarkovSystem) -> None:
        prev = self.start[0]
        for edge_id, _ in self.steps:
            e = sys.edge(edge_id)
            if e.source != prev:
                raise ValidationError(
                    f"trajectory step {edge_id} starts at vertex {e.source}, "
                    f"chain is at vertex {prev}")
            prev = e.target


def substream(seed: int, worker: int) -> np.random.Generator:
    """Independent deterministic generator for (seed, worker index)."""
    return np.random.default_rng(np.random.SeedSequence([seed, worker]))


def step(sys: MarkovSystem, state: State,
         rng: np.random.Generator) -> tuple[DirectedEdge, State]:
    """One chain transition; edges are scanned in id order."""
    vertex, x = state
    edges = sys.out_edges(vertex)
    r = rng.random()
    acc = 0.0
    chosen = edges[-1]
    for e in edges:
        acc += e.prob.value(x)
        if r < acc:
            chosen = e
            break
    return chosen, (chosen.target, chosen.map.apply(x))


def _start_state(sys: MarkovSystem) -> State:
    first = min(sys.support_set)
    return first, sys.base_point(first)


def trajectory(sys: MarkovSystem, n_steps: int, seed: int,
               start: State | None = None) -> TrajectoryRecord:
    rng = np.random.default_rng(seed)
    state = start if start is not None else _start_state(sys)
    origin = (state[0], tuple(float(c) for c in state[1]))
    steps = []
    for _ in range(n_steps):
        edge, state = step(sys, state, rng)
        steps.append((edge.id, tuple(float(c) for c in state[1])))
    return TrajectoryRecord(seed=seed, start=origin, steps=tuple(steps))


def estimate_invariant(sys: MarkovSystem, n_samples: int,
                       burn_in: int = DEFAULT_BURN_IN,
                       seed: int = 0) -> EmpiricalMeasure:
    """Ergodic-average estimate from one chain started at the first support
    vertex's base point; deterministic given the seed."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    state = _start_state(sys)
    for _ in range(burn_in):
        _, state = step(sys, state, rng)
    verts = np.empty(n_samples, dtype=int)
    pts = np.empty((n_samples, sys.dimension))
    for i in range(n_samples):
        _, state = step(sys, state, rng)
        verts[i] = state[0]
        pts[i] = state[1]
    weights = np.full(n_samples, 1.0 / n_samples)
    return EmpiricalMeasure(vertices=verts, points=pts, weights=weights)


@dataclass(frozen=True)
class ContractionRow:
    i: int
    estimate: float
    stderr: float
    bound: float


def check_average_contraction(sys: MarkovSystem, mu: EmpiricalMeasure,
                              i_max: int, n_mc: int, seed: int = 0,
                              workers: int = 1) -> list[ContractionRow]:
    """Monte Carlo check that the i-step orbit of a mu point and the orbit of
    its base point, driven by the same edges, approach each other like a^i.

    Returns rows (i, estimate, stderr, a^i * c_hat) for i = 1..i_max.  Work is
    split into `workers` deterministic substreams and merged by weighted
    averaging.
    """
    if len(mu) == 0:
        raise ValueError("empirical measure is empty")
    a = sys.contraction_rate
    c_hat, _ = estimate_c_hat(sys, mu)

    chunk_sizes = [n_mc // workers + (1 if w < n_mc % workers else 0)
                   for w in range(workers)]
    sums = np.zeros(i_max)
    sqsums = np.zeros(i_max)
    for w, size in enumerate(chunk_sizes):
        if size == 0:
            continue
        rng = substream(seed, w)
        draws = rng.choice(len(mu), size=size, p=mu.weights)
        for s in draws:
            vertex = int(mu.vertices[s])
            x = mu.points[s]
            y = sys.base_point(vertex)
            state = (vertex, x)
            for i in range(i_max):
                edge, state = step(sys, state, rng)
                y = edge.map.apply(y)
                dist = float(np.linalg.norm(state[1] - y))
                sums[i] += dist
                sqsums[i] += dist * dist
    mean = sums / n_mc
    var = np.maximum(sqsums / n_mc - mean ** 2, 0.0)
    stderr = np.sqrt(var / n_mc)
    return [ContractionRow(i=i + 1, estimate=float(mean[i]),
                           stderr=float(stderr[i]),
                           bound=a ** (i + 1) * c_hat)
            for i in range(i_max)]
