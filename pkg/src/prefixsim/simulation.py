"""Simulation of a hidden distribution from prefix conditional samples.

A single edge w -> wb is estimated by drawing m = ceil(n / delta) samples
conditioned on w and averaging the first free bit.  Estimating every edge
independently yields a surrogate distribution whose expected KL divergence
from the input is at most n/m <= delta.  Two implementations are provided:

* an eager one that learns the whole tree up front (exponential work, simple
  to reason about), and
* a lazy one that estimates an edge the first time it or its sibling lies on
  a queried path, memoizing both siblings.

Because each edge's estimation stream is keyed by (master seed, prefix), the
order in which edges are first touched is irrelevant, and the lazy
implementation is bit-for-bit equal to reading the eagerly learned tree.
Estimates are kept as exact integer pairs (k, m); all float probabilities
are computed as k/m so the two implementations agree to the last bit and
realization checks can run in exact rational arithmetic.

A simulation state (like the oracle it drives) has a single logical owner;
independent trials parallelize at the state level.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bits import BitString, BitStringLike, Prefix, PrefixLike, as_bitstring, as_prefix
from .errors import CapabilityError
from .oracles import PrefixOracle
from .streams import RandomStream, substream
from .trees import TableMarginalTree
from .util import ceil_snap

#: Largest n for which eagerly learning all 2^n - 1 edges is supported.
MAX_PREPROCESS_N = 20


def samples_per_edge(n: int, delta: float) -> int:
    """Conditional samples per edge estimate: m = ceil(n / delta)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not delta > 0.0:
        raise ValueError("delta must be positive")
    return ceil_snap(n / delta)


@dataclass(frozen=True)
class EdgeEstimate:
    """An edge weight estimated as k matches out of m samples."""

    k: int
    m: int

    def __post_init__(self) -> None:
        if not 0 <= self.k <= self.m:
            raise ValueError(f"need 0 <= k <= m, got k={self.k}, m={self.m}")

    @property
    def value(self) -> float:
        return self.k / self.m

    @property
    def exact(self) -> Fraction:
        return Fraction(self.k, self.m)

    def sibling(self) -> "EdgeEstimate":
        return EdgeEstimate(self.m - self.k, self.m)


def est_simulation_edge(n: int, oracle: PrefixOracle, delta: float,
                        w: PrefixLike, b: int, rng: RandomStream) -> EdgeEstimate:
    """Estimate the probability of bit b after prefix w.

    Draws m = ceil(n / delta) conditional samples under w and counts those
    whose first free bit equals b.  Costs exactly m conditional samples.
    """
    if b not in (0, 1):
        raise ValueError("b must be 0 or 1")
    wp = as_prefix(n, w)
    m = samples_per_edge(n, delta)
    free = oracle.conditional_sample_batch(wp, m, rng)
    k = int(np.sum(free[:, 0] == b))
    return EdgeEstimate(k, m)


class LearnedDistribution:
    """An explicitly learned surrogate distribution (eager implementation).

    Stores the one-edge counts k(w) out of m for every prefix w; the
    represented marginal is k(w)/m.
    """

    def __init__(self, n: int, delta: float, m: int, level_counts: list[np.ndarray],
                 sample_cost: int):
        self.n = n
        self.delta = delta
        self.m = m
        self._level_counts = level_counts
        self.sample_cost = sample_cost

    def edge(self, w: PrefixLike, b: int) -> EdgeEstimate:
        wp = as_prefix(self.n, w)
        k = int(self._level_counts[wp.depth][wp.index])
        est = EdgeEstimate(k, self.m)
        return est if b == 1 else est.sibling()

    def query(self, x: BitStringLike) -> float:
        """Mass of x under the learned distribution; zero oracle cost."""
        xs = as_bitstring(x, self.n)
        p = 1.0
        idx = 0
        for i, b in enumerate(xs.bits):
            k = int(self._level_counts[i][idx])
            p *= (k if b else self.m - k) / self.m
            idx = (idx << 1) | b
        return p

    def query_exact(self, x: BitStringLike) -> Fraction:
        xs = as_bitstring(x, self.n)
        p = Fraction(1)
        idx = 0
        for i, b in enumerate(xs.bits):
            k = int(self._level_counts[i][idx])
            p *= Fraction(k if b else self.m - k, self.m)
            idx = (idx << 1) | b
        return p

    def sample(self, rng: RandomStream) -> tuple[BitString, float]:
        """Draw x from the learned distribution; returns (x, mass of x)."""
        p = 1.0
        idx = 0
        bits = []
        for i in range(self.n):
            k = int(self._level_counts[i][idx])
            b = 1 if rng.random() < k / self.m else 0
            p *= (k if b else self.m - k) / self.m
            bits.append(b)
            idx = (idx << 1) | b
        return BitString(tuple(bits)), p

    def as_marginal_tree(self) -> TableMarginalTree:
        return TableMarginalTree(self.n, [counts / self.m for counts in self._level_counts])


def preprocess(n: int, oracle: PrefixOracle, delta: float, seed: int) -> LearnedDistribution:
    """Learn every edge of the tree up front (eager implementation).

    Estimates all 2^n - 1 one-edges independently, each from its own
    (seed, prefix)-keyed stream, costing (2^n - 1) * m conditional samples.
    """
    if n > MAX_PREPROCESS_N:
        raise CapabilityError(f"preprocessing learns 2^n - 1 edges; supported only for n <= {MAX_PREPROCESS_N}")
    m = samples_per_edge(n, delta)
    level_counts = []
    for i in range(n):
        counts = np.empty(1 << i, dtype=np.int64)
        for j in range(1 << i):
            w = Prefix(n, tuple((j >> (i - 1 - t)) & 1 for t in range(i)))
            est = est_simulation_edge(n, oracle, delta, w, 1, substream(seed, "edge", w.as_str()))
            counts[j] = est.k
        level_counts.append(counts)
    return LearnedDistribution(n, delta, m, level_counts, ((1 << n) - 1) * m)


class LazySimulation:
    """Memoized simulation: edges are estimated on first touch.

    Queries and samples interact with the learned state only through
    access_edge, which estimates a missing edge from its (seed, prefix)-keyed
    stream and writes both siblings at once.  Entries never change once
    written, so repeated queries are consistent and already-revealed masses
    are honored by later samples.
    """

    def __init__(self, n: int, oracle: PrefixOracle, delta: float, seed: int):
        if n != oracle.n:
            raise ValueError(f"oracle is over n={oracle.n}, expected {n}")
        if not delta > 0.0:
            raise ValueError("delta must be positive")
        self.n = n
        self.oracle = oracle
        self.delta = delta
        self.seed = seed
        self.m = samples_per_edge(n, delta)
        self.hist: dict[tuple[str, int], EdgeEstimate] = {}
        self._user_rng = substream(seed, "user")

    @property
    def touched_pairs(self) -> int:
        """Number of distinct sibling pairs estimated so far."""
        return len(self.hist) // 2

    def access_edge(self, w: PrefixLike, b: int) -> EdgeEstimate:
        if b not in (0, 1):
            raise ValueError("b must be 0 or 1")
        return self._edge(as_prefix(self.n, w).as_str(), b)

    def _edge(self, w_str: str, b: int) -> EdgeEstimate:
        # memo hits dominate; the prefix object is rebuilt only on a miss
        est = self.hist.get((w_str, b))
        if est is None:
            est = est_simulation_edge(self.n, self.oracle, self.delta,
                                      Prefix.from_str(self.n, w_str), b,
                                      substream(self.seed, "edge", w_str))
            self.hist[(w_str, b)] = est
            self.hist[(w_str, 1 - b)] = est.sibling()
        return est

    def query(self, x: BitStringLike) -> float:
        """Mass of x under the simulated distribution.

        Touches all n edges along the path (no short-circuit on zero), so a
        fresh query costs at most n * m conditional samples and a repeated
        query costs nothing.
        """
        xs = as_bitstring(x, self.n)
        s = xs.as_str()
        p = 1.0
        for i, b in enumerate(xs.bits):
            p *= self._edge(s[:i], b).value
        return p

    def query_exact(self, x: BitStringLike) -> Fraction:
        xs = as_bitstring(x, self.n)
        s = xs.as_str()
        p = Fraction(1)
        for i, b in enumerate(xs.bits):
            p *= self._edge(s[:i], b).exact
        return p

    def sample(self) -> tuple[BitString, float]:
        """Draw x from the simulated distribution; returns (x, mass of x)."""
        p = 1.0
        bits: list[int] = []
        w_str = ""
        rand = self._user_rng.random
        for _ in range(self.n):
            f = self._edge(w_str, 1).value
            b = 1 if rand() < f else 0
            p *= self._edge(w_str, b).value
            bits.append(b)
            w_str += "01"[b]
        return BitString(tuple(bits)), p
