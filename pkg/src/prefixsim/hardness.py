"""Hard-instance pair for lower-bound experiments on mass estimation.

Each prefix w gets an independent uniform sign s_w in {+1, -1}.  The input
distribution mu has marginals (1 + s_w * delta) / 2; a tilted companion mu'
has marginals (1 - s_w * r) / 2.  A yes-instance pairs mu with a uniformly
drawn challenge element, a no-instance draws the challenge from mu'.  With
delta = sqrt(2) * eps / sqrt(n) and r = 8 / sqrt(n), telling the two cases
apart is as hard as estimating masses within a (1 +- eps) factor.

Signs are materialized lazily as a pure function of (seed, prefix) via a
rolling 64-bit mix, so instances with n in the thousands need no storage and
every traversal order sees identical values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

from .bits import BitString, BitStringLike, PrefixLike, as_bitstring, as_prefix
from .oracles import PrefixOracle, TreeOracle
from .streams import RandomStream, child_seed, substream
from .trees import MarginalTree, MarginalWalker

_MASK64 = (1 << 64) - 1
_SIGN_TAG = 0x632D65B727C07E85


def _mix(z: int) -> int:
    """splitmix64 finalizer; a bijective 64-bit scrambler."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SignAssignment:
    """Lazily materialized uniform signs s_w in {+1, -1}, one per prefix.

    The sign at w is a deterministic function of (seed, w): a rolling state
    is advanced one mix per bit, so walks can evaluate signs incrementally
    at O(1) per step.  A memo caches explicitly requested prefixes.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self.root_state = _mix(seed & _MASK64)
        self._memo: dict[tuple[int, ...], int] = {}

    @staticmethod
    def advance(state: int, bit: int) -> int:
        return _mix(state ^ (bit + 1))

    @staticmethod
    def sign_of_state(state: int) -> int:
        return 1 if _mix(state ^ _SIGN_TAG) & 1 else -1

    def sign(self, w) -> int:
        """The sign of the prefix w (a '01' string or bit sequence)."""
        bits = tuple(int(b) for b in w)
        if bits not in self._memo:
            state = self.root_state
            for b in bits:
                state = self.advance(state, b)
            self._memo[bits] = self.sign_of_state(state)
        return self._memo[bits]


class SignMarginalTree(MarginalTree):
    """Marginal tree whose f(w) depends on the prefix only through its sign."""

    def __init__(self, n: int, signs: SignAssignment, minus_value: float, plus_value: float):
        """Marginal is plus_value where the sign is +1 and minus_value where it is -1."""
        super().__init__(n)
        if not (0.0 <= minus_value <= 1.0 and 0.0 <= plus_value <= 1.0):
            raise ValueError("marginal values must be probabilities")
        self.signs = signs
        self._minus = minus_value
        self._plus = plus_value

    def marginal_bits(self, bits: tuple[int, ...]) -> float:
        return self._plus if self.signs.sign(bits) > 0 else self._minus

    def walker(self, bits: tuple[int, ...] = ()) -> "_SignWalker":
        return _SignWalker(self, bits)


class _SignWalker(MarginalWalker):
    def __init__(self, tree: SignMarginalTree, bits: tuple[int, ...]):
        self._tree = tree
        state = tree.signs.root_state
        for b in bits:
            state = SignAssignment.advance(state, b)
        self._state = state

    def value(self) -> float:
        sign = SignAssignment.sign_of_state(self._state)
        return self._tree._plus if sign > 0 else self._tree._minus

    def step(self, bit: int) -> None:
        self._state = SignAssignment.advance(self._state, bit)


def challenge_marginal(sign, delta):
    """One-edge probability of the input distribution: (1 + s * delta) / 2."""
    return (1 + sign * delta) / 2


def tilt_marginal(sign, r):
    """One-edge probability of the tilted companion: (1 - s * r) / 2."""
    return (1 - sign * r) / 2


def default_delta(n: int, epsilon: float) -> float:
    return math.sqrt(2.0) * epsilon / math.sqrt(n)


def default_r(n: int) -> float:
    return 8.0 / math.sqrt(n)


@dataclass
class HardInstance:
    """A labeled (distribution, challenge element) pair."""

    label: Literal["yes", "no"]
    n: int
    delta: float
    r: float
    signs: SignAssignment
    x: BitString
    seed: int

    def marginal_tree(self) -> SignMarginalTree:
        """The input distribution mu, marginals (1 + s_w delta) / 2."""
        return SignMarginalTree(self.n, self.signs,
                                challenge_marginal(-1, self.delta),
                                challenge_marginal(1, self.delta))

    def tilted_tree(self) -> SignMarginalTree:
        """The companion mu', marginals (1 - s_w r) / 2 (needs r < 1)."""
        if not 0.0 < self.r < 1.0:
            raise ValueError(f"tilt r={self.r} is not a valid probability shift; pass an explicit r")
        return SignMarginalTree(self.n, self.signs,
                                tilt_marginal(-1, self.r),
                                tilt_marginal(1, self.r))

    def oracle(self) -> TreeOracle:
        """A fresh prefix oracle for mu with its own budget."""
        return TreeOracle(self.marginal_tree())


def gen_hard_instance(n: int, epsilon: float | None, label: str, seed: int, *,
                      delta: float | None = None, r: float | None = None) -> HardInstance:
    """Generate a yes- or no-instance.

    delta and r default to sqrt(2) eps / sqrt(n) and 8 / sqrt(n); the r
    default is only a valid probability shift for n > 64, so small-n
    no-instances must pass r explicitly.
    """
    if label not in ("yes", "no"):
        raise ValueError("label must be 'yes' or 'no'")
    if n < 1:
        raise ValueError("n must be at least 1")
    if delta is None:
        if epsilon is None:
            raise ValueError("pass epsilon or an explicit delta")
        delta = default_delta(n, epsilon)
    if r is None:
        r = default_r(n)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta={delta} does not give valid marginals; lower epsilon or pass delta")
    signs = SignAssignment(child_seed(seed, "signs"))
    rng = substream(seed, "challenge")
    if label == "yes":
        x = BitString(tuple(int(b) for b in rng.integers(0, 2, n)))
    else:
        if not 0.0 < r < 1.0:
            raise ValueError(f"r={r} does not give valid marginals; pass r explicitly for small n")
        bits = []
        walker = SignMarginalTree(n, signs, tilt_marginal(-1, r), tilt_marginal(1, r)).walker(())
        for _ in range(n):
            b = 1 if rng.random() < walker.value() else 0
            bits.append(b)
            walker.step(b)
        x = BitString(tuple(bits))
    return HardInstance(label, n, delta, r, signs, x, seed)


def effective_samples(oracle: PrefixOracle, w: PrefixLike, x: BitStringLike,
                      rng: RandomStream) -> int:
    """Draw once under w and count intermediate prefixes that are prefixes of x.

    The walk produces prefixes W_j for |w| <= j <= n-1 (starting at W_|w| = w);
    the count is how many of them are prefixes of the target x.  If w itself
    is not a prefix of x, no W_j can be and the count is 0.
    """
    wp = as_prefix(oracle.n, w)
    xs = as_bitstring(x, oracle.n)
    sample = oracle.conditional_sample(wp, rng)
    if not wp.is_prefix_of(xs):
        return 0
    count = 1
    for t in range(oracle.n - 1 - wp.depth):
        if sample.bits[wp.depth + t] != xs.bits[wp.depth + t]:
            break
        count += 1
    return count


@dataclass(frozen=True)
class ThresholdConstants:
    """High/low mass cutoffs separating likely from unlikely challenge masses.

    k counts how many edges along an element's path carry the (1 + delta)/2
    marginal; the cutoffs are k_high = n/2 - sqrt(3 n) and
    k_low = n/2 - sqrt(6 n), with the corresponding masses
    p = 2^-n (1 + delta)^k (1 - delta)^(n - k) held in natural-log space.
    """

    n: int
    epsilon: float
    delta: float
    k_high: float
    k_low: float
    log_p_high: float
    log_p_low: float


def threshold_constants(n: int, epsilon: float) -> ThresholdConstants:
    if n < 1:
        raise ValueError("n must be at least 1")
    delta = default_delta(n, epsilon)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"epsilon={epsilon} gives delta={delta} outside (0, 1)")
    k_high = 0.5 * n - math.sqrt(3.0) * math.sqrt(n)
    k_low = 0.5 * n - math.sqrt(6.0) * math.sqrt(n)

    def log_mass(k: float) -> float:
        return -n * math.log(2.0) + k * math.log1p(delta) + (n - k) * math.log1p(-delta)

    return ThresholdConstants(n, epsilon, delta, k_high, k_low,
                              log_mass(k_high), log_mass(k_low))


def gap_margin(n: int, epsilon: float) -> float:
    """log((1 - eps) p_high) - log((1 + eps) p_low), evaluated stably.

    The two log masses are huge (order n) while their difference is order
    epsilon, so subtracting them directly loses the signal for large n;
    instead the difference is formed term by term:
    (k_high - k_low) (log1p(delta) - log1p(-delta)) minus the epsilon factor.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must be in (0, 1)")
    c = threshold_constants(n, epsilon)
    k_spread = (math.sqrt(6.0) - math.sqrt(3.0)) * math.sqrt(n)
    mass_ratio = k_spread * (math.log1p(c.delta) - math.log1p(-c.delta))
    eps_ratio = math.log1p(epsilon) - math.log1p(-epsilon)
    return mass_ratio - eps_ratio


def check_gap(n: int, epsilon: float) -> bool:
    """Whether (1 - eps) p_high > (1 + eps) p_low."""
    return gap_margin(n, epsilon) > 0.0
