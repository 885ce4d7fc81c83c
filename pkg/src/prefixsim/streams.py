"""Keyed random substreams.

Every random decision in this package is drawn from a stream derived from a
master seed plus a structural key (for example the prefix whose edge is being
estimated, or a trial index).  Streams with the same (seed, key) are
identical no matter when or in which order they are created, which makes
randomized procedures order-invariant and lets two implementations be
coupled bit-for-bit.
"""

from __future__ import annotations

import hashlib

import numpy as np

RandomStream = np.random.Generator

_SEP = b"\x1f"


def child_seed(master_seed: int, *key) -> int:
    """Map (master_seed, key parts) to a 128-bit child seed.

    Key parts are stringified and joined; use plain tags (words, prefix
    bit-strings, integers) so distinct keys stay distinct.
    """
    h = hashlib.blake2b(digest_size=16)
    h.update(str(master_seed).encode("ascii"))
    for part in key:
        h.update(_SEP)
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest(), "big")


def substream(master_seed: int, *key) -> RandomStream:
    """A generator that is a pure function of (master_seed, key)."""
    return np.random.default_rng(child_seed(master_seed, *key))
