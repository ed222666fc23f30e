"""Common-subsequence profiles.

A profile records, for every length ``l``, how many *distinct* symbol strings of
that length are a subsequence of both inputs. Inputs are any sequences of
hashable symbols (``TtpSequence`` or plain tuples such as ``("A", "B")``).
"""

from __future__ import annotations

import itertools
from collections import Counter
from collections.abc import Hashable, Sequence
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ArithmeticOverflow, LengthCap
from .model import DEFAULT_MAX_LENGTH

WIDTH_BITS = 128
WIDTH_LIMIT = 1 << WIDTH_BITS
BRUTE_FORCE_LIMIT = 16


def check_width(value: int, what: str = "value") -> int:
    """Enforce the unsigned 128-bit contract on an exact integer."""
    if value < 0 or value >= WIDTH_LIMIT:
        raise ArithmeticOverflow(f"{what} does not fit in {WIDTH_BITS} unsigned bits")
    return value


@dataclass(frozen=True)
class SubsequenceProfile:
    lengths: tuple[int, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        if len(self.lengths) != len(self.counts):
            raise ValueError("lengths and counts must have the same size")
        if any(x >= y for x, y in zip(self.lengths, self.lengths[1:])):
            raise ValueError("lengths must be strictly increasing")
        if any(l < 1 for l in self.lengths) or any(c < 1 for c in self.counts):
            raise ValueError("lengths and counts must be positive")

    @property
    def k(self) -> int:
        return len(self.lengths)

    @property
    def dot(self) -> int:
        """Exact inner product of counts and lengths."""
        return check_width(sum(l * c for l, c in zip(self.lengths, self.counts)), "<mu,lambda>")

    @classmethod
    def from_counts(cls, counts) -> SubsequenceProfile:
        """Build from a by-length count vector whose index 0 is the empty string."""
        pairs = [(l, int(c)) for l, c in enumerate(counts) if l >= 1 and c]
        for _, c in pairs:
            check_width(c, "subsequence count")
        return cls(tuple(l for l, _ in pairs), tuple(c for _, c in pairs))

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.lengths, self.counts))


def _check_lengths(a: Sequence, b: Sequence, max_length: int):
    for s in (a, b):
        if len(s) > max_length:
            raise LengthCap(f"sequence length {len(s)} exceeds the maximum {max_length}")


def encode_pair(a: Sequence[Hashable], b: Sequence[Hashable]) -> tuple[np.ndarray, np.ndarray]:
    vocab: dict = {}
    ea = np.array([vocab.setdefault(x, len(vocab)) for x in a], dtype=np.int64)
    eb = np.array([vocab.setdefault(x, len(vocab)) for x in b], dtype=np.int64)
    return ea, eb


def common_subsequence_profile(
    a: Sequence[Hashable],
    b: Sequence[Hashable],
    max_length: int = DEFAULT_MAX_LENGTH,
    backend: str | None = None,
) -> SubsequenceProfile:
    """Distinct common subsequences of ``a`` and ``b`` tallied by length.

    Dynamic programming over prefixes and subsequence length with
    inclusion-exclusion on the previous occurrence of a matched symbol, so each
    distinct string is counted once. Cost O(m * n * min(m, n)).
    """
    _check_lengths(a, b, max_length)
    if not len(a) or not len(b):
        return SubsequenceProfile((), ())
    ea, eb = encode_pair(a, b)
    return SubsequenceProfile.from_counts(_kernels.css_counts(ea, eb, backend=backend))


def _all_subsequences(s: Sequence[Hashable]) -> set[tuple]:
    return {
        tuple(s[i] for i in idx)
        for r in range(1, len(s) + 1)
        for idx in itertools.combinations(range(len(s)), r)
    }


def brute_force_profile(a: Sequence[Hashable], b: Sequence[Hashable]) -> SubsequenceProfile:
    """Reference profile by explicit enumeration of both subsequence sets."""
    if len(a) > BRUTE_FORCE_LIMIT or len(b) > BRUTE_FORCE_LIMIT:
        raise LengthCap(f"brute force is limited to length {BRUTE_FORCE_LIMIT}")
    tally = Counter(len(s) for s in _all_subsequences(a) & _all_subsequences(b))
    lengths = tuple(sorted(tally))
    return SubsequenceProfile(lengths, tuple(tally[l] for l in lengths))


def subsequence_budget(n: int, max_length: int = DEFAULT_MAX_LENGTH) -> int:
    """Total length of all non-empty subsequences (by position) of an n-sequence: n * 2**(n-1)."""
    if n < 1:
        raise ValueError("n must be positive")
    if n > max_length:
        raise LengthCap(f"n={n} exceeds the maximum {max_length}")
    return check_width(n << (n - 1), "subsequence budget")
