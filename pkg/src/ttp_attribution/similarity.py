"""Pairwise similarity measures between technique sequences."""

from __future__ import annotations

import math
from collections.abc import Hashable, Sequence
from enum import Enum
from functools import lru_cache

import numpy as np

from . import _kernels
from .css import check_width, common_subsequence_profile, encode_pair, subsequence_budget
from .errors import LengthCap
from .model import DEFAULT_MAX_LENGTH


class MeasureKind(str, Enum):
    CAPTAIN = "captain"
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"
    LCS = "lcs"

    @classmethod
    def parse(cls, value) -> MeasureKind:
        if isinstance(value, MeasureKind):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            choices = ", ".join(m.value for m in cls)
            raise ValueError(f"unknown measure {value!r} (choose from {choices})") from None

    def __str__(self):
        return self.value


def _check(a: Sequence, b: Sequence, max_length: int):
    if not len(a) or not len(b):
        raise ValueError("similarity needs non-empty sequences")
    for s in (a, b):
        if len(s) > max_length:
            raise LengthCap(f"sequence length {len(s)} exceeds the maximum {max_length}")


@lru_cache(maxsize=None)
def _budget(n: int) -> int:
    return check_width(n << (n - 1), "subsequence budget")


def captain_denominator(m: int, n: int) -> int:
    return check_width(_budget(m) + _budget(n), "denominator")


def denominator_unsimplified(m: int, n: int) -> int:
    """Sum over both sequences of i * C(len, i), evaluated term by term."""
    if m < 1 or n < 1:
        raise ValueError("lengths must be positive")
    total = sum(i * math.comb(m, i) for i in range(m + 1))
    total += sum(i * math.comb(n, i) for i in range(n + 1))
    return check_width(total, "denominator")


def captain_similarity(
    a: Sequence[Hashable], b: Sequence[Hashable], max_length: int = DEFAULT_MAX_LENGTH
) -> float:
    """2 * <mu, lambda> / (m 2^(m-1) + n 2^(n-1)), exact integers up to one division."""
    _check(a, b, max_length)
    profile = common_subsequence_profile(a, b, max_length=max_length)
    subsequence_budget(len(a), max_length)
    subsequence_budget(len(b), max_length)
    return 2 * profile.dot / captain_denominator(len(a), len(b))


def _presence_vectors(a, b) -> tuple[np.ndarray, np.ndarray]:
    alphabet = {s: i for i, s in enumerate(dict.fromkeys([*a, *b]))}
    va = np.zeros(len(alphabet), dtype=np.int64)
    vb = np.zeros(len(alphabet), dtype=np.int64)
    va[[alphabet[s] for s in a]] = 1
    vb[[alphabet[s] for s in b]] = 1
    return va, vb


def cosine_similarity(
    a: Sequence[Hashable], b: Sequence[Hashable], max_length: int = DEFAULT_MAX_LENGTH
) -> float:
    """Cosine of binary presence vectors (order and multiplicity ignored).

    Symbols absent from both inputs contribute zero coordinates, so the result
    is the same over any larger alphabet.
    """
    _check(a, b, max_length)
    va, vb = _presence_vectors(a, b)
    return int(va @ vb) / math.sqrt(int(va.sum()) * int(vb.sum()))


def euclidean_similarity(
    a: Sequence[Hashable], b: Sequence[Hashable], max_length: int = DEFAULT_MAX_LENGTH
) -> float:
    """1 / (1 + d) for the Euclidean distance d of binary presence vectors."""
    _check(a, b, max_length)
    va, vb = _presence_vectors(a, b)
    return 1.0 / (1.0 + math.sqrt(int(((va - vb) ** 2).sum())))


def lcs_similarity(
    a: Sequence[Hashable], b: Sequence[Hashable], max_length: int = DEFAULT_MAX_LENGTH
) -> float:
    """Longest common subsequence length over the longer input length."""
    _check(a, b, max_length)
    ea, eb = encode_pair(a, b)
    return _kernels.lcs_length(ea, eb) / max(len(a), len(b))


MEASURES = {
    MeasureKind.CAPTAIN: captain_similarity,
    MeasureKind.COSINE: cosine_similarity,
    MeasureKind.EUCLIDEAN: euclidean_similarity,
    MeasureKind.LCS: lcs_similarity,
}


def similarity(a, b, measure: MeasureKind | str = MeasureKind.CAPTAIN, **kwargs) -> float:
    return MEASURES[MeasureKind.parse(measure)](a, b, **kwargs)
