"""Group scoring and attribution against a baseline database."""

from __future__ import annotations

import math
from collections.abc import Hashable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels
from .css import common_subsequence_profile
from .errors import BadWindow, EmptyBaseline, EmptyGroup, LengthCap
from .model import DEFAULT_MAX_LENGTH, AttributionResult, BaselineDatabase, TtpSequence
from .similarity import MeasureKind, captain_denominator

# <mu, lambda> <= L * 2**(L-1) stays below 2**63 up to L = 58
_INT64_DOT_LENGTH = 58


class PackedSequences:
    """Reference sequences encoded once into a flat int64 buffer.

    Scores for one query against every packed sequence come back in packing
    order; each value is bit-identical to the pairwise function in
    ``similarity``.
    """

    def __init__(self, sequences: Iterable[Sequence[Hashable]], max_length: int = DEFAULT_MAX_LENGTH):
        self.sequences = [tuple(s) for s in sequences]
        self.max_length = max_length
        self.vocab: dict[Hashable, int] = {}
        for s in self.sequences:
            if not s:
                raise ValueError("cannot pack an empty sequence")
            if len(s) > max_length:
                raise LengthCap(f"sequence length {len(s)} exceeds the maximum {max_length}")
            for sym in s:
                self.vocab.setdefault(sym, len(self.vocab))
        self.lengths = np.array([len(s) for s in self.sequences], dtype=np.int64)
        self.offsets = np.zeros(len(self.sequences) + 1, dtype=np.int64)
        np.cumsum(self.lengths, out=self.offsets[1:])
        self.flat = np.array(
            [self.vocab[sym] for s in self.sequences for sym in s], dtype=np.int64
        )
        self.presence = np.zeros((len(self.sequences), len(self.vocab)), dtype=np.int64)
        for k, s in enumerate(self.sequences):
            self.presence[k, [self.vocab[sym] for sym in s]] = 1
        self.set_sizes = self.presence.sum(axis=1)

    def __len__(self):
        return len(self.sequences)

    def encode(self, query: Sequence[Hashable]) -> np.ndarray:
        extra: dict[Hashable, int] = {}
        codes = []
        for sym in query:
            code = self.vocab.get(sym)
            if code is None:
                code = extra.setdefault(sym, len(self.vocab) + len(extra))
            codes.append(code)
        return np.array(codes, dtype=np.int64)

    def scores(self, query: Sequence[Hashable], measure: MeasureKind | str) -> list[float]:
        measure = MeasureKind.parse(measure)
        query = tuple(query)
        if not query:
            raise ValueError("query sequence is empty")
        if len(query) > self.max_length:
            raise LengthCap(f"sequence length {len(query)} exceeds the maximum {self.max_length}")
        codes = self.encode(query)
        m = len(query)
        if measure is MeasureKind.CAPTAIN:
            return self._captain(query, codes)
        if measure is MeasureKind.LCS:
            lcs = _kernels.lcs_batch(codes, self.flat, self.offsets)
            return [int(v) / max(m, int(n)) for v, n in zip(lcs, self.lengths)]
        qvec = np.zeros(self.presence.shape[1], dtype=np.int64)
        known = codes[codes < len(self.vocab)]
        qvec[known] = 1
        q_size = len(set(codes.tolist()))
        inter = self.presence @ qvec
        if measure is MeasureKind.COSINE:
            return [int(i) / math.sqrt(q_size * int(s)) for i, s in zip(inter, self.set_sizes)]
        dist2 = q_size + self.set_sizes - 2 * inter
        return [1.0 / (1.0 + math.sqrt(int(d))) for d in dist2]

    def _captain(self, query, codes) -> list[float]:
        m = len(query)
        if m <= _kernels.INT64_SAFE_LENGTH:
            counts = _kernels.css_counts_batch(codes, self.flat, self.offsets)
            if m <= _INT64_DOT_LENGTH:
                dots = (counts @ np.arange(counts.shape[1], dtype=np.int64)).tolist()
            else:
                dots = [sum(l * int(c) for l, c in enumerate(row)) for row in counts]
        else:
            dots = [
                common_subsequence_profile(query, s, max_length=self.max_length).dot
                for s in self.sequences
            ]
        return [2 * d / captain_denominator(m, int(n)) for d, n in zip(dots, self.lengths)]


def _mean(values: list[float]) -> float:
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def attribution_score(
    query: Sequence[Hashable],
    group_sequences: Sequence[Sequence[Hashable]],
    measure: MeasureKind | str = MeasureKind.CAPTAIN,
    max_length: int = DEFAULT_MAX_LENGTH,
) -> float:
    """Mean similarity of ``query`` to every sequence of one group."""
    if not len(group_sequences):
        raise EmptyGroup("group has no sequences")
    return _mean(PackedSequences(group_sequences, max_length).scores(query, measure))


class Attributor:
    """Scores queries against a fixed baseline.

    The baseline is packed once; summation per group follows the baseline's
    insertion order, so repeated runs give bit-identical scores.
    """

    def __init__(self, baseline: BaselineDatabase, max_length: int = DEFAULT_MAX_LENGTH):
        if baseline.G < 1:
            raise EmptyBaseline("baseline has no groups")
        self.baseline = baseline
        self._names = baseline.names
        self._slices = []
        seqs = []
        for name in self._names:
            group = baseline.sequences(name)
            self._slices.append((len(seqs), len(seqs) + len(group)))
            seqs.extend(group)
        self._packed = PackedSequences(seqs, max_length)

    def group_scores(self, query, measure=MeasureKind.CAPTAIN) -> dict[str, float]:
        # plain strings would never compare equal to the baseline's TechniqueIds
        if not isinstance(query, TtpSequence):
            query = TtpSequence(tuple(query), max_length=self._packed.max_length)
        pair = self._packed.scores(query, measure)
        return {name: _mean(pair[lo:hi]) for name, (lo, hi) in zip(self._names, self._slices)}

    def attribute(self, query, measure=MeasureKind.CAPTAIN) -> AttributionResult:
        scores = self.group_scores(query, measure)
        ranking = tuple(sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])))
        tie = len(ranking) > 1 and ranking[0][1] == ranking[1][1]
        return AttributionResult(ranking, tie)

    def attribute_many(self, queries, measure=MeasureKind.CAPTAIN, workers: int | None = None):
        """Attribute several queries; results keep the input order."""
        queries = list(queries)
        if not workers or workers <= 1:
            return [self.attribute(q, measure) for q in queries]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda q: self.attribute(q, measure), queries))


def attribute(
    query, baseline: BaselineDatabase, measure: MeasureKind | str = MeasureKind.CAPTAIN
) -> AttributionResult:
    return Attributor(baseline).attribute(query, measure)


def top_n(result: AttributionResult, n: int) -> list[str]:
    if not 1 <= n <= len(result.ranking):
        raise BadWindow(f"top-n window {n} outside 1..{len(result.ranking)}")
    return [name for name, _ in result.ranking[:n]]
