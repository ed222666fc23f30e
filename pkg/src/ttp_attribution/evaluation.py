"""Evaluation harness: macro metrics, top-n curve, group correlation, synthetic data."""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .attribution import Attributor, PackedSequences
from .errors import BadSpec, UnknownLabel
from .model import BaselineDatabase, Campaign, TechniqueId, TtpObservation
from .sequencer import PhaseMap, load_phase_map, sequence_ttps
from .similarity import MeasureKind


@dataclass(frozen=True)
class GroupMetrics:
    precision: float
    recall: float
    f1: float
    support: int


def classification_metrics(y_true: Sequence[str], y_pred: Sequence[str]):
    """Accuracy plus per-label and macro precision/recall/F1.

    Labels are the union of true and predicted labels; an undefined ratio
    counts as 0. Macro values are unweighted means over labels.
    """
    labels = sorted(set(y_true) | set(y_pred))
    per: dict[str, GroupMetrics] = {}
    for lab in labels:
        tp = sum(t == lab and p == lab for t, p in zip(y_true, y_pred))
        n_pred = sum(p == lab for p in y_pred)
        n_true = sum(t == lab for t in y_true)
        prec = tp / n_pred if n_pred else 0.0
        rec = tp / n_true if n_true else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        per[lab] = GroupMetrics(prec, rec, f1, n_true)
    acc = sum(t == p for t, p in zip(y_true, y_pred)) / len(y_true)
    k = len(labels)
    macro = (
        sum(m.precision for m in per.values()) / k,
        sum(m.recall for m in per.values()) / k,
        sum(m.f1 for m in per.values()) / k,
    )
    return acc, macro, per


@dataclass
class EvaluationReport:
    measure: MeasureKind
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    per_group: dict[str, GroupMetrics]
    topn_precision: dict[int, float]
    n_eval: int = 0

    def to_dict(self) -> dict:
        return {
            "measure": self.measure.value,
            "n_eval": self.n_eval,
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "per_group": {
                g: {"precision": m.precision, "recall": m.recall, "f1": m.f1, "support": m.support}
                for g, m in self.per_group.items()
            },
            "topn_precision": {str(n): v for n, v in self.topn_precision.items()},
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> EvaluationReport:
        return cls(
            measure=MeasureKind.parse(doc["measure"]),
            accuracy=doc["accuracy"],
            macro_precision=doc["macro_precision"],
            macro_recall=doc["macro_recall"],
            macro_f1=doc["macro_f1"],
            per_group={g: GroupMetrics(**m) for g, m in doc["per_group"].items()},
            topn_precision={int(n): v for n, v in doc["topn_precision"].items()},
            n_eval=doc.get("n_eval", 0),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        lines = [
            f"measure   {self.measure.value}",
            f"samples   {self.n_eval}",
            f"accuracy  {self.accuracy:.4f}",
            f"precision {self.macro_precision:.4f}",
            f"recall    {self.macro_recall:.4f}",
            f"f1        {self.macro_f1:.4f}",
            "",
        ]
        width = max([len("group")] + [len(g) for g in self.per_group])
        lines.append(f"{'group':<{width}}  precision  recall     f1  support")
        for g, m in self.per_group.items():
            lines.append(
                f"{g:<{width}}  {m.precision:9.4f}  {m.recall:6.4f}  {m.f1:6.4f}  {m.support:7d}"
            )
        lines += ["", "top-n  precision"]
        lines += [f"{n:5d}  {v:9.4f}" for n, v in self.topn_precision.items()]
        return "\n".join(lines)


def evaluate(
    baseline: BaselineDatabase,
    eval_set: Sequence[Campaign],
    measure: MeasureKind | str = MeasureKind.CAPTAIN,
    n_max: int | None = None,
    *,
    workers: int | None = None,
) -> EvaluationReport:
    """Attribute every labelled campaign and score the predictions.

    Top-n precision treats a campaign as correct when its true group is inside
    the n-best window (the prediction then counts as the true group) and
    otherwise keeps the top-1 guess; it is the macro precision of those relaxed
    predictions for n = 1..n_max.
    """
    measure = MeasureKind.parse(measure)
    if not eval_set:
        raise ValueError("evaluation set is empty")
    for c in eval_set:
        if c.group_label not in baseline:
            raise UnknownLabel(f"campaign {c.id}: label {c.group_label!r} not in baseline")
    n_max = baseline.G if n_max is None else n_max
    if not 1 <= n_max <= baseline.G:
        raise ValueError(f"n_max must lie in 1..{baseline.G}")

    results = Attributor(baseline).attribute_many(
        [c.sequence for c in eval_set], measure, workers=workers
    )
    y_true = [c.group_label for c in eval_set]
    rankings = [[g for g, _ in r.ranking] for r in results]
    y_pred = [r[0] for r in rankings]
    acc, (mp, mr, mf), per = classification_metrics(y_true, y_pred)

    topn = {}
    for n in range(1, n_max + 1):
        relaxed = [t if t in r[:n] else r[0] for t, r in zip(y_true, rankings)]
        topn[n] = classification_metrics(y_true, relaxed)[1][0]
    return EvaluationReport(measure, acc, mp, mr, mf, per, topn, n_eval=len(eval_set))


@dataclass
class CorrelationMatrix:
    groups: list[str]
    cells: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["group", *self.groups])
        for g, row in zip(self.groups, self.cells):
            w.writerow([g, *(repr(float(v)) for v in row)])
        return buf.getvalue()

    def intra_mean(self) -> float:
        return float(np.mean(np.diag(self.cells)))

    def inter_mean(self) -> float:
        g = len(self.groups)
        if g < 2:
            return float("nan")
        return float(self.cells[~np.eye(g, dtype=bool)].mean())


def correlation_matrix(
    baseline: BaselineDatabase, *, include_self: bool = False
) -> CorrelationMatrix:
    """Mean pairwise similarity within and between groups.

    Off-diagonal cells average every cross-group pair. Diagonal cells average
    the unordered pairs of distinct sequences of the group, or include each
    sequence paired with itself when ``include_self`` is set (always the case
    for a single-sequence group).
    """
    names = baseline.names
    seqs, spans = [], []
    for g in names:
        start = len(seqs)
        seqs.extend(baseline.sequences(g))
        spans.append((start, len(seqs)))
    packed = PackedSequences(seqs)
    sim = np.array([packed.scores(s, MeasureKind.CAPTAIN) for s in seqs])

    G = len(names)
    cells = np.zeros((G, G))
    for a, (lo_a, hi_a) in enumerate(spans):
        for b in range(a, G):
            lo_b, hi_b = spans[b]
            if a == b:
                size = hi_a - lo_a
                k = 0 if include_self or size == 1 else 1
                block = sim[lo_a:hi_a, lo_a:hi_a][np.triu_indices(size, k)]
            else:
                block = sim[lo_a:hi_a, lo_b:hi_b].ravel()
            cells[a, b] = cells[b, a] = float(np.mean(block))
    return CorrelationMatrix(list(names), cells)


# --------------------------------------------------------------------------
# synthetic campaigns


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for synthetic labelled campaigns.

    Groups run a few playbooks each: ordered technique chains drawn without
    replacement from the group's preference weights. Playbook lengths are a
    stratified sample of the length distribution (one quantile slot per
    playbook, shuffled), which keeps the overall mean close to
    ``length_mean``. Campaigns cycle through their group's playbooks; each
    replay swaps every step, with probability ``mutation``, for a fresh draw
    from the same weights and, with probability ``jitter``, drops or inserts
    one step (equally likely).

    Preference weights mix a shared popularity profile with a group-specific
    core of ``core_size`` techniques; ``separation`` is the core's share.
    Explicit ``preferences`` (group -> technique -> weight) replace the
    generated ones.
    """

    n_groups: int = 11
    per_group: int = 50
    length_mean: float = 12.22
    length_std: float = 6.33
    length_min: int = 4
    length_max: int = 34
    separation: float = 0.2
    core_size: int = 40
    playbooks: int = 3
    mutation: float = 0.5
    jitter: float = 0.3
    preferences: Mapping[str, Mapping[str, float]] | None = field(default=None, hash=False)

    def validate(self):
        if self.n_groups < 1 or self.per_group < 1 or self.playbooks < 1:
            raise BadSpec("need at least one group, campaign and playbook per group")
        if not 1 <= self.length_min <= self.length_max:
            raise BadSpec("length bounds must satisfy 1 <= min <= max")
        # a degenerate range fixes every length, so the mean is moot
        fixed = self.length_min == self.length_max
        if not fixed and not self.length_min <= self.length_mean <= self.length_max:
            raise BadSpec("length_mean must lie within [length_min, length_max]")
        if self.length_std <= 0:
            raise BadSpec("length_std must be positive")
        if not 0.0 <= self.separation <= 1.0:
            raise BadSpec("separation must lie in [0, 1]")
        if not 0.0 <= self.mutation <= 1.0:
            raise BadSpec("mutation must lie in [0, 1]")
        if not 0.0 <= self.jitter <= 1.0:
            raise BadSpec("jitter must lie in [0, 1]")
        if self.core_size < 1:
            raise BadSpec("core_size must be positive")
        if self.preferences is not None and len(self.preferences) != self.n_groups:
            raise BadSpec("preferences must name exactly n_groups groups")


def length_distribution(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray]:
    """Integer lengths and probabilities: a discretised normal on [min, max].

    The location is shifted by bisection so that the truncated mean equals
    ``length_mean``; truncation at the short end would otherwise bias it up.
    """
    support = np.arange(spec.length_min, spec.length_max + 1)
    if len(support) == 1:
        return support, np.ones(1)

    def pmf(loc):
        w = np.exp(-0.5 * ((support - loc) / spec.length_std) ** 2)
        return w / w.sum()

    lo, hi = spec.length_min - 10 * spec.length_std, spec.length_max + 10 * spec.length_std
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if pmf(mid) @ support < spec.length_mean:
            lo = mid
        else:
            hi = mid
    return support, pmf(0.5 * (lo + hi))


def _universe(phase_map: PhaseMap) -> list[TechniqueId]:
    return sorted(set(phase_map.catalog) | set(phase_map.multi_tactic))


def _preference_weights(spec, name, universe, index, popularity, rng) -> np.ndarray:
    if spec.preferences is None:
        core = rng.choice(len(universe), size=min(spec.core_size, len(universe)), replace=False)
        w = (1.0 - spec.separation) * popularity
        w[core] += spec.separation * rng.dirichlet(np.ones(len(core)))
        return w / w.sum()
    w = np.zeros(len(universe))
    for tech, weight in spec.preferences[name].items():
        tid = TechniqueId(tech)
        if tid not in index:
            raise BadSpec(f"preference for uncatalogued technique {tech}")
        w[index[tid]] = weight
    if (w < 0).any() or w.sum() <= 0:
        raise BadSpec(f"group {name}: weights must be non-negative with a positive sum")
    if np.count_nonzero(w) < spec.length_max + 1:
        raise BadSpec(f"group {name}: needs more weighted techniques than length_max")
    return w / w.sum()


def synth_campaigns(
    spec: SynthSpec | None = None, seed: int = 0, phase_map: PhaseMap | None = None
) -> list[Campaign]:
    """Deterministic synthetic labelled campaigns for benchmarking."""
    spec = spec or SynthSpec()
    spec.validate()
    phase_map = phase_map or load_phase_map()
    universe = _universe(phase_map)
    if spec.length_max >= len(universe):
        raise BadSpec("length_max must be below the number of catalogued techniques")
    index = {t: i for i, t in enumerate(universe)}
    lengths, probs = length_distribution(spec)
    rng = np.random.default_rng(seed)
    # shared Zipf-like popularity: every group leans on the same common techniques
    popularity = 1.0 / (1.0 + rng.permutation(len(universe)))
    popularity /= popularity.sum()

    if spec.preferences is not None:
        names = list(spec.preferences)
    else:
        names = [f"group-{i + 1:02d}" for i in range(spec.n_groups)]

    # stratified playbook lengths: one draw per quantile slot, then shuffled
    n_books = len(names) * spec.playbooks
    cdf = np.cumsum(probs)
    u = (np.arange(n_books) + rng.random(n_books)) / n_books
    book_lengths = lengths[np.minimum(np.searchsorted(cdf, u), len(lengths) - 1)]
    book_lengths = rng.permutation(book_lengths).tolist()

    campaigns = []
    for g, name in enumerate(names):
        w = _preference_weights(spec, name, universe, index, popularity, rng)
        books = [
            rng.choice(len(universe), size=book_lengths.pop(), replace=False, p=w).tolist()
            for _ in range(spec.playbooks)
        ]
        for k in range(spec.per_group):
            steps = list(books[k % len(books)])
            for i in np.flatnonzero(rng.random(len(steps)) < spec.mutation).tolist():
                steps[i] = _fresh(steps, w, rng)
            if rng.random() < spec.jitter:
                if rng.random() < 0.5:
                    if len(steps) > spec.length_min:
                        del steps[int(rng.integers(len(steps)))]
                elif len(steps) < spec.length_max:
                    steps.insert(int(rng.integers(len(steps) + 1)), _fresh(steps, w, rng))
            obs = [TtpObservation(universe[t], None, i) for i, t in enumerate(steps)]
            seq = sequence_ttps(obs, phase_map, max_length=max(spec.length_max, 64))
            campaigns.append(
                Campaign(id=f"syn-{g + 1:02d}-{k + 1:03d}", sequence=seq, group_label=name)
            )
    return campaigns


def _fresh(steps: list[int], w: np.ndarray, rng) -> int:
    p = w.copy()
    p[steps] = 0.0
    return int(rng.choice(len(p), p=p / p.sum()))
