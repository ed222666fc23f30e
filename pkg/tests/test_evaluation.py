import csv
import io

import numpy as np
import pytest
from sklearn.metrics import precision_recall_fscore_support

from conftest import tech
from ttp_attribution.errors import BadSpec, UnknownLabel
from ttp_attribution.evaluation import (
    EvaluationReport,
    SynthSpec,
    classification_metrics,
    correlation_matrix,
    evaluate,
    length_distribution,
    synth_campaigns,
)
from ttp_attribution.model import BaselineDatabase, Campaign, TtpSequence


def test_toy_metrics_match_oracle(toy):
    fixture, expected, baseline = toy
    eval_set = [
        Campaign(f"e{i}", TtpSequence(tuple(q)), label) for i, (label, q) in enumerate(fixture["eval"])
    ]
    r = evaluate(baseline, eval_set, "captain")
    assert r.accuracy == pytest.approx(expected["accuracy"], abs=1e-12)
    assert r.macro_precision == pytest.approx(expected["macro_precision"], abs=1e-12)
    assert r.macro_recall == pytest.approx(expected["macro_recall"], abs=1e-12)
    assert r.macro_f1 == pytest.approx(expected["macro_f1"], abs=1e-12)
    assert {str(n): v for n, v in r.topn_precision.items()} == pytest.approx(
        expected["topn_precision"], abs=1e-12
    )
    # macro = unweighted mean of per-group values
    assert r.macro_precision == pytest.approx(np.mean([m.precision for m in r.per_group.values()]))


def test_toy_correlation_matches_oracle(toy):
    _, expected, baseline = toy
    cm = correlation_matrix(baseline)
    assert cm.cells == pytest.approx(np.array(expected["correlation"]), abs=1e-12)
    assert np.array_equal(cm.cells, cm.cells.T)


def test_self_separable_eval_is_perfect():
    db = BaselineDatabase({"a": [tech("ABC")], "b": [tech("DEF")], "c": [tech("GHI")]})
    ev = [Campaign(str(i), s, g) for i, (g, seqs) in enumerate(db.items()) for s in seqs]
    r = evaluate(db, ev, "captain")
    assert (r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1) == (1.0, 1.0, 1.0, 1.0)
    assert r.topn_precision == {1: 1.0, 2: 1.0, 3: 1.0}


def test_unknown_label_and_bad_window():
    db = BaselineDatabase({"a": [tech("AB")]})
    with pytest.raises(UnknownLabel):
        evaluate(db, [Campaign("x", tech("A"), "zzz")])
    with pytest.raises(ValueError):
        evaluate(db, [Campaign("x", tech("A"), "a")], n_max=2)


@pytest.mark.parametrize("seed", range(5))
def test_metrics_match_sklearn(seed):
    rng = np.random.default_rng(seed)
    labels = ["a", "b", "c", "d"]
    y_true = rng.choice(labels, 40).tolist()
    y_pred = rng.choice(labels[:3], 40).tolist()
    acc, (p, r, f), _ = classification_metrics(y_true, y_pred)
    union = sorted(set(y_true) | set(y_pred))
    want = precision_recall_fscore_support(y_true, y_pred, labels=union, average="macro", zero_division=0)
    assert (p, r, f) == pytest.approx(want[:3], abs=1e-12)
    assert acc == pytest.approx(np.mean(np.array(y_true) == np.array(y_pred)))


def test_report_serialisation_roundtrip(toy):
    fixture, _, baseline = toy
    ev = [Campaign(str(i), TtpSequence(tuple(q)), g) for i, (g, q) in enumerate(fixture["eval"])]
    r = evaluate(baseline, ev, "lcs", 2)
    assert EvaluationReport.from_dict(r.to_dict()) == r
    assert "precision" in r.to_table() and list(r.topn_precision) == [1, 2]


def test_correlation_trivial_cells():
    db = BaselineDatabase({"a": [tech("ABC"), tech("ABC")], "b": [tech("DE"), tech("ED")]})
    cm = correlation_matrix(db)
    assert cm.cells[0, 0] == 1.0 and cm.cells[0, 1] == 0.0
    rows = list(csv.reader(io.StringIO(cm.to_csv())))
    assert rows[0] == ["group", "a", "b"] and float(rows[1][1]) == 1.0


def test_correlation_self_pairs_toggle():
    db = BaselineDatabase({"a": [tech("AB"), tech("CD")], "b": [tech("E")]})
    without = correlation_matrix(db).cells[0, 0]
    with_self = correlation_matrix(db, include_self=True).cells[0, 0]
    assert without == 0.0 and with_self == pytest.approx(2 / 3)
    # a single-sequence group always pairs with itself
    assert correlation_matrix(db).cells[1, 1] == 1.0


def test_synth_determinism_and_shape():
    spec = SynthSpec(n_groups=3, per_group=5)
    a, b = synth_campaigns(spec, seed=5), synth_campaigns(spec, seed=5)
    assert a == b and len(a) == 15
    assert synth_campaigns(spec, seed=6) != a


def test_synth_fixed_length():
    cs = synth_campaigns(SynthSpec(n_groups=2, per_group=10, length_min=4, length_max=4), seed=1)
    assert {len(c.sequence) for c in cs} == {4}


def test_synth_default_length_mean():
    cs = synth_campaigns(seed=0)
    assert len(cs) == 550
    lengths = [len(c.sequence) for c in cs]
    assert abs(np.mean(lengths) - 12.22) <= 1.0
    assert 4 <= min(lengths) and max(lengths) <= 34


def test_length_distribution_mean_is_exact():
    support, probs = length_distribution(SynthSpec())
    assert probs.sum() == pytest.approx(1.0)
    assert support @ probs == pytest.approx(12.22, abs=1e-9)


def test_synth_explicit_preferences():
    prefs = {
        "x": {f"T{t}": 1.0 for t in range(1589, 1599)} | {"T1583": 1.0, "T1566": 1.0},
        "y": {f"T{t}": 1.0 for t in range(1485, 1500) if t not in (1487, 1488, 1492, 1493, 1494, 1497)},
    }
    spec = SynthSpec(n_groups=2, per_group=4, length_min=3, length_max=5, length_mean=4, preferences=prefs)
    cs = synth_campaigns(spec, seed=0)
    for c in cs:
        assert {t.value for t in c.sequence} <= set(prefs[c.group_label])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"n_groups": 0},
        {"length_min": 5, "length_max": 4},
        {"length_mean": 40.0},
        {"length_std": 0.0},
        {"separation": 1.5},
        {"mutation": -0.1},
        {"jitter": 2.0},
        {"core_size": 0},
        {"preferences": {"only": {"T1595": 1.0}}},
    ],
)
def test_bad_specs(kwargs):
    with pytest.raises(BadSpec):
        synth_campaigns(SynthSpec(**kwargs), seed=0)
