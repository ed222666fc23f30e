import pytest
from hypothesis import given
from hypothesis import strategies as st

from ttp_attribution.errors import EmptyGroup, LengthCap, MalformedId, ParseError
from ttp_attribution.model import (
    AttributionResult,
    BaselineDatabase,
    Campaign,
    KillChainPhase,
    Tactic,
    TechniqueId,
    TtpObservation,
    TtpSequence,
    parse_technique_id,
)


def test_parse_examples():
    assert parse_technique_id("T1595") == TechniqueId("T1595")
    assert parse_technique_id("T1055.001").value == "T1055.001"
    with pytest.raises(MalformedId):
        parse_technique_id("1595")


@pytest.mark.parametrize("bad", ["", "t1595", "T159", "T15950", "T1055.01", "T1055.0011", " T1595", "T1595 "])
def test_malformed_ids(bad):
    with pytest.raises(MalformedId):
        TechniqueId(bad)


ids = st.from_regex(r"\AT[0-9]{4}(\.[0-9]{3})?\Z")


@given(ids)
def test_parse_serialize_identity(text):
    assert str(parse_technique_id(text)) == text


@given(ids, ids)
def test_ordering_is_lexicographic(a, b):
    assert (TechniqueId(a) < TechniqueId(b)) == (a < b)


def test_parent_and_subtechnique():
    t = TechniqueId("T1055.012")
    assert t.is_subtechnique and t.parent == TechniqueId("T1055")
    assert not t.parent.is_subtechnique


def test_tactic_parse_is_lenient_about_spelling():
    assert Tactic.parse("command & control") is Tactic.COMMAND_AND_CONTROL
    assert Tactic.parse("lateral-movement") is Tactic.LATERAL_MOVEMENT
    assert Tactic.parse("PRIVILEGE_ESCALATION") is Tactic.PRIVILEGE_ESCALATION
    assert len(Tactic) == 14
    with pytest.raises(ParseError):
        Tactic.parse("Weaponization")


def test_phase_range_and_order():
    assert KillChainPhase(1, "a") < KillChainPhase(2, "b")
    with pytest.raises(ValueError):
        KillChainPhase(19, "x")
    with pytest.raises(ValueError):
        KillChainPhase(0, "x")


def test_observation_rejects_negative_order():
    with pytest.raises(ValueError):
        TtpObservation(TechniqueId("T1595"), None, -1)


def test_sequence_bounds():
    with pytest.raises(ValueError):
        TtpSequence(())
    TtpSequence.of(*["T1595"] * 64)
    with pytest.raises(LengthCap):
        TtpSequence.of(*["T1595"] * 65)
    s = TtpSequence.of("T1595", "T1583")
    assert str(s) == "T1595 --> T1583"
    assert s.to_list() == ["T1595", "T1583"]
    assert s[0] == TechniqueId("T1595") and len(s) == 2


def test_campaign_roundtrip():
    c = Campaign("x", TtpSequence.of("T1595", "T1583"), "g", "2021", "r.pdf", "http://example.org")
    assert Campaign.from_dict(c.to_dict()) == c


def test_baseline_counts_and_empty_group():
    db = BaselineDatabase({"a": [TtpSequence.of("T1595")], "b": [TtpSequence.of("T1583")] * 3})
    assert (db.G, db.N, db.group_size("b")) == (2, 4, 3)
    assert db.names == ["a", "b"] and "a" in db
    with pytest.raises(EmptyGroup):
        BaselineDatabase({"a": []})


def test_baseline_from_campaigns_groups_in_first_seen_order():
    cs = [
        Campaign("1", TtpSequence.of("T1595"), "z"),
        Campaign("2", TtpSequence.of("T1583"), "a"),
        Campaign("3", TtpSequence.of("T1566"), "z"),
    ]
    db = BaselineDatabase.from_campaigns(cs)
    assert db.names == ["z", "a"] and db.group_size("z") == 2


def test_result_requires_sorted_scores():
    r = AttributionResult((("a", 0.5), ("b", 0.2)))
    assert r.attributed == "a" and r.scores == {"a": 0.5, "b": 0.2}
    with pytest.raises(ValueError):
        AttributionResult((("a", 0.1), ("b", 0.2)))
