import itertools
import json
import math
from fractions import Fraction
from pathlib import Path

import pytest

from ttp_attribution.model import BaselineDatabase, TtpSequence

DATA = Path(__file__).parent / "data"

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


# --- independent oracles (no package code) -------------------------------


def subsequence_set(seq) -> set[tuple]:
    out = set()
    for k in range(1, len(seq) + 1):
        out.update(itertools.combinations(tuple(seq), k))
    return out


def oracle_profile(a, b) -> dict[int, int]:
    tally: dict[int, int] = {}
    for s in subsequence_set(a) & subsequence_set(b):
        tally[len(s)] = tally.get(len(s), 0) + 1
    return dict(sorted(tally.items()))


def oracle_captain(a, b) -> Fraction:
    num = 2 * sum(l * c for l, c in oracle_profile(a, b).items())
    return Fraction(num, len(a) * 2 ** (len(a) - 1) + len(b) * 2 ** (len(b) - 1))


def oracle_lcs(a, b) -> int:
    best = 0
    for s in subsequence_set(a):
        if len(s) > best and s in subsequence_set(b):
            best = len(s)
    return best


# --- fixtures -------------------------------------------------------------

LETTERS = {c: f"T{1001 + i}" for i, c in enumerate("ABCDEFGHIJ")}


def tech(letters: str) -> TtpSequence:
    """``tech("ABC")`` -> sequence of placeholder technique IDs."""
    return TtpSequence.of(*(LETTERS[c] for c in letters))


@pytest.fixture(scope="session")
def toy():
    fixture = json.loads((DATA / "toy_fixture.json").read_text())
    expected = json.loads((DATA / "toy_expected.json").read_text())
    baseline = BaselineDatabase(
        {g: [TtpSequence(tuple(s)) for s in seqs] for g, seqs in fixture["baseline"].items()}
    )
    return fixture, expected, baseline


def comb_sum(n: int) -> int:
    return sum(i * math.comb(n, i) for i in range(n + 1))
