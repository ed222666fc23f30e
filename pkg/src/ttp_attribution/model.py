"""Domain types shared across the package."""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import total_ordering

from .errors import EmptyGroup, LengthCap, MalformedId, ParseError

DEFAULT_MAX_LENGTH = 64

_TECHNIQUE_RE = re.compile(r"^T[0-9]{4}(\.[0-9]{3})?$")


@total_ordering
@dataclass(frozen=True, eq=True)
class TechniqueId:
    """An ATT&CK technique or sub-technique identifier such as ``T1055.001``."""

    value: str

    def __post_init__(self):
        if not isinstance(self.value, str) or not _TECHNIQUE_RE.match(self.value):
            raise MalformedId(f"malformed technique id: {self.value!r}")

    def __lt__(self, other):
        if not isinstance(other, TechniqueId):
            return NotImplemented
        return self.value < other.value

    def __str__(self):
        return self.value

    @property
    def parent(self) -> TechniqueId:
        """The top-level technique (itself when not a sub-technique)."""
        return TechniqueId(self.value[:5])

    @property
    def is_subtechnique(self) -> bool:
        return "." in self.value


def parse_technique_id(text: str) -> TechniqueId:
    return TechniqueId(text)


class Tactic(Enum):
    RECONNAISSANCE = "Reconnaissance"
    RESOURCE_DEVELOPMENT = "Resource Development"
    INITIAL_ACCESS = "Initial Access"
    EXECUTION = "Execution"
    PERSISTENCE = "Persistence"
    PRIVILEGE_ESCALATION = "Privilege Escalation"
    DEFENSE_EVASION = "Defense Evasion"
    CREDENTIAL_ACCESS = "Credential Access"
    DISCOVERY = "Discovery"
    LATERAL_MOVEMENT = "Lateral Movement"
    COLLECTION = "Collection"
    COMMAND_AND_CONTROL = "Command and Control"
    EXFILTRATION = "Exfiltration"
    IMPACT = "Impact"

    @classmethod
    def parse(cls, name: str) -> Tactic:
        """Parse a tactic name leniently (case, ``&``, hyphens and underscores)."""
        if isinstance(name, Tactic):
            return name
        key = re.sub(r"[\s_\-]+", " ", str(name).replace("&", " and ")).strip().lower()
        for tactic in cls:
            if tactic.value.lower() == key:
                return tactic
        raise ParseError(f"unknown tactic: {name!r}")

    def __str__(self):
        return self.value


@dataclass(frozen=True, order=True)
class KillChainPhase:
    order_index: int
    name: str = field(compare=False)

    def __post_init__(self):
        if not 1 <= self.order_index <= 18:
            raise ValueError(f"phase order_index out of range: {self.order_index}")


@dataclass(frozen=True)
class TtpObservation:
    technique: TechniqueId
    tactic_hint: Tactic | None = None
    source_order: int = 0

    def __post_init__(self):
        if self.source_order < 0:
            raise ValueError("source_order must be non-negative")


@dataclass(frozen=True)
class TtpSequence(Sequence):
    """Kill-chain ordered technique IDs for one campaign."""

    items: tuple[TechniqueId, ...]
    max_length: int = field(default=DEFAULT_MAX_LENGTH, compare=False, repr=False)

    def __post_init__(self):
        items = tuple(
            it if isinstance(it, TechniqueId) else TechniqueId(it) for it in self.items
        )
        object.__setattr__(self, "items", items)
        if not items:
            raise ValueError("a TTP sequence needs at least one technique")
        if len(items) > self.max_length:
            raise LengthCap(
                f"sequence length {len(items)} exceeds the maximum {self.max_length}"
            )

    @classmethod
    def of(cls, *ids: str | TechniqueId, max_length: int = DEFAULT_MAX_LENGTH) -> TtpSequence:
        return cls(tuple(ids), max_length=max_length)

    def __getitem__(self, index):
        return self.items[index]

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __hash__(self):
        return hash(self.items)

    def to_list(self) -> list[str]:
        return [t.value for t in self.items]

    def __str__(self):
        return " --> ".join(self.to_list())


@dataclass(frozen=True)
class Campaign:
    id: str
    sequence: TtpSequence
    group_label: str | None = None
    year: str | None = None
    report_name: str | None = None
    report_link: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "group": self.group_label,
            "sequence": self.sequence.to_list(),
            "year": self.year,
            "report_name": self.report_name,
            "report_link": self.report_link,
        }

    @classmethod
    def from_dict(cls, data: Mapping, max_length: int = DEFAULT_MAX_LENGTH) -> Campaign:
        return cls(
            id=str(data["id"]),
            sequence=TtpSequence(tuple(data["sequence"]), max_length=max_length),
            group_label=data.get("group"),
            year=data.get("year"),
            report_name=data.get("report_name"),
            report_link=data.get("report_link"),
        )


class BaselineDatabase:
    """Group name -> list of reference sequences.

    Group order is insertion order, which fixes the summation order used when
    scores are averaged. Counts are always derived from the contents.
    """

    def __init__(self, groups: Mapping[str, Iterable[TtpSequence]], meta: Mapping | None = None):
        self.meta = dict(meta or {})
        built: dict[str, tuple[TtpSequence, ...]] = {}
        for name, seqs in groups.items():
            seqs = tuple(seqs)
            if not seqs:
                raise EmptyGroup(f"group {name!r} has no sequences")
            if not isinstance(name, str) or not name:
                raise ValueError(f"invalid group name: {name!r}")
            built[name] = seqs
        self._groups = built

    @property
    def groups(self) -> Mapping[str, tuple[TtpSequence, ...]]:
        return dict(self._groups)

    @property
    def names(self) -> list[str]:
        return list(self._groups)

    def sequences(self, group: str) -> tuple[TtpSequence, ...]:
        return self._groups[group]

    def group_size(self, group: str) -> int:
        return len(self._groups[group])

    @property
    def G(self) -> int:  # noqa: N802
        return len(self._groups)

    @property
    def N(self) -> int:  # noqa: N802
        return sum(len(s) for s in self._groups.values())

    def items(self):
        return self._groups.items()

    def __contains__(self, group):
        return group in self._groups

    def __len__(self):
        return len(self._groups)

    def __eq__(self, other):
        if not isinstance(other, BaselineDatabase):
            return NotImplemented
        return list(self._groups.items()) == list(other._groups.items())

    def __repr__(self):
        return f"BaselineDatabase(G={self.G}, N={self.N})"

    @classmethod
    def from_campaigns(cls, campaigns: Iterable[Campaign]) -> BaselineDatabase:
        groups: dict[str, list[TtpSequence]] = {}
        for c in campaigns:
            if not c.group_label:
                raise ValueError(f"campaign {c.id} has no group label")
            groups.setdefault(c.group_label, []).append(c.sequence)
        return cls(groups)


@dataclass(frozen=True)
class AttributionResult:
    ranking: tuple[tuple[str, float], ...]
    tie: bool = False

    def __post_init__(self):
        scores = [s for _, s in self.ranking]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("ranking scores must be non-increasing")

    @property
    def attributed(self) -> str:
        return self.ranking[0][0]

    @property
    def scores(self) -> dict[str, float]:
        return dict(self.ranking)
