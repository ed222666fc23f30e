"""Kill-chain sequencing of observed techniques."""

from __future__ import annotations

import hashlib
import json
import os
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .errors import ConfigError, EmptyInput, MalformedId, ParseError, UnknownTechnique
from .model import (
    DEFAULT_MAX_LENGTH,
    KillChainPhase,
    Tactic,
    TechniqueId,
    TtpObservation,
    TtpSequence,
)

PHASE_MAP_ENV = "TTP_ATTRIBUTION_PHASE_MAP"
N_PHASES = 18


@dataclass(frozen=True)
class PhaseMap:
    phases: tuple[KillChainPhase, ...]
    tactic_to_phase: Mapping[Tactic, KillChainPhase]
    multi_tactic: Mapping[TechniqueId, tuple[Tactic, ...]]
    technique_overrides: Mapping[TechniqueId, Tactic] = field(default_factory=dict)
    catalog: Mapping[TechniqueId, Tactic] = field(default_factory=dict)

    def allowed_tactics(self, technique: TechniqueId) -> tuple[Tactic, ...] | None:
        """Tactics a technique may serve; ``None`` when it is not catalogued."""
        for key in (technique, technique.parent):
            if key in self.multi_tactic:
                return self.multi_tactic[key]
            if key in self.catalog:
                return (self.catalog[key],)
        return None

    def override_for(self, technique: TechniqueId) -> Tactic | None:
        for key in (technique, technique.parent):
            if key in self.technique_overrides:
                return self.technique_overrides[key]
        return None

    def is_known(self, technique: TechniqueId) -> bool:
        return self.allowed_tactics(technique) is not None

    def to_document(self) -> dict:
        """Plain structure in the configuration-file layout."""
        catalog: dict[str, list[str]] = {t.value: [] for t in Tactic}
        for tech, tactic in sorted(self.catalog.items()):
            catalog[tactic.value].append(tech.value)
        return {
            "version": 1,
            "phases": [p.name for p in self.phases],
            "tactic_phases": {t.value: self.tactic_to_phase[t].name for t in Tactic},
            "multi_tactic": {
                k.value: [t.value for t in v] for k, v in sorted(self.multi_tactic.items())
            },
            "technique_overrides": {
                k.value: v.value for k, v in sorted(self.technique_overrides.items())
            },
            "catalog": {k: v for k, v in catalog.items() if v},
        }

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.to_document(), sort_keys=True, separators=(",", ":"))
        return "sha256:" + hashlib.sha256(blob.encode()).hexdigest()


def _tactic(name, where: str) -> Tactic:
    try:
        return Tactic.parse(name)
    except ParseError:
        raise ConfigError(f"{where}: unknown tactic {name!r}") from None


def _technique(text, where: str) -> TechniqueId:
    try:
        return TechniqueId(str(text))
    except MalformedId:
        raise ConfigError(f"{where}: malformed technique id {text!r}") from None


def _build(doc: Mapping) -> PhaseMap:
    if not isinstance(doc, Mapping):
        raise ConfigError("phase map document must be a mapping")
    for key in ("phases", "tactic_phases", "multi_tactic"):
        if key not in doc:
            raise ConfigError(f"missing key: {key}")

    names = list(doc["phases"] or [])
    if len(names) != N_PHASES or len(set(names)) != N_PHASES:
        raise ConfigError(f"phases: expected {N_PHASES} distinct phase names, got {len(names)}")
    phases = tuple(KillChainPhase(i + 1, str(n)) for i, n in enumerate(names))
    by_name = {p.name: p for p in phases}

    tactic_to_phase: dict[Tactic, KillChainPhase] = {}
    for raw_tactic, phase_name in (doc["tactic_phases"] or {}).items():
        tactic = _tactic(raw_tactic, "tactic_phases")
        if phase_name not in by_name:
            raise ConfigError(f"tactic_phases.{raw_tactic}: unknown phase {phase_name!r}")
        tactic_to_phase[tactic] = by_name[phase_name]
    missing = [t.value for t in Tactic if t not in tactic_to_phase]
    if missing:
        raise ConfigError(f"tactic_phases: missing tactic(s) {', '.join(missing)}")

    multi: dict[TechniqueId, tuple[Tactic, ...]] = {}
    for raw_tech, tactics in (doc["multi_tactic"] or {}).items():
        tech = _technique(raw_tech, "multi_tactic")
        allowed = tuple(_tactic(t, f"multi_tactic.{raw_tech}") for t in tactics or [])
        if len(set(allowed)) < 2:
            raise ConfigError(f"multi_tactic.{raw_tech}: needs at least two distinct tactics")
        multi[tech] = allowed

    catalog: dict[TechniqueId, Tactic] = {}
    for raw_tactic, techs in (doc.get("catalog") or {}).items():
        tactic = _tactic(raw_tactic, "catalog")
        for raw_tech in techs or []:
            tech = _technique(raw_tech, f"catalog.{raw_tactic}")
            if tech in multi:
                raise ConfigError(f"catalog.{raw_tactic}: {tech} is already in multi_tactic")
            if tech in catalog and catalog[tech] is not tactic:
                raise ConfigError(
                    f"catalog: {tech} listed under {catalog[tech].value} and {tactic.value};"
                    " move it to multi_tactic"
                )
            catalog[tech] = tactic

    pm = PhaseMap(phases, tactic_to_phase, multi, {}, catalog)
    overrides: dict[TechniqueId, Tactic] = {}
    for raw_tech, raw_tactic in (doc.get("technique_overrides") or {}).items():
        tech = _technique(raw_tech, "technique_overrides")
        tactic = _tactic(raw_tactic, f"technique_overrides.{raw_tech}")
        allowed = pm.allowed_tactics(tech)
        if allowed is None or tactic not in allowed:
            raise ConfigError(
                f"technique_overrides.{raw_tech}: {tactic.value} is not an allowed tactic"
            )
        overrides[tech] = tactic
    return PhaseMap(phases, tactic_to_phase, multi, overrides, catalog)


def load_phase_map(source: str | os.PathLike | Mapping | None = None) -> PhaseMap:
    """Load and validate a phase map.

    ``source`` may be a path to a YAML document, an already parsed mapping, or
    ``None`` for the default (``$TTP_ATTRIBUTION_PHASE_MAP`` if set, else the
    bundled map).
    """
    if isinstance(source, Mapping):
        return _build(source)
    if source is None:
        source = os.environ.get(PHASE_MAP_ENV) or None
    if source is None:
        text = resources.files("ttp_attribution.data").joinpath("phase_map.yaml").read_text()
    else:
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read phase map {source}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"phase map is not valid YAML: {exc}") from exc
    return _build(doc)


def resolve_phase(obs: TtpObservation, phase_map: PhaseMap) -> KillChainPhase:
    allowed = phase_map.allowed_tactics(obs.technique)
    to_phase = phase_map.tactic_to_phase
    if obs.tactic_hint is not None and (allowed is None or obs.tactic_hint in allowed):
        return to_phase[obs.tactic_hint]
    if allowed is None:
        raise UnknownTechnique(obs.technique)
    override = phase_map.override_for(obs.technique)
    if override is not None:
        return to_phase[override]
    # single-tactic techniques fall out of the same min()
    return min(to_phase[t] for t in allowed)


@dataclass
class SequencingReport:
    """Non-fatal findings collected while sequencing one campaign."""

    unknown: list[TechniqueId] = field(default_factory=list)
    collapsed: list[TechniqueId] = field(default_factory=list)
    ignored_hints: list[TechniqueId] = field(default_factory=list)

    def messages(self) -> list[str]:
        out = [f"unknown technique {t} placed after its predecessor" for t in self.unknown]
        out += [f"duplicate {t} collapsed" for t in self.collapsed]
        out += [f"tactic hint for {t} not allowed; ignored" for t in self.ignored_hints]
        return out


def sequence_ttps(
    observations: Iterable[TtpObservation],
    phase_map: PhaseMap,
    *,
    lenient: bool = False,
    report: SequencingReport | None = None,
    max_length: int = DEFAULT_MAX_LENGTH,
) -> TtpSequence:
    """Order observations along the kill chain.

    Sort key is (phase, source_order, technique id); repeated (technique, phase)
    pairs keep their first occurrence. With ``lenient=True`` an uncatalogued
    technique without a hint inherits the phase of the observation narrated just
    before it instead of raising ``UnknownTechnique``.
    """
    obs = sorted(observations, key=lambda o: (o.source_order, o.technique))
    if not obs:
        raise EmptyInput("no observations to sequence")
    if report is None:
        report = SequencingReport()

    placed = []
    previous = phase_map.phases[0]
    for o in obs:
        allowed = phase_map.allowed_tactics(o.technique)
        if o.tactic_hint is not None and allowed is not None and o.tactic_hint not in allowed:
            report.ignored_hints.append(o.technique)
        try:
            phase = resolve_phase(o, phase_map)
        except UnknownTechnique:
            if not lenient:
                raise
            report.unknown.append(o.technique)
            phase = previous
        previous = phase
        placed.append((phase.order_index, o.source_order, o.technique))

    placed.sort()
    seen = set()
    items = []
    for idx, _, tech in placed:
        if (tech, idx) in seen:
            report.collapsed.append(tech)
            continue
        seen.add((tech, idx))
        items.append(tech)
    return TtpSequence(tuple(items), max_length=max_length)


def observations_from_ids(
    ids: Iterable[str | TechniqueId], hints: Iterable[str | Tactic | None] | None = None
) -> list[TtpObservation]:
    """Wrap a listing of technique IDs (and optional aligned tactic hints)."""
    ids = list(ids)
    hints = list(hints) if hints is not None else [None] * len(ids)
    if len(hints) != len(ids):
        raise ValueError(f"{len(hints)} tactic hints for {len(ids)} techniques")
    out = []
    for i, (tech, hint) in enumerate(zip(ids, hints)):
        if not isinstance(tech, TechniqueId):
            tech = TechniqueId(str(tech).strip())
        if hint is not None and not isinstance(hint, Tactic):
            hint = Tactic.parse(hint) if str(hint).strip() else None
        out.append(TtpObservation(tech, hint, i))
    return out
