"""Dataset ingestion, baseline/evaluation splitting and baseline persistence."""

from __future__ import annotations

import csv
import json
import logging
import os
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CorruptFile,
    EmptyDataset,
    GroupTooSmall,
    MalformedId,
    ParseError,
    VersionMismatch,
)
from .model import DEFAULT_MAX_LENGTH, BaselineDatabase, Campaign, TtpSequence
from .sequencer import (
    PhaseMap,
    SequencingReport,
    load_phase_map,
    observations_from_ids,
    sequence_ttps,
)

log = logging.getLogger(__name__)

BASELINE_FORMAT = "ttp-attribution-baseline"
CAMPAIGNS_FORMAT = "ttp-attribution-campaigns"
FORMAT_VERSION = 1

# canonical field -> accepted CSV header spellings (compared case-insensitively)
CSV_COLUMNS = {
    "year": ("year",),
    "ttps": ("ttps", "ttp"),
    "group": ("apt group", "group", "apt_group"),
    "group_id": ("group id", "group_id"),
    "aliases": ("group aliases", "aliases", "group_aliases"),
    "file_name": ("file name", "file_name"),
    "report_link": ("report link", "report_link"),
}


@dataclass(frozen=True)
class DatasetRecord:
    ttps: tuple[str, ...]
    group: str
    year: int | None = None
    group_id: str | None = None
    aliases: str | None = None
    file_name: str | None = None
    report_link: str | None = None

    def __post_init__(self):
        if not self.ttps:
            raise ValueError("record has no TTPs")
        if not self.group or not self.group.strip():
            raise ValueError("record has an empty group")


@dataclass(frozen=True)
class SplitSpec:
    baseline_fraction: float = 0.75
    rng_seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.baseline_fraction < 1.0:
            raise ValueError("baseline_fraction must lie in (0, 1)")


def _blank(value) -> str | None:
    if value is None:
        return None
    value = str(value).strip()
    return value or None


def _split_tokens(raw, separator: str) -> tuple[str, ...]:
    if isinstance(raw, str):
        parts = raw.split(separator)
    else:
        parts = [str(p) for p in raw]
    return tuple(p.strip() for p in parts if p and p.strip())


def _make_record(row: dict, separator: str, locus: str) -> DatasetRecord:
    ttps = _split_tokens(row.get("ttps") or "", separator)
    group = _blank(row.get("group"))
    if not ttps:
        raise ParseError("empty TTPs", locus)
    if not group:
        raise ParseError("empty group", locus)
    year = _blank(row.get("year"))
    if year is not None:
        try:
            year = int(float(year))
        except ValueError:
            raise ParseError(f"year is not an integer: {year!r}", locus) from None
    return DatasetRecord(
        ttps=ttps,
        group=group,
        year=year,
        group_id=_blank(row.get("group_id")),
        aliases=_blank(row.get("aliases")),
        file_name=_blank(row.get("file_name")),
        report_link=_blank(row.get("report_link")),
    )


def _read_csv(path: Path, separator: str) -> list[tuple[str, DatasetRecord]]:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyDataset(f"{path}: no header row") from None
        lowered = [h.strip().lower() for h in header]
        index = {}
        for key, spellings in CSV_COLUMNS.items():
            for spelling in spellings:
                if spelling in lowered:
                    index[key] = lowered.index(spelling)
                    break
        for key in ("ttps", "group"):
            if key not in index:
                raise ParseError(f"missing column {CSV_COLUMNS[key][0]!r}", f"{path}:1")
        out = []
        for row in reader:
            if not any(cell.strip() for cell in row):
                continue
            locus = f"{path}:{reader.line_num}"
            fields = {k: row[i] if i < len(row) else None for k, i in index.items()}
            out.append((locus, _make_record(fields, separator, locus)))
    return out


def _read_json(path: Path, separator: str) -> list[tuple[str, DatasetRecord]]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", str(path)) from None
    if isinstance(data, dict):
        data = data.get("records", data.get("campaigns"))
    if not isinstance(data, list):
        raise ParseError("expected an array of records", str(path))
    out = []
    for i, obj in enumerate(data):
        locus = f"{path}[{i}]"
        if not isinstance(obj, dict):
            raise ParseError("record is not an object", locus)
        out.append((locus, _make_record(obj, separator, locus)))
    return out


def read_records(
    path: str | os.PathLike, format: str | None = None, separator: str = ","
) -> list[DatasetRecord]:
    return [rec for _, rec in _read_located(Path(path), format, separator)]


def _read_located(path: Path, format: str | None, separator: str):
    fmt = (format or path.suffix.lstrip(".")).lower()
    if fmt == "csv":
        located = _read_csv(path, separator)
    elif fmt == "json":
        located = _read_json(path, separator)
    else:
        raise ValueError(f"unsupported dataset format: {fmt!r}")
    if not located:
        raise EmptyDataset(f"{path}: no records")
    return located


def ingest(
    path: str | os.PathLike,
    format: str | None = None,
    phase_map: PhaseMap | None = None,
    *,
    separator: str = ",",
    warnings: list[str] | None = None,
    max_length: int = DEFAULT_MAX_LENGTH,
) -> list[Campaign]:
    """Read a dataset file and sequence every record into a ``Campaign``.

    Uncatalogued technique IDs and collapsed duplicates are reported through
    ``warnings`` (when given) and the module logger; malformed rows raise
    ``ParseError`` naming the row.
    """
    path = Path(path)
    phase_map = phase_map or load_phase_map()
    campaigns = []
    for n, (locus, rec) in enumerate(_read_located(path, format, separator), start=1):
        try:
            obs = observations_from_ids(rec.ttps)
        except MalformedId as exc:
            raise ParseError(str(exc), locus) from None
        report = SequencingReport()
        try:
            seq = sequence_ttps(obs, phase_map, lenient=True, report=report, max_length=max_length)
        except ValueError as exc:
            raise ParseError(str(exc), locus) from None
        for msg in report.messages():
            log.info("%s: %s", locus, msg)
            if warnings is not None:
                warnings.append(f"{locus}: {msg}")
        campaigns.append(
            Campaign(
                id=f"rec-{n:04d}",
                sequence=seq,
                group_label=rec.group,
                year=None if rec.year is None else str(rec.year),
                report_name=rec.file_name,
                report_link=rec.report_link,
            )
        )
    return campaigns


def _allocate(sizes: dict[str, int], fraction: float) -> dict[str, int]:
    """Largest-remainder allocation of baseline slots per group.

    Each group gets floor or ceil of ``fraction * size`` and the total equals
    ``round(fraction * total)``. Remainder ties go to larger groups, then by name.
    """
    quotas = {g: fraction * n for g, n in sizes.items()}
    alloc = {g: int(np.floor(q)) for g, q in quotas.items()}
    target = int(round(fraction * sum(sizes.values())))
    order = sorted(sizes, key=lambda g: (-(quotas[g] - alloc[g]), -sizes[g], g))
    for g in order[: max(0, target - sum(alloc.values()))]:
        alloc[g] += 1
    return alloc


def split(
    campaigns: Sequence[Campaign], spec: SplitSpec
) -> tuple[BaselineDatabase, list[Campaign]]:
    """Seeded, optionally stratified split into a baseline and an evaluation set.

    The baseline keeps groups in first-appearance order and sequences in input
    order; the evaluation set keeps input order.
    """
    if not campaigns:
        raise EmptyDataset("nothing to split")
    by_group: dict[str, list[int]] = {}
    for i, c in enumerate(campaigns):
        if not c.group_label:
            raise ValueError(f"campaign {c.id} has no group label")
        by_group.setdefault(c.group_label, []).append(i)

    rng = np.random.default_rng(spec.rng_seed)
    chosen: set[int] = set()
    if spec.stratified:
        alloc = _allocate({g: len(ix) for g, ix in by_group.items()}, spec.baseline_fraction)
        for g in sorted(by_group):
            if alloc[g] < 1:
                raise GroupTooSmall(
                    f"group {g!r} ({len(by_group[g])} samples) would have no baseline sequence"
                )
            picked = rng.permutation(len(by_group[g]))[: alloc[g]]
            chosen.update(by_group[g][k] for k in picked.tolist())
    else:
        target = int(round(spec.baseline_fraction * len(campaigns)))
        chosen.update(rng.permutation(len(campaigns))[:target].tolist())
        for g, ix in by_group.items():
            if not chosen.intersection(ix):
                raise GroupTooSmall(f"group {g!r} would have no baseline sequence")

    groups: dict[str, list[TtpSequence]] = {}
    eval_set = []
    for i, c in enumerate(campaigns):
        if i in chosen:
            groups.setdefault(c.group_label, []).append(c.sequence)
        else:
            eval_set.append(c)
    meta = {"seed": spec.rng_seed, "baseline_fraction": spec.baseline_fraction,
            "stratified": spec.stratified}
    return BaselineDatabase(groups, meta=meta), eval_set


def _write_json(path: Path, doc: dict):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _read_versioned(path: Path, expected_format: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"{path}: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != expected_format:
        raise CorruptFile(f"{path}: not a {expected_format} document")
    if doc.get("version") != FORMAT_VERSION:
        raise VersionMismatch(
            f"{path}: version {doc.get('version')!r}, expected {FORMAT_VERSION}"
        )
    return doc


def save_baseline(
    db: BaselineDatabase,
    path: str | os.PathLike,
    *,
    phase_map_fingerprint: str | None = None,
    seed: int | None = None,
):
    meta = dict(db.meta)
    if phase_map_fingerprint is not None:
        meta["phase_map_fingerprint"] = phase_map_fingerprint
    if seed is not None:
        meta["seed"] = seed
    doc = {
        "format": BASELINE_FORMAT,
        "version": FORMAT_VERSION,
        "seed": meta.pop("seed", None),
        "phase_map_fingerprint": meta.pop("phase_map_fingerprint", None),
        "meta": meta,
        "groups": [
            {"name": name, "sequences": [s.to_list() for s in seqs]} for name, seqs in db.items()
        ],
    }
    _write_json(Path(path), doc)


def load_baseline(path: str | os.PathLike, max_length: int = DEFAULT_MAX_LENGTH) -> BaselineDatabase:
    doc = _read_versioned(Path(path), BASELINE_FORMAT)
    try:
        groups = {
            g["name"]: [TtpSequence(tuple(s), max_length=max_length) for s in g["sequences"]]
            for g in doc["groups"]
        }
        meta = dict(doc.get("meta") or {})
        meta["seed"] = doc.get("seed")
        meta["phase_map_fingerprint"] = doc.get("phase_map_fingerprint")
        return BaselineDatabase(groups, meta=meta)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"{path}: {exc}") from None


def save_campaigns(
    campaigns: Iterable[Campaign], path: str | os.PathLike, *, phase_map_fingerprint: str | None = None
):
    doc = {
        "format": CAMPAIGNS_FORMAT,
        "version": FORMAT_VERSION,
        "phase_map_fingerprint": phase_map_fingerprint,
        "campaigns": [c.to_dict() for c in campaigns],
    }
    _write_json(Path(path), doc)


def load_campaigns(path: str | os.PathLike, max_length: int = DEFAULT_MAX_LENGTH) -> list[Campaign]:
    doc = _read_versioned(Path(path), CAMPAIGNS_FORMAT)
    try:
        return [Campaign.from_dict(c, max_length=max_length) for c in doc["campaigns"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"{path}: {exc}") from None
