"""Command-line frontend.

Exit status: 0 on success, 1 on a domain error (bad data, unknown technique,
invalid config), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import Counter
from pathlib import Path

from . import __version__
from .attribution import Attributor, top_n
from .errors import AttributionError
from .evaluation import SynthSpec, correlation_matrix, evaluate, synth_campaigns
from .model import BaselineDatabase, Campaign
from .sequencer import load_phase_map, observations_from_ids, sequence_ttps
from .similarity import MeasureKind
from .store import (
    SplitSpec,
    ingest,
    load_baseline,
    load_campaigns,
    save_baseline,
    save_campaigns,
    split,
)

MEASURES = [m.value for m in MeasureKind]


def _counts(names) -> str:
    return ", ".join(f"{g}={n}" for g, n in names)


def cmd_ingest(args) -> int:
    if args.eval_out and args.split is None:
        args.parser.error("--eval-out requires --split")
    pm = load_phase_map(args.phase_map)
    warnings: list[str] = []
    campaigns = ingest(
        args.input, args.format, pm, separator=args.separator, warnings=warnings
    )
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)

    if args.split is None:
        baseline, eval_set = BaselineDatabase.from_campaigns(campaigns), []
    else:
        baseline, eval_set = split(campaigns, SplitSpec(args.split, args.seed))
    save_baseline(baseline, args.out, phase_map_fingerprint=pm.fingerprint)
    if args.eval_out:
        save_campaigns(eval_set, args.eval_out, phase_map_fingerprint=pm.fingerprint)

    print(f"read {len(campaigns)} campaigns from {args.input}")
    print(
        f"baseline: {baseline.N} sequences, {baseline.G} groups "
        f"({_counts((g, baseline.group_size(g)) for g in baseline.names)})"
    )
    if args.split is not None:
        per = Counter(c.group_label for c in eval_set)
        print(f"eval: {len(eval_set)} campaigns ({_counts((g, per[g]) for g in baseline.names)})")
    return 0


def _split_list(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [p.strip() for p in text.split(",")]


def _check_fingerprint(meta: dict, fingerprint: str, what: str):
    stored = meta.get("phase_map_fingerprint")
    if stored and stored != fingerprint:
        print(
            f"warning: {what} was built with a different phase map ({stored})",
            file=sys.stderr,
        )


def cmd_attribute(args) -> int:
    pm = load_phase_map(args.phase_map)
    baseline = load_baseline(args.baseline)
    _check_fingerprint(baseline.meta, pm.fingerprint, args.baseline)

    ids = [t for t in _split_list(args.ttps) if t]
    hints = _split_list(args.tactics)
    if hints is not None:
        hints = [h or None for h in hints]
    query = sequence_ttps(observations_from_ids(ids, hints), pm)
    result = Attributor(baseline).attribute(query, args.measure)
    shown = top_n(result, min(args.top_n, baseline.G))
    scores = result.scores

    if args.format == "table":
        width = max(len("group"), *(len(g) for g in shown))
        print(f"sequence: {query}")
        print(f"{'rank':>4}  {'group':<{width}}  score")
        for rank, g in enumerate(shown, start=1):
            print(f"{rank:>4}  {g:<{width}}  {scores[g]:.6f}")
        if result.tie:
            print("note: top score is tied")
    else:
        doc = {
            "measure": MeasureKind.parse(args.measure).value,
            "sequence": query.to_list(),
            "ranking": [{"group": g, "score": scores[g]} for g in shown],
            "tie": result.tie,
        }
        print(json.dumps(doc, indent=2))
    return 0


def cmd_evaluate(args) -> int:
    baseline = load_baseline(args.baseline)
    eval_set = load_campaigns(args.eval)
    report = evaluate(baseline, eval_set, args.measure, args.top_n_max, workers=args.workers)
    print(report.to_table() if args.format == "table" else report.to_json())
    return 0


def cmd_correlate(args) -> int:
    baseline = load_baseline(args.baseline)
    text = correlation_matrix(baseline, include_self=args.include_self).to_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def _write_dataset(campaigns: list[Campaign], path: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["Year", "TTPs", "APT Group", "Group ID", "Group Aliases", "File Name", "Report Link"]
        )
        for c in campaigns:
            w.writerow(["", ",".join(c.sequence.to_list()), c.group_label, "", "", c.id, ""])


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_groups=args.groups,
        per_group=args.per_group,
        separation=args.separation,
        mutation=args.mutation,
    )
    campaigns = synth_campaigns(spec, seed=args.seed, phase_map=load_phase_map(args.phase_map))
    _write_dataset(campaigns, args.out)
    mean = sum(len(c.sequence) for c in campaigns) / len(campaigns)
    print(f"wrote {len(campaigns)} synthetic campaigns to {args.out} (mean length {mean:.2f})")
    return 0


def _fraction(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError("must lie strictly between 0 and 1")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttp-attribution",
        description="Attribute campaigns to threat groups from kill-chain ordered TTP sequences.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("ingest", help="read a dataset, sequence it and write a baseline")
    p.add_argument("--input", required=True, help="dataset file (CSV or JSON)")
    p.add_argument("--format", choices=["csv", "json"], help="default: from the file suffix")
    p.add_argument("--phase-map", help="phase map YAML (default: bundled or $TTP_ATTRIBUTION_PHASE_MAP)")
    p.add_argument("--separator", default=",", help="separator inside the TTPs field")
    p.add_argument("--split", type=_fraction, help="baseline fraction; the rest is the eval set")
    p.add_argument("--seed", type=int, default=0, help="split seed (default 0)")
    p.add_argument("--out", required=True, help="baseline output path")
    p.add_argument("--eval-out", help="evaluation set output path (needs --split)")
    p.set_defaults(func=cmd_ingest, parser=p)

    p = sub.add_parser("attribute", help="rank baseline groups for one TTP listing")
    p.add_argument("--baseline", required=True)
    p.add_argument("--ttps", required=True, help="comma-separated technique IDs")
    p.add_argument("--tactics", help="comma-separated tactic hints aligned with --ttps (blank = none)")
    p.add_argument("--measure", choices=MEASURES, default="captain")
    p.add_argument("--top-n", type=_positive, default=2, help="rows to print (default 2)")
    p.add_argument("--format", choices=["json", "table"], default="json")
    p.add_argument("--phase-map")
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("evaluate", help="score an evaluation set against a baseline")
    p.add_argument("--baseline", required=True)
    p.add_argument("--eval", required=True, help="evaluation set written by ingest --eval-out")
    p.add_argument("--measure", choices=MEASURES, default="captain")
    p.add_argument("--top-n-max", type=_positive, help="longest top-n window (default: group count)")
    p.add_argument("--format", choices=["json", "table"], default="json")
    p.add_argument("--workers", type=_positive, help="threads used for attribution")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("correlate", help="group-by-group correlation matrix as CSV")
    p.add_argument("--baseline", required=True)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.add_argument("--include-self", action="store_true", help="pair sequences with themselves on the diagonal")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("synth", help="write a synthetic labelled dataset in the CSV layout")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--groups", type=_positive, default=SynthSpec.n_groups)
    p.add_argument("--per-group", type=_positive, default=SynthSpec.per_group)
    p.add_argument("--separation", type=float, default=SynthSpec.separation)
    p.add_argument("--mutation", type=float, default=SynthSpec.mutation)
    p.add_argument("--phase-map")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except AttributionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
