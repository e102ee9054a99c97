"""Command-line interface.

Exit codes: 0 success, 1 stage or validation failure, 2 for I/O problems,
document syntax errors, and unsupported formats.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import classification as cls_mod
from . import pipeline
from .errors import ArchsecError, Code
from .workspace import OutputCache, Workspace, atomic_write, load_workspace

USAGE_CODES = frozenset({Code.E_SYNTAX, Code.E_IO, Code.E_FORMAT, Code.E_CORPUS})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="archsec",
        description=(
            "Layer-based security analysis: maps an architecture onto several "
            "reference models, consolidates their attack catalogs, and tracks "
            "a feasibility review through to an attack tree."
        ),
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--workspace",
        "-w",
        default=None,
        help="workspace directory (default: $ARCHSEC_WORKSPACE)",
    )
    common.add_argument(
        "--lax",
        action="store_true",
        help="tolerate unknown fields in input documents",
    )
    common.add_argument(
        "--out",
        default="out",
        help="output directory (default: ./out)",
    )
    common.add_argument(
        "--format",
        default=None,
        help="restrict written artifacts to one format (md, csv, json, dot)",
    )

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check the workspace documents")
    sub.add_parser(
        "map", parents=[common], help="derive component allocations for every model"
    )
    sub.add_parser(
        "crossmap", parents=[common], help="derive cross-mappings and the comparison matrix"
    )
    sub.add_parser("taxonomy", parents=[common], help="consolidate the attack catalogs")
    sub.add_parser("checklist", parents=[common], help="enumerate the review checklist")
    classify = sub.add_parser(
        "classify", parents=[common], help="record feasibility verdicts"
    )
    classify.add_argument(
        "--from",
        dest="source",
        default="-",
        help="JSONL file of verdict records ('-' reads stdin)",
    )
    sub.add_parser("tree", parents=[common], help="build and export the attack tree")
    sub.add_parser("report", parents=[common], help="write every artifact")
    corpus = sub.add_parser("corpus", help="locate or copy the bundled example workspace")
    corpus.add_argument("--to", default=None, help="copy the bundled workspace here")
    return parser


def _workspace_root(args: argparse.Namespace) -> str:
    root = args.workspace or os.environ.get("ARCHSEC_WORKSPACE")
    if not root:
        raise ArchsecError(
            Code.E_IO, "no workspace given (use --workspace or set ARCHSEC_WORKSPACE)"
        )
    return root


def _filter_formats(artifacts: dict[str, str], fmt: str | None) -> dict[str, str]:
    if fmt is None:
        return artifacts
    if fmt not in ("md", "csv", "json", "dot"):
        raise ArchsecError(Code.E_FORMAT, f"unsupported format '{fmt}'")
    chosen = {k: v for k, v in artifacts.items() if k.endswith(f".{fmt}")}
    if not chosen:
        raise ArchsecError(Code.E_FORMAT, f"no artifact of this command uses format '{fmt}'")
    return chosen


def _write_artifacts(
    workspace: Workspace, out_dir: Path, artifacts: dict[str, str]
) -> None:
    cache = OutputCache(out_dir, workspace.input_hash())
    for relpath, text in artifacts.items():
        written = cache.write(relpath, text)
        state = "wrote" if written else "cached"
        print(f"{state} {out_dir / relpath}")
    cache.save()


def _load(args: argparse.Namespace) -> Workspace:
    return load_workspace(_workspace_root(args), lax=args.lax)


def _select(derivation: pipeline.Derivation, names: list[str]) -> dict[str, str]:
    rendered = pipeline.render_artifacts(derivation)
    return {
        name: rendered[name]
        for name in rendered
        if any(name == n or name.startswith(n) for n in names)
    }


def cmd_validate(args: argparse.Namespace) -> int:
    workspace = _load(args)
    issues, _, violations = pipeline.structural_findings(workspace)
    problems = [str(issue) for issue in issues]
    problems.extend(
        f"[MAPPING_{violation.kind.upper()}] {violation.message}"
        for violation in violations
    )
    try:
        pipeline.derive(workspace)
    except ArchsecError as exc:
        problems.append(str(exc))
    for line in problems:
        print(line)
    if problems:
        print(f"{len(problems)} problem(s) found")
        return 1
    print(
        f"workspace '{workspace.name}' OK: {len(workspace.models)} models, "
        f"{len(workspace.architecture.components)} components, "
        f"{len(workspace.attacks)} attacks"
    )
    return 0


def cmd_map(args: argparse.Namespace) -> int:
    workspace = _load(args)
    derivation = pipeline.derive(workspace)
    artifacts = _select(derivation, ["allocation_table"])
    _write_artifacts(workspace, Path(args.out), _filter_formats(artifacts, args.format))
    for violation in derivation.violations:
        print(f"[MAPPING_{violation.kind.upper()}] {violation.message}")
    return 1 if derivation.violations else 0


def cmd_crossmap(args: argparse.Namespace) -> int:
    workspace = _load(args)
    derivation = pipeline.derive(workspace)
    artifacts = _select(derivation, ["comparison_matrix", "crossmaps/"])
    _write_artifacts(workspace, Path(args.out), _filter_formats(artifacts, args.format))
    for crossmap in derivation.crossmaps.values():
        print(
            f"{crossmap.source_model} to {crossmap.target_model}: "
            f"{crossmap.classification}"
        )
    return 0


def cmd_taxonomy(args: argparse.Namespace) -> int:
    workspace = _load(args)
    derivation = pipeline.derive(workspace)
    artifacts = _select(derivation, ["taxonomy"])
    _write_artifacts(workspace, Path(args.out), _filter_formats(artifacts, args.format))
    taxonomy = derivation.taxonomy
    print(
        f"{len(workspace.attacks)} attacks -> {len(taxonomy.entries)} placed groups, "
        f"{len(taxonomy.uncovered)} outside the base layers, "
        f"{taxonomy.duplicate_count} duplicates merged"
    )
    return 0


def cmd_checklist(args: argparse.Namespace) -> int:
    workspace = _load(args)
    derivation = pipeline.derive(workspace)
    artifacts = _select(derivation, ["checklist", "completeness.md"])
    _write_artifacts(workspace, Path(args.out), _filter_formats(artifacts, args.format))
    completeness = derivation.completeness
    print(
        f"{completeness.total} items, {len(completeness.unreviewed)} unreviewed"
    )
    return 0


def cmd_classify(args: argparse.Namespace) -> int:
    workspace = _load(args)
    derivation = pipeline.derive(workspace)
    if args.source == "-":
        text = sys.stdin.read()
    else:
        source = Path(args.source)
        if not source.exists():
            raise ArchsecError(Code.E_IO, f"verdict file not found: {source}")
        text = source.read_text(encoding="utf-8")
    events = cls_mod.events_from_jsonl(text)
    for event in events:
        derivation.ledger.record(event)
    if events:
        if workspace.verdicts_path is None:
            raise ArchsecError(
                Code.E_IO, "workspace manifest declares no verdicts ledger file"
            )
        existing = workspace.read_verdict_lines()
        atomic_write(
            workspace.verdicts_path, existing + cls_mod.events_to_jsonl(events)
        )
    derivation.completeness = cls_mod.completeness_report(derivation.ledger)
    names = ["checklist", "completeness.md"]
    if derivation.completeness.complete:
        derivation.differential = cls_mod.differential_description(
            derivation.ledger, derivation.order, workspace.architecture
        )
        names.append("differential.md")
    artifacts: dict[str, str] = {
        "checklist.csv": cls_mod.render_checklist_csv(
            derivation.checklist, derivation.ledger
        ),
        "checklist.json": cls_mod.checklist_to_json(
            derivation.checklist, derivation.ledger
        ),
        "completeness.md": cls_mod.render_completeness_markdown(derivation.completeness),
    }
    if derivation.differential is not None:
        artifacts["differential.md"] = cls_mod.render_differential_markdown(
            derivation.differential, workspace.architecture, workspace.models
        )
    _write_artifacts(workspace, Path(args.out), _filter_formats(artifacts, args.format))
    print(
        f"recorded {len(events)} verdict(s); "
        f"{len(derivation.completeness.unreviewed)} item(s) still unreviewed"
    )
    return 0


def cmd_tree(args: argparse.Namespace) -> int:
    workspace = _load(args)
    derivation = pipeline.derive(workspace)
    pipeline.require_complete(derivation)
    artifacts = _select(derivation, ["attack_tree", "vulnerabilities.md"])
    _write_artifacts(workspace, Path(args.out), _filter_formats(artifacts, args.format))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    workspace = _load(args)
    derivation = pipeline.derive(workspace)
    pipeline.require_complete(derivation)
    artifacts = pipeline.render_artifacts(derivation)
    _write_artifacts(workspace, Path(args.out), _filter_formats(artifacts, args.format))
    return 0


def cmd_corpus(args: argparse.Namespace) -> int:
    from . import corpus

    if args.to is None:
        print(corpus.corpus_path())
        return 0
    destination = Path(args.to)
    corpus.copy_corpus(destination)
    print(f"copied bundled workspace to {destination}")
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "map": cmd_map,
    "crossmap": cmd_crossmap,
    "taxonomy": cmd_taxonomy,
    "checklist": cmd_checklist,
    "classify": cmd_classify,
    "tree": cmd_tree,
    "report": cmd_report,
    "corpus": cmd_corpus,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = COMMANDS[args.command]
    try:
        return handler(args)
    except ArchsecError as exc:
        print(str(exc), file=sys.stderr)
        return 2 if exc.code in USAGE_CODES else 1


if __name__ == "__main__":
    sys.exit(main())
