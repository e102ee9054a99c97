"""End-to-end derivation pipeline.

Every artifact the package can produce is derived here from a loaded
workspace, and rendered through one shared function, so the command-line
interface, the tests, and the golden-output check all see identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import attack_tree as tree_mod
from . import classification as cls_mod
from . import mapping as map_mod
from . import taxonomy as tax_mod
from .errors import Code, fail
from .model import ReferenceModel
from .taxonomy import ProcessingOrder
from .validation import ValidationIssue, validate_workspace
from .workspace import Workspace


@dataclass
class Derivation:
    workspace: Workspace
    order: ProcessingOrder
    issues: list[ValidationIssue]
    mappings: dict[str, map_mod.LayerMapping]
    violations: list[map_mod.MappingViolation]
    crossmaps: dict[str, map_mod.CrossMapping]  # target model id -> CM(base -> target)
    matrix: map_mod.ComparisonMatrix
    taxonomy: tax_mod.TaxonomyResult
    checklist: cls_mod.Checklist
    ledger: cls_mod.Ledger
    completeness: cls_mod.CompletenessReport
    differential: cls_mod.Differential | None = None
    tree: tree_mod.AttackTree | None = None
    vulnerability_links: list[tree_mod.VulnerabilityLink] = field(default_factory=list)

    @property
    def models(self) -> dict[str, ReferenceModel]:
        return self.workspace.models

    @property
    def base_model(self) -> str:
        return self.order.models[0]


def structural_findings(
    workspace: Workspace,
) -> tuple[
    list[ValidationIssue],
    dict[str, map_mod.LayerMapping],
    list[map_mod.MappingViolation],
]:
    """Document checks plus per-model allocation completeness. These never
    raise for content reasons, so a validator can report every finding even
    when a later stage would refuse the workspace."""
    issues = validate_workspace(workspace)
    mappings: dict[str, map_mod.LayerMapping] = {}
    violations: list[map_mod.MappingViolation] = []
    for model in workspace.models.values():
        mapping = map_mod.derive_layer_mapping(
            workspace.architecture, model, workspace.bindings
        )
        mappings[model.id] = mapping
        violations.extend(
            map_mod.check_mapping_completeness(mapping, workspace.architecture, model)
        )
    return issues, mappings, violations


def derive(workspace: Workspace) -> Derivation:
    """Runs every stage whose preconditions hold. Stages gated on a complete
    review (differential, tree, vulnerability links) stay unset rather than
    raising, so partial workspaces still get the early artifacts."""
    issues, mappings, violations = structural_findings(workspace)
    models = workspace.models
    order = tax_mod.order_models_by_detail(list(models.values()))

    base = models[order.models[0]]
    others = [models[m] for m in order.models[1:]]
    crossmaps = {
        other.id: map_mod.derive_cross_mapping(
            workspace.architecture, base, other, workspace.bindings
        )
        for other in others
    }
    matrix = map_mod.build_comparison_matrix(base, others, crossmaps)

    taxonomy = tax_mod.consolidate(
        workspace.attacks, workspace.aliases, crossmaps, models, order
    )
    checklist = cls_mod.enumerate_checklist(
        workspace.architecture, mappings, taxonomy, order, models
    )
    events = cls_mod.events_from_jsonl(workspace.read_verdict_lines())
    ledger = cls_mod.Ledger.replay(checklist, events)
    completeness = cls_mod.completeness_report(ledger)

    derivation = Derivation(
        workspace=workspace,
        order=order,
        issues=issues,
        mappings=mappings,
        violations=violations,
        crossmaps=crossmaps,
        matrix=matrix,
        taxonomy=taxonomy,
        checklist=checklist,
        ledger=ledger,
        completeness=completeness,
    )
    if completeness.complete:
        derivation.differential = cls_mod.differential_description(
            ledger, order, workspace.architecture
        )
        tree = tree_mod.build_attack_tree(
            ledger,
            workspace.assignments,
            taxonomy,
            root_label=f"Attacks on {workspace.architecture.name}",
        )
        if workspace.source_tree is not None:
            tree = tree_mod.diff_against_source(tree, workspace.source_tree)
        derivation.tree = tree
        derivation.vulnerability_links = tree_mod.link_vulnerabilities(
            tree, workspace.vulnerabilities, taxonomy
        )
    return derivation


def require_complete(derivation: Derivation) -> None:
    if not derivation.completeness.complete:
        raise fail(
            Code.E_INCOMPLETE,
            f"{len(derivation.completeness.unreviewed)} checklist item(s) are "
            "still unreviewed",
        )


# ---------------------------------------------------------------------------
# artifact rendering


def render_artifacts(derivation: Derivation) -> dict[str, str]:
    """Relative output path -> file content for every available artifact."""
    workspace = derivation.workspace
    models = workspace.models
    rows = map_mod.allocation_table(workspace.architecture, derivation.mappings, models)

    artifacts: dict[str, str] = {
        "allocation_table.md": map_mod.render_allocation_markdown(rows, models),
        "allocation_table.csv": map_mod.render_allocation_csv(rows, models),
        "comparison_matrix.md": map_mod.render_matrix_markdown(derivation.matrix, models),
        "comparison_matrix.csv": map_mod.render_matrix_csv(derivation.matrix, models),
        "taxonomy.md": tax_mod.render_taxonomy_markdown(
            derivation.taxonomy, workspace.attacks, models
        ),
        "taxonomy.csv": tax_mod.render_taxonomy_csv(
            derivation.taxonomy, workspace.attacks, models
        ),
        "taxonomy.json": tax_mod.taxonomy_to_json(derivation.taxonomy),
        "checklist.csv": cls_mod.render_checklist_csv(derivation.checklist, derivation.ledger),
        "checklist.json": cls_mod.checklist_to_json(derivation.checklist, derivation.ledger),
        "completeness.md": cls_mod.render_completeness_markdown(derivation.completeness),
    }
    base = derivation.base_model
    for target_id, crossmap in derivation.crossmaps.items():
        artifacts[f"crossmaps/CM_{base}_{target_id}.json"] = map_mod.cross_mapping_to_json(
            crossmap
        )
    if derivation.differential is not None:
        artifacts["differential.md"] = cls_mod.render_differential_markdown(
            derivation.differential, workspace.architecture, models
        )
    if derivation.tree is not None:
        artifacts["attack_tree.dot"] = tree_mod.export_tree(derivation.tree, "dot")
        artifacts["attack_tree.json"] = tree_mod.export_tree(derivation.tree, "json")
        artifacts["vulnerabilities.md"] = tree_mod.render_vulnerabilities_markdown(
            derivation.vulnerability_links
        )
        artifacts["report.md"] = render_report(derivation)
    return artifacts


def _demote_headings(lines: list[str]) -> list[str]:
    """Push embedded section headings one level down."""
    return [f"#{line}" if line.startswith("#") else line for line in lines]


def render_report(derivation: Derivation) -> str:
    """Single summary document stitching the stage outputs together."""
    workspace = derivation.workspace
    models = workspace.models
    lines = [f"# Security analysis report: {workspace.architecture.name}", ""]

    lines.append("## Reference models")
    lines.append("")
    lines.append("| Model | Name | Detail rank | Focus |")
    lines.append("| --- | --- | --- | --- |")
    for model_id in derivation.order.models:
        model = models[model_id]
        lines.append(
            f"| {model.id} | {model.name} | {model.detail_rank} | {model.focus} |"
        )
    lines.append("")
    lines.append(
        "Models are processed in ascending detail rank: "
        + ", ".join(derivation.order.models)
        + "."
    )
    lines.append("")

    lines.append("## Component allocations")
    lines.append("")
    rows = map_mod.allocation_table(workspace.architecture, derivation.mappings, models)
    allocation = map_mod.render_allocation_markdown(rows, models)
    lines.extend(allocation.splitlines()[2:])

    lines.append("## Layer comparison")
    lines.append("")
    matrix = map_mod.render_matrix_markdown(derivation.matrix, models)
    lines.extend(matrix.splitlines()[2:])

    lines.append("## Cross-mapping coverage")
    lines.append("")
    lines.append("| Pair | Classification | Uncovered target layers |")
    lines.append("| --- | --- | --- |")
    for target_id, crossmap in derivation.crossmaps.items():
        target = models[target_id]
        uncovered = (
            "; ".join(target.layer_name(l) for l in crossmap.uncovered_target)
            if crossmap.uncovered_target
            else "(none)"
        )
        lines.append(
            f"| {crossmap.source_model} to {crossmap.target_model} "
            f"| {crossmap.classification} | {uncovered} |"
        )
    lines.append("")

    lines.append("## Consolidated taxonomy")
    lines.append("")
    taxonomy = derivation.taxonomy
    attack_count = len(workspace.attacks)
    lines.append(
        f"{attack_count} catalog attacks consolidate into "
        f"{len(taxonomy.entries)} base-layer groups plus "
        f"{len(taxonomy.uncovered)} groups outside the base coordinate system "
        f"({taxonomy.duplicate_count} duplicates merged)."
    )
    lines.append("")

    lines.append("## Review status")
    lines.append("")
    completeness = derivation.completeness
    lines.append(f"Checklist items: {completeness.total}")
    lines.append("")
    for verdict in cls_mod.VERDICTS:
        lines.append(f"- {verdict}: {completeness.counts[verdict]}")
    lines.append("")

    if derivation.differential is not None:
        lines.append("## Differential feasibility findings")
        lines.append("")
        differential = cls_mod.render_differential_markdown(
            derivation.differential, workspace.architecture, models
        )
        lines.extend(_demote_headings(differential.splitlines()[2:]))

    if derivation.tree is not None:
        lines.append("## Attack tree")
        lines.append("")
        lines.append("| Category | Threats | Leaves |")
        lines.append("| --- | --- | --- |")
        for category in derivation.tree.categories:
            leaf_count = sum(len(t.leaves) for t in category.threats)
            lines.append(f"| {category.name} | {len(category.threats)} | {leaf_count} |")
        lines.append("")
        if derivation.tree.removed:
            lines.append(
                "Dropped from the source tree: " + "; ".join(derivation.tree.removed) + "."
            )
        lines.append("")

        lines.append("## Vulnerability linkage")
        lines.append("")
        vulnerabilities = tree_mod.render_vulnerabilities_markdown(
            derivation.vulnerability_links
        )
        lines.extend(_demote_headings(vulnerabilities.splitlines()[2:]))
    return "\n".join(lines)
