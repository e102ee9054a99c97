"""Attack tree assembly from review results.

The tree has a fixed shape: a root, five capability categories, threat
nodes under the categories, and one leaf per consolidated attack group the
review judged feasible or conditional. Category and threat placement comes
from the declarative assignment document, never from heuristics, so a group
the reviewers did not assign is a hard error rather than a silent gap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .classification import Ledger
from .errors import Code, fail
from .model import TREE_CATEGORIES, CategoryAssignment, Vulnerability
from .taxonomy import TaxonomyResult


@dataclass
class SourceTree:
    """Category/threat skeleton of a pre-existing tree used for provenance."""

    name: str
    citation: str
    categories: dict[str, tuple[str, ...]]  # category name -> threat names
    renames: dict[str, str]  # source threat name -> name used here


@dataclass
class TreeLeaf:
    attack: str  # canonical attack id
    name: str
    provenance: str = "added"


@dataclass
class TreeThreat:
    name: str
    leaves: list[TreeLeaf] = field(default_factory=list)
    provenance: str = "added"


@dataclass
class TreeCategory:
    name: str
    threats: list[TreeThreat] = field(default_factory=list)
    provenance: str = "added"


@dataclass
class AttackTree:
    root: str
    categories: list[TreeCategory]
    removed: tuple[str, ...] = ()  # "Category :: Threat" entries dropped from the source

    def leaf_index(self) -> dict[str, tuple[str, str]]:
        index: dict[str, tuple[str, str]] = {}
        for category in self.categories:
            for threat in category.threats:
                for leaf in threat.leaves:
                    index[leaf.attack] = (category.name, threat.name)
        return index


def feasible_groups(ledger: Ledger) -> list[str]:
    """Canonical ids with at least one feasible or conditional item, in
    checklist order."""
    seen: list[str] = []
    for item in ledger.checklist.items:
        if ledger.verdict_of(item.key) in ("feasible", "conditional"):
            if item.key.attack not in seen:
                seen.append(item.key.attack)
    return seen


def build_attack_tree(
    ledger: Ledger,
    assignments: list[CategoryAssignment],
    taxonomy: TaxonomyResult,
    root_label: str,
) -> AttackTree:
    placement: dict[str, tuple[str, str]] = {}
    assignment_order: dict[str, int] = {}
    for index, assignment in enumerate(assignments):
        if assignment.attack not in taxonomy.member_to_entry:
            raise fail(
                Code.E_SYNTAX,
                f"assignment references unknown attack '{assignment.attack}'",
            )
        canonical = taxonomy.canonical_of(assignment.attack)
        target = (assignment.category, assignment.threat)
        if canonical in placement and placement[canonical] != target:
            raise fail(
                Code.E_SYNTAX,
                f"attack group '{canonical}' is assigned to conflicting tree "
                f"positions {placement[canonical]} and {target}",
            )
        if canonical not in placement:
            placement[canonical] = target
            assignment_order[canonical] = index

    groups = feasible_groups(ledger)
    missing = [g for g in groups if g not in placement]
    if missing:
        raise fail(
            Code.E_UNASSIGNED,
            "feasible attack group(s) lack a tree assignment: " + ", ".join(missing),
        )

    names = {
        entry.canonical: entry.name for entry in taxonomy.all_entries()
    }
    categories = {name: TreeCategory(name=name) for name in TREE_CATEGORIES}
    threats: dict[tuple[str, str], TreeThreat] = {}
    for canonical in sorted(groups, key=lambda g: assignment_order[g]):
        category_name, threat_name = placement[canonical]
        threat_key = (category_name, threat_name)
        if threat_key not in threats:
            threat = TreeThreat(name=threat_name)
            threats[threat_key] = threat
            categories[category_name].threats.append(threat)
        threats[threat_key].leaves.append(
            TreeLeaf(attack=canonical, name=names[canonical])
        )
    return AttackTree(root=root_label, categories=[categories[n] for n in TREE_CATEGORIES])


def diff_against_source(tree: AttackTree, source: SourceTree) -> AttackTree:
    """Mark every node inherited, modified, or added relative to the source
    skeleton, and record source threats with no counterpart as removed."""
    rename_of = dict(source.renames)  # source name -> built name
    for category in tree.categories:
        source_threats = source.categories.get(category.name)
        category.provenance = "inherited" if source_threats is not None else "added"
        for threat in category.threats:
            if source_threats is None:
                threat.provenance = "added"
            elif threat.name in source_threats:
                threat.provenance = "inherited"
            elif any(
                rename_of.get(source_name) == threat.name for source_name in source_threats
            ):
                threat.provenance = "modified"
            else:
                threat.provenance = "added"
            for leaf in threat.leaves:
                leaf.provenance = "added"
    removed: list[str] = []
    built = {
        category.name: {threat.name for threat in category.threats}
        for category in tree.categories
    }
    for category_name, source_threats in source.categories.items():
        present = built.get(category_name, set())
        for source_name in source_threats:
            survives = source_name in present or rename_of.get(source_name) in present
            if not survives:
                removed.append(f"{category_name} :: {source_name}")
    tree.removed = tuple(removed)
    return tree


# ---------------------------------------------------------------------------
# vulnerability linkage


@dataclass
class VulnerabilityLink:
    vulnerability: Vulnerability
    attacks_in_tree: list[tuple[str, str, str]]  # (attack id, category, threat)
    attacks_outside: list[str]


def link_vulnerabilities(
    tree: AttackTree,
    vulnerabilities: list[Vulnerability],
    taxonomy: TaxonomyResult,
) -> list[VulnerabilityLink]:
    index = tree.leaf_index()
    links: list[VulnerabilityLink] = []
    for vulnerability in vulnerabilities:
        in_tree: list[tuple[str, str, str]] = []
        outside: list[str] = []
        for attack_id in vulnerability.linked_attacks:
            canonical = (
                taxonomy.canonical_of(attack_id)
                if attack_id in taxonomy.member_to_entry
                else attack_id
            )
            if canonical in index:
                category, threat = index[canonical]
                in_tree.append((canonical, category, threat))
            else:
                outside.append(attack_id)
        links.append(
            VulnerabilityLink(
                vulnerability=vulnerability,
                attacks_in_tree=in_tree,
                attacks_outside=outside,
            )
        )
    return links


def render_vulnerabilities_markdown(links: list[VulnerabilityLink]) -> str:
    lines = ["# Vulnerability linkage", ""]
    if not links:
        lines.append("No vulnerabilities recorded.")
        lines.append("")
        return "\n".join(lines)
    for link in links:
        vulnerability = link.vulnerability
        lines.append(f"## {vulnerability.name} ({vulnerability.id})")
        lines.append("")
        lines.append(vulnerability.description)
        lines.append("")
        if vulnerability.enabling_factors:
            lines.append("Enabling factors:")
            for factor in vulnerability.enabling_factors:
                lines.append(f"- {factor}")
            lines.append("")
        if link.attacks_in_tree:
            lines.append("Enables attack-tree leaves:")
            for attack_id, category, threat in link.attacks_in_tree:
                lines.append(f"- {attack_id} (under {category} / {threat})")
            lines.append("")
        if link.attacks_outside:
            lines.append("Linked attacks not judged feasible (absent from the tree):")
            for attack_id in link.attacks_outside:
                lines.append(f"- {attack_id}")
            lines.append("")
        if vulnerability.linked_threat_groups:
            lines.append(
                "Related threat groups: " + ", ".join(vulnerability.linked_threat_groups)
            )
            lines.append("")
        if vulnerability.countermeasures:
            lines.append("Countermeasures:")
            for measure in vulnerability.countermeasures:
                lines.append(
                    f"- {measure.name} [{measure.horizon}]: {measure.description}"
                )
            lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# export


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_tree(tree: AttackTree, fmt: str) -> str:
    if fmt == "dot":
        return _export_dot(tree)
    if fmt == "json":
        return _export_json(tree)
    raise fail(Code.E_FORMAT, f"unsupported attack-tree format '{fmt}' (use dot or json)")


def _export_dot(tree: AttackTree) -> str:
    lines = ["digraph attack_tree {", "  rankdir=LR;", '  node [shape=box];']
    root_id = _dot_escape(tree.root)
    lines.append(f'  "{root_id}" [kind=root];')
    for category in tree.categories:
        category_id = _dot_escape(category.name)
        lines.append(
            f'  "{category_id}" [label="{category_id}", kind=category, '
            f"provenance={category.provenance}];"
        )
        lines.append(f'  "{root_id}" -> "{category_id}";')
        for threat in category.threats:
            threat_id = _dot_escape(f"{category.name} :: {threat.name}")
            lines.append(
                f'  "{threat_id}" [label="{_dot_escape(threat.name)}", kind=threat, '
                f"provenance={threat.provenance}];"
            )
            lines.append(f'  "{category_id}" -> "{threat_id}";')
            for leaf in threat.leaves:
                leaf_id = _dot_escape(f"{category.name} :: {threat.name} :: {leaf.name}")
                lines.append(
                    f'  "{leaf_id}" [label="{_dot_escape(leaf.name)}", kind=attack, '
                    f"provenance={leaf.provenance}];"
                )
                lines.append(f'  "{threat_id}" -> "{leaf_id}";')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _export_json(tree: AttackTree) -> str:
    payload = {
        "root": tree.root,
        "categories": [
            {
                "name": category.name,
                "provenance": category.provenance,
                "threats": [
                    {
                        "name": threat.name,
                        "provenance": threat.provenance,
                        "leaves": [
                            {
                                "attack": leaf.attack,
                                "name": leaf.name,
                                "provenance": leaf.provenance,
                            }
                            for leaf in threat.leaves
                        ],
                    }
                    for threat in category.threats
                ],
            }
            for category in tree.categories
        ],
        "removed": list(tree.removed),
    }
    return json.dumps(payload, indent=2) + "\n"


def tree_from_json(text: str) -> AttackTree:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise fail(Code.E_SYNTAX, f"attack-tree document: {exc}") from None
    try:
        categories = [
            TreeCategory(
                name=category["name"],
                provenance=category["provenance"],
                threats=[
                    TreeThreat(
                        name=threat["name"],
                        provenance=threat["provenance"],
                        leaves=[
                            TreeLeaf(
                                attack=leaf["attack"],
                                name=leaf["name"],
                                provenance=leaf["provenance"],
                            )
                            for leaf in threat["leaves"]
                        ],
                    )
                    for threat in category["threats"]
                ],
            )
            for category in payload["categories"]
        ]
        return AttackTree(
            root=payload["root"],
            categories=categories,
            removed=tuple(payload.get("removed", ())),
        )
    except (KeyError, TypeError) as exc:
        raise fail(Code.E_SYNTAX, f"attack-tree document: bad structure ({exc})") from None
