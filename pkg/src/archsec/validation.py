"""Cross-document reference checks.

Single-document shape problems are hard load errors; everything here is a
reference between two documents that parsed fine on their own. Issues are
collected, not raised, so one run reports every problem at once.
"""

from __future__ import annotations

from dataclasses import dataclass

from .workspace import Workspace


@dataclass(frozen=True)
class ValidationIssue:
    kind: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.message}"


def validate_workspace(workspace: Workspace) -> list[ValidationIssue]:
    issues: list[ValidationIssue] = []
    attack_ids = {a.id for a in workspace.attacks}
    threat_groups = {a.threat_group for a in workspace.attacks}
    component_ids = set(workspace.architecture.component_by_id)

    for override in workspace.bindings.overrides:
        if override.component not in component_ids:
            issues.append(
                ValidationIssue(
                    kind="OVERRIDE_REF",
                    subject=override.component,
                    message=(
                        f"override onto layer '{override.layer}' of model "
                        f"'{override.model}' names unknown component "
                        f"'{override.component}'"
                    ),
                )
            )

    for alias in workspace.aliases:
        for member in alias.members():
            if member not in attack_ids:
                issues.append(
                    ValidationIssue(
                        kind="DANGLING_ALIAS",
                        subject=alias.canonical,
                        message=(
                            f"alias group for '{alias.canonical}' references "
                            f"unknown attack '{member}'"
                        ),
                    )
                )

    for vulnerability in workspace.vulnerabilities:
        for attack_id in vulnerability.linked_attacks:
            if attack_id not in attack_ids:
                issues.append(
                    ValidationIssue(
                        kind="DANGLING_ATTACK",
                        subject=vulnerability.id,
                        message=(
                            f"vulnerability '{vulnerability.id}' links unknown "
                            f"attack '{attack_id}'"
                        ),
                    )
                )
        for group in vulnerability.linked_threat_groups:
            if group not in threat_groups:
                issues.append(
                    ValidationIssue(
                        kind="UNKNOWN_THREAT",
                        subject=vulnerability.id,
                        message=(
                            f"vulnerability '{vulnerability.id}' links threat group "
                            f"'{group}', which no catalog attack declares"
                        ),
                    )
                )

    group_of: dict[str, str] = {}
    for alias in workspace.aliases:
        for member in alias.members():
            group_of[member] = alias.canonical
    seen_assignment: dict[str, tuple[str, str]] = {}
    for assignment in workspace.assignments:
        if assignment.attack not in attack_ids:
            issues.append(
                ValidationIssue(
                    kind="DANGLING_ASSIGNMENT",
                    subject=assignment.attack,
                    message=(
                        f"tree assignment references unknown attack "
                        f"'{assignment.attack}'"
                    ),
                )
            )
            continue
        group_key = group_of.get(assignment.attack, assignment.attack)
        target = (assignment.category, assignment.threat)
        previous = seen_assignment.get(group_key)
        if previous is not None and previous != target:
            issues.append(
                ValidationIssue(
                    kind="DUPLICATE_ASSIGNMENT",
                    subject=assignment.attack,
                    message=(
                        f"attack group '{group_key}' carries conflicting tree "
                        f"assignments {previous} and {target}"
                    ),
                )
            )
        seen_assignment.setdefault(group_key, target)

    if workspace.source_tree is not None:
        known_threats = {
            threat
            for threats in workspace.source_tree.categories.values()
            for threat in threats
        }
        for source_name in workspace.source_tree.renames:
            if source_name not in known_threats:
                issues.append(
                    ValidationIssue(
                        kind="RENAME_REF",
                        subject=source_name,
                        message=(
                            f"source-tree rename starts from unknown threat "
                            f"'{source_name}'"
                        ),
                    )
                )

    return issues
