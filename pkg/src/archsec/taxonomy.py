"""Attack catalog consolidation across reference models.

The least detailed model serves as the base coordinate system. Every alias
group collapses to one canonical attack placed at a base layer; singleton
attacks from other models are projected onto the base layer that reaches
their home layer through the cross-mapping. Attacks on layers no base layer
reaches land in a separate base-uncovered section instead of being dropped,
so consolidation never loses catalog entries.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import Code, fail
from .mapping import CrossMapping
from .model import AliasDeclaration, AttackDefinition, ReferenceModel


@dataclass(frozen=True)
class ProcessingOrder:
    models: tuple[str, ...]  # model ids, ascending detail rank

    def index(self, model_id: str) -> int:
        return self.models.index(model_id)


def order_models_by_detail(models: list[ReferenceModel]) -> ProcessingOrder:
    """Ascending detail rank; ties keep the input (declaration) order."""
    ranked = sorted(models, key=lambda m: m.detail_rank)
    return ProcessingOrder(models=tuple(m.id for m in ranked))


@dataclass
class TaxonomyEntry:
    canonical: str  # attack id of the canonical member
    name: str
    model: str  # canonical's model
    home_layer: str  # canonical's layer in its own model
    base_layer: str | None  # None: no base layer reaches the home layer
    threat_group: str
    note: str
    also_seen: tuple[tuple[str, str], ...]  # (model id, member attack id)
    members: tuple[str, ...]  # every member attack id, canonical first
    traceable: bool = True
    conflicts: tuple[str, ...] = ()


@dataclass
class TaxonomyResult:
    base_model: str
    order: ProcessingOrder
    entries: list[TaxonomyEntry]  # placed at a base layer
    uncovered: list[TaxonomyEntry]  # base_layer is None
    untraceable: tuple[str, ...]
    duplicate_count: int
    member_to_entry: dict[str, TaxonomyEntry] = field(default_factory=dict)
    members_by_location: dict[tuple[str, str], list[tuple[str, TaxonomyEntry]]] = field(
        default_factory=dict
    )

    def all_entries(self) -> list[TaxonomyEntry]:
        return self.entries + self.uncovered

    def canonical_of(self, attack_id: str) -> str:
        return self.member_to_entry[attack_id].canonical


def flag_untraceable(attacks: list[AttackDefinition]) -> tuple[str, ...]:
    return tuple(a.id for a in attacks if not a.traceable)


def _reach_map(cm: CrossMapping) -> dict[str, list[str]]:
    """Invert base->model edges: each target layer lists its base sources."""
    reach: dict[str, list[str]] = {}
    for src, targets in cm.edges.items():
        for target in targets:
            reach.setdefault(target, []).append(src)
    return reach


def consolidate(
    attacks: list[AttackDefinition],
    aliases: list[AliasDeclaration],
    cross_mappings: dict[str, CrossMapping],
    models: dict[str, ReferenceModel],
    order: ProcessingOrder,
) -> TaxonomyResult:
    """cross_mappings maps each non-base model id to CM(base -> model);
    models preserves workspace declaration order (drives also_seen order)."""
    base_id = order.models[0]
    base = models[base_id]
    by_id = {a.id: a for a in attacks}
    global_index = {a.id: i for i, a in enumerate(attacks)}
    decl_index = {model_id: i for i, model_id in enumerate(models)}
    reach = {m: _reach_map(cm) for m, cm in cross_mappings.items()}

    grouped: set[str] = set()
    groups: list[tuple[tuple[str, ...], str]] = []
    for alias in aliases:
        for member in alias.members():
            if member not in by_id:
                raise fail(Code.E_SYNTAX, f"alias group references unknown attack '{member}'")
        groups.append((alias.members(), alias.integration_note))
        grouped.update(alias.members())
    for attack in attacks:
        if attack.id not in grouped:
            groups.append(((attack.id,), ""))

    def base_layer_for(attack: AttackDefinition) -> str | None:
        if attack.model == base_id:
            return attack.layer
        sources = reach.get(attack.model, {}).get(attack.layer, [])
        if not sources:
            return None
        return min(sources, key=base.sort_position)

    entries: list[TaxonomyEntry] = []
    uncovered: list[TaxonomyEntry] = []
    duplicate_count = 0
    for member_ids, integration_note in groups:
        members = sorted(
            member_ids,
            key=lambda mid: (order.index(by_id[mid].model), global_index[mid]),
        )
        canonical = by_id[members[0]]
        duplicate_count += len(members) - 1
        if len(members) > 1:
            for member_id in members:
                member = by_id[member_id]
                if member.model != base_id and base_layer_for(member) is None:
                    raise fail(
                        Code.E_UNREACHABLE,
                        f"aliased attack '{member_id}' sits on layer "
                        f"'{member.layer}' of model '{member.model}', which no "
                        f"'{base_id}' layer reaches",
                    )
        note = canonical.definition
        if integration_note:
            note = f"{note}; {integration_note}"
        also_seen = tuple(
            (by_id[mid].model, mid)
            for mid in sorted(
                members[1:],
                key=lambda mid: (decl_index[by_id[mid].model], global_index[mid]),
            )
        )
        entry = TaxonomyEntry(
            canonical=canonical.id,
            name=canonical.name,
            model=canonical.model,
            home_layer=canonical.layer,
            base_layer=base_layer_for(canonical),
            threat_group=canonical.threat_group,
            note=note,
            also_seen=also_seen,
            members=tuple(members),
            traceable=canonical.traceable,
        )
        if entry.base_layer is None:
            uncovered.append(entry)
        else:
            entries.append(entry)

    entries.sort(key=lambda e: global_index[e.canonical])
    uncovered.sort(key=lambda e: global_index[e.canonical])

    result = TaxonomyResult(
        base_model=base_id,
        order=order,
        entries=entries,
        uncovered=uncovered,
        untraceable=flag_untraceable(attacks),
        duplicate_count=duplicate_count,
    )
    for entry in result.all_entries():
        for member_id in entry.members:
            result.member_to_entry[member_id] = entry
            member = by_id[member_id]
            result.members_by_location.setdefault((member.model, member.layer), []).append(
                (member_id, entry)
            )
    for bucket in result.members_by_location.values():
        bucket.sort(key=lambda pair: global_index[pair[0]])

    _flag_conflicts(result, by_id)
    return result


def _flag_conflicts(result: TaxonomyResult, by_id: dict[str, AttackDefinition]) -> None:
    """Same attack name in different models without an alias declaration."""
    by_name: dict[str, list[TaxonomyEntry]] = {}
    seen: dict[str, set[int]] = {}
    for entry in result.all_entries():
        for member_id in entry.members:
            name = by_id[member_id].name.casefold()
            if id(entry) not in seen.setdefault(name, set()):
                seen[name].add(id(entry))
                by_name.setdefault(name, []).append(entry)
    for name, owners in by_name.items():
        if len(owners) < 2:
            continue
        models_involved = {by_id[m].model for e in owners for m in e.members if by_id[m].name.casefold() == name}
        if len(models_involved) < 2:
            continue
        for entry in owners:
            rivals = [e.canonical for e in owners if e is not entry]
            entry.conflicts = entry.conflicts + tuple(
                f"name collides with '{rival}' in another group; no alias declared"
                for rival in rivals
            )


# ---------------------------------------------------------------------------
# grouped view and rendering


@dataclass
class GroupedTaxonomy:
    base_model: str
    # base layer id -> threat group -> entries
    layers: dict[str, dict[str, list[TaxonomyEntry]]]
    uncovered: list[TaxonomyEntry]
    untraceable: tuple[str, ...]


def group_taxonomy(result: TaxonomyResult, models: dict[str, ReferenceModel]) -> GroupedTaxonomy:
    base = models[result.base_model]
    layers: dict[str, dict[str, list[TaxonomyEntry]]] = {
        layer.id: {} for layer in base.leaves
    }
    for layer in base.transversals:
        layers[layer.id] = {}
    # entries arrive in catalog declaration order; groups keep first-occurrence
    # order and rows within a group keep declaration order
    for entry in result.entries:
        groups = layers.setdefault(entry.base_layer, {})
        groups.setdefault(entry.threat_group, []).append(entry)
    return GroupedTaxonomy(
        base_model=result.base_model,
        layers=layers,
        uncovered=result.uncovered,
        untraceable=result.untraceable,
    )


def _display_name(entry: TaxonomyEntry, models: dict[str, ReferenceModel]) -> str:
    return f"{entry.name} ({models[entry.model].tag})"


def _also_seen_text(
    entry: TaxonomyEntry,
    by_id: dict[str, AttackDefinition],
    models: dict[str, ReferenceModel],
) -> str:
    if not entry.also_seen:
        return ""
    parts = [
        f"{by_id[member_id].name} ({models[model_id].tag})"
        for model_id, member_id in entry.also_seen
    ]
    return ", ".join(parts)


def render_taxonomy_markdown(
    result: TaxonomyResult,
    attacks: list[AttackDefinition],
    models: dict[str, ReferenceModel],
) -> str:
    by_id = {a.id: a for a in attacks}
    grouped = group_taxonomy(result, models)
    base = models[result.base_model]
    lines = [f"# Consolidated attack taxonomy (base: {result.base_model})", ""]

    def emit_section(title: str, entries_by_group: dict[str, list[TaxonomyEntry]]) -> None:
        lines.append(f"## {title}")
        lines.append("")
        total = sum(len(v) for v in entries_by_group.values())
        if not total:
            lines.append("No attacks recorded for this layer.")
            lines.append("")
            return
        lines.append("| Threat | Attack | Note | Also seen in |")
        lines.append("| --- | --- | --- | --- |")
        for group_name, bucket in entries_by_group.items():
            first = True
            for entry in bucket:
                threat_cell = group_name if first else ""
                first = False
                flags = ""
                if entry.conflicts:
                    flags = " ⚠"
                lines.append(
                    "| "
                    + " | ".join(
                        [
                            threat_cell,
                            _display_name(entry, models) + flags,
                            entry.note,
                            _also_seen_text(entry, by_id, models),
                        ]
                    )
                    + " |"
                )
        lines.append("")

    for layer in reversed(base.leaves):
        emit_section(f"{base.layer_name(layer.id)} layer", grouped.layers.get(layer.id, {}))
    for layer in base.transversals:
        emit_section(
            f"{base.layer_name(layer.id)} (transversal)", grouped.layers.get(layer.id, {})
        )

    if grouped.uncovered:
        lines.append(f"## Outside the {result.base_model} coordinate system")
        lines.append("")
        lines.append(
            "These attacks target layers no base layer reaches; they stay in "
            "the consolidated catalog under their home model."
        )
        lines.append("")
        lines.append("| Threat | Attack | Home layer | Note |")
        lines.append("| --- | --- | --- | --- |")
        for entry in grouped.uncovered:
            home = models[entry.model]
            lines.append(
                "| "
                + " | ".join(
                    [
                        entry.threat_group,
                        _display_name(entry, models),
                        home.layer_name(entry.home_layer),
                        entry.note,
                    ]
                )
                + " |"
            )
        lines.append("")

    if grouped.untraceable:
        lines.append("## Untraceable origins")
        lines.append("")
        lines.append(
            "The following attacks carry no traceable origin citation and are "
            "flagged for review:"
        )
        lines.append("")
        for attack_id in grouped.untraceable:
            attack = by_id[attack_id]
            lines.append(f"- {attack.name} ({models[attack.model].tag}): {attack.definition}")
        lines.append("")
    return "\n".join(lines)


def render_taxonomy_csv(
    result: TaxonomyResult,
    attacks: list[AttackDefinition],
    models: dict[str, ReferenceModel],
) -> str:
    by_id = {a.id: a for a in attacks}
    base = models[result.base_model]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(
        ["base_layer", "threat_group", "attack", "name", "model", "note", "also_seen"]
    )
    grouped = group_taxonomy(result, models)
    for layer in list(reversed(base.leaves)) + list(base.transversals):
        for group_name, bucket in grouped.layers.get(layer.id, {}).items():
            for entry in bucket:
                writer.writerow(
                    [
                        base.layer_name(layer.id),
                        group_name,
                        entry.canonical,
                        entry.name,
                        entry.model,
                        entry.note,
                        _also_seen_text(entry, by_id, models),
                    ]
                )
    for entry in grouped.uncovered:
        writer.writerow(
            [
                "(uncovered)",
                entry.threat_group,
                entry.canonical,
                entry.name,
                entry.model,
                entry.note,
                _also_seen_text(entry, by_id, models),
            ]
        )
    return buffer.getvalue()


def taxonomy_to_json(result: TaxonomyResult) -> str:
    def entry_payload(entry: TaxonomyEntry) -> dict:
        return {
            "canonical": entry.canonical,
            "name": entry.name,
            "model": entry.model,
            "home_layer": entry.home_layer,
            "base_layer": entry.base_layer,
            "threat_group": entry.threat_group,
            "note": entry.note,
            "also_seen": [list(pair) for pair in entry.also_seen],
            "members": list(entry.members),
            "traceable": entry.traceable,
            "conflicts": list(entry.conflicts),
        }

    payload = {
        "base_model": result.base_model,
        "processing_order": list(result.order.models),
        "entries": [entry_payload(e) for e in result.entries],
        "uncovered": [entry_payload(e) for e in result.uncovered],
        "untraceable": list(result.untraceable),
        "duplicate_count": result.duplicate_count,
    }
    return json.dumps(payload, indent=2) + "\n"
