"""Feasibility checklist enumeration and the verdict ledger.

The checklist is the cartework for the manual review: one item per
(network, component, model, layer, consolidated attack) coordinate that the
mappings and the taxonomy make addressable. Verdicts land in an append-only
ledger; replaying the ledger over the same checklist reconstructs the exact
review state, and the last event per item wins.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import Code, fail
from .mapping import LayerMapping
from .model import Architecture, ReferenceModel
from .taxonomy import ProcessingOrder, TaxonomyResult

VERDICTS = ("feasible", "conditional", "infeasible", "not_applicable", "unreviewed")
UNREVIEWED = "unreviewed"


@dataclass(frozen=True)
class ItemKey:
    network: str
    target: str
    model: str
    layer: str
    attack: str  # canonical attack id of the consolidated group

    def as_dict(self) -> dict[str, str]:
        return {
            "network": self.network,
            "target": self.target,
            "model": self.model,
            "layer": self.layer,
            "attack": self.attack,
        }


@dataclass(frozen=True)
class ChecklistItem:
    seq: int
    key: ItemKey
    attack_name: str
    member: str  # model-local attack id that witnesses this coordinate
    threat_group: str


@dataclass
class Checklist:
    items: list[ChecklistItem]
    by_key: dict[ItemKey, ChecklistItem] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.by_key:
            self.by_key = {item.key: item for item in self.items}

    def __len__(self) -> int:
        return len(self.items)


def _member_order(
    architecture: Architecture,
    mappings: dict[str, LayerMapping],
    models: dict[str, ReferenceModel],
    member_ids: tuple[str, ...],
) -> list[str]:
    """Bottom-up by the lowest stacked-layer position allocated to the
    component in any model; declaration order breaks ties."""
    decl = {c.id: i for i, c in enumerate(architecture.components)}

    def lowest_position(component_id: str) -> int:
        best = 10**9
        for model_id, mapping in mappings.items():
            model = models[model_id]
            for layer_id in mapping.entries.get(component_id, ()):
                if not model.is_transversal(layer_id):
                    best = min(best, model.sort_position(layer_id))
        return best

    return sorted(member_ids, key=lambda cid: (lowest_position(cid), decl[cid]))


def enumerate_checklist(
    architecture: Architecture,
    mappings: dict[str, LayerMapping],
    taxonomy: TaxonomyResult,
    order: ProcessingOrder,
    models: dict[str, ReferenceModel],
) -> Checklist:
    """Networks in declaration order; members bottom-up; the environment is
    appended after the members of every network it can affect, so physical
    and transversal exposures get reviewed once per network. Models follow
    the processing order, layers run bottom-up with transversal layers last,
    attacks keep catalog declaration order."""
    items: list[ChecklistItem] = []
    seen: set[ItemKey] = set()
    environment = architecture.environment
    for network in architecture.networks:
        targets = _member_order(architecture, mappings, models, network.members)
        if environment is not None and any(
            mappings[m].entries.get(environment.id) for m in mappings
        ):
            targets = targets + [environment.id]
        for target in targets:
            for model_id in order.models:
                model = models[model_id]
                mapping = mappings[model_id]
                for layer_id in mapping.entries.get(target, ()):
                    for member_id, entry in taxonomy.members_by_location.get(
                        (model_id, layer_id), []
                    ):
                        key = ItemKey(
                            network=network.id,
                            target=target,
                            model=model_id,
                            layer=layer_id,
                            attack=entry.canonical,
                        )
                        if key in seen:
                            continue
                        seen.add(key)
                        items.append(
                            ChecklistItem(
                                seq=len(items) + 1,
                                key=key,
                                attack_name=entry.name,
                                member=member_id,
                                threat_group=entry.threat_group,
                            )
                        )
    return Checklist(items=items)


# ---------------------------------------------------------------------------
# verdict ledger


@dataclass(frozen=True)
class VerdictEvent:
    key: ItemKey
    verdict: str
    rationale: str
    conditions: str = ""

    def as_dict(self) -> dict[str, str]:
        payload = self.key.as_dict()
        payload["verdict"] = self.verdict
        payload["rationale"] = self.rationale
        if self.conditions:
            payload["conditions"] = self.conditions
        return payload


def parse_verdict_record(record: dict) -> VerdictEvent:
    if not isinstance(record, dict):
        raise fail(Code.E_SYNTAX, "verdict record must be an object")
    required = ("network", "target", "model", "layer", "attack", "verdict")
    for name in required:
        if name not in record or not isinstance(record[name], str):
            raise fail(Code.E_SYNTAX, f"verdict record is missing string field '{name}'")
    unknown = set(record) - set(required) - {"rationale", "conditions"}
    if unknown:
        raise fail(
            Code.E_SYNTAX, f"verdict record has unknown fields: {', '.join(sorted(unknown))}"
        )
    key = ItemKey(
        network=record["network"],
        target=record["target"],
        model=record["model"],
        layer=record["layer"],
        attack=record["attack"],
    )
    return VerdictEvent(
        key=key,
        verdict=record["verdict"],
        rationale=str(record.get("rationale", "")),
        conditions=str(record.get("conditions", "")),
    )


class Ledger:
    """Append-only verdict log bound to one checklist."""

    def __init__(self, checklist: Checklist):
        self.checklist = checklist
        self.events: list[VerdictEvent] = []
        self._state: dict[ItemKey, VerdictEvent] = {}

    def record(self, event: VerdictEvent) -> None:
        if event.key not in self.checklist.by_key:
            raise fail(
                Code.E_NO_ITEM,
                "no checklist item at "
                f"({event.key.network}, {event.key.target}, {event.key.model}, "
                f"{event.key.layer}, {event.key.attack})",
            )
        if event.verdict not in VERDICTS:
            raise fail(
                Code.E_BAD_VERDICT,
                f"unknown verdict '{event.verdict}' "
                f"(expected one of: {', '.join(VERDICTS)})",
            )
        if event.verdict != UNREVIEWED and not event.rationale.strip():
            raise fail(
                Code.E_BAD_VERDICT,
                f"verdict '{event.verdict}' requires a non-empty rationale",
            )
        if event.verdict == "conditional" and not event.conditions.strip():
            raise fail(
                Code.E_BAD_VERDICT,
                "verdict 'conditional' requires non-empty conditions",
            )
        if event.verdict != "conditional" and event.conditions.strip():
            raise fail(
                Code.E_BAD_VERDICT,
                f"verdict '{event.verdict}' must not carry conditions",
            )
        self.events.append(event)
        self._state[event.key] = event

    @classmethod
    def replay(cls, checklist: Checklist, events: list[VerdictEvent]) -> Ledger:
        ledger = cls(checklist)
        for event in events:
            ledger.record(event)
        return ledger

    def verdict_of(self, key: ItemKey) -> str:
        event = self._state.get(key)
        return event.verdict if event is not None else UNREVIEWED

    def event_of(self, key: ItemKey) -> VerdictEvent | None:
        return self._state.get(key)

    def unreviewed_keys(self) -> list[ItemKey]:
        return [
            item.key
            for item in self.checklist.items
            if self.verdict_of(item.key) == UNREVIEWED
        ]

    def is_complete(self) -> bool:
        return not self.unreviewed_keys()

    def state_snapshot(self) -> dict[ItemKey, tuple[str, str, str]]:
        return {
            item.key: (
                self.verdict_of(item.key),
                self._state[item.key].rationale if item.key in self._state else "",
                self._state[item.key].conditions if item.key in self._state else "",
            )
            for item in self.checklist.items
        }


def events_to_jsonl(events: list[VerdictEvent]) -> str:
    return "".join(json.dumps(e.as_dict()) + "\n" for e in events)


def events_from_jsonl(text: str) -> list[VerdictEvent]:
    events: list[VerdictEvent] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise fail(Code.E_SYNTAX, f"verdict ledger line {lineno}: {exc}") from None
        events.append(parse_verdict_record(record))
    return events


# ---------------------------------------------------------------------------
# completeness


@dataclass
class CompletenessReport:
    total: int
    counts: dict[str, int]
    unreviewed: list[ItemKey]

    @property
    def complete(self) -> bool:
        return not self.unreviewed


def completeness_report(ledger: Ledger) -> CompletenessReport:
    counts = {verdict: 0 for verdict in VERDICTS}
    for item in ledger.checklist.items:
        counts[ledger.verdict_of(item.key)] += 1
    return CompletenessReport(
        total=len(ledger.checklist),
        counts=counts,
        unreviewed=ledger.unreviewed_keys(),
    )


def render_completeness_markdown(report: CompletenessReport) -> str:
    lines = ["# Review completeness", ""]
    lines.append(f"Checklist items: {report.total}")
    lines.append("")
    lines.append("| Verdict | Items |")
    lines.append("| --- | --- |")
    for verdict in VERDICTS:
        lines.append(f"| {verdict} | {report.counts[verdict]} |")
    lines.append("")
    if report.complete:
        lines.append("Every checklist item carries a verdict; the review is complete.")
    else:
        lines.append(f"{len(report.unreviewed)} item(s) still lack a verdict:")
        lines.append("")
        for key in report.unreviewed:
            lines.append(
                f"- {key.network} / {key.target} / {key.model} / {key.layer} / {key.attack}"
            )
    lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# checklist rendering


def render_checklist_csv(checklist: Checklist, ledger: Ledger | None = None) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = ["seq", "network", "target", "model", "layer", "attack", "attack_name", "member"]
    if ledger is not None:
        header += ["verdict", "rationale", "conditions"]
    writer.writerow(header)
    for item in checklist.items:
        row = [
            str(item.seq),
            item.key.network,
            item.key.target,
            item.key.model,
            item.key.layer,
            item.key.attack,
            item.attack_name,
            item.member,
        ]
        if ledger is not None:
            event = ledger.event_of(item.key)
            if event is None:
                row += [UNREVIEWED, "", ""]
            else:
                row += [event.verdict, event.rationale, event.conditions]
        writer.writerow(row)
    return buffer.getvalue()


def checklist_to_json(checklist: Checklist, ledger: Ledger | None = None) -> str:
    rows = []
    for item in checklist.items:
        row = item.key.as_dict()
        row["seq"] = item.seq
        row["attack_name"] = item.attack_name
        row["member"] = item.member
        row["threat_group"] = item.threat_group
        if ledger is not None:
            event = ledger.event_of(item.key)
            row["verdict"] = event.verdict if event else UNREVIEWED
            if event is not None and event.rationale:
                row["rationale"] = event.rationale
            if event is not None and event.conditions:
                row["conditions"] = event.conditions
        rows.append(row)
    return json.dumps({"items": rows}, indent=2) + "\n"


# ---------------------------------------------------------------------------
# differential description


@dataclass
class DiffLine:
    item: ChecklistItem
    verdict: str
    rationale: str
    conditions: str


@dataclass
class ModelSection:
    model: str
    networks: list[tuple[str, list[DiffLine]]]  # (network id, lines)


@dataclass
class Differential:
    sections: list[ModelSection]


def differential_description(
    ledger: Ledger,
    order: ProcessingOrder,
    architecture: Architecture,
) -> Differential:
    """Per model, in processing order, the feasible or conditional findings
    not already surfaced by an earlier model for the same (target, attack)
    pair. The first model therefore reports everything it finds; later
    models contribute only what their extra layers expose."""
    report = completeness_report(ledger)
    if not report.complete:
        raise fail(
            Code.E_INCOMPLETE,
            f"differential requires a complete review; {len(report.unreviewed)} "
            "item(s) are still unreviewed",
        )
    exposed: set[tuple[str, str]] = set()  # (target, canonical attack)
    sections: list[ModelSection] = []
    for model_id in order.models:
        model_lines: dict[str, list[DiffLine]] = {n.id: [] for n in architecture.networks}
        surfaced_here: set[tuple[str, str]] = set()
        for item in ledger.checklist.items:
            if item.key.model != model_id:
                continue
            verdict = ledger.verdict_of(item.key)
            if verdict not in ("feasible", "conditional"):
                continue
            pair = (item.key.target, item.key.attack)
            if pair in exposed:
                continue
            surfaced_here.add(pair)
            event = ledger.event_of(item.key)
            model_lines[item.key.network].append(
                DiffLine(
                    item=item,
                    verdict=verdict,
                    rationale=event.rationale if event else "",
                    conditions=event.conditions if event else "",
                )
            )
        exposed.update(surfaced_here)
        sections.append(
            ModelSection(
                model=model_id,
                networks=[(n.id, model_lines[n.id]) for n in architecture.networks],
            )
        )
    return Differential(sections=sections)


def render_differential_markdown(
    differential: Differential,
    architecture: Architecture,
    models: dict[str, ReferenceModel],
) -> str:
    lines = ["# Differential feasibility findings", ""]
    lines.append(
        "Models appear in ascending detail; each section lists only the "
        "feasible or conditional findings that no earlier model surfaced "
        "for the same target and attack."
    )
    lines.append("")
    component_by_id = architecture.component_by_id
    network_by_id = architecture.network_by_id
    for section in differential.sections:
        model = models[section.model]
        lines.append(f"## {section.model}")
        lines.append("")
        any_line = False
        for network_id, diff_lines in section.networks:
            if not diff_lines:
                continue
            any_line = True
            network = network_by_id[network_id]
            lines.append(f"### {network.name}")
            lines.append("")
            for diff in diff_lines:
                target = component_by_id[diff.item.key.target]
                layer_name = model.layer_name(diff.item.key.layer)
                text = (
                    f"- {target.name} ({target.id}) @ {layer_name}: "
                    f"{diff.item.attack_name} [{diff.verdict}] {diff.rationale}"
                )
                if diff.conditions:
                    text += f" (conditions: {diff.conditions})"
                lines.append(text)
            lines.append("")
        if not any_line:
            lines.append("No additional findings beyond the earlier models.")
            lines.append("")
    return "\n".join(lines)
