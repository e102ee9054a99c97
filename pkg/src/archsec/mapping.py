"""Component-to-layer mappings and model-to-model cross-mappings.

Allocations are derived from declarative role bindings plus direct
overrides; cross-mappings connect two models' layers through shared
(component, role, tier) allocation pairs. Linking plain components across
models would over-generate edges whenever a component holds several roles,
so the role pair is the join key throughout.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .errors import Code, fail
from .model import (
    Architecture,
    BindingSet,
    ReferenceModel,
)


@dataclass
class LayerMapping:
    """Allocation of every architecture component onto one model's layers."""

    model: str
    entries: dict[str, tuple[str, ...]]  # component id -> layer ids, bottom-up
    overrides: dict[str, tuple[str, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class MappingViolation:
    kind: str  # "a": component fits no layer, "b": layer holds no component
    model: str
    subject: str  # component id or layer id
    message: str


@dataclass
class CrossMapping:
    source_model: str
    target_model: str
    edges: dict[str, tuple[str, ...]]  # source layer id -> target layer ids
    uncovered_source: tuple[str, ...]
    uncovered_target: tuple[str, ...]
    classification: str  # "total" | "partial"


@dataclass
class MatrixColumn:
    model: str
    cells: dict[str, tuple[str, ...]]  # base layer id -> aligned layer ids, top-down
    unaligned: tuple[str, ...]


@dataclass
class ComparisonMatrix:
    base_model: str
    base_rows: tuple[str, ...]  # base layer ids, top-down
    columns: list[MatrixColumn]


@dataclass
class AllocationRow:
    component: str
    label: str
    cells: dict[str, tuple[str, ...]]  # model id -> layer ids, top-down


# ---------------------------------------------------------------------------
# derivation


def _cell_order(model: ReferenceModel, layer_ids: set[str]) -> tuple[str, ...]:
    """Stacked leaves top-down, transversal layers last."""
    stacked = [l for l in layer_ids if not model.is_transversal(l)]
    transversal = [l for l in layer_ids if model.is_transversal(l)]
    stacked.sort(key=model.sort_position, reverse=True)
    transversal.sort(key=model.sort_position)
    return tuple(stacked + transversal)


def _bottom_up(model: ReferenceModel, layer_ids: set[str]) -> tuple[str, ...]:
    return tuple(sorted(layer_ids, key=model.sort_position))


def derive_layer_mapping(
    architecture: Architecture, model: ReferenceModel, bindings: BindingSet
) -> LayerMapping:
    overrides = bindings.overrides_for(model.id)
    for component_id in overrides:
        if component_id not in architecture.component_by_id:
            raise fail(
                Code.E_OVERRIDE_REF,
                f"override in model '{model.id}' names unknown component '{component_id}'",
            )

    transversal_ids = [layer.id for layer in model.transversals]
    entries: dict[str, tuple[str, ...]] = {}
    for component in architecture.components:
        allocated: set[str] = set()
        if not component.is_environment:
            for role, tier in component.role_pairs():
                binding = bindings.resolve(model.id, role, tier)
                if binding is not None:
                    allocated.update(binding.target_layers)
            # a component the model houses also sits on its transversal
            # layers; one no binding covers stays empty and is flagged by
            # the completeness check instead
            if allocated:
                allocated.update(transversal_ids)
        allocated.update(overrides.get(component.id, ()))
        entries[component.id] = _bottom_up(model, allocated)

    sorted_overrides = {
        component_id: _bottom_up(model, set(layers))
        for component_id, layers in overrides.items()
    }
    return LayerMapping(model=model.id, entries=entries, overrides=sorted_overrides)


def check_mapping_completeness(
    mapping: LayerMapping, architecture: Architecture, model: ReferenceModel
) -> list[MappingViolation]:
    """Constraint (a): every component fits somewhere; (b): every layer is used.

    Parent layers are covered through their sub-layers and are skipped;
    transversal layers are excluded from (b) by definition.
    """
    violations: list[MappingViolation] = []
    for component in architecture.regular_components():
        if not mapping.entries.get(component.id):
            violations.append(
                MappingViolation(
                    kind="a",
                    model=model.id,
                    subject=component.id,
                    message=(
                        f"component '{component.id}' ({component.name}) fits no layer "
                        f"of model '{model.id}'"
                    ),
                )
            )
    occupied: set[str] = set()
    for layers in mapping.entries.values():
        occupied.update(layers)
    for layer in model.leaves:
        if layer.id not in occupied:
            violations.append(
                MappingViolation(
                    kind="b",
                    model=model.id,
                    subject=layer.id,
                    message=(
                        f"layer '{layer.name}' of model '{model.id}' has no component mapped into it"
                    ),
                )
            )
    return violations


def derive_cross_mapping(
    architecture: Architecture,
    source: ReferenceModel,
    target: ReferenceModel,
    bindings: BindingSet,
) -> CrossMapping:
    """Edges over shared (component, role, tier) pairs; overrides pair with
    overrides of the same component. Transversal layers never carry edges."""
    edges: dict[str, set[str]] = {}

    def connect(src_layers: tuple[str, ...], dst_layers: tuple[str, ...]) -> None:
        for src_layer in src_layers:
            edges.setdefault(src_layer, set()).update(dst_layers)

    for component in architecture.regular_components():
        for role, tier in component.role_pairs():
            src_binding = bindings.resolve(source.id, role, tier)
            dst_binding = bindings.resolve(target.id, role, tier)
            if src_binding is not None and dst_binding is not None:
                connect(src_binding.target_layers, dst_binding.target_layers)

    src_overrides = bindings.overrides_for(source.id)
    dst_overrides = bindings.overrides_for(target.id)
    for component_id, src_layers in src_overrides.items():
        dst_layers = dst_overrides.get(component_id)
        if dst_layers:
            connect(tuple(src_layers), tuple(dst_layers))

    sorted_edges = {
        src: _bottom_up(target, dst_set)
        for src, dst_set in sorted(edges.items(), key=lambda kv: source.sort_position(kv[0]))
    }
    hit_targets: set[str] = set()
    for dst_set in sorted_edges.values():
        hit_targets.update(dst_set)

    addressable_source = [l.id for l in source.leaves] + [l.id for l in source.transversals]
    addressable_target = [l.id for l in target.leaves] + [l.id for l in target.transversals]
    uncovered_source = tuple(l for l in addressable_source if l not in sorted_edges or not sorted_edges[l])
    uncovered_target = tuple(l for l in addressable_target if l not in hit_targets)
    classification = "total" if not uncovered_source and not uncovered_target else "partial"
    return CrossMapping(
        source_model=source.id,
        target_model=target.id,
        edges=sorted_edges,
        uncovered_source=uncovered_source,
        uncovered_target=uncovered_target,
        classification=classification,
    )


def build_comparison_matrix(
    base: ReferenceModel,
    others: list[ReferenceModel],
    cross_mappings: dict[str, CrossMapping],
) -> ComparisonMatrix:
    """Row-align each model's layers against the base layers that reach them.

    cross_mappings is keyed by target model id and must hold CM(base -> m)
    for every listed model.
    """
    base_rows = tuple(l.id for l in reversed(base.leaves))
    columns: list[MatrixColumn] = []
    for other in others:
        cm = cross_mappings[other.id]
        cells: dict[str, set[str]] = {row: set() for row in base_rows}
        for src, targets in cm.edges.items():
            if src in cells:
                cells[src].update(targets)
        columns.append(
            MatrixColumn(
                model=other.id,
                cells={row: _cell_order(other, layer_set) for row, layer_set in cells.items()},
                unaligned=cm.uncovered_target,
            )
        )
    return ComparisonMatrix(base_model=base.id, base_rows=base_rows, columns=columns)


def allocation_table(
    architecture: Architecture,
    mappings: dict[str, LayerMapping],
    models: dict[str, ReferenceModel],
) -> list[AllocationRow]:
    """One row per component in declaration order, environment last."""
    rows: list[AllocationRow] = []
    ordered = architecture.regular_components() + (
        [architecture.environment] if architecture.environment else []
    )
    for component in ordered:
        label = (
            component.name
            if component.is_environment
            else f"{component.name} ({component.id})"
        )
        cells: dict[str, tuple[str, ...]] = {}
        for model_id, mapping in mappings.items():
            model = models[model_id]
            cells[model_id] = _cell_order(model, set(mapping.entries.get(component.id, ())))
        rows.append(AllocationRow(component=component.id, label=label, cells=cells))
    return rows


# ---------------------------------------------------------------------------
# rendering

EMPTY_CELL = "--"


def _names(model: ReferenceModel, layer_ids: tuple[str, ...]) -> str:
    if not layer_ids:
        return EMPTY_CELL
    return "; ".join(model.layer_name(layer_id) for layer_id in layer_ids)


def render_allocation_markdown(
    rows: list[AllocationRow], models: dict[str, ReferenceModel]
) -> str:
    model_ids = list(models)
    lines = ["# Component layer allocations", ""]
    lines.append("| Component | " + " | ".join(model_ids) + " |")
    lines.append("|" + " --- |" * (len(model_ids) + 1))
    for row in rows:
        cells = [_names(models[m], row.cells.get(m, ())) for m in model_ids]
        lines.append("| " + " | ".join([row.label] + cells) + " |")
    lines.append("")
    return "\n".join(lines)


def render_allocation_csv(rows: list[AllocationRow], models: dict[str, ReferenceModel]) -> str:
    model_ids = list(models)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["component", "label"] + model_ids)
    for row in rows:
        writer.writerow(
            [row.component, row.label]
            + [_names(models[m], row.cells.get(m, ())) for m in model_ids]
        )
    return buffer.getvalue()


def render_matrix_markdown(matrix: ComparisonMatrix, models: dict[str, ReferenceModel]) -> str:
    base = models[matrix.base_model]
    lines = [f"# Layer comparison (base: {matrix.base_model})", ""]
    header = [f"{matrix.base_model} (base)"] + [column.model for column in matrix.columns]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + " --- |" * len(header))
    for row in matrix.base_rows:
        cells = [base.layer_name(row)]
        for column in matrix.columns:
            cells.append(_names(models[column.model], column.cells.get(row, ())))
        lines.append("| " + " | ".join(cells) + " |")
    unaligned = ["(unaligned)"]
    for column in matrix.columns:
        unaligned.append(_names(models[column.model], column.unaligned))
    lines.append("| " + " | ".join(unaligned) + " |")
    lines.append("")
    return "\n".join(lines)


def render_matrix_csv(matrix: ComparisonMatrix, models: dict[str, ReferenceModel]) -> str:
    base = models[matrix.base_model]
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow([f"{matrix.base_model} (base)"] + [c.model for c in matrix.columns])
    for row in matrix.base_rows:
        writer.writerow(
            [base.layer_name(row)]
            + [_names(models[c.model], c.cells.get(row, ())) for c in matrix.columns]
        )
    writer.writerow(
        ["(unaligned)"] + [_names(models[c.model], c.unaligned) for c in matrix.columns]
    )
    return buffer.getvalue()


def cross_mapping_to_json(cm: CrossMapping) -> str:
    payload = {
        "source_model": cm.source_model,
        "target_model": cm.target_model,
        "edges": {src: list(dst) for src, dst in cm.edges.items()},
        "uncovered_source": list(cm.uncovered_source),
        "uncovered_target": list(cm.uncovered_target),
        "classification": cm.classification,
    }
    return json.dumps(payload, indent=2) + "\n"


def cross_mapping_from_json(text: str) -> CrossMapping:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise fail(Code.E_SYNTAX, f"cross-mapping document: {exc}") from None
    try:
        return CrossMapping(
            source_model=payload["source_model"],
            target_model=payload["target_model"],
            edges={src: tuple(dst) for src, dst in payload["edges"].items()},
            uncovered_source=tuple(payload["uncovered_source"]),
            uncovered_target=tuple(payload["uncovered_target"]),
            classification=payload["classification"],
        )
    except (KeyError, TypeError, AttributeError) as exc:
        raise fail(Code.E_SYNTAX, f"cross-mapping document: bad structure ({exc})") from None
