"""Core domain types: reference models, architectures, catalogs, vulnerabilities.

All types are plain dataclasses. Documents are validated on load (see
loaders.py); code in the other modules may assume the invariants hold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class LayerKind(str, Enum):
    STACKED = "stacked"
    SUB = "sub"
    TRANSVERSAL = "transversal"


# Registered component roles. Architecture documents reference these ids;
# the descriptions are fixed here and not repeated per document.
ROLES: dict[str, str] = {
    "StoreProcess": "Elaboration and analysis of information",
    "Control": "Feedback management informed via sensing and actuating",
    "Communication": "Data exchange and bridging between locations, systems and technologies",
    "Sensing": "Capturing and quantifying of the physical world",
    "Actuating": "(Inter)action on the physical world",
}

# Control role hierarchy qualifiers, bottom-up.
CONTROL_TIERS: tuple[str, ...] = ("local", "supervisory", "higher")

# Closed set of attack-tree top-level categories.
TREE_CATEGORIES: tuple[str, ...] = (
    "Actuation",
    "Communication",
    "Feedback",
    "Computing",
    "Sensing",
)

# Sort key used to push transversal layers behind every stacked position.
TRANSVERSAL_POSITION = 10_000


@dataclass(frozen=True)
class Layer:
    id: str
    model: str
    name: str
    description: str
    kind: LayerKind
    parent: str | None = None  # set iff kind == SUB
    position: int | None = None  # stacked order, 0 = bottom; None otherwise


@dataclass
class ReferenceModel:
    """A layered reference model, with derived orderings precomputed."""

    id: str
    name: str
    citation: str
    focus: str
    layers: list[Layer]

    def __post_init__(self) -> None:
        self.by_id: dict[str, Layer] = {layer.id: layer for layer in self.layers}
        subs: dict[str, list[Layer]] = {}
        for layer in self.layers:
            if layer.kind is LayerKind.SUB and layer.parent is not None:
                subs.setdefault(layer.parent, []).append(layer)
        self.subs_of: dict[str, list[Layer]] = subs
        stacked = sorted(
            (l for l in self.layers if l.kind is LayerKind.STACKED),
            key=lambda l: l.position if l.position is not None else 0,
        )
        leaves: list[Layer] = []
        for layer in stacked:
            children = subs.get(layer.id)
            if children:
                leaves.extend(children)
            else:
                leaves.append(layer)
        self.leaves: list[Layer] = leaves
        self.transversals: list[Layer] = [
            l for l in self.layers if l.kind is LayerKind.TRANSVERSAL
        ]
        self.leaf_position: dict[str, int] = {
            layer.id: idx for idx, layer in enumerate(leaves)
        }

    @property
    def detail_rank(self) -> int:
        """Stacked leaf count plus transversal count; sub-layers count, parents do not."""
        return len(self.leaves) + len(self.transversals)

    def is_parent(self, layer_id: str) -> bool:
        return layer_id in self.subs_of

    def is_transversal(self, layer_id: str) -> bool:
        return self.by_id[layer_id].kind is LayerKind.TRANSVERSAL

    def addressable(self, layer_id: str) -> bool:
        """Layers that attacks, bindings, and overrides may reference directly."""
        return layer_id in self.by_id and not self.is_parent(layer_id)

    def sort_position(self, layer_id: str) -> int:
        """Bottom-up sort key over addressable layers; transversals sort last."""
        pos = self.leaf_position.get(layer_id)
        if pos is not None:
            return pos
        return TRANSVERSAL_POSITION + self.transversal_index(layer_id)

    def transversal_index(self, layer_id: str) -> int:
        for idx, layer in enumerate(self.transversals):
            if layer.id == layer_id:
                return idx
        return 0

    def layer_name(self, layer_id: str) -> str:
        return self.by_id[layer_id].name

    @property
    def tag(self) -> str:
        """Short display tag, e.g. RM_A -> A."""
        return self.id[3:] if self.id.startswith("RM_") else self.id


@dataclass
class Component:
    id: str
    name: str
    roles: tuple[str, ...]
    control_tier: str | None = None
    is_environment: bool = False
    notes: str = ""
    networks: tuple[str, ...] = ()  # derived from network membership at load

    def role_pairs(self) -> list[tuple[str, str | None]]:
        """(role, tier) pairs; the tier qualifier applies to Control only."""
        pairs: list[tuple[str, str | None]] = []
        for role in self.roles:
            tier = self.control_tier if role == "Control" else None
            pairs.append((role, tier))
        return pairs


@dataclass
class Network:
    id: str
    name: str
    medium: str
    members: tuple[str, ...]
    link_labels: tuple[str, ...] = ()


@dataclass
class Architecture:
    name: str
    components: list[Component]
    networks: list[Network]

    def __post_init__(self) -> None:
        self.component_by_id: dict[str, Component] = {
            c.id: c for c in self.components
        }
        self.network_by_id: dict[str, Network] = {n.id: n for n in self.networks}

    @property
    def environment(self) -> Component | None:
        for component in self.components:
            if component.is_environment:
                return component
        return None

    def regular_components(self) -> list[Component]:
        return [c for c in self.components if not c.is_environment]


@dataclass(frozen=True)
class RoleBinding:
    model: str
    role: str
    target_layers: tuple[str, ...]
    tier_qualifier: str | None = None


@dataclass(frozen=True)
class Override:
    """Declared direct component-to-layer allocation, bypassing role bindings."""

    model: str
    component: str
    layer: str


@dataclass
class BindingSet:
    bindings: list[RoleBinding]
    overrides: list[Override]

    def __post_init__(self) -> None:
        self.by_key: dict[tuple[str, str, str | None], RoleBinding] = {
            (b.model, b.role, b.tier_qualifier): b for b in self.bindings
        }

    def resolve(self, model: str, role: str, tier: str | None) -> RoleBinding | None:
        """Tier-specific binding wins; fall back to the unqualified one."""
        if tier is not None:
            exact = self.by_key.get((model, role, tier))
            if exact is not None:
                return exact
        return self.by_key.get((model, role, None))

    def overrides_for(self, model: str) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {}
        for override in self.overrides:
            if override.model == model:
                out.setdefault(override.component, []).append(override.layer)
        return out


@dataclass
class AttackDefinition:
    id: str
    name: str
    model: str
    layer: str
    threat_group: str
    definition: str
    origin_citation: str = ""
    traceable: bool = True
    decl_index: int = 0  # position within the declaring catalog document


@dataclass
class AliasDeclaration:
    """Declares that several model-specific attacks are the same attack."""

    canonical: str
    duplicates: tuple[str, ...]
    integration_note: str = ""

    def members(self) -> tuple[str, ...]:
        return (self.canonical, *self.duplicates)


@dataclass(frozen=True)
class Countermeasure:
    name: str
    description: str
    horizon: str  # "immediate" or "long-term"


COUNTERMEASURE_HORIZONS: tuple[str, ...] = ("immediate", "long-term")


@dataclass
class Vulnerability:
    id: str
    name: str
    description: str
    enabling_factors: tuple[str, ...]
    linked_threat_groups: tuple[str, ...]
    linked_attacks: tuple[str, ...]
    countermeasures: tuple[Countermeasure, ...]


@dataclass(frozen=True)
class CategoryAssignment:
    """Places an attack alias group under (category, threat) in the attack tree."""

    attack: str
    category: str
    threat: str
