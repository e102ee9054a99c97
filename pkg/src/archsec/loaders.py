"""Document loaders: parsed JSON structures to validated domain values.

Loaders are pure and independent: each checks the invariants that one
document (plus, where stated, the already-loaded reference models) can
establish. Cross-document referential integrity is the job of
validation.validate_workspace. Strict mode rejects unknown fields; pass
lax=True to ignore them.
"""

from __future__ import annotations

from typing import Any

from .errors import ArchsecError, Code, fail
from .model import (
    CONTROL_TIERS,
    COUNTERMEASURE_HORIZONS,
    ROLES,
    TREE_CATEGORIES,
    AliasDeclaration,
    Architecture,
    AttackDefinition,
    BindingSet,
    CategoryAssignment,
    Component,
    Countermeasure,
    Layer,
    LayerKind,
    Network,
    Override,
    ReferenceModel,
    RoleBinding,
    Vulnerability,
)


# ---------------------------------------------------------------------------
# field plumbing


def _mapping(value: Any, where: str) -> dict:
    if not isinstance(value, dict):
        raise fail(Code.E_SYNTAX, f"{where}: expected an object")
    return value


def _fields(doc: dict, where: str, required: list[str], optional: list[str], lax: bool) -> None:
    for key in required:
        if key not in doc:
            raise fail(Code.E_SYNTAX, f"{where}: missing field '{key}'")
    if not lax:
        allowed = set(required) | set(optional)
        for key in doc:
            if key not in allowed:
                raise fail(Code.E_SYNTAX, f"{where}: unknown field '{key}'")


def _str(doc: dict, key: str, where: str, default: str | None = None) -> str:
    value = doc.get(key, default)
    if not isinstance(value, str):
        raise fail(Code.E_SYNTAX, f"{where}: field '{key}' must be a string")
    return value


def _opt_str(doc: dict, key: str, where: str) -> str | None:
    value = doc.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise fail(Code.E_SYNTAX, f"{where}: field '{key}' must be a string")
    return value


def _bool(doc: dict, key: str, where: str, default: bool) -> bool:
    value = doc.get(key, default)
    if not isinstance(value, bool):
        raise fail(Code.E_SYNTAX, f"{where}: field '{key}' must be a boolean")
    return value


def _str_list(doc: dict, key: str, where: str, default: list | None = None) -> list[str]:
    value = doc.get(key, default if default is not None else None)
    if value is None:
        raise fail(Code.E_SYNTAX, f"{where}: missing field '{key}'")
    if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
        raise fail(Code.E_SYNTAX, f"{where}: field '{key}' must be a list of strings")
    return value


def _obj_list(doc: dict, key: str, where: str) -> list[dict]:
    value = doc.get(key)
    if not isinstance(value, list) or any(not isinstance(v, dict) for v in value):
        raise fail(Code.E_SYNTAX, f"{where}: field '{key}' must be a list of objects")
    return value


# ---------------------------------------------------------------------------
# reference models


def load_reference_model(doc: Any, lax: bool = False) -> ReferenceModel:
    doc = _mapping(doc, "model document")
    _fields(doc, "model document", ["id", "name", "citation", "focus", "layers"], [], lax)
    model_id = _str(doc, "id", "model document")
    where = f"model '{model_id}'"
    raw_layers = _obj_list(doc, "layers", where)
    if not raw_layers:
        raise fail(Code.E_EMPTY, f"{where}: declares no layers")

    layers: list[Layer] = []
    seen: set[str] = set()
    next_position = 0
    for raw in raw_layers:
        _fields(raw, f"{where} layer", ["id", "name", "kind"], ["description", "parent", "position"], lax)
        layer_id = _str(raw, "id", f"{where} layer")
        lwhere = f"{where} layer '{layer_id}'"
        if layer_id in seen:
            raise fail(Code.E_DUP_LAYER, f"{lwhere}: duplicate layer id")
        seen.add(layer_id)
        kind_text = _str(raw, "kind", lwhere)
        try:
            kind = LayerKind(kind_text)
        except ValueError:
            raise fail(Code.E_SYNTAX, f"{lwhere}: unknown kind '{kind_text}'") from None
        parent = _opt_str(raw, "parent", lwhere)
        position = raw.get("position")
        if position is not None and not isinstance(position, int):
            raise fail(Code.E_SYNTAX, f"{lwhere}: position must be an integer")
        if kind is LayerKind.SUB:
            if parent is None:
                raise fail(Code.E_PARENT, f"{lwhere}: sub-layer requires a parent")
        elif parent is not None:
            raise fail(Code.E_PARENT, f"{lwhere}: only sub-layers may declare a parent")
        if kind is LayerKind.STACKED:
            if position is None:
                position = next_position
            if position != next_position:
                raise fail(
                    Code.E_SYNTAX,
                    f"{lwhere}: stacked positions must be contiguous from 0 "
                    f"(expected {next_position}, got {position})",
                )
            next_position += 1
        elif position is not None:
            raise fail(Code.E_SYNTAX, f"{lwhere}: only stacked layers carry a position")
        layers.append(
            Layer(
                id=layer_id,
                model=model_id,
                name=_str(raw, "name", lwhere),
                description=_str(raw, "description", lwhere, default=""),
                kind=kind,
                parent=parent,
                position=position,
            )
        )

    if next_position == 0:
        raise fail(Code.E_EMPTY, f"{where}: declares no stacked layers")
    by_id = {layer.id: layer for layer in layers}
    for layer in layers:
        if layer.kind is LayerKind.SUB:
            parent = by_id.get(layer.parent or "")
            if parent is None or parent.kind is not LayerKind.STACKED:
                raise fail(
                    Code.E_PARENT,
                    f"{where} layer '{layer.id}': parent '{layer.parent}' is missing or not stacked",
                )

    return ReferenceModel(
        id=model_id,
        name=_str(doc, "name", where),
        citation=_str(doc, "citation", where),
        focus=_str(doc, "focus", where),
        layers=layers,
    )


# ---------------------------------------------------------------------------
# architecture


def load_architecture(doc: Any, lax: bool = False) -> Architecture:
    doc = _mapping(doc, "architecture document")
    _fields(doc, "architecture document", ["name", "components", "networks"], [], lax)
    name = _str(doc, "name", "architecture document")

    components: list[Component] = []
    seen: set[str] = set()
    environment_seen = False
    for raw in _obj_list(doc, "components", "architecture"):
        _fields(
            raw,
            "component",
            ["id", "name", "roles"],
            ["control_tier", "is_environment", "notes"],
            lax,
        )
        comp_id = _str(raw, "id", "component")
        where = f"component '{comp_id}'"
        if comp_id in seen:
            raise fail(Code.E_DUP_COMPONENT, f"{where}: duplicate component id")
        seen.add(comp_id)
        roles = tuple(_str_list(raw, "roles", where))
        for role in roles:
            if role not in ROLES:
                raise fail(Code.E_ROLE, f"{where}: unknown role '{role}'")
        if len(set(roles)) != len(roles):
            raise fail(Code.E_ROLE, f"{where}: duplicate role")
        is_environment = _bool(raw, "is_environment", where, default=False)
        control_tier = _opt_str(raw, "control_tier", where)
        if is_environment:
            if environment_seen:
                raise fail(Code.E_SYNTAX, f"{where}: more than one environment component")
            environment_seen = True
            if roles:
                raise fail(Code.E_ROLE, f"{where}: environment component must not declare roles")
        elif not roles:
            raise fail(Code.E_ROLELESS, f"{where}: component declares no roles")
        if "Control" in roles:
            if control_tier not in CONTROL_TIERS:
                raise fail(
                    Code.E_TIER,
                    f"{where}: role Control requires control_tier in {list(CONTROL_TIERS)}",
                )
        elif control_tier is not None:
            raise fail(Code.E_TIER, f"{where}: control_tier given without the Control role")
        components.append(
            Component(
                id=comp_id,
                name=_str(raw, "name", where),
                roles=roles,
                control_tier=control_tier,
                is_environment=is_environment,
                notes=_str(raw, "notes", where, default=""),
            )
        )

    by_id = {c.id: c for c in components}
    networks: list[Network] = []
    seen_nets: set[str] = set()
    for raw in _obj_list(doc, "networks", "architecture"):
        _fields(raw, "network", ["id", "name", "members"], ["medium", "link_labels"], lax)
        net_id = _str(raw, "id", "network")
        where = f"network '{net_id}'"
        if net_id in seen_nets:
            raise fail(Code.E_SYNTAX, f"{where}: duplicate network id")
        seen_nets.add(net_id)
        members = tuple(_str_list(raw, "members", where))
        if len(set(members)) != len(members):
            raise fail(Code.E_NET_REF, f"{where}: duplicate member")
        for member in members:
            component = by_id.get(member)
            if component is None:
                raise fail(Code.E_NET_REF, f"{where}: unknown member '{member}'")
            if component.is_environment:
                raise fail(Code.E_NET_REF, f"{where}: environment cannot join a network")
        if len(members) < 2:
            raise fail(Code.E_NET_SIZE, f"{where}: a network needs at least two members")
        networks.append(
            Network(
                id=net_id,
                name=_str(raw, "name", where),
                medium=_str(raw, "medium", where, default=""),
                members=members,
                link_labels=tuple(_str_list(raw, "link_labels", where, default=[])),
            )
        )

    # fill the derived membership view on components
    memberships: dict[str, list[str]] = {c.id: [] for c in components}
    for network in networks:
        for member in network.members:
            memberships[member].append(network.id)
    for component in components:
        component.networks = tuple(memberships[component.id])

    return Architecture(name=name, components=components, networks=networks)


# ---------------------------------------------------------------------------
# role bindings and overrides


def load_bindings(doc: Any, models: dict[str, ReferenceModel], lax: bool = False) -> BindingSet:
    doc = _mapping(doc, "bindings document")
    _fields(doc, "bindings document", ["bindings"], ["overrides"], lax)

    bindings: list[RoleBinding] = []
    seen: set[tuple[str, str, str | None]] = set()
    for raw in _obj_list(doc, "bindings", "bindings document"):
        _fields(raw, "binding", ["model", "role", "target_layers"], ["tier_qualifier"], lax)
        model_id = _str(raw, "model", "binding")
        role = _str(raw, "role", "binding")
        where = f"binding ({model_id}, {role})"
        model = models.get(model_id)
        if model is None:
            raise fail(Code.E_SYNTAX, f"{where}: unknown model '{model_id}'")
        if role not in ROLES:
            raise fail(Code.E_ROLE, f"{where}: unknown role '{role}'")
        tier = _opt_str(raw, "tier_qualifier", where)
        if tier is not None:
            if role != "Control":
                raise fail(Code.E_TIER, f"{where}: tier qualifier on a non-Control role")
            if tier not in CONTROL_TIERS:
                raise fail(Code.E_TIER, f"{where}: unknown tier '{tier}'")
        targets = tuple(_str_list(raw, "target_layers", where))
        if not targets:
            raise fail(Code.E_SYNTAX, f"{where}: target_layers must not be empty")
        for layer_id in targets:
            if layer_id not in model.by_id:
                raise fail(Code.E_LAYER_REF, f"{where}: unknown layer '{layer_id}'")
            if model.is_transversal(layer_id):
                raise fail(Code.E_LAYER_REF, f"{where}: may not target transversal layer '{layer_id}'")
            if model.is_parent(layer_id):
                raise fail(Code.E_LAYER_REF, f"{where}: may not target parent layer '{layer_id}'")
        key = (model_id, role, tier)
        if key in seen:
            raise fail(Code.E_SYNTAX, f"{where}: duplicate binding for tier {tier!r}")
        seen.add(key)
        bindings.append(RoleBinding(model=model_id, role=role, target_layers=targets, tier_qualifier=tier))

    overrides: list[Override] = []
    for raw in _obj_list(doc, "overrides", "bindings document") if "overrides" in doc else []:
        _fields(raw, "override", ["model", "component", "layer"], [], lax)
        model_id = _str(raw, "model", "override")
        layer_id = _str(raw, "layer", "override")
        component = _str(raw, "component", "override")
        where = f"override ({model_id}, {component})"
        model = models.get(model_id)
        if model is None:
            raise fail(Code.E_OVERRIDE_REF, f"{where}: unknown model '{model_id}'")
        if layer_id not in model.by_id:
            raise fail(Code.E_OVERRIDE_REF, f"{where}: unknown layer '{layer_id}'")
        if model.is_transversal(layer_id) or model.is_parent(layer_id):
            raise fail(Code.E_OVERRIDE_REF, f"{where}: layer '{layer_id}' is not directly allocatable")
        overrides.append(Override(model=model_id, component=component, layer=layer_id))

    return BindingSet(bindings=bindings, overrides=overrides)


# ---------------------------------------------------------------------------
# attack catalogs


def load_attack_catalog(
    doc: Any, models: dict[str, ReferenceModel], lax: bool = False
) -> list[AttackDefinition]:
    doc = _mapping(doc, "catalog document")
    _fields(doc, "catalog document", ["attacks"], ["model"], lax)
    default_model = _opt_str(doc, "model", "catalog document")

    attacks: list[AttackDefinition] = []
    seen: set[str] = set()
    for index, raw in enumerate(_obj_list(doc, "attacks", "catalog document")):
        _fields(
            raw,
            "attack",
            ["id", "name", "layer", "threat_group", "definition"],
            ["model", "origin_citation", "traceable"],
            lax,
        )
        attack_id = _str(raw, "id", "attack")
        where = f"attack '{attack_id}'"
        if attack_id in seen:
            raise fail(Code.E_DUP_ATTACK, f"{where}: duplicate attack id")
        seen.add(attack_id)
        model_id = _opt_str(raw, "model", where) or default_model
        if model_id is None:
            raise fail(Code.E_SYNTAX, f"{where}: no model given and the catalog declares no default")
        model = models.get(model_id)
        if model is None:
            raise fail(Code.E_SYNTAX, f"{where}: unknown model '{model_id}'")
        layer_id = _str(raw, "layer", where)
        if layer_id not in model.by_id:
            raise fail(Code.E_LAYER_REF, f"{where}: unknown layer '{layer_id}' in model '{model_id}'")
        if model.is_parent(layer_id):
            raise fail(
                Code.E_LAYER_REF,
                f"{where}: layer '{layer_id}' groups sub-layers and is not directly attackable",
            )
        attacks.append(
            AttackDefinition(
                id=attack_id,
                name=_str(raw, "name", where),
                model=model_id,
                layer=layer_id,
                threat_group=_str(raw, "threat_group", where),
                definition=_str(raw, "definition", where),
                origin_citation=_str(raw, "origin_citation", where, default=""),
                traceable=_bool(raw, "traceable", where, default=True),
                decl_index=index,
            )
        )
    return attacks


# ---------------------------------------------------------------------------
# aliases, vulnerabilities, assignments


def load_aliases(doc: Any, lax: bool = False) -> list[AliasDeclaration]:
    doc = _mapping(doc, "aliases document")
    _fields(doc, "aliases document", ["groups"], [], lax)
    groups: list[AliasDeclaration] = []
    claimed: set[str] = set()
    for raw in _obj_list(doc, "groups", "aliases document"):
        _fields(raw, "alias group", ["canonical", "duplicates"], ["integration_note"], lax)
        canonical = _str(raw, "canonical", "alias group")
        where = f"alias group '{canonical}'"
        duplicates = tuple(_str_list(raw, "duplicates", where))
        if not duplicates:
            raise fail(Code.E_SYNTAX, f"{where}: needs at least one duplicate")
        if canonical in duplicates:
            raise fail(Code.E_SYNTAX, f"{where}: canonical listed among its duplicates")
        for member in (canonical, *duplicates):
            if member in claimed:
                raise fail(Code.E_ALIAS_OVERLAP, f"{where}: '{member}' already belongs to another group")
            claimed.add(member)
        groups.append(
            AliasDeclaration(
                canonical=canonical,
                duplicates=duplicates,
                integration_note=_str(raw, "integration_note", where, default=""),
            )
        )
    return groups


def load_vulnerabilities(doc: Any, lax: bool = False) -> list[Vulnerability]:
    doc = _mapping(doc, "vulnerabilities document")
    _fields(doc, "vulnerabilities document", ["vulnerabilities"], [], lax)
    out: list[Vulnerability] = []
    seen: set[str] = set()
    for raw in _obj_list(doc, "vulnerabilities", "vulnerabilities document"):
        _fields(
            raw,
            "vulnerability",
            ["id", "name", "description"],
            ["enabling_factors", "linked_threat_groups", "linked_attacks", "countermeasures"],
            lax,
        )
        vul_id = _str(raw, "id", "vulnerability")
        where = f"vulnerability '{vul_id}'"
        if vul_id in seen:
            raise fail(Code.E_SYNTAX, f"{where}: duplicate vulnerability id")
        seen.add(vul_id)
        countermeasures: list[Countermeasure] = []
        for cm in _obj_list(raw, "countermeasures", where) if "countermeasures" in raw else []:
            _fields(cm, "countermeasure", ["name", "horizon"], ["description"], lax)
            horizon = _str(cm, "horizon", f"{where} countermeasure")
            if horizon not in COUNTERMEASURE_HORIZONS:
                raise fail(
                    Code.E_SYNTAX,
                    f"{where}: countermeasure horizon must be one of {list(COUNTERMEASURE_HORIZONS)}",
                )
            countermeasures.append(
                Countermeasure(
                    name=_str(cm, "name", where),
                    description=_str(cm, "description", where, default=""),
                    horizon=horizon,
                )
            )
        out.append(
            Vulnerability(
                id=vul_id,
                name=_str(raw, "name", where),
                description=_str(raw, "description", where),
                enabling_factors=tuple(_str_list(raw, "enabling_factors", where, default=[])),
                linked_threat_groups=tuple(_str_list(raw, "linked_threat_groups", where, default=[])),
                linked_attacks=tuple(_str_list(raw, "linked_attacks", where, default=[])),
                countermeasures=tuple(countermeasures),
            )
        )
    return out


def load_assignments(doc: Any, lax: bool = False) -> list[CategoryAssignment]:
    doc = _mapping(doc, "assignments document")
    _fields(doc, "assignments document", ["assignments"], [], lax)
    out: list[CategoryAssignment] = []
    for raw in _obj_list(doc, "assignments", "assignments document"):
        _fields(raw, "assignment", ["attack", "category", "threat"], [], lax)
        attack = _str(raw, "attack", "assignment")
        where = f"assignment '{attack}'"
        category = _str(raw, "category", where)
        if category not in TREE_CATEGORIES:
            raise fail(Code.E_SYNTAX, f"{where}: unknown category '{category}'")
        out.append(
            CategoryAssignment(attack=attack, category=category, threat=_str(raw, "threat", where))
        )
    return out


# ---------------------------------------------------------------------------
# source tree documents


def load_source_tree(doc: Any, lax: bool = False) -> "SourceTree":
    from .attack_tree import SourceTree  # local import to avoid a cycle

    doc = _mapping(doc, "source tree document")
    _fields(doc, "source tree document", ["name", "categories"], ["citation", "renames"], lax)
    categories: dict[str, tuple[str, ...]] = {}
    for raw in _obj_list(doc, "categories", "source tree"):
        _fields(raw, "source category", ["name", "threats"], [], lax)
        cat_name = _str(raw, "name", "source category")
        if cat_name in categories:
            raise fail(Code.E_SYNTAX, f"source category '{cat_name}': duplicate")
        categories[cat_name] = tuple(
            _str_list(raw, "threats", f"source category '{cat_name}'")
        )
    renames = doc.get("renames", {})
    if not isinstance(renames, dict) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in renames.items()
    ):
        raise fail(Code.E_SYNTAX, "source tree: renames must map strings to strings")
    return SourceTree(
        name=_str(doc, "name", "source tree"),
        citation=_str(doc, "citation", "source tree", default=""),
        categories=categories,
        renames=dict(renames),
    )


__all__ = [
    "load_reference_model",
    "load_architecture",
    "load_bindings",
    "load_attack_catalog",
    "load_aliases",
    "load_vulnerabilities",
    "load_assignments",
    "load_source_tree",
]
