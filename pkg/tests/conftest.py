"""Shared fixtures and helpers.

The corpus workspace is derived once per session; tests that mutate
documents work on throwaway copies. The random builders and the
cross-mapping oracle live here because both the property tests and the
acceptance gate use them.
"""

from __future__ import annotations

import contextlib
import io
import json
import random
import re
from pathlib import Path

import pytest

from archsec import cli, corpus, pipeline
from archsec.loaders import load_architecture, load_bindings, load_reference_model
from archsec.model import CONTROL_TIERS, ROLES, Architecture, BindingSet, ReferenceModel


@pytest.fixture(scope="session")
def corpus_ws():
    return corpus.load_corpus()


@pytest.fixture(scope="session")
def deriv(corpus_ws):
    return pipeline.derive(corpus_ws)


@pytest.fixture(scope="session")
def artifacts(deriv):
    return pipeline.render_artifacts(deriv)


@pytest.fixture()
def corpus_copy(tmp_path):
    dest = tmp_path / "ws"
    corpus.copy_corpus(dest)
    return dest


def edit_json(path: Path, mutate) -> None:
    doc = json.loads(path.read_text(encoding="utf-8"))
    mutate(doc)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def run_cli(argv: list[str]) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.main(argv)
    return code, out.getvalue(), err.getvalue()


# ---------------------------------------------------------------------------
# random workspace builders (architecture + models + bindings only)

ROLE_NAMES = tuple(ROLES)


def random_model_doc(rng: random.Random, index: int) -> dict:
    model_id = f"M{index}"
    prefix = model_id.lower()
    n_stacked = rng.randint(1, 3)
    budget = 5 - n_stacked
    parent_slot = None
    if budget >= 2 and n_stacked >= 2 and rng.random() < 0.5:
        parent_slot = rng.randrange(n_stacked)
        budget -= 2
    layers: list[dict] = [
        {"id": f"{prefix}_s{i}", "name": f"{model_id} stratum {i}", "kind": "stacked"}
        for i in range(n_stacked)
    ]
    if parent_slot is not None:
        parent_id = f"{prefix}_s{parent_slot}"
        layers.extend(
            {
                "id": f"{parent_id}_sub{j}",
                "name": f"{model_id} stratum {parent_slot}.{j}",
                "kind": "sub",
                "parent": parent_id,
            }
            for j in range(2)
        )
    if budget >= 1 and rng.random() < 0.5:
        layers.append(
            {"id": f"{prefix}_cross", "name": f"{model_id} crosscut", "kind": "transversal"}
        )
    return {
        "id": model_id,
        "name": f"Synthetic model {index}",
        "citation": "n/a",
        "focus": "randomized layout",
        "layers": layers,
    }


def random_setup(
    rng: random.Random,
) -> tuple[Architecture, dict[str, ReferenceModel], BindingSet]:
    """A loader-valid (architecture, models, bindings) triple within the
    size caps: at most 6 components, 3 models, 5 layers per model."""
    models: dict[str, ReferenceModel] = {}
    for index in range(rng.randint(1, 3)):
        model = load_reference_model(random_model_doc(rng, index))
        models[model.id] = model

    component_docs: list[dict] = []
    for i in range(rng.randint(1, 5)):
        roles = rng.sample(ROLE_NAMES, rng.randint(1, 3))
        doc = {"id": f"c{i}", "name": f"Unit {i}", "roles": roles}
        if "Control" in roles:
            doc["control_tier"] = rng.choice(CONTROL_TIERS)
        component_docs.append(doc)
    if len(component_docs) < 6 and rng.random() < 0.5:
        component_docs.append(
            {"id": "env", "name": "Surroundings", "roles": [], "is_environment": True}
        )
    architecture = load_architecture(
        {"name": "synthetic", "components": component_docs, "networks": []}
    )

    binding_docs: list[dict] = []
    override_docs: list[dict] = []
    for model in models.values():
        leaf_ids = [layer.id for layer in model.leaves]
        for role in ROLE_NAMES:
            if rng.random() < 0.75:
                targets = rng.sample(leaf_ids, rng.randint(1, min(2, len(leaf_ids))))
                binding_docs.append(
                    {"model": model.id, "role": role, "target_layers": targets}
                )
            if role == "Control":
                for tier in CONTROL_TIERS:
                    if rng.random() < 0.25:
                        targets = rng.sample(
                            leaf_ids, rng.randint(1, min(2, len(leaf_ids)))
                        )
                        binding_docs.append(
                            {
                                "model": model.id,
                                "role": role,
                                "tier_qualifier": tier,
                                "target_layers": targets,
                            }
                        )
        for component in architecture.components:
            if rng.random() < 0.2:
                override_docs.append(
                    {
                        "model": model.id,
                        "component": component.id,
                        "layer": rng.choice(leaf_ids),
                    }
                )
    bindings = load_bindings(
        {"bindings": binding_docs, "overrides": override_docs}, models
    )
    return architecture, models, bindings


def oracle_cross_mapping(
    architecture: Architecture,
    source: ReferenceModel,
    target: ReferenceModel,
    bindings: BindingSet,
) -> tuple[set[tuple[str, str]], set[str], set[str], str]:
    """Brute force over every (component, role, tier) pair: an edge exists
    exactly when the pair is allocated in both models. Overrides pair up
    component-wise. Returns (edge pairs, uncovered source, uncovered
    target, classification)."""
    pairs: set[tuple[str, str]] = set()
    for component in architecture.regular_components():
        for role, tier in component.role_pairs():
            src = bindings.resolve(source.id, role, tier)
            dst = bindings.resolve(target.id, role, tier)
            if src is None or dst is None:
                continue
            for src_layer in src.target_layers:
                for dst_layer in dst.target_layers:
                    pairs.add((src_layer, dst_layer))
    dst_overrides = bindings.overrides_for(target.id)
    for component_id, src_layers in bindings.overrides_for(source.id).items():
        for src_layer in src_layers:
            for dst_layer in dst_overrides.get(component_id, []):
                pairs.add((src_layer, dst_layer))

    addressable_src = {l.id for l in source.leaves} | {l.id for l in source.transversals}
    addressable_dst = {l.id for l in target.leaves} | {l.id for l in target.transversals}
    uncovered_src = addressable_src - {a for a, _ in pairs}
    uncovered_dst = addressable_dst - {b for _, b in pairs}
    classification = "total" if not uncovered_src and not uncovered_dst else "partial"
    return pairs, uncovered_src, uncovered_dst, classification


# ---------------------------------------------------------------------------
# minimal DOT reader used to check exported graphs

_DOT_TOKEN = re.compile(
    r'"(?:[^"\\]|\\.)*"|->|[{}\[\];=,]|[A-Za-z0-9_.:-]+',
)


def parse_dot_digraph(text: str) -> tuple[str, dict[str, dict[str, str]], list[tuple[str, str]]]:
    """Parses the subset of DOT the exporter emits; raises ValueError on
    anything structurally off. Returns (graph name, nodes with their
    attributes, edge list)."""

    def unquote(token: str) -> str:
        if token.startswith('"'):
            return token[1:-1].replace('\\"', '"').replace("\\\\", "\\")
        return token

    tokens = _DOT_TOKEN.findall(text)
    pos = 0

    def take(expected: str | None = None) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise ValueError("unexpected end of input")
        token = tokens[pos]
        pos += 1
        if expected is not None and token != expected:
            raise ValueError(f"expected {expected!r}, got {token!r}")
        return token

    def read_attrs() -> dict[str, str]:
        take("[")
        attrs: dict[str, str] = {}
        while True:
            name = take()
            if name == "]":
                return attrs
            take("=")
            attrs[name] = unquote(take())
            if pos < len(tokens) and tokens[pos] == ",":
                take(",")

    take("digraph")
    name = unquote(take())
    take("{")
    nodes: dict[str, dict[str, str]] = {}
    edges: list[tuple[str, str]] = []
    while True:
        token = take()
        if token == "}":
            break
        if token in ("rankdir", "node", "edge", "graph"):
            if tokens[pos] == "=":
                take("=")
                take()
            else:
                read_attrs()
            take(";")
            continue
        node_id = unquote(token)
        if tokens[pos] == "->":
            take("->")
            edges.append((node_id, unquote(take())))
            take(";")
        else:
            attrs = read_attrs() if tokens[pos] == "[" else {}
            nodes.setdefault(node_id, attrs)
            take(";")
    if pos != len(tokens):
        raise ValueError("trailing tokens after closing brace")
    return name, nodes, edges
