"""Model ordering, catalog consolidation, and the grouped taxonomy view."""

from __future__ import annotations

import pytest

from archsec.errors import ArchsecError
from archsec.loaders import load_reference_model
from archsec.model import AliasDeclaration
from archsec.taxonomy import (
    consolidate,
    group_taxonomy,
    order_models_by_detail,
)


def test_detail_ranks_and_processing_order(corpus_ws, deriv):
    ranks = {m.id: m.detail_rank for m in corpus_ws.models.values()}
    assert ranks == {"RM_A": 3, "RM_H": 7, "RM_V": 4, "RM_L": 4}
    assert deriv.order.models == ("RM_A", "RM_V", "RM_L", "RM_H")


def test_rank_ties_break_by_declaration_order():
    def flat(model_id: str, n: int):
        return load_reference_model(
            {
                "id": model_id,
                "name": model_id,
                "citation": "n/a",
                "focus": "t",
                "layers": [
                    {"id": f"l{i}", "name": f"L{i}", "kind": "stacked"}
                    for i in range(n)
                ],
            }
        )

    first, second, third = flat("RM_1", 2), flat("RM_2", 2), flat("RM_3", 1)
    order = order_models_by_detail([first, second, third])
    assert order.models == ("RM_3", "RM_1", "RM_2")


def test_consolidation_counts_on_corpus(deriv, corpus_ws):
    taxonomy = deriv.taxonomy
    assert len(corpus_ws.attacks) == 54
    assert taxonomy.duplicate_count == 9
    assert len(taxonomy.entries) == 42
    assert len(taxonomy.uncovered) == 3
    assert len(taxonomy.all_entries()) == 54 - 9
    assert {e.canonical for e in taxonomy.uncovered} == {
        "rm_h.direct-physical-intervention",
        "rm_h.information-extraction",
        "rm_h.excuse-attack",
    }
    assert set(taxonomy.untraceable) == {"rm_h.excuse-attack", "rm_v.instant-on-gap"}


def test_canonical_member_comes_from_least_detailed_model(deriv):
    entry = deriv.taxonomy.member_to_entry["rm_h.replay"]
    assert entry.canonical == "rm_a.replay-attack"
    assert entry.members[0] == "rm_a.replay-attack"
    assert set(entry.members) == {
        "rm_a.replay-attack",
        "rm_h.replay",
        "rm_v.replay",
        "rm_l.replay",
    }


def test_also_seen_lists_follow_declaration_order(deriv):
    replay = deriv.taxonomy.member_to_entry["rm_a.replay-attack"]
    assert [model for model, _ in replay.also_seen] == ["RM_H", "RM_V", "RM_L"]
    flooding = deriv.taxonomy.member_to_entry["rm_a.flooding"]
    assert [model for model, _ in flooding.also_seen] == ["RM_V"]


def test_integration_note_appends_to_canonical_definition(deriv):
    entry = deriv.taxonomy.member_to_entry["rm_h.desynchronization"]
    assert entry.canonical == "rm_a.control-forgery"
    assert "; redefined as specifically designed to damage a system" in entry.note


def test_aliased_attack_on_unreachable_layer_is_rejected(corpus_ws, deriv):
    aliases = list(corpus_ws.aliases) + [
        AliasDeclaration(
            canonical="rm_a.node-capture",
            duplicates=("rm_h.direct-physical-intervention",),
        )
    ]
    with pytest.raises(ArchsecError) as excinfo:
        consolidate(
            corpus_ws.attacks, aliases, deriv.crossmaps, corpus_ws.models, deriv.order
        )
    assert excinfo.value.code == "E_UNREACHABLE"
    assert "rm_h.direct-physical-intervention" in excinfo.value.message


def test_alias_to_unknown_attack_is_rejected(corpus_ws, deriv):
    aliases = [AliasDeclaration(canonical="rm_a.flooding", duplicates=("ghost",))]
    with pytest.raises(ArchsecError) as excinfo:
        consolidate(
            corpus_ws.attacks, aliases, deriv.crossmaps, corpus_ws.models, deriv.order
        )
    assert excinfo.value.code == "E_SYNTAX"


def test_unaliased_singleton_on_unreachable_layer_stays_uncovered(deriv):
    entry = deriv.taxonomy.member_to_entry["rm_h.excuse-attack"]
    assert entry.base_layer is None
    assert entry in deriv.taxonomy.uncovered


def test_same_name_without_alias_is_flagged_as_conflict(corpus_ws, deriv):
    # strip the alias joining the two Flooding declarations: both survive
    # as separate groups and each carries a conflict note
    aliases = [a for a in corpus_ws.aliases if a.canonical != "rm_a.flooding"]
    result = consolidate(
        corpus_ws.attacks, aliases, deriv.crossmaps, corpus_ws.models, deriv.order
    )
    one = result.member_to_entry["rm_a.flooding"]
    other = result.member_to_entry["rm_v.flooding"]
    assert one is not other
    assert any("rm_v.flooding" in c for c in one.conflicts)
    assert any("rm_a.flooding" in c for c in other.conflicts)


def test_corpus_carries_no_unexplained_name_collisions(deriv):
    for entry in deriv.taxonomy.all_entries():
        assert entry.conflicts == ()


def test_base_layer_is_lowest_reaching_layer(deriv, corpus_ws):
    # the service-model flooding duplicate homes at Networking, reached
    # from Transmission, but the canonical sits on Perception directly
    entry = deriv.taxonomy.member_to_entry["rm_a.flooding"]
    assert entry.base_layer == "perception"
    config = deriv.taxonomy.member_to_entry["rm_v.configuration-tampering"]
    assert config.base_layer == "application"
    assert config.model == "RM_V"


def test_grouped_view_keeps_declaration_order(deriv, corpus_ws):
    grouped = group_taxonomy(deriv.taxonomy, corpus_ws.models)
    exhaustion = grouped.layers["perception"]["Resource exhaustion"]
    assert [e.name for e in exhaustion] == [
        "Path based DoS",
        "Flooding",
        "(D)DoS attacks",
        "Replay attack",
    ]
    assert list(grouped.layers) == ["perception", "transmission", "application"]


def test_member_lookup_covers_every_attack(deriv, corpus_ws):
    for attack in corpus_ws.attacks:
        entry = deriv.taxonomy.member_to_entry[attack.id]
        assert attack.id in entry.members


def test_consolidation_is_deterministic(corpus_ws, deriv):
    from archsec.taxonomy import taxonomy_to_json

    again = consolidate(
        corpus_ws.attacks,
        corpus_ws.aliases,
        deriv.crossmaps,
        corpus_ws.models,
        deriv.order,
    )
    assert taxonomy_to_json(again) == taxonomy_to_json(deriv.taxonomy)
