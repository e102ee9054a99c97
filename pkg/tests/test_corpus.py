"""Bundled workspace integrity: documents, goldens, and internal references."""

from __future__ import annotations

import json

from archsec import corpus, pipeline
from archsec.classification import events_from_jsonl


def test_corpus_loads_strictly(corpus_ws):
    assert set(corpus_ws.models) == {"RM_A", "RM_H", "RM_V", "RM_L"}
    assert len(corpus_ws.architecture.components) == 8
    assert [n.id for n in corpus_ws.architecture.networks] == ["dali", "lorawan", "ip"]
    assert len(corpus_ws.attacks) == 54
    assert len(corpus_ws.aliases) == 7
    assert sum(len(a.duplicates) for a in corpus_ws.aliases) == 9
    assert len(corpus_ws.vulnerabilities) == 5
    assert corpus_ws.source_tree is not None


def test_corpus_has_no_validation_findings(deriv):
    assert deriv.issues == []
    assert deriv.violations == []


def test_rendered_artifacts_match_the_frozen_goldens(artifacts):
    assert corpus.verify_golden(artifacts) == []


def test_golden_check_reports_drift(artifacts):
    drifted = dict(artifacts)
    drifted["taxonomy.md"] += "extra line\n"
    problems = corpus.verify_golden(drifted)
    assert problems == ["artifact 'taxonomy.md' drifted from its golden"]
    del drifted["taxonomy.md"]
    problems = corpus.verify_golden(drifted)
    assert problems == ["no rendered artifact for golden 'taxonomy.md'"]


def test_verdict_log_covers_every_item_exactly_once(corpus_ws, deriv):
    events = events_from_jsonl(corpus_ws.read_verdict_lines())
    assert len(events) == 278
    keys = [event.key for event in events]
    assert len(set(keys)) == len(keys)
    assert set(keys) == set(deriv.checklist.by_key)


def test_every_feasible_group_has_a_tree_assignment(corpus_ws, deriv):
    assigned = set()
    for assignment in corpus_ws.assignments:
        assigned.add(deriv.taxonomy.canonical_of(assignment.attack))
    from archsec.attack_tree import feasible_groups

    assert set(feasible_groups(deriv.ledger)) <= assigned


def test_assignments_cover_every_consolidated_group(corpus_ws, deriv):
    assigned = {
        deriv.taxonomy.canonical_of(a.attack) for a in corpus_ws.assignments
    }
    every_group = {e.canonical for e in deriv.taxonomy.all_entries()}
    assert assigned == every_group


def test_vulnerability_links_reference_known_attacks_and_groups(corpus_ws):
    attack_ids = {a.id for a in corpus_ws.attacks}
    threat_groups = {a.threat_group for a in corpus_ws.attacks}
    for vulnerability in corpus_ws.vulnerabilities:
        assert set(vulnerability.linked_attacks) <= attack_ids
        assert set(vulnerability.linked_threat_groups) <= threat_groups
        assert vulnerability.countermeasures


def test_source_tree_covers_all_five_categories(corpus_ws):
    assert set(corpus_ws.source_tree.categories) == {
        "Actuation",
        "Communication",
        "Feedback",
        "Computing",
        "Sensing",
    }
    assert corpus_ws.source_tree.renames == {"Espionage": "Behavior spying"}


def test_input_hash_tracks_content(corpus_copy, tmp_path):
    from archsec.workspace import load_workspace

    first = load_workspace(corpus_copy).input_hash()
    assert first == load_workspace(corpus_copy).input_hash()
    path = corpus_copy / "architecture.json"
    doc = json.loads(path.read_text(encoding="utf-8"))
    doc["name"] = "another name"
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    assert load_workspace(corpus_copy).input_hash() != first


def test_report_document_assembles_all_sections(artifacts):
    report = artifacts["report.md"]
    for heading in (
        "# Security analysis",
        "## Component allocations",
        "## Layer comparison",
        "## Consolidated taxonomy",
        "## Differential feasibility findings",
        "## Attack tree",
        "## Vulnerability linkage",
    ):
        assert heading in report, heading
