"""Checklist enumeration, the verdict ledger, and the differential report."""

from __future__ import annotations

import json

import pytest

from archsec.classification import (
    ItemKey,
    Ledger,
    VerdictEvent,
    completeness_report,
    differential_description,
    events_from_jsonl,
    events_to_jsonl,
    parse_verdict_record,
)
from archsec.errors import ArchsecError


def counts_by(items, field):
    out: dict[str, int] = {}
    for item in items:
        key = getattr(item.key, field)
        out[key] = out.get(key, 0) + 1
    return out


# ---------------------------------------------------------------------------
# checklist shape on the bundled workspace


def test_checklist_size_and_per_network_counts(deriv):
    assert len(deriv.checklist) == 278
    per_network = counts_by(deriv.checklist.items, "network")
    assert per_network == {"dali": 60, "lorawan": 111, "ip": 107}


def test_checklist_per_target_counts_within_each_network(deriv):
    for network, expected in {
        "dali": {"A": 26, "B": 33, "ENV": 1},
        "lorawan": {"X": 17, "F": 37, "C": 23, "B": 33, "ENV": 1},
        "ip": {"F": 37, "D": 23, "E": 23, "C": 23, "ENV": 1},
    }.items():
        items = [i for i in deriv.checklist.items if i.key.network == network]
        assert counts_by(items, "target") == expected, network


def test_checklist_orders_targets_bottom_up_with_environment_last(deriv):
    def target_sequence(network: str) -> list[str]:
        seen: list[str] = []
        for item in deriv.checklist.items:
            if item.key.network == network and item.key.target not in seen:
                seen.append(item.key.target)
        return seen

    assert target_sequence("dali") == ["A", "B", "ENV"]
    assert target_sequence("lorawan") == ["X", "F", "C", "B", "ENV"]
    assert target_sequence("ip") == ["F", "D", "E", "C", "ENV"]


def test_checklist_walks_models_in_processing_order(deriv):
    items = [
        i
        for i in deriv.checklist.items
        if i.key.network == "lorawan" and i.key.target == "F"
    ]
    model_sequence: list[str] = []
    for item in items:
        if item.key.model not in model_sequence:
            model_sequence.append(item.key.model)
    assert model_sequence == ["RM_A", "RM_V", "RM_L", "RM_H"]
    layer_sequence: list[str] = []
    for item in items:
        if item.key.model == "RM_H" and item.key.layer not in layer_sequence:
            layer_sequence.append(item.key.layer)
    assert layer_sequence == ["network", "higher_supervisory_control", "information"]


def test_checklist_keys_are_unique_and_sequential(deriv):
    keys = [item.key for item in deriv.checklist.items]
    assert len(set(keys)) == len(keys)
    assert [item.seq for item in deriv.checklist.items] == list(
        range(1, len(keys) + 1)
    )


def test_checklist_attacks_use_canonical_ids(deriv):
    canonicals = {e.canonical for e in deriv.taxonomy.all_entries()}
    for item in deriv.checklist.items:
        assert item.key.attack in canonicals
        assert item.member in deriv.taxonomy.member_to_entry[item.key.attack].members


# ---------------------------------------------------------------------------
# verdict events and the ledger


def sample_key(deriv) -> ItemKey:
    return deriv.checklist.items[0].key


def test_ledger_accepts_and_replays_events(deriv):
    ledger = Ledger(deriv.checklist)
    key = sample_key(deriv)
    ledger.record(VerdictEvent(key=key, verdict="infeasible", rationale="why not"))
    assert ledger.verdict_of(key) == "infeasible"
    replayed = Ledger.replay(deriv.checklist, ledger.events)
    assert replayed.state_snapshot() == ledger.state_snapshot()


def test_last_event_wins(deriv):
    ledger = Ledger(deriv.checklist)
    key = sample_key(deriv)
    ledger.record(VerdictEvent(key=key, verdict="feasible", rationale="first view"))
    ledger.record(
        VerdictEvent(
            key=key, verdict="conditional", rationale="second view", conditions="if x"
        )
    )
    assert ledger.verdict_of(key) == "conditional"
    assert len(ledger.events) == 2


def test_ledger_rejections(deriv):
    ledger = Ledger(deriv.checklist)
    key = sample_key(deriv)
    bogus = ItemKey("dali", "A", "RM_A", "perception", "rm_a.made-up")

    def rejects(code: str, event: VerdictEvent) -> None:
        with pytest.raises(ArchsecError) as excinfo:
            ledger.record(event)
        assert excinfo.value.code == code

    rejects("E_NO_ITEM", VerdictEvent(key=bogus, verdict="feasible", rationale="r"))
    rejects("E_BAD_VERDICT", VerdictEvent(key=key, verdict="maybe", rationale="r"))
    rejects("E_BAD_VERDICT", VerdictEvent(key=key, verdict="feasible", rationale=" "))
    rejects("E_BAD_VERDICT", VerdictEvent(key=key, verdict="conditional", rationale="r"))
    rejects(
        "E_BAD_VERDICT",
        VerdictEvent(key=key, verdict="feasible", rationale="r", conditions="c"),
    )
    assert ledger.events == []


def test_unreviewed_items_allow_blank_rationale(deriv):
    ledger = Ledger(deriv.checklist)
    key = sample_key(deriv)
    ledger.record(VerdictEvent(key=key, verdict="unreviewed", rationale=""))
    assert ledger.verdict_of(key) == "unreviewed"
    assert key in ledger.unreviewed_keys()


def test_verdict_record_parsing_rules():
    record = {
        "network": "dali",
        "target": "A",
        "model": "RM_A",
        "layer": "perception",
        "attack": "rm_a.node-capture",
        "verdict": "feasible",
        "rationale": "open street cabinet",
    }
    event = parse_verdict_record(record)
    assert event.key.network == "dali" and event.conditions == ""

    for missing in ("network", "verdict"):
        broken = {k: v for k, v in record.items() if k != missing}
        with pytest.raises(ArchsecError) as excinfo:
            parse_verdict_record(broken)
        assert excinfo.value.code == "E_SYNTAX"

    with_unknown = dict(record, severity="high")
    with pytest.raises(ArchsecError) as excinfo:
        parse_verdict_record(with_unknown)
    assert excinfo.value.code == "E_SYNTAX"
    assert "severity" in excinfo.value.message


def test_jsonl_round_trip_drops_nothing(deriv):
    key = sample_key(deriv)
    events = [
        VerdictEvent(key=key, verdict="feasible", rationale="plain"),
        VerdictEvent(key=key, verdict="conditional", rationale="guarded",
                     conditions="only at night"),
    ]
    text = events_to_jsonl(events)
    assert events_from_jsonl(text) == events
    first = json.loads(text.splitlines()[0])
    assert "conditions" not in first


def test_completeness_report_counts(deriv):
    report = completeness_report(deriv.ledger)
    assert report.total == 278
    assert report.complete
    assert report.counts == {
        "feasible": 101,
        "conditional": 72,
        "infeasible": 29,
        "not_applicable": 76,
        "unreviewed": 0,
    }


# ---------------------------------------------------------------------------
# differential report


def test_differential_requires_a_complete_review(deriv):
    partial = Ledger(deriv.checklist)
    with pytest.raises(ArchsecError) as excinfo:
        differential_description(partial, deriv.order, deriv.workspace.architecture)
    assert excinfo.value.code == "E_INCOMPLETE"


def test_first_model_reports_every_finding_it_sees(deriv):
    first = deriv.differential.sections[0]
    assert first.model == "RM_A"
    listed = {
        (line.item.key.target, line.item.key.attack)
        for _, lines in first.networks
        for line in lines
    }
    expected = {
        (item.key.target, item.key.attack)
        for item in deriv.checklist.items
        if item.key.model == "RM_A"
        and deriv.ledger.verdict_of(item.key) in ("feasible", "conditional")
    }
    assert listed == expected


def test_later_models_only_add_new_target_attack_pairs(deriv):
    exposed: set[tuple[str, str]] = set()
    for section in deriv.differential.sections:
        fresh: set[tuple[str, str]] = set()
        for _, lines in section.networks:
            for line in lines:
                pair = (line.item.key.target, line.item.key.attack)
                assert pair not in exposed, (section.model, pair)
                fresh.add(pair)
        exposed.update(fresh)


def test_differential_sections_follow_processing_order(deriv):
    assert [s.model for s in deriv.differential.sections] == [
        "RM_A",
        "RM_V",
        "RM_L",
        "RM_H",
    ]
    for section in deriv.differential.sections:
        assert [n for n, _ in section.networks] == ["dali", "lorawan", "ip"]


def test_bus_section_of_service_model_adds_configuration_tampering(deriv):
    by_model = {s.model: s for s in deriv.differential.sections}
    dali_lines = dict(by_model["RM_V"].networks)["dali"]
    assert dali_lines, "expected fresh findings on the bus under RM_V"
    names = {line.item.attack_name for line in dali_lines}
    assert names == {"Configuration tampering"}
    assert {line.item.key.target for line in dali_lines} == {"A", "B"}


def test_bus_section_of_control_model_adds_physical_and_information_findings(deriv):
    by_model = {s.model: s for s in deriv.differential.sections}
    dali_lines = dict(by_model["RM_H"].networks)["dali"]
    findings = {(l.item.key.target, l.item.attack_name) for l in dali_lines}
    assert findings == {
        ("A", "Information extraction"),
        ("B", "Information extraction"),
        ("ENV", "Direct physical intervention"),
    }
