"""Smoke tests for the python bindings."""

import json

import pytest

import kgv


def test_tokenization():
    assert kgv.preprocess("The attackers attacked") == ["attack", "attack"]
    assert kgv.chunk("A\n\nB\n\n\nC") == ["A", "B", "C"]
    assert kgv.stem("phishing") == "phish"


def test_cosine_and_embedding():
    assert kgv.cosine([1, 1, 0], [1, 0, 0]) == pytest.approx(2 ** -0.5)
    v = kgv.embed_paragraph(["alpha"])
    assert len(v) == 64
    assert kgv.cosine(v, v) == pytest.approx(1.0)


def test_ingest_and_graph():
    clue_a = kgv.ingest_plain_text(
        "APT34 spearphishing wave hit banks.\n\nFollow-up forensic notes.",
        id="a", role="clue")
    clue_b = kgv.ingest_plain_text("Totally different subject matter.", id="b", role="clue")
    assert [p.ordinal for p in clue_a.paragraphs] == [0, 1]

    graph = kgv.build_graph([clue_a, clue_b], similarity_threshold=0.8)
    assert graph.node_count == 3
    assert graph.density() >= 0.0

    nodes = graph.retrieve(["apt34"])
    assert "a#0" in nodes

    with pytest.raises(kgv.KgvError):
        graph.retrieve(["unknown-group-name"])


def test_ingest_stix():
    bundle = json.dumps({
        "type": "bundle",
        "id": "bundle--py",
        "objects": [
            {"type": "report", "name": "n", "description": "First text."},
            {"type": "malware", "description": "Second text."},
        ],
    })
    report = kgv.ingest_stix(bundle, role="clue")
    assert report.id == "bundle--py"
    assert len(report.paragraphs) == 2


def test_match_triples():
    facts = [
        {"subject": "apt34", "predicate": "uses", "object": "custom droppers",
         "source_paragraph_id": "p#0", "extraction_confidence": 0.9},
        {"subject": "apt28", "predicate": "targets", "object": "banks",
         "source_paragraph_id": "p#1", "extraction_confidence": 0.8},
    ]
    matches = kgv.match_triples(("apt34", "uses", "custom droppers"), facts, k=5)
    assert len(matches) == 2
    assert matches[0]["fact"]["object"] == "custom droppers"
    assert matches[0]["score"] == pytest.approx(1.0)


def test_assess_offline_pipeline():
    clue = kgv.ingest_plain_text(
        "APT34 targeted financial institutions.\n\nAPT34 uses phishing lures.",
        id="clue-1", role="clue")
    pending = kgv.ingest_plain_text(
        "APT34 targeted financial institutions.\n\n"
        "APT34 uses phishing lures to harvest credential data.\n\n"
        "The wave lasted 10 hours on 5 May 2023.",
        id="pend-1", role="pending")
    graph = kgv.build_graph([clue])
    assessment = kgv.assess(pending, graph, [clue, pending])
    assert assessment["report_id"] == "pend-1"
    assert len(assessment["points"]) == 3
    labels = {p["label"] for p in assessment["points"]}
    assert labels <= {"supported", "refuted", "not_enough_info"}
    # the first point is an exact fact match
    assert assessment["points"][0]["label"] == "supported"


def test_score():
    metrics = kgv.score(
        [("a", "supported"), ("b", "refuted")],
        [("a", True), ("b", False)],
    )
    assert metrics["precision"] == pytest.approx(1.0)
    assert metrics["f1"] == pytest.approx(1.0)
