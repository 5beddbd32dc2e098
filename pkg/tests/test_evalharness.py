import pytest
from hypothesis import given, strategies as st

from typomap.aligner import NOMATCH, UsagePoint
from typomap.evalharness import (NULL_BAD, NULL_OK, PRF, EvalError, annotate_markers, annotate_tokens,
                                 cluster_placeholders, f1, format_report, load_gold, occurrence_keys,
                                 score_alignment)
from typomap.ngrampipe import NgramCluster

MARKERS = {"cu": "DS", "ca": "SS"}


def test_annotate_examples():
    assert annotate_markers("me-'u'-axüa-cu", MARKERS) == "DS me-'u'-axüa-cu"
    assert annotate_markers("me-'u'-axüa-ca", MARKERS) == "SS me-'u'-axüa-ca"
    assert annotate_markers("cueva", MARKERS) == "cueva"


def test_annotate_longest_suffix_only():
    assert annotate_tokens(["tiruku"], {"ku": "DS", "uku": "X"}) == ["X", "tiruku"]


def test_annotate_empty_table():
    with pytest.raises(EvalError):
        annotate_tokens(["a"], {})


@given(st.lists(st.text(alphabet="acux-'", min_size=1, max_size=8), max_size=10))
def test_annotation_removal_restores_text(tokens):
    out = annotate_tokens(tokens, MARKERS)
    assert [t for t in out if t not in ("DS", "SS")] == [t for t in tokens if t not in ("DS", "SS")]
    assert len(out) - len(tokens) == sum(1 for t in tokens if len(t) > 2 and t[-2:] in MARKERS)


def test_reported_count_reconstruction():
    # 198 tp / 102 fp over a 300-item sample
    prf = PRF(198, 102, 0, 0)
    assert prf.precision == pytest.approx(0.66)
    assert prf.recall == 1.0
    assert prf.f1 == pytest.approx(0.7952, abs=1e-4)


def test_score_examples():
    gold = {(f"v{i}", 0): "quepa" for i in range(10)}
    pred = dict(gold)
    pred[("v9", 0)] = "wrong"
    prf = score_alignment(pred, gold)
    assert (prf.tp, prf.fp, prf.fn) == (9, 1, 0)
    assert prf.precision == pytest.approx(0.9) and prf.f1 == pytest.approx(0.947, abs=1e-3)
    gold = {("v", i): NULL_OK for i in range(4)}
    prf = score_alignment({k: NOMATCH for k in gold}, gold)
    assert (prf.precision, prf.recall, prf.tn) == (0.0, 0.0, 4)


def test_score_outcome_table():
    gold = {("a", 0): "SS", ("b", 0): "SS", ("c", 0): NULL_OK, ("d", 0): NULL_OK, ("e", 0): NULL_BAD,
            ("f", 0): "DS"}
    pred = {("a", 0): "SS", ("b", 0): "DS", ("c", 0): NOMATCH, ("d", 0): "SS", ("e", 0): NOMATCH,
            ("f", 0): NOMATCH}
    assert score_alignment(pred, gold) == PRF(tp=1, fp=2, tn=1, fn=2)


def test_missing_prediction():
    with pytest.raises(EvalError):
        score_alignment({}, {("a", 0): "SS"})


def test_f1_basics():
    assert f1(0, 0) == 0
    assert f1(1, 1) == 1


@given(st.floats(0, 1), st.floats(0, 1))
def test_f1_between_min_and_max(p, r):
    v = f1(p, r)
    assert min(p, r) - 1e-12 <= v <= max(p, r) + 1e-12


def test_load_gold(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("verse_id\toccurrence_index\tgold_label\nv1\t0\tSS\nv1\t1\tNULL_OK\n")
    assert load_gold(p) == {("v1", 0): "SS", ("v1", 1): NULL_OK}
    p.write_text("v1\t0\tSS\nv1\t0\tDS\n")
    with pytest.raises(EvalError):
        load_gold(p)


def test_occurrence_keys():
    pts = [UsagePoint("v1_5", "v1", 5), UsagePoint("v1_0", "v1", 0), UsagePoint("v2_3", "v2", 3)]
    assert occurrence_keys(pts) == {"v1_0": ("v1", 0), "v1_5": ("v1", 1), "v2_3": ("v2", 0)}


def test_cluster_placeholders():
    clusters = [NgramCluster("ngram_1", ("ak", "aka", "ka"), 40), NgramCluster("ngram_2", ("ku", "uku"), 30),
                NgramCluster("ngram_3", ("ex",), 5)]
    assert cluster_placeholders(clusters, {"ka": "SS", "ku": "DS"}) == {"ngram_1": "SS", "ngram_2": "DS"}


def test_report_lines():
    text = format_report(PRF(2, 1, 0, 1), "x")
    assert text.splitlines()[0] == "# x"
    assert "precision=0.666667" in text
