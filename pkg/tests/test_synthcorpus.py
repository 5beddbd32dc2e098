import filecmp
import os

import pytest

from typomap.corpus import load_metadata, load_verse_file
from typomap.evalharness import load_gold
from typomap.ngrampipe import load_conllu, read_cluster_report
from typomap.synthcorpus import SynthSpec, generate


def test_same_seed_identical_files(tmp_path):
    generate(SynthSpec(verses=60, seed=7), str(tmp_path / "a"))
    generate(SynthSpec(verses=60, seed=7), str(tmp_path / "b"))
    for root, _, files in os.walk(tmp_path / "a"):
        for f in files:
            rel = os.path.relpath(os.path.join(root, f), tmp_path / "a")
            assert filecmp.cmp(os.path.join(root, f), tmp_path / "b" / rel, shallow=False)


def test_different_seed_differs(tmp_path):
    a = generate(SynthSpec(verses=60, seed=1), str(tmp_path / "a"))
    b = generate(SynthSpec(verses=60, seed=2), str(tmp_path / "b"))
    assert open(os.path.join(a["corpus_dir"], "hch.txt")).read() != open(os.path.join(b["corpus_dir"], "hch.txt")).read()


def test_too_few_verses():
    with pytest.raises(ValueError):
        SynthSpec(verses=49)


def test_outputs_consistent(synth):
    metas = load_metadata(synth["metadata"])
    assert [m.code for m in metas][0] == "eng"
    src = load_verse_file(os.path.join(synth["corpus_dir"], "eng.txt"))
    assert len(src) == 200
    deps = load_conllu(synth["deps"])
    for vid, toks in src.items():
        assert deps.verses[vid].forms == toks
    hch = load_gold(os.path.join(synth["gold_dir"], "hch.tsv"))
    tgt = load_verse_file(os.path.join(synth["corpus_dir"], "hch.txt"))
    when_verses = {v for v, t in src.items() if "when" in t and v in tgt}
    assert len(when_verses) >= 0.9 * sum("when" in t for t in src.values())
    assert {v for v, _ in hch} == when_verses
    assert set(hch.values()) <= {"SS", "DS", "quepa", "NULL_OK"}


def test_mixed_language_marks_classes(synth):
    tgt = load_verse_file(os.path.join(synth["corpus_dir"], "hch.txt"))
    gold = load_gold(os.path.join(synth["gold_dir"], "hch.tsv"))
    for (vid, _), lab in gold.items():
        words = tgt[vid]
        if lab == "quepa":
            assert "quepa" in words
        elif lab == "SS":
            assert any(w.endswith("ka") for w in words)
        elif lab == "DS":
            assert any(w.endswith("ku") for w in words)


def test_lexified_only_yields_single_token_and_no_clusters(pipeline_run):
    lexified, clusters = read_cluster_report(os.path.join(pipeline_run, "ngram", "lxa.clusters.tsv"))
    assert len(lexified) == 1
    assert clusters == []


def test_mixed_language_yields_connector_and_two_marker_clusters(pipeline_run):
    lexified, clusters = read_cluster_report(os.path.join(pipeline_run, "ngram", "hch.clusters.tsv"))
    assert lexified == {"quepa"}
    big = [c for c in clusters if len(c.members) > 1]
    assert any("ka" in c.members for c in big) and any("ku" in c.members for c in big)
