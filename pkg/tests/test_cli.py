import os

import pytest

from typomap.cli import main
from typomap.config import ConfigError, PipelineConfig, load_config, write_config


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\npivot = when\ntop_k = 10\ncorpus_dir = data/corpus\nlevels = 0.5, 0.9\n")
    cfg = load_config(str(p), ["dbscan_eps=0.4", "geographic=true"])
    assert cfg.top_k == 10 and cfg.dbscan_eps == 0.4 and cfg.geographic is True
    assert cfg.levels == (0.5, 0.9)
    assert cfg.corpus_dir == str(tmp_path / "data" / "corpus")


def test_config_round_trip(tmp_path):
    cfg = PipelineConfig(top_k=7, psill=0.3)
    write_config(tmp_path / "c.cfg", cfg)
    assert load_config(str(tmp_path / "c.cfg")) == cfg


@pytest.mark.parametrize("override,field", [("top_k=0", "top_k"), ("dbscan_eps=-1", "dbscan_eps"),
                                            ("levels=1.5", "levels"), ("align_iters=0", "align_iters")])
def test_invalid_value_names_field(override, field):
    with pytest.raises(ConfigError, match=field):
        load_config(None, [override])


def test_unknown_key():
    with pytest.raises(ConfigError):
        load_config(None, ["colour=red"])


def test_invalid_value_exit_status(tmp_path, capsys):
    assert main(["map", "-w", str(tmp_path), "-s", "top_k=0"]) != 0
    assert "top_k" in capsys.readouterr().err


def test_render_without_map_is_missing_input(tmp_path, capsys):
    assert main(["render", "-w", str(tmp_path)]) != 0
    assert "missing input" in capsys.readouterr().err


def test_pipeline_outputs(pipeline_run):
    for rel in ["map.tsv", "labels.tsv", "usage.tsv", "svg/hch.svg", "ngram/hch.clusters.tsv",
                "align/hch.pharaoh", "eval/hch.txt", "manifest/pipeline.tsv", "krige/hch/index.tsv"]:
        assert os.path.exists(os.path.join(pipeline_run, rel)), rel
    # the out-of-region language is filtered away
    assert not os.path.exists(os.path.join(pipeline_run, "align", "eux.pharaoh"))
    assert "work/" not in open(os.path.join(pipeline_run, "manifest", "pipeline.tsv")).read().split("# inputs")[0]


def test_stages_restart_from_disk(pipeline_run, synth_cfg, tmp_path):
    # rerunning map + krige + render from the on-disk artifacts reproduces them
    import shutil
    work = tmp_path / "w"
    shutil.copytree(pipeline_run, work)
    for name in ("map", "krige", "render"):
        assert main([name, "-c", synth_cfg, "-w", str(work), "-j", "1"]) == 0
    for rel in ["map.tsv", "svg/hch.svg", "krige/hch/index.tsv"]:
        assert open(work / rel, "rb").read() == open(os.path.join(pipeline_run, rel), "rb").read()


def test_eval_with_gold_and_predictions(tmp_path, capsys):
    (tmp_path / "g.tsv").write_text("v1\t0\tSS\nv2\t0\tDS\n")
    (tmp_path / "p.tsv").write_text("v1\t0\tSS\nv2\t0\tNOMATCH\n")
    assert main(["eval", "-w", str(tmp_path / "w"), "--gold", str(tmp_path / "g.tsv"),
                 "--pred", str(tmp_path / "p.tsv")]) == 0
    out = capsys.readouterr().out
    assert "tp=1" in out and "fn=1" in out


def test_annotate_subcommand(tmp_path):
    (tmp_path / "c.txt").write_text("1\tme-'u'-axüa-cu müpaü\n", encoding="utf-8")
    (tmp_path / "m.tsv").write_text("code\tsuffix\tplaceholder\nhch\tcu\tDS\nhch\tca\tSS\n")
    assert main(["annotate", str(tmp_path / "c.txt"), str(tmp_path / "m.tsv"), "hch", str(tmp_path / "o.txt")]) == 0
    assert (tmp_path / "o.txt").read_text(encoding="utf-8").strip() == "1\tDS me-'u'-axüa-cu müpaü"
