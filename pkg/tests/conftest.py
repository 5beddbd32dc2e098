import os

import pytest

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        _CRITERIA.setdefault(mark.args[0], []).append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        failed = [name for name, ok in results if not ok]
        status = "PASS" if not failed else "FAIL"
        detail = f"{len(results)} check(s)" + (f"; failed: {', '.join(failed)}" if failed else "")
        terminalreporter.write_line(f"criterion {n:>2}: {status}  ({detail})")

from typomap.synthcorpus import SynthSpec, generate


@pytest.fixture(scope="session")
def synth(tmp_path_factory):
    """The default synthetic benchmark (200 verses, seed 1)."""
    out = tmp_path_factory.mktemp("synth")
    return generate(SynthSpec(verses=200, seed=1), str(out))


@pytest.fixture(scope="session")
def synth_cfg(synth, tmp_path_factory):
    from typomap.config import PipelineConfig, write_config
    cfg = PipelineConfig()
    for key in ("corpus_dir", "metadata", "region", "deps", "gold_dir", "markers"):
        setattr(cfg, key, synth[key])
    path = os.path.join(str(tmp_path_factory.mktemp("cfg")), "typomap.cfg")
    write_config(path, cfg)
    return path


@pytest.fixture(scope="session")
def pipeline_run(synth_cfg, tmp_path_factory):
    """Work directory of one full `pipeline` run on the synthetic benchmark."""
    from typomap.cli import main
    work = str(tmp_path_factory.mktemp("work"))
    assert main(["pipeline", "-c", synth_cfg, "-w", work, "-j", "2"]) == 0
    return work
