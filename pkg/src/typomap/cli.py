"""Command-line driver: each subcommand reads and writes plain-text artifacts in a work directory.

Work directory layout::

    corpus/<code>.txt           tokenized verses (source and targets)
    languages.tsv               metadata of ingested languages
    languages.filtered.tsv      after the geographic filter
    align/<code>.pharaoh        alignments (+ .verses listing the verse of each line)
    usage.tsv                   usage points with raw parallel labels
    ngram/<code>.clusters.tsv   lexified tokens and n-gram clusters
    ngram/<code>.ngrams.tsv     association report of the selected n-grams
    labels.tsv                  usage points with refined labels
    map.tsv                     MDS coordinates plus labels
    krige/<code>/NN_<label>.grid.tsv / .contours.tsv
    svg/<code>.svg
    eval/<code>.txt
    manifest/<subcommand>.tsv   config snapshot and input checksums
"""
from __future__ import annotations

import argparse
import hashlib
import logging
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Optional, Sequence

from . import aligner, corpus, evalharness, geofilter, kriging, ngrampipe, semmap
from .aligner import UsagePoint
from .assoc import write_report
from .config import ConfigError, PipelineConfig, load_config, write_config
from .render import render_svg

log = logging.getLogger("typomap")

SUBCOMMANDS = ("ingest", "filter-geo", "align", "extract", "ngram", "map", "krige", "render", "eval", "pipeline")


class MissingInput(RuntimeError):
    pass


# -- helpers ------------------------------------------------------------------

def _need(path, what):
    if not path or not os.path.exists(path):
        raise MissingInput(f"missing input: {what} ({path or 'not configured'})")
    return path


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    """State for one subcommand invocation: config, work dir, inputs consumed."""

    def __init__(self, cfg: PipelineConfig, workdir: str, jobs: int):
        self.cfg = cfg
        self.workdir = workdir
        self.jobs = max(1, jobs)
        self.inputs: Dict[str, str] = {}
        os.makedirs(workdir, exist_ok=True)

    def path(self, *parts):
        return os.path.join(self.workdir, *parts)

    def read(self, path, what):
        _need(path, what)
        if os.path.isdir(path):
            for name in sorted(os.listdir(path)):
                p = os.path.join(path, name)
                if os.path.isfile(p):
                    self.inputs[self._key(p)] = _sha256(p)
        else:
            self.inputs[self._key(path)] = _sha256(path)
        return path

    def _key(self, path):
        ap = os.path.abspath(path)
        wd = os.path.abspath(self.workdir)
        if ap.startswith(wd + os.sep):
            return "work/" + os.path.relpath(ap, wd).replace(os.sep, "/")
        # inputs outside the work dir are identified by role-relative names
        for key in ("corpus_dir", "metadata", "region", "deps", "gold_dir", "markers", "alignments_dir"):
            root = getattr(self.cfg, key)
            if not root:
                continue
            root = os.path.abspath(root)
            if ap == root:
                return key
            if ap.startswith(root + os.sep):
                return f"{key}/" + os.path.relpath(ap, root).replace(os.sep, "/")
        return os.path.basename(ap)

    def manifest(self, name):
        os.makedirs(self.path("manifest"), exist_ok=True)
        with open(self.path("manifest", f"{name}.tsv"), "w", encoding="utf-8", newline="\n") as f:
            f.write("# config\n")
            for k, v in self.cfg.snapshot():
                if k in ("corpus_dir", "metadata", "region", "deps", "gold_dir", "markers", "alignments_dir"):
                    v = "set" if v else ""
                f.write(f"config\t{k}\t{v}\n")
            f.write("# inputs\n")
            for k in sorted(self.inputs):
                f.write(f"input\t{k}\t{self.inputs[k]}\n")

    def pool_map(self, fn, items):
        items = list(items)
        if self.jobs == 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ProcessPoolExecutor(max_workers=min(self.jobs, len(items))) as ex:
            return list(ex.map(fn, items))


def _write_points(path, points: Sequence[UsagePoint], codes: Sequence[str]):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\t".join(["usage_point_id", "verse_id", "pivot_idx"] + list(codes)) + "\n")
        for up in points:
            f.write("\t".join([up.upid, up.verse_id, str(up.pivot_idx)] + [up.labels[c] for c in codes]) + "\n")


def _read_points(path):
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split("\t")
        codes = header[3:]
        pts = []
        for line in f:
            cells = line.rstrip("\n").split("\t")
            pts.append(UsagePoint(cells[0], cells[1], int(cells[2]), dict(zip(codes, cells[3:]))))
    return pts, codes


def _load_work_corpus(run: Run, filtered=True) -> corpus.ParallelCorpus:
    meta_path = run.path("languages.filtered.tsv" if filtered else "languages.tsv")
    if filtered and not os.path.exists(meta_path):
        meta_path = run.path("languages.tsv")
    metas = corpus.load_metadata(run.read(meta_path, "language metadata (run ingest)"))
    run.read(run.path("corpus"), "tokenized corpus (run ingest)")
    return corpus.load_corpus(run.path("corpus"), metas, run.cfg.source)


def _load_alignments(run: Run, c: corpus.ParallelCorpus) -> Dict[str, aligner.Alignment]:
    out = {}
    for code in c.codes:
        p = run.path("align", f"{code}.pharaoh")
        run.read(p, f"alignment for {code} (run align)")
        run.read(p + ".verses", f"alignment verse list for {code}")
        out[code] = aligner.load_pharaoh_export(p, c, code)
    return out


def _safe(label):
    return re.sub(r"[^0-9A-Za-z_.-]+", "_", label).strip("_") or "label"


# -- subcommands --------------------------------------------------------------

def cmd_ingest(run: Run):
    cfg = run.cfg
    metas = corpus.load_metadata(run.read(cfg.metadata, "language metadata"))
    run.read(cfg.corpus_dir, "corpus directory")
    _need(os.path.join(cfg.corpus_dir, f"{cfg.source}.txt"), "source corpus file")
    c = corpus.load_corpus(cfg.corpus_dir, metas, cfg.source)
    os.makedirs(run.path("corpus"), exist_ok=True)
    corpus.write_verse_file(run.path("corpus", f"{cfg.source}.txt"), c.source)
    kept = [m for m in metas if m.code == cfg.source or m.code in c.targets]
    for code in c.codes:
        common = corpus.intersect_verses(c, code)
        tv = c.target_verses(code)
        corpus.write_verse_file(run.path("corpus", f"{code}.txt"), {v: tv[v] for v in common})
    corpus.write_metadata(run.path("languages.tsv"), kept)
    log.info("ingested %d target languages, %d source verses", len(c.targets), len(c.source))


def cmd_filter_geo(run: Run):
    metas = corpus.load_metadata(run.read(run.path("languages.tsv"), "language metadata (run ingest)"))
    if run.cfg.region:
        region = geofilter.load_region(run.read(run.cfg.region, "region GeoJSON"))
        kept = set(m.code for m in geofilter.filter_languages(metas, region))
        out = [m for m in metas if m.code in kept or m.code == run.cfg.source]
    else:
        log.warning("no region configured; keeping every language")
        out = metas
    corpus.write_metadata(run.path("languages.filtered.tsv"), out)


def _align_one(args):
    c, code, cfg, external = args
    if external:
        return aligner.load_pharaoh_export(external, c, code)
    return aligner.align_language(c, code, cfg.align_iters, cfg.align_theta, cfg.align_chunks)


def cmd_align(run: Run):
    cfg = run.cfg
    c = _load_work_corpus(run)
    os.makedirs(run.path("align"), exist_ok=True)
    jobs = []
    for code in c.codes:
        ext = os.path.join(cfg.alignments_dir, f"{code}.pharaoh") if cfg.alignments_dir else ""
        if ext and os.path.exists(ext):
            run.read(ext, "external alignment")
            run.read(ext + ".verses", "external alignment verse list")
        else:
            ext = ""
        jobs.append((c, code, cfg, ext))
    for al in run.pool_map(_align_one, jobs):
        aligner.export_pharaoh(run.path("align", f"{al.code}.pharaoh"), al)


def cmd_extract(run: Run):
    c = _load_work_corpus(run)
    als = _load_alignments(run, c)
    points = aligner.extract_usage_points(c, als, run.cfg.pivot)
    _write_points(run.path("usage.tsv"), points, c.codes)
    log.info("%d usage points", len(points))


def ngram_config(cfg: PipelineConfig) -> ngrampipe.NgramConfig:
    return ngrampipe.NgramConfig(
        pivot=cfg.pivot, stopwords=ngrampipe.StopwordList(frozenset(cfg.stopwords)), eps=cfg.p_epsilon,
        n_min=cfg.ngram_min, n_max=cfg.ngram_max, top_chi2=cfg.top_chi2, top_k=cfg.top_k,
        dbscan_eps=cfg.dbscan_eps, min_pts=cfg.dbscan_min_pts, tfidf_range=(cfg.tfidf_min, cfg.tfidf_max))


def _ngram_one(args):
    c, al, points, deps, ncfg = args
    return ngrampipe.run_language(c, al, points, deps, ncfg)


def cmd_ngram(run: Run):
    cfg = run.cfg
    c = _load_work_corpus(run)
    als = _load_alignments(run, c)
    points, codes = _read_points(run.read(run.path("usage.tsv"), "usage points (run extract)"))
    deps = ngrampipe.load_conllu(run.read(cfg.deps, "CoNLL-U dependency annotation")) if cfg.deps else None
    if deps is None:
        log.warning("no dependency annotation; head-verb fallback disabled")
    ncfg = ngram_config(cfg)
    os.makedirs(run.path("ngram"), exist_ok=True)
    results = run.pool_map(_ngram_one, [(c, als[code], points, deps, ncfg) for code in codes])
    for res in results:
        ngrampipe.write_cluster_report(run.path("ngram", f"{res.code}.clusters.tsv"), res)
        write_report(run.path("ngram", f"{res.code}.ngrams.tsv"), [cand.score for cand in res.candidates])
        for up in points:
            up.labels[res.code] = res.labels[up.upid]
    _write_points(run.path("labels.tsv"), points, codes)


def cmd_map(run: Run):
    src = run.path("labels.tsv")
    if not os.path.exists(src):
        log.warning("labels.tsv not found, mapping raw alignment labels")
        src = run.path("usage.tsv")
    points, codes = _read_points(run.read(src, "usage labels (run extract or ngram)"))
    labels = {code: [up.labels[code] for up in points] for code in codes}
    m = semmap.build_map([p.upid for p in points], [p.verse_id for p in points], codes, labels)
    semmap.write_map(run.path("map.tsv"), m)


def _krige_one(args):
    xy, labels, cfg = args
    grid = kriging.GridSpec(cfg.grid_nx, cfg.grid_ny, pad=cfg.grid_pad)
    return kriging.krige_language(xy, labels, grid, cfg.levels, overrides=cfg.kriging_overrides(),
                                  geographic=cfg.geographic)


def cmd_krige(run: Run):
    m = semmap.read_map(run.read(run.path("map.tsv"), "semantic map (run map)"))
    results = run.pool_map(_krige_one, [(m.xy, m.labels[code], run.cfg) for code in m.languages])
    for code, surfaces in zip(m.languages, results):
        d = run.path("krige", code)
        os.makedirs(d, exist_ok=True)
        for name in os.listdir(d):
            os.remove(os.path.join(d, name))
        with open(os.path.join(d, "index.tsv"), "w", encoding="utf-8", newline="\n") as f:
            f.write("file\tlabel\tnugget\tpsill\trange\n")
            for k, s in enumerate(surfaces, 1):
                stem = f"{k:02d}_{_safe(s.label)}"
                kriging.write_grid(os.path.join(d, stem + ".grid.tsv"), s.grid)
                kriging.write_contours(os.path.join(d, stem + ".contours.tsv"), s.contours)
                p = s.params
                f.write(f"{stem}\t{s.label}\t{p.nugget!r}\t{p.psill!r}\t{p.range!r}\n")


def _read_krige_dir(d):
    out = {}
    index = os.path.join(d, "index.tsv")
    if not os.path.exists(index):
        return out
    with open(index, encoding="utf-8") as f:
        next(f)
        for line in f:
            stem, label = line.rstrip("\n").split("\t")[:2]
            out[label] = kriging.read_contours(os.path.join(d, stem + ".contours.tsv"), label)
    return out


def cmd_render(run: Run, map_path: Optional[str] = None, out_dir: Optional[str] = None):
    map_path = map_path or run.path("map.tsv")
    m = semmap.read_map(run.read(map_path, "semantic map"))
    out_dir = out_dir or run.path("svg")
    os.makedirs(out_dir, exist_ok=True)
    for code in m.languages:
        contours = _read_krige_dir(run.path("krige", code))
        svg = render_svg(m.xy, m.labels[code], contours, title=f"{run.cfg.pivot.upper()} - {code}")
        with open(os.path.join(out_dir, f"{code}.svg"), "w", encoding="utf-8", newline="\n") as f:
            f.write(svg)


def load_markers(path) -> Dict[str, Dict[str, str]]:
    """``code<TAB>suffix<TAB>placeholder`` rows grouped by language."""
    out: Dict[str, Dict[str, str]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line or line.startswith("#") or (lineno == 1 and line.startswith("code\t")):
                continue
            code, suffix, ph = line.split("\t")
            out.setdefault(code, {})[suffix] = ph
    return out


def _predictions_file(path) -> Dict[tuple, str]:
    pred = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            cells = line.rstrip("\r\n").split("\t")
            if lineno == 1 and cells[0] == "verse_id" or len(cells) < 3:
                continue
            pred[(cells[0], int(cells[1]))] = cells[2]
    return pred


def evaluate_language(run: Run, code: str, gold: Dict[tuple, str], markers: Dict[str, str]):
    """(raw-alignment PRF, refined PRF) for one language."""
    raw_pts, _ = _read_points(run.read(run.path("usage.tsv"), "usage points (run extract)"))
    keys = evalharness.occurrence_keys(raw_pts)
    raw = {keys[up.upid]: up.labels[code] for up in raw_pts}
    raw_prf = evalharness.score_alignment(raw, gold)
    refined_prf = None
    if os.path.exists(run.path("labels.tsv")):
        pts, _ = _read_points(run.read(run.path("labels.tsv"), "refined labels"))
        _, clusters = ngrampipe.read_cluster_report(run.read(run.path("ngram", f"{code}.clusters.tsv"),
                                                             f"cluster report for {code}"))
        mapping = evalharness.cluster_placeholders(clusters, markers) if markers else {}
        refined = {keys[up.upid]: mapping.get(up.labels[code], up.labels[code]) for up in pts}
        refined_prf = evalharness.score_alignment(refined, gold)
    return raw_prf, refined_prf


def cmd_eval(run: Run, gold_path: Optional[str] = None, pred_path: Optional[str] = None):
    if gold_path or pred_path:
        gold = evalharness.load_gold(run.read(gold_path, "gold sample"))
        pred = _predictions_file(run.read(pred_path, "predictions"))
        prf = evalharness.score_alignment(pred, gold)
        sys.stdout.write(evalharness.format_report(prf, os.path.basename(pred_path)))
        return {"predictions": prf}
    gold_dir = run.read(run.cfg.gold_dir, "gold directory")
    markers = load_markers(run.read(run.cfg.markers, "marker table")) if run.cfg.markers else {}
    os.makedirs(run.path("eval"), exist_ok=True)
    _, codes = _read_points(run.read(run.path("usage.tsv"), "usage points (run extract)"))
    results = {}
    for code in codes:
        gp = os.path.join(gold_dir, f"{code}.tsv")
        if not os.path.exists(gp):
            continue
        gold = evalharness.load_gold(gp)
        raw_prf, refined_prf = evaluate_language(run, code, gold, markers.get(code, {}))
        text = evalharness.format_report(raw_prf, f"{code} raw alignment")
        if refined_prf is not None:
            text += evalharness.format_report(refined_prf, f"{code} n-gram refined")
        with open(run.path("eval", f"{code}.txt"), "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        results[code] = (raw_prf, refined_prf)
    return results


def cmd_pipeline(run: Run):
    cmd_ingest(run)
    cmd_filter_geo(run)
    cmd_align(run)
    cmd_extract(run)
    cmd_ngram(run)
    cmd_map(run)
    cmd_krige(run)
    cmd_render(run)
    if run.cfg.gold_dir:
        cmd_eval(run)


# -- entry point --------------------------------------------------------------

def default_jobs() -> int:
    env = os.environ.get("TYPOMAP_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"TYPOMAP_JOBS must be an integer, got {env!r}") from None
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def build_parser():
    ap = argparse.ArgumentParser(prog="typomap", description=__doc__.split("\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="flat key = value config file")
        p.add_argument("-w", "--workdir", default="work", help="artifact directory (default: ./work)")
        p.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value; repeatable")
        p.add_argument("-j", "--jobs", type=int, default=None,
                       help="worker processes (default: $TYPOMAP_JOBS or all cores)")
        return p

    helps = {
        "ingest": "tokenize the corpus and intersect verses with the source",
        "filter-geo": "keep languages inside the region polygon",
        "align": "align the source to every target (or import Pharaoh files)",
        "extract": "collect pivot usage points and their raw parallels",
        "ngram": "lexified retention and n-gram cluster relabeling",
        "map": "Hamming distances and classical MDS",
        "krige": "indicator kriging and contours per language and label",
        "render": "SVG maps",
        "eval": "precision/recall against gold samples",
        "pipeline": "run every stage in order",
    }
    for name in SUBCOMMANDS:
        p = common(sub.add_parser(name, help=helps[name]))
        if name == "render":
            p.add_argument("--map", dest="map_path", help="map export (default: <workdir>/map.tsv)")
            p.add_argument("--out", dest="out_dir", help="output directory (default: <workdir>/svg)")
        if name == "eval":
            p.add_argument("--gold", dest="gold_path", help="gold sample file")
            p.add_argument("--pred", dest="pred_path", help="predictions: verse_id, occurrence_index, label")

    p = sub.add_parser("synth", help="write the synthetic benchmark and a config for it")
    p.add_argument("out", help="output directory")
    p.add_argument("--verses", type=int, default=200)
    p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("annotate", help="insert SS/DS placeholders before marked words")
    p.add_argument("corpus_file")
    p.add_argument("markers", help="marker table: code, suffix, placeholder")
    p.add_argument("code", help="language code to take markers for")
    p.add_argument("out")
    return ap


def cmd_synth(args):
    from .synthcorpus import SynthSpec, generate
    paths = generate(SynthSpec(verses=args.verses, seed=args.seed), args.out)
    cfg = PipelineConfig()
    for key in ("corpus_dir", "metadata", "region", "deps", "gold_dir", "markers"):
        setattr(cfg, key, os.path.relpath(paths[key], args.out))
    write_config(os.path.join(args.out, "typomap.cfg"), cfg)
    print(os.path.join(args.out, "typomap.cfg"))


def cmd_annotate(args):
    markers = load_markers(_need(args.markers, "marker table")).get(args.code)
    if not markers:
        raise ConfigError(f"no markers for language {args.code!r}")
    verses = corpus.load_verse_file(_need(args.corpus_file, "corpus file"))
    annotated = {v: evalharness.annotate_tokens(t, markers) for v, t in verses.items()}
    corpus.write_verse_file(args.out, annotated)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            cmd_synth(args)
            return 0
        if args.command == "annotate":
            cmd_annotate(args)
            return 0
        cfg = load_config(args.config, args.set)
        jobs = args.jobs if args.jobs is not None else default_jobs()
        run = Run(cfg, args.workdir, jobs)
        name = args.command
        if name == "render":
            cmd_render(run, args.map_path, args.out_dir)
        elif name == "eval":
            results = cmd_eval(run, args.gold_path, args.pred_path)
            if not (args.gold_path or args.pred_path):
                for code, (raw, refined) in sorted(results.items()):
                    line = f"{code}: raw P={raw.precision:.3f} R={raw.recall:.3f} F1={raw.f1:.3f}"
                    if refined is not None:
                        line += f" | refined P={refined.precision:.3f} R={refined.recall:.3f} F1={refined.f1:.3f}"
                    print(line)
        else:
            globals()["cmd_" + name.replace("-", "_")](run)
        run.manifest(name)
    except (MissingInput, ConfigError) as e:
        print(f"typomap: {e}", file=sys.stderr)
        return 2
    except (corpus.CorpusError, geofilter.RegionError, aligner.AlignmentError, ngrampipe.PipelineError,
            semmap.MapError, kriging.KrigingError, evalharness.EvalError) as e:
        print(f"typomap: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
