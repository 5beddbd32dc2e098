"""Synthetic verse-parallel benchmark with switch-reference style targets.

The source language is a toy English with ``when``-clauses in three context
classes:

* ``SS``  the when-clause subject equals the main-clause subject
* ``DS``  the subjects differ
* ``LEX`` a temporal-setting clause ("when the evening came")

Each target language renders the classes according to its strategy:

=================  ======================  ===================  ==================
strategy           SS                      DS                   LEX
=================  ======================  ===================  ==================
mixed              verb + ``-ka``          verb + ``-ku``       connector + verb
lexified-only      connector + verb        connector + verb     connector + verb
morphological-only verb + ``-ka``          verb + ``-ku``       verb + ``-ku``
inverted-mixed     connector + verb        connector + verb     verb + ``-ku``
=================  ======================  ===================  ==================

In the mixed and morphological-only languages a small share of
when-clauses is rendered as an independent clause with no marking at all;
their gold label is ``NULL_OK``.  Each target drops a few verses at random
(``coverage``), as real translations do.  The generator writes
corpus files, language metadata, a CoNLL-U parse of the source, per-language
gold samples, a marker table and an (approximate) region polygon.
"""
from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .corpus import LanguageMeta, write_metadata

STRATEGIES = ("mixed", "lexified-only", "morphological-only", "inverted-mixed")
CLASSES = ("SS", "DS", "LEX")

SS_SUFFIX = "ka"
DS_SUFFIX = "ku"

# allomorphs by stem shape: (after consonant, after vowel); the linking
# material differs between SS and DS so the two families share no n-gram
# that spans the stem boundary
ALLOMORPHS = {
    "SS": ("aka", "yaka"),
    "DS": ("uku", "ruku"),
    "MAIN": ("e", "ne"),
    "PLAIN": ("eta", "ta"),
}

VOWELS = "aeiou"
CONSONANTS = "ptmnrswyhxcv"

PRONOUNS = ["he", "they", "she", "we"]
NAMES = ["jesus", "peter", "paul", "herod", "john", "mary"]
SUBJECTS = PRONOUNS + NAMES
TIME_NOUNS = ["evening", "morning", "hour", "sabbath", "night", "day"]
PLACES = ["house", "city", "sea", "mountain", "temple", "village", "boat", "road"]
OBJECTS = ["word", "bread", "people", "disciples", "crowd", "money", "law", "child"]
INTRO = ["and", "then", "behold"]

# (past form, transitive)
VERBS = [
    ("came", False), ("went", False), ("arrived", False), ("entered", False),
    ("returned", False), ("departed", False), ("sat", False), ("stood", False),
    ("saw", True), ("heard", True), ("took", True), ("found", True),
    ("called", True), ("asked", True), ("left", True), ("taught", True),
    ("blessed", True), ("followed", True), ("healed", True), ("sent", True),
    ("loved", True), ("knew", True), ("gave", True), ("told", True),
]

# Latin America and Caribbean; the last language sits outside the region.
DEFAULT_LANGUAGES = (
    ("hch", "Huichol-like (synthetic)", "mixed", -104.5, 22.0),
    ("lxa", "Lexified-A (synthetic)", "lexified-only", -74.0, 4.6),
    ("mra", "Morph-A (synthetic)", "morphological-only", -76.2, -10.5),
    ("inv", "Inverted-A (synthetic)", "inverted-mixed", -65.0, -15.0),
    ("eux", "Outlier-Europe (synthetic)", "lexified-only", 10.0, 50.0),
)
SOURCE = ("eng", "Source English (synthetic)", 0.0, 51.5)


@dataclass
class SynthSpec:
    verses: int = 200
    seed: int = 1
    languages: Sequence[Tuple[str, str, str, float, float]] = DEFAULT_LANGUAGES
    vocab_size: int = len(VERBS)
    when_share: float = 0.65
    class_weights: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    independent_share: float = 0.04
    coverage: float = 0.97

    def __post_init__(self):
        if self.verses < 50:
            raise ValueError("need at least 50 verses")
        if not 1 <= self.vocab_size <= len(VERBS):
            raise ValueError(f"vocab_size must be in 1..{len(VERBS)}")
        for lang in self.languages:
            if lang[2] not in STRATEGIES:
                raise ValueError(f"unknown strategy {lang[2]!r}")


@dataclass
class Clause:
    subj: str
    verb: str
    place: str = ""
    obj: str = ""


@dataclass
class SourceVerse:
    verse_id: str
    intro: str
    when: Clause = None
    cls: str = ""
    main: Clause = None


@dataclass
class _Lexicon:
    words: Dict[str, str] = field(default_factory=dict)
    connector: str = "quepa"


def _word(rng, syllables, used):
    while True:
        w = "".join(rng.choice(CONSONANTS) + rng.choice(VOWELS) for _ in range(syllables))
        if w not in used and not any(w.endswith(s) for s in (SS_SUFFIX, DS_SUFFIX)):
            used.add(w)
            return w


def _stem(rng, used):
    # verb stems end in a consonant or a vowel; the suffix allomorph depends on which
    while True:
        w = _word(rng, rng.choice((2, 3)), used)
        if rng.random() < 0.4:
            w = w + rng.choice("nrsx")
        if "k" not in w:
            return w


def _lexicon(rng, connector):
    used = {connector}
    lex = _Lexicon(connector=connector)
    for w in SUBJECTS + TIME_NOUNS + OBJECTS + INTRO:
        lex.words[w] = _word(rng, rng.choice((1, 2)) if w in PRONOUNS else 2, used)
    for w in PLACES:
        lex.words[w] = _word(rng, 2, used) + "-sie"
    for v, _ in VERBS:
        lex.words[v] = _stem(rng, used)
    return lex


def _inflect(stem, category):
    after_consonant, after_vowel = ALLOMORPHS[category]
    return stem + (after_vowel if stem[-1] in VOWELS else after_consonant)


def _source_verses(spec: SynthSpec, rng) -> List[SourceVerse]:
    verbs = VERBS[:spec.vocab_size]
    n_when = round(spec.verses * spec.when_share)
    # deterministic class allocation by largest remainder, then shuffled
    w = spec.class_weights
    raw = [n_when * x / sum(w) for x in w]
    counts = [int(r) for r in raw]
    for i in sorted(range(3), key=lambda k: counts[k] - raw[k])[:n_when - sum(counts)]:
        counts[i] += 1
    classes = [c for c, n in zip(CLASSES, counts) for _ in range(n)]
    classes += [""] * (spec.verses - n_when)
    rng.shuffle(classes)

    out = []
    for k, cls in enumerate(classes):
        book, chap, verse = 40 + k // 2000, 1 + (k // 40) % 50, 1 + k % 40
        vid = f"{book:02d}{chap:03d}{verse:03d}"
        intro = rng.choice(INTRO + [""] * 4)
        v, tr = rng.choice(verbs)
        main = Clause(rng.choice(SUBJECTS), v, obj=rng.choice(OBJECTS) if tr else "",
                      place="" if tr else rng.choice(PLACES))
        sv = SourceVerse(vid, intro, cls=cls, main=main)
        if cls:
            wv, wtr = rng.choice(verbs)
            if cls == "SS":
                subj = main.subj
            elif cls == "DS":
                subj = rng.choice([s for s in SUBJECTS if s != main.subj])
            else:
                subj = rng.choice(TIME_NOUNS)
            if cls == "LEX":
                sv.when = Clause(subj, wv)
            elif wtr:
                sv.when = Clause(subj, wv, obj=rng.choice(OBJECTS))
            else:
                sv.when = Clause(subj, wv, place=rng.choice(PLACES))
        out.append(sv)
    return out


def _subject_words(subj):
    return ["the", subj] if subj in TIME_NOUNS else [subj]


def _english(sv: SourceVerse):
    """Tokens with (UPOS, head) in 1-based CoNLL-U numbering."""
    rows = []  # (form, upos, head-key, deprel); heads resolved below
    keys = {}

    def add(form, upos, head, rel, key=None):
        rows.append([form, upos, head, rel])
        if key:
            keys[key] = len(rows)

    if sv.intro:
        add(sv.intro, "CCONJ" if sv.intro == "and" else "ADV", "main", "cc" if sv.intro == "and" else "advmod")
    if sv.when:
        add("when", "SCONJ", "wverb", "advmod")
        for w in _subject_words(sv.when.subj):
            add(w, "DET" if w == "the" else ("PRON" if w in PRONOUNS else ("PROPN" if w in NAMES else "NOUN")),
                "wsubj" if w == "the" else "wverb", "det" if w == "the" else "nsubj", None if w == "the" else "wsubj")
        add(sv.when.verb, "VERB", "main", "advcl", "wverb")
        if sv.when.obj:
            add("the", "DET", "wobj", "det")
            add(sv.when.obj, "NOUN", "wverb", "obj", "wobj")
        if sv.when.place:
            add("to", "ADP", "wplace", "case")
            add("the", "DET", "wplace", "det")
            add(sv.when.place, "NOUN", "wverb", "obl", "wplace")
        add(",", "PUNCT", "main", "punct")
    m = sv.main
    add(m.subj, "PRON" if m.subj in PRONOUNS else "PROPN", "main", "nsubj")
    add(m.verb, "VERB", None, "root", "main")
    if m.obj:
        add("the", "DET", "mobj", "det")
        add(m.obj, "NOUN", "main", "obj", "mobj")
    if m.place:
        add("to", "ADP", "mplace", "case")
        add("the", "DET", "mplace", "det")
        add(m.place, "NOUN", "main", "obl", "mplace")
    add(".", "PUNCT", "main", "punct")
    out = []
    for form, upos, head, rel in rows:
        out.append((form, upos, 0 if head is None else keys[head], rel))
    return out


def _target(sv: SourceVerse, lex: _Lexicon, strategy: str, independent: bool):
    """Target tokens plus the gold label of the when-clause (or None)."""
    W = lex.words
    toks = []
    if sv.intro:
        toks.append(W[sv.intro])
    gold = None
    if sv.when:
        cls = sv.cls
        lexified = (strategy == "lexified-only"
                    or (strategy == "mixed" and cls == "LEX")
                    or (strategy == "inverted-mixed" and cls != "LEX"))
        if independent:
            category, gold = "MAIN", "NULL_OK"
        elif lexified:
            toks.append(lex.connector)
            category, gold = "PLAIN", lex.connector
        else:
            category = gold = "SS" if cls == "SS" else "DS"
        toks.append(W[sv.when.subj])
        if sv.when.obj:
            toks.append(W[sv.when.obj])
        if sv.when.place:
            toks.append(W[sv.when.place])
        toks.append(_inflect(W[sv.when.verb], category))
    m = sv.main
    toks.append(W[m.subj])
    if m.obj:
        toks.append(W[m.obj])
    if m.place:
        toks.append(W[m.place])
    toks.append(_inflect(W[m.verb], "MAIN"))
    return toks, gold


CONNECTORS = ["quepa", "nai", "tuki", "ora", "weti"]

REGION = {
    "type": "FeatureCollection",
    "features": [{
        "type": "Feature",
        "properties": {"name": "Latin America and the Caribbean (approximate outline, not the published polygon)"},
        "geometry": {"type": "Polygon", "coordinates": [[
            [-118.0, 32.7], [-106.5, 31.8], [-97.1, 25.9], [-90.0, 22.0], [-80.0, 25.5],
            [-74.0, 24.0], [-59.0, 17.0], [-59.0, 12.0], [-50.0, 5.0], [-34.0, -6.0],
            [-38.0, -15.0], [-48.0, -28.0], [-53.0, -34.0], [-62.0, -40.0], [-65.0, -55.5],
            [-75.0, -53.0], [-75.5, -40.0], [-71.5, -18.0], [-81.5, -6.0], [-81.0, 0.0],
            [-79.0, 8.0], [-87.0, 12.0], [-95.0, 15.5], [-106.0, 20.0], [-110.0, 23.0],
            [-118.0, 32.7],
        ]]},
    }],
}


def generate(spec: SynthSpec, out_dir) -> Dict[str, str]:
    """Write the benchmark under ``out_dir``; returns the created paths by role."""
    rng = random.Random(spec.seed)
    src = _source_verses(spec, rng)
    corpus_dir = os.path.join(out_dir, "corpus")
    gold_dir = os.path.join(out_dir, "gold")
    os.makedirs(corpus_dir, exist_ok=True)
    os.makedirs(gold_dir, exist_ok=True)

    parsed = {sv.verse_id: _english(sv) for sv in src}
    with open(os.path.join(corpus_dir, f"{SOURCE[0]}.txt"), "w", encoding="utf-8", newline="\n") as f:
        f.write("# synthetic source text\n")
        for sv in src:
            f.write(f"{sv.verse_id}\t{' '.join(r[0] for r in parsed[sv.verse_id])}\n")
    with open(os.path.join(out_dir, "source.conllu"), "w", encoding="utf-8", newline="\n") as f:
        for sv in src:
            f.write(f"# sent_id = {sv.verse_id}\n")
            for k, (form, upos, head, rel) in enumerate(parsed[sv.verse_id], 1):
                f.write(f"{k}\t{form}\t_\t{upos}\t_\t_\t{head}\t{rel}\t_\t_\n")
            f.write("\n")
    with open(os.path.join(out_dir, "classes.tsv"), "w", encoding="utf-8", newline="\n") as f:
        f.write("verse_id\tclass\n")
        for sv in src:
            if sv.cls:
                f.write(f"{sv.verse_id}\t{sv.cls}\n")

    metas = [LanguageMeta(SOURCE[0], SOURCE[1], SOURCE[2], SOURCE[3])]
    markers = []
    for n, (code, name, strategy, lon, lat) in enumerate(spec.languages):
        lrng = random.Random(f"{spec.seed}:{code}")
        lex = _lexicon(lrng, CONNECTORS[n % len(CONNECTORS)])
        metas.append(LanguageMeta(code, name, lon, lat))
        if strategy != "lexified-only":
            markers.append((code, SS_SUFFIX, "SS"))
            markers.append((code, DS_SUFFIX, "DS"))
        lines, gold = [], []
        for sv in src:
            if lrng.random() > spec.coverage:
                continue
            independent = (bool(sv.when) and strategy in ("mixed", "morphological-only")
                           and lrng.random() < spec.independent_share)
            toks, g = _target(sv, lex, strategy, independent)
            lines.append(f"{sv.verse_id}\t{' '.join(toks)}")
            if g is not None:
                gold.append((sv.verse_id, g))
        with open(os.path.join(corpus_dir, f"{code}.txt"), "w", encoding="utf-8", newline="\n") as f:
            f.write(f"# synthetic {strategy} language\n")
            f.write("\n".join(lines) + "\n")
        with open(os.path.join(gold_dir, f"{code}.tsv"), "w", encoding="utf-8", newline="\n") as f:
            f.write("verse_id\toccurrence_index\tgold_label\n")
            for vid, g in gold:
                f.write(f"{vid}\t0\t{g}\n")

    write_metadata(os.path.join(out_dir, "languages.tsv"), metas)
    with open(os.path.join(out_dir, "markers.tsv"), "w", encoding="utf-8", newline="\n") as f:
        f.write("code\tsuffix\tplaceholder\n")
        for row in markers:
            f.write("\t".join(row) + "\n")
    with open(os.path.join(out_dir, "region.geojson"), "w", encoding="utf-8", newline="\n") as f:
        json.dump(REGION, f, indent=1)
        f.write("\n")
    return {
        "corpus_dir": corpus_dir,
        "metadata": os.path.join(out_dir, "languages.tsv"),
        "deps": os.path.join(out_dir, "source.conllu"),
        "gold_dir": gold_dir,
        "markers": os.path.join(out_dir, "markers.tsv"),
        "region": os.path.join(out_dir, "region.geojson"),
        "classes": os.path.join(out_dir, "classes.tsv"),
    }
