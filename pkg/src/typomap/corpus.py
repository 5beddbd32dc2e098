"""Verse-aligned parallel corpus ingestion.

Corpus files hold one verse per line as ``verse_id<TAB>raw text``; lines
starting with ``#`` are comments.  Language metadata is a tab-separated file
with the header ``code  name  lon  lat``.
"""
from __future__ import annotations

import logging
import os
import unicodedata
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple

log = logging.getLogger(__name__)

METADATA_COLUMNS = ("code", "name", "lon", "lat")


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class LanguageMeta:
    code: str
    name: str
    lon: float
    lat: float

    def __post_init__(self):
        if not self.code:
            raise CorpusError("language code must be nonempty")
        if not -180.0 <= self.lon <= 180.0:
            raise CorpusError(f"{self.code}: longitude {self.lon} out of range")
        if not -90.0 <= self.lat <= 90.0:
            raise CorpusError(f"{self.code}: latitude {self.lat} out of range")


Verses = Dict[str, List[str]]


def _is_peripheral(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "PS"


def tokenize(text: str) -> List[str]:
    """NFC-normalize, lowercase, split on whitespace and strip peripheral punctuation/symbols.

    Word-internal punctuation such as hyphens and apostrophes is kept, so
    ``"me-'u'-axüa-cu"`` stays a single token.
    """
    tokens = []
    for raw in unicodedata.normalize("NFC", text).lower().split():
        start, end = 0, len(raw)
        while start < end and _is_peripheral(raw[start]):
            start += 1
        while end > start and _is_peripheral(raw[end - 1]):
            end -= 1
        if start < end:
            tokens.append(raw[start:end])
    return tokens


def load_verse_file(path) -> Verses:
    """Read a verse-per-line file into ``{verse_id: tokens}``.

    Verses whose text tokenizes to nothing are dropped.  Input that is not
    NFC-normalized is normalized and logged.
    """
    verses: Verses = {}
    not_nfc = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            if "\t" not in line:
                raise CorpusError(f"{path}:{lineno}: expected 'verse_id<TAB>text'")
            verse_id, text = line.split("\t", 1)
            verse_id = verse_id.strip()
            if not verse_id:
                raise CorpusError(f"{path}:{lineno}: empty verse id")
            if verse_id in verses:
                raise CorpusError(f"{path}:{lineno}: duplicate verse id {verse_id}")
            normalized = unicodedata.normalize("NFC", text)
            if normalized != text:
                not_nfc += 1
            tokens = tokenize(normalized)
            if tokens:
                verses[verse_id] = tokens
            else:
                # keep the id reserved so a later duplicate is still caught
                verses[verse_id] = []
    if not_nfc:
        log.info("%s: %d lines were not NFC and have been normalized", path, not_nfc)
    return {k: v for k, v in verses.items() if v}


def write_verse_file(path, verses: Mapping[str, Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for vid in sorted(verses):
            f.write(f"{vid}\t{' '.join(verses[vid])}\n")


def load_metadata(path) -> List[LanguageMeta]:
    metas = []
    seen = set()
    with open(path, encoding="utf-8") as f:
        header = None
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if header is None:
                header = [h.strip().lower() for h in fields]
                missing = [c for c in METADATA_COLUMNS if c not in header]
                if missing:
                    raise CorpusError(f"{path}: metadata header lacks {missing}")
                continue
            rec = dict(zip(header, fields))
            try:
                meta = LanguageMeta(rec["code"].strip(), rec["name"].strip(),
                                    float(rec["lon"]), float(rec["lat"]))
            except (KeyError, ValueError) as e:
                raise CorpusError(f"{path}:{lineno}: bad metadata record ({e})") from e
            if meta.code in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate language code {meta.code}")
            seen.add(meta.code)
            metas.append(meta)
    return metas


def write_metadata(path, metas: Sequence[LanguageMeta]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\t".join(METADATA_COLUMNS) + "\n")
        for m in metas:
            f.write(f"{m.code}\t{m.name}\t{m.lon!r}\t{m.lat!r}\n")


@dataclass
class ParallelCorpus:
    """Source (pivot-language) verses plus any number of target translations."""

    source: Verses
    targets: Dict[str, Tuple[LanguageMeta, Verses]] = field(default_factory=dict)
    source_code: str = "eng"

    @property
    def codes(self) -> List[str]:
        return sorted(self.targets)

    def meta(self, code: str) -> LanguageMeta:
        return self._target(code)[0]

    def target_verses(self, code: str) -> Verses:
        return self._target(code)[1]

    def _target(self, code):
        try:
            return self.targets[code]
        except KeyError:
            raise CorpusError(f"unknown language code {code!r}") from None

    def pairs(self, code: str) -> List[Tuple[str, List[str], List[str]]]:
        """(verse_id, source tokens, target tokens) over the verse intersection."""
        tgt = self.target_verses(code)
        return [(v, self.source[v], tgt[v]) for v in intersect_verses(self, code)]


def intersect_verses(corpus: ParallelCorpus, code: str) -> List[str]:
    tgt = corpus.target_verses(code)
    common = sorted(corpus.source.keys() & tgt.keys())
    dropped = len(tgt) - len(common)
    if dropped:
        log.info("%s: %d verses absent from the source were dropped", code, dropped)
    return common


def load_corpus(corpus_dir, metas: Sequence[LanguageMeta], source_code: str) -> ParallelCorpus:
    """Load ``<corpus_dir>/<code>.txt`` for the source and every listed language.

    Languages with metadata but no corpus file are skipped with a warning.
    """
    source = load_verse_file(os.path.join(corpus_dir, f"{source_code}.txt"))
    targets = {}
    for m in metas:
        if m.code == source_code:
            continue
        path = os.path.join(corpus_dir, f"{m.code}.txt")
        if not os.path.exists(path):
            log.warning("no corpus file for %s, skipping", m.code)
            continue
        targets[m.code] = (m, load_verse_file(path))
    return ParallelCorpus(source=source, targets=targets, source_code=source_code)
