"""One-to-one token alignment between the source and a target translation.

Lexical translation tables are trained with IBM Model 1 EM in both
directions; each verse is then aligned by greedy bidirectional matching so
that every source token links to at most one target token and vice versa.
Alignments can also be imported from, and exported to, Pharaoh files.
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .corpus import ParallelCorpus

log = logging.getLogger(__name__)

NULL = None  # conditioning-side empty word
NOMATCH = "NOMATCH"

DEFAULT_ITERS = 10
DEFAULT_THETA = 1e-4


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class AlignmentLink:
    verse_id: str
    src_idx: Optional[int]
    tgt_idx: Optional[int]


@dataclass
class LexTable:
    """t(target word | conditioning word); the conditioning word may be ``None`` (NULL)."""

    t: Dict[Optional[str], Dict[str, float]] = field(default_factory=dict)
    loglik: List[float] = field(default_factory=list)

    def prob(self, tgt: str, src: Optional[str]) -> float:
        row = self.t.get(src)
        if row is None:
            return 0.0
        return row.get(tgt, 0.0)


def _em_counts(bitext, t, chunk):
    counts = defaultdict(lambda: defaultdict(float))
    ll = 0.0
    for src, tgt in chunk:
        cond = [NULL] + list(src)
        norm = math.log(len(cond))
        for f in tgt:
            probs = [t[e][f] for e in cond]
            z = sum(probs)
            ll += math.log(z) - norm
            for e, p in zip(cond, probs):
                counts[e][f] += p / z
    return counts, ll


def _chunks(seq, n):
    size = max(1, math.ceil(len(seq) / n))
    return [seq[i:i + size] for i in range(0, len(seq), size)]


def train_model1(bitext: Sequence[Tuple[Sequence[str], Sequence[str]]], iters: int = DEFAULT_ITERS,
                 chunks: int = 1) -> LexTable:
    """EM for t(f|e) over ``(conditioning tokens, generated tokens)`` pairs.

    Expected counts are accumulated per verse chunk and merged in chunk
    order, so results are reproducible for a given ``chunks`` value.
    ``loglik[k]`` is the data log-likelihood under the parameters entering
    iteration ``k``.
    """
    if iters < 1:
        raise AlignmentError("iters must be >= 1")
    bitext = [(list(s), list(t)) for s, t in bitext]
    if not bitext:
        raise AlignmentError("empty bitext")
    # uniform over co-occurring pairs
    cooc = defaultdict(set)
    for src, tgt in bitext:
        for e in [NULL] + src:
            cooc[e].update(tgt)
    t = {e: dict.fromkeys(fs, 1.0 / len(fs)) for e, fs in cooc.items() if fs}
    table = LexTable(t)
    parts = _chunks(bitext, chunks)
    for _ in range(iters):
        total = defaultdict(lambda: defaultdict(float))
        ll = 0.0
        for part in parts:
            counts, part_ll = _em_counts(bitext, t, part)
            ll += part_ll
            for e, row in counts.items():
                acc = total[e]
                for f, v in row.items():
                    acc[f] += v
        table.loglik.append(ll)
        t = {}
        for e, row in total.items():
            z = sum(row.values())
            t[e] = {f: v / z for f, v in row.items()}
        table.t = t
    return table


def train_lex_table(corpus: ParallelCorpus, code: str, direction: str = "fwd",
                    iters: int = DEFAULT_ITERS, chunks: int = 1) -> LexTable:
    """Train t(tgt|src) (``fwd``) or t(src|tgt) (``rev``) on the verse intersection."""
    pairs = corpus.pairs(code)
    if not pairs:
        raise AlignmentError(f"{code}: no verses shared with the source")
    if direction in ("fwd", "src->tgt"):
        bitext = [(s, t) for _, s, t in pairs]
    elif direction in ("rev", "tgt->src"):
        bitext = [(t, s) for _, s, t in pairs]
    else:
        raise AlignmentError(f"unknown direction {direction!r}")
    return train_model1(bitext, iters=iters, chunks=chunks)


def align_verse(table_fwd: LexTable, table_rev: LexTable, src: Sequence[str], tgt: Sequence[str],
                verse_id: str = "", theta: float = DEFAULT_THETA) -> List[AlignmentLink]:
    """Greedy one-to-one matching on t_fwd(tgt_j|src_i) * t_rev(src_i|tgt_j).

    Ties go to the smaller |i-j|, then the smaller i.  Source tokens left
    unmatched are linked to NULL.
    """
    cands = []
    for i, e in enumerate(src):
        for j, f in enumerate(tgt):
            s = table_fwd.prob(f, e) * table_rev.prob(e, f)
            if s > theta:
                cands.append((-s, abs(i - j), i, j))
    cands.sort()
    used_i, used_j = {}, set()
    for _, _, i, j in cands:
        if i in used_i or j in used_j:
            continue
        used_i[i] = j
        used_j.add(j)
    return [AlignmentLink(verse_id, i, used_i.get(i)) for i in range(len(src))]


@dataclass
class Alignment:
    """Per-verse links for one target language, keyed by verse id."""

    code: str
    links: Dict[str, List[AlignmentLink]]

    def target_index(self, verse_id: str, src_idx: int) -> Optional[int]:
        for link in self.links.get(verse_id, ()):
            if link.src_idx == src_idx:
                return link.tgt_idx
        return None


def align_language(corpus: ParallelCorpus, code: str, iters: int = DEFAULT_ITERS,
                   theta: float = DEFAULT_THETA, chunks: int = 1) -> Alignment:
    fwd = train_lex_table(corpus, code, "fwd", iters, chunks)
    rev = train_lex_table(corpus, code, "rev", iters, chunks)
    links = {}
    for vid, s, t in corpus.pairs(code):
        links[vid] = align_verse(fwd, rev, s, t, vid, theta)
    return Alignment(code, links)


# -- Pharaoh interchange ----------------------------------------------------

def parse_pharaoh_line(line: str, verse_id: str, src_len: int, tgt_len: Optional[int] = None) -> List[AlignmentLink]:
    """Parse ``"i-j i-j ..."``; one-to-one conflicts keep the first pair seen."""
    pairs = {}
    used_j = set()
    for item in line.split():
        try:
            i_s, j_s = item.split("-")
            i, j = int(i_s), int(j_s)
        except ValueError:
            raise AlignmentError(f"verse {verse_id}: malformed pair {item!r}") from None
        if i < 0 or j < 0 or i >= src_len or (tgt_len is not None and j >= tgt_len):
            raise AlignmentError(f"verse {verse_id}: pair {item} out of range")
        if i in pairs or j in used_j:
            log.warning("verse %s: dropping %s, violates one-to-one", verse_id, item)
            continue
        pairs[i] = j
        used_j.add(j)
    return [AlignmentLink(verse_id, i, pairs.get(i)) for i in range(src_len)]


def import_pharaoh(path, verse_ids: Sequence[str], corpus: Optional[ParallelCorpus] = None,
                   code: Optional[str] = None) -> Dict[str, List[AlignmentLink]]:
    """Read one Pharaoh line per verse in ``verse_ids`` order.

    With a corpus and language code, indices are range-checked against the
    verse lengths; without one, source lengths are inferred from the pairs.
    """
    with open(path, encoding="utf-8") as f:
        lines = [ln.rstrip("\r\n") for ln in f]
    if len(lines) != len(verse_ids):
        raise AlignmentError(f"{path}: {len(lines)} lines for {len(verse_ids)} verses")
    out = {}
    for vid, line in zip(verse_ids, lines):
        if corpus is not None:
            if vid not in corpus.source:
                raise AlignmentError(f"verse {vid} not in source corpus")
            src_len = len(corpus.source[vid])
            tgt = corpus.target_verses(code).get(vid) if code else None
            tgt_len = len(tgt) if tgt is not None else None
        else:
            idx = [int(p.split("-")[0]) for p in line.split() if "-" in p]
            src_len, tgt_len = (max(idx) + 1 if idx else 0), None
        out[vid] = parse_pharaoh_line(line, vid, src_len, tgt_len)
    return out


def format_pharaoh(links: Iterable[AlignmentLink]) -> str:
    return " ".join(f"{l.src_idx}-{l.tgt_idx}" for l in links
                    if l.src_idx is not None and l.tgt_idx is not None)


def export_pharaoh(path, alignment: Alignment) -> None:
    """Write ``<path>`` (Pharaoh pairs) and ``<path>.verses`` (the verse id of each line)."""
    vids = sorted(alignment.links)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for vid in vids:
            f.write(format_pharaoh(alignment.links[vid]) + "\n")
    with open(f"{path}.verses", "w", encoding="utf-8", newline="\n") as f:
        for vid in vids:
            f.write(vid + "\n")


def load_pharaoh_export(path, corpus: ParallelCorpus, code: str) -> Alignment:
    with open(f"{path}.verses", encoding="utf-8") as f:
        vids = [ln.strip() for ln in f if ln.strip()]
    return Alignment(code, import_pharaoh(path, vids, corpus, code))


# -- usage points -----------------------------------------------------------

@dataclass
class UsagePoint:
    """One pivot occurrence and its parallel label in each language."""

    upid: str
    verse_id: str
    pivot_idx: int
    labels: Dict[str, str] = field(default_factory=dict)


def pivot_positions(corpus: ParallelCorpus, pivot: str) -> List[Tuple[str, int]]:
    out = []
    for vid in sorted(corpus.source):
        for i, tok in enumerate(corpus.source[vid]):
            if tok == pivot:
                out.append((vid, i))
    return out


def extract_usage_points(corpus: ParallelCorpus, alignments: Mapping[str, Alignment],
                         pivot: str = "when") -> List[UsagePoint]:
    positions = pivot_positions(corpus, pivot)
    if not positions:
        raise AlignmentError(f"pivot {pivot!r} does not occur in the source corpus")
    points = []
    for vid, i in positions:
        up = UsagePoint(f"{vid}_{i}", vid, i)
        for code in sorted(alignments):
            tgt = corpus.target_verses(code).get(vid)
            j = alignments[code].target_index(vid, i) if tgt is not None else None
            up.labels[code] = tgt[j] if j is not None else NOMATCH
        points.append(up)
    return points
