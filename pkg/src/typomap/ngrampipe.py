"""Refine raw pivot alignments with lexified tokens and character n-gram clusters.

Per target language the pipeline

1. drops target tokens that echo a stopword (strongly associated with it),
2. keeps the best-scoring token aligned to the pivot as a lexified label when
   its association is significant,
3. adds the parallel of the pivot's head verb as a candidate token,
4. scores every 2-9 character substring of the candidate tokens,
5. keeps the 20 most co-occurring n-grams among the 200 best by chi-square,
6. clusters those n-grams into allomorph groups (TF-IDF + DBSCAN), and
7. relabels usage points with ``ngram_1`` ... ``ngram_N``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from sklearn.cluster import DBSCAN
from sklearn.feature_extraction.text import TfidfVectorizer

from .aligner import NOMATCH, Alignment, UsagePoint
from .assoc import P_EPSILON, AssociationScore, Event, score_units
from .corpus import ParallelCorpus, tokenize

log = logging.getLogger(__name__)

DEFAULT_STOPWORDS = ("and", "behold", "then", "jesus", "herod", "peter", "paul")
VERBAL_UPOS = frozenset({"VERB", "AUX"})


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class StopwordList:
    words: FrozenSet[str]

    def __post_init__(self):
        if not self.words:
            raise PipelineError("stopword list must not be empty")
        bad = [w for w in self.words if w != w.lower()]
        if bad:
            raise PipelineError(f"stopwords must be lowercase: {sorted(bad)}")

    @classmethod
    def default(cls):
        return cls(frozenset(DEFAULT_STOPWORDS))


# -- dependencies -------------------------------------------------------------

@dataclass
class DepSentence:
    """Dependency parse of one source verse, indexed by source token position.

    ``heads[i]`` is the source index of token i's head, or ``None`` at the
    root.  Punctuation that the tokenizer drops is skipped over.
    """
    forms: List[str]
    upos: List[str]
    heads: List[Optional[int]]


@dataclass
class DependencyDoc:
    verses: Dict[str, DepSentence] = field(default_factory=dict)


def _sentence_from_rows(sid, rows):
    ids = {}
    kept = []
    for k, (form, upos, head) in enumerate(rows, 1):
        toks = tokenize(form)
        if len(toks) > 1:
            raise PipelineError(f"verse {sid}: CoNLL-U form {form!r} splits into several tokens")
        if toks:
            ids[k] = len(kept)
            kept.append((toks[0], upos, head))
    heads = []
    for _, _, head in kept:
        # climb past dropped tokens
        seen = set()
        while head != 0 and head not in ids:
            if head in seen or not 1 <= head <= len(rows):
                raise PipelineError(f"verse {sid}: bad head index {head}")
            seen.add(head)
            head = rows[head - 1][2]
        heads.append(None if head == 0 else ids[head])
    return DepSentence([k[0] for k in kept], [k[1] for k in kept], heads)


def load_conllu(path) -> DependencyDoc:
    """Read CoNLL-U; the verse id comes from ``# sent_id =`` (or ``# verse_id =``).

    Only ID, FORM, UPOS and HEAD are used.  Multiword-token and empty-node
    lines are ignored.
    """
    doc = DependencyDoc()
    sid, rows = None, []

    def flush():
        if sid is not None and rows:
            if sid in doc.verses:
                raise PipelineError(f"duplicate sentence id {sid}")
            doc.verses[sid] = _sentence_from_rows(sid, rows)

    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\r\n")
            if not line:
                flush()
                sid, rows = None, []
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                if key.strip() in ("sent_id", "verse_id"):
                    sid = val.strip()
                continue
            cols = line.split("\t")
            if len(cols) < 8 or "-" in cols[0] or "." in cols[0]:
                continue
            rows.append((cols[1], cols[3], int(cols[6])))
    flush()
    return doc


def head_verb_index(deps: DependencyDoc, verse_id: str, pivot_idx: int) -> Optional[int]:
    """Source index of the first verbal ancestor of the pivot, or None."""
    try:
        sent = deps.verses[verse_id]
    except KeyError:
        raise PipelineError(f"verse {verse_id} missing from dependency annotation") from None
    if not 0 <= pivot_idx < len(sent.heads):
        raise PipelineError(f"verse {verse_id}: pivot index {pivot_idx} outside the parse")
    node = sent.heads[pivot_idx]
    steps = 0
    while node is not None:
        if sent.upos[node] in VERBAL_UPOS:
            return node
        node = sent.heads[node]
        steps += 1
        if steps > len(sent.heads):
            raise PipelineError(f"verse {verse_id}: cycle in head pointers")
    return None


def head_verb_fallback(deps: DependencyDoc, alignment: Alignment, verse_id: str, pivot_idx: int,
                       tgt_tokens: Sequence[str]) -> str:
    """Target token aligned to the pivot's head verb, or NOMATCH."""
    v = head_verb_index(deps, verse_id, pivot_idx)
    if v is None:
        return NOMATCH
    j = alignment.target_index(verse_id, v)
    return NOMATCH if j is None else tgt_tokens[j]


# -- steps 1 and 2: token level ---------------------------------------------

def positive(score: AssociationScore) -> bool:
    t = score.table
    return t is None or t.a * t.d > t.b * t.c


def token_events(corpus: ParallelCorpus, alignment: Alignment, focus: str) -> List[Event]:
    """One event per source token over the verse intersection; pivot = token == focus."""
    tgt_verses = corpus.target_verses(alignment.code)
    events = []
    for vid, links in sorted(alignment.links.items()):
        src = corpus.source.get(vid)
        tgt = tgt_verses.get(vid)
        if src is None or tgt is None:
            continue
        for link in links:
            words = (tgt[link.tgt_idx],) if link.tgt_idx is not None else ()
            events.append(Event(src[link.src_idx] == focus, words))
    return events


def prune_stopword_echo(corpus: ParallelCorpus, alignment: Alignment, stopwords: StopwordList,
                        eps: float = P_EPSILON) -> Set[str]:
    """Target tokens significantly (and positively) associated with any stopword."""
    pruned = set()
    present = {w for v in corpus.source.values() for w in v}
    for sw in sorted(stopwords.words):
        if sw not in present:
            continue
        events = token_events(corpus, alignment, sw)
        units = sorted({w for ev in events if ev.pivot for w in ev.words})
        for s in score_units(events, units, "token"):
            if s.p_value < eps and positive(s):
                pruned.add(s.unit)
    if pruned:
        log.info("%s: pruned stopword echoes %s", alignment.code, sorted(pruned))
    return pruned


def keep_lexified(scores: Sequence[AssociationScore], eps: float = P_EPSILON) -> Set[str]:
    """All tokens tied at the top chi-square, provided that top is significant."""
    scores = [s for s in scores if positive(s)]
    if not scores:
        return set()
    top = max(s.chi2 for s in scores)
    best = [s for s in scores if s.chi2 == top]
    if best[0].p_value >= eps:
        return set()
    return {s.unit for s in best}


# -- steps 3 to 7: n-grams ---------------------------------------------------

@dataclass(frozen=True)
class NgramCandidate:
    gram: str
    score: AssociationScore

    @property
    def chi2(self):
        return self.score.chi2

    @property
    def cooccurrence(self):
        return self.score.cooccurrence


@dataclass
class NgramCluster:
    label: str
    members: Tuple[str, ...]
    total_cooccurrence: int
    scores: Dict[str, AssociationScore] = field(default_factory=dict)


def substrings(token: str, n_min: int = 2, n_max: int = 9) -> List[str]:
    """All contiguous substrings with length in [n_min, n_max], by position."""
    out = []
    for n in range(n_min, min(n_max, len(token)) + 1):
        for i in range(len(token) - n + 1):
            out.append(token[i:i + n])
    return out


def mine_ngrams(events: Sequence[Event], n_min: int = 2, n_max: int = 9,
                positive_only: bool = True) -> List[NgramCandidate]:
    """Score every distinct substring of the pivot-event words against the pivot."""
    universe = sorted({g for ev in events if ev.pivot for w in ev.words
                       for g in substrings(w, n_min, n_max)})
    scores = score_units(events, universe, "substring")
    if positive_only:
        scores = [s for s in scores if positive(s)]
    return [NgramCandidate(s.unit, s) for s in scores]


def select_candidates(scored: Sequence[NgramCandidate], top_chi2: int = 200, top_k: int = 20) -> List[NgramCandidate]:
    by_chi2 = sorted(scored, key=lambda c: (-c.chi2, -c.cooccurrence, c.gram))[:top_chi2]
    by_cooc = sorted(by_chi2, key=lambda c: (-c.cooccurrence, -c.chi2, c.gram))
    return by_cooc[:top_k]


def tfidf_matrix(grams: Sequence[str], ngram_range=(1, 3)):
    vec = TfidfVectorizer(analyzer="char", ngram_range=tuple(ngram_range), lowercase=False)
    return vec.fit_transform(list(grams))


def cluster_allomorphs(candidates: Sequence[NgramCandidate], eps: float = 0.5, min_pts: int = 2,
                       ngram_range=(1, 3)) -> List[NgramCluster]:
    """Group n-grams by DBSCAN over cosine distances of their TF-IDF vectors.

    Noise points become singleton clusters.  Clusters are numbered by
    descending total co-occurrence, then by their smallest member.
    """
    best: Dict[str, NgramCandidate] = {}
    for c in candidates:
        if c.gram not in best:
            best[c.gram] = c
    if not best:
        raise PipelineError("no n-grams to cluster")
    grams = sorted(best)
    if len(grams) == 1:
        labels = np.array([-1])
    else:
        X = tfidf_matrix(grams, ngram_range)
        labels = DBSCAN(eps=eps, min_samples=min_pts, metric="cosine").fit(X).labels_
    groups: Dict[object, List[str]] = {}
    for g, lab in zip(grams, labels):
        key = ("noise", g) if lab == -1 else ("core", int(lab))
        groups.setdefault(key, []).append(g)
    clusters = []
    for members in groups.values():
        members = sorted(members)
        total = sum(best[g].cooccurrence for g in members)
        clusters.append((members, total))
    clusters.sort(key=lambda mt: (-mt[1], mt[0][0]))
    return [NgramCluster(f"ngram_{k}", tuple(m), t, {g: best[g].score for g in m})
            for k, (m, t) in enumerate(clusters, 1)]


def match_cluster(tokens: Iterable[str], clusters: Sequence[NgramCluster]) -> Optional[str]:
    """Label of the cluster whose longest member found in ``tokens`` is longest."""
    tokens = [t for t in tokens if t and t != NOMATCH]
    best = None
    for c in clusters:
        hit = max((len(m) for m in c.members if any(m in t for t in tokens)), default=0)
        if hit == 0:
            continue
        key = (hit, c.total_cooccurrence)
        if best is None or key > best[0]:
            best = (key, c.label)
    return best[1] if best else None


def relabel(aligned: str, candidates: Sequence[str], clusters: Sequence[NgramCluster],
            lexified: Set[str]) -> str:
    if aligned in lexified:
        return aligned
    lab = match_cluster(candidates, clusters)
    return lab if lab is not None else NOMATCH


# -- per-language driver -----------------------------------------------------

@dataclass
class NgramConfig:
    pivot: str = "when"
    stopwords: StopwordList = field(default_factory=StopwordList.default)
    eps: float = P_EPSILON
    n_min: int = 2
    n_max: int = 9
    top_chi2: int = 200
    top_k: int = 20
    dbscan_eps: float = 0.5
    min_pts: int = 2
    tfidf_range: Tuple[int, int] = (1, 3)


@dataclass
class LanguageResult:
    code: str
    pruned: Set[str]
    lexical_scores: List[AssociationScore]
    lexified: Set[str]
    candidates: List[NgramCandidate]
    clusters: List[NgramCluster]
    labels: Dict[str, str]  # upid -> refined label
    candidate_tokens: Dict[str, Tuple[str, ...]]


def run_language(corpus: ParallelCorpus, alignment: Alignment, points: Sequence[UsagePoint],
                 deps: Optional[DependencyDoc], cfg: NgramConfig = None) -> LanguageResult:
    cfg = cfg or NgramConfig()
    code = alignment.code
    tgt_verses = corpus.target_verses(code)

    pruned = prune_stopword_echo(corpus, alignment, cfg.stopwords, cfg.eps)

    events = token_events(corpus, alignment, cfg.pivot)
    aligned_units = sorted({w for ev in events if ev.pivot for w in ev.words} - pruned)
    lex_scores = score_units(events, aligned_units, "token")
    lexified = keep_lexified(lex_scores, cfg.eps)

    # candidate tokens per usage point: pivot parallel and head-verb parallel
    cand: Dict[str, Tuple[str, ...]] = {}
    claimed: Dict[str, Set[int]] = {}
    skip: Set[str] = set()
    for up in points:
        tgt = tgt_verses.get(up.verse_id)
        if tgt is None or up.verse_id not in alignment.links:
            cand[up.upid] = ()
            continue
        j = alignment.target_index(up.verse_id, up.pivot_idx)
        aligned = tgt[j] if j is not None else NOMATCH
        if aligned in lexified:
            skip.add(up.upid)
            cand[up.upid] = (aligned,)
            continue
        toks = []
        used = claimed.setdefault(up.verse_id, set())
        if j is not None and aligned not in pruned:
            toks.append(aligned)
            used.add(j)
        if deps is not None:
            v = head_verb_index(deps, up.verse_id, up.pivot_idx)
            jv = alignment.target_index(up.verse_id, v) if v is not None else None
            if jv is not None and tgt[jv] not in pruned and jv != j:
                toks.append(tgt[jv])
                used.add(jv)
        cand[up.upid] = tuple(toks)

    # events for substring scoring: one per usage point still in play, one per other source token
    pivot_slots = {(up.verse_id, up.pivot_idx) for up in points}
    ng_events = [Event(True, cand[up.upid]) for up in points
                 if up.upid not in skip and up.verse_id in tgt_verses and up.verse_id in alignment.links]
    for vid, links in sorted(alignment.links.items()):
        tgt = tgt_verses.get(vid)
        if tgt is None or vid not in corpus.source:
            continue
        used = claimed.get(vid, set())
        for link in links:
            if (vid, link.src_idx) in pivot_slots:
                continue
            if link.tgt_idx is not None and link.tgt_idx in used:
                continue
            words = (tgt[link.tgt_idx],) if link.tgt_idx is not None else ()
            ng_events.append(Event(False, words))

    candidates: List[NgramCandidate] = []
    clusters: List[NgramCluster] = []
    if any(ev.pivot and ev.words for ev in ng_events):
        scored = mine_ngrams(ng_events, cfg.n_min, cfg.n_max)
        candidates = select_candidates(scored, cfg.top_chi2, cfg.top_k)
        if candidates:
            clusters = cluster_allomorphs(candidates, cfg.dbscan_eps, cfg.min_pts, cfg.tfidf_range)

    labels = {}
    for up in points:
        tgt = tgt_verses.get(up.verse_id)
        j = alignment.target_index(up.verse_id, up.pivot_idx) if tgt is not None else None
        aligned = tgt[j] if j is not None else NOMATCH
        labels[up.upid] = relabel(aligned, cand.get(up.upid, ()), clusters, lexified)
    return LanguageResult(code, pruned, lex_scores, lexified, candidates, clusters, labels, cand)


def write_cluster_report(path, result: LanguageResult) -> None:
    """Tab-separated: label, gram, chi2, cooccurrence; lexified tokens listed first."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("label\tgram\tchi2\tcooccurrence\n")
        by_unit = {s.unit: s for s in result.lexical_scores}
        for tok in sorted(result.lexified):
            s = by_unit[tok]
            f.write(f"lexified\t{tok}\t{s.chi2!r}\t{s.cooccurrence}\n")
        for c in result.clusters:
            for g in c.members:
                s = c.scores[g]
                f.write(f"{c.label}\t{g}\t{s.chi2!r}\t{s.cooccurrence}\n")


def read_cluster_report(path) -> Tuple[Set[str], List[NgramCluster]]:
    lexified, groups = set(), {}
    with open(path, encoding="utf-8") as f:
        next(f)
        for line in f:
            label, gram, chi2, cooc = line.rstrip("\n").split("\t")
            if label == "lexified":
                lexified.add(gram)
                continue
            groups.setdefault(label, []).append((gram, int(cooc)))
    clusters = [NgramCluster(lab, tuple(g for g, _ in m), sum(c for _, c in m))
                for lab, m in groups.items()]
    clusters.sort(key=lambda c: int(c.label.split("_")[1]))
    return lexified, clusters
