"""Precision/recall scoring of pivot parallels against annotated gold samples.

An aligned word counts as a positive and a NULL alignment as a negative.
Gold labels are a specific target token, ``SS``/``DS`` placeholders,
``NULL_OK`` (no parallel is correct) or ``NULL_BAD`` (a parallel was missed).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Mapping, Sequence, Tuple

from .aligner import NOMATCH

NULL_OK = "NULL_OK"
NULL_BAD = "NULL_BAD"
NULL_PREDICTIONS = frozenset({NOMATCH, "NULL", ""})

ItemKey = Tuple[str, int]


class EvalError(ValueError):
    pass


def f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


@dataclass(frozen=True)
class PRF:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        return f1(self.precision, self.recall)

    def as_dict(self):
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
                "precision": self.precision, "recall": self.recall, "f1": self.f1}


def load_gold(path) -> Dict[ItemKey, str]:
    """Read ``verse_id<TAB>occurrence_index<TAB>gold_label`` (header optional)."""
    gold: Dict[ItemKey, str] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line or line.startswith("#"):
                continue
            cells = line.split("\t")
            if lineno == 1 and cells[0] == "verse_id":
                continue
            if len(cells) != 3:
                raise EvalError(f"{path}:{lineno}: expected 3 columns")
            key = (cells[0], int(cells[1]))
            if key in gold:
                raise EvalError(f"{path}:{lineno}: duplicate item {key}")
            gold[key] = cells[2]
    return gold


def score_alignment(pred: Mapping[ItemKey, str], gold: Mapping[ItemKey, str]) -> PRF:
    tp = fp = tn = fn = 0
    for key, g in gold.items():
        if key not in pred:
            raise EvalError(f"no prediction for item {key}")
        p = pred[key]
        if p in NULL_PREDICTIONS:
            if g == NULL_OK:
                tn += 1
            else:
                fn += 1
        elif p == g and g not in (NULL_OK, NULL_BAD):
            tp += 1
        else:
            fp += 1
    return PRF(tp, fp, tn, fn)


def annotate_tokens(tokens: Sequence[str], marker_suffixes: Mapping[str, str]) -> List[str]:
    """Insert a placeholder before every token ending in a marker suffix.

    The longest matching suffix wins; a token equal to the bare suffix is
    left alone.
    """
    if not marker_suffixes:
        raise EvalError("marker suffix table is empty")
    by_length = sorted(marker_suffixes, key=lambda s: (-len(s), s))
    out = []
    for tok in tokens:
        for suf in by_length:
            if len(tok) > len(suf) and tok.endswith(suf):
                out.append(marker_suffixes[suf])
                break
        out.append(tok)
    return out


def annotate_markers(text: str, marker_suffixes: Mapping[str, str]) -> str:
    return " ".join(annotate_tokens(text.split(), marker_suffixes))


def occurrence_keys(points) -> Dict[str, ItemKey]:
    """Map usage-point ids to (verse_id, n-th pivot occurrence in that verse)."""
    seen: Dict[str, int] = {}
    out = {}
    for up in sorted(points, key=lambda p: (p.verse_id, p.pivot_idx)):
        k = seen.get(up.verse_id, 0)
        seen[up.verse_id] = k + 1
        out[up.upid] = (up.verse_id, k)
    return out


def cluster_placeholders(clusters, marker_suffixes: Mapping[str, str]) -> Dict[str, str]:
    """Name n-gram clusters after the marker they overlap most.

    A member supports a placeholder when it contains the marker suffix or is
    contained in it; support is weighted by the member's co-occurrence.
    Clusters with no support keep their ``ngram_K`` label.
    """
    out = {}
    for c in clusters:
        support: Dict[str, float] = {}
        for m in c.members:
            weight = c.scores[m].cooccurrence if m in c.scores else 1
            for suf, ph in marker_suffixes.items():
                if suf in m or m in suf:
                    support[ph] = support.get(ph, 0) + weight
        if support:
            out[c.label] = min(support, key=lambda ph: (-support[ph], ph))
    return out


def format_report(prf: PRF, name: str = "") -> str:
    lines = [f"# {name}"] if name else []
    for k, v in prf.as_dict().items():
        lines.append(f"{k}={v:.6f}" if isinstance(v, float) else f"{k}={v}")
    return "\n".join(lines) + "\n"
