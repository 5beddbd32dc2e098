"""Hamming dissimilarity between usage points and its classical MDS embedding."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

log = logging.getLogger(__name__)

POWER_TOL = 1e-10
POWER_MAXITER = 10000


class MapError(ValueError):
    pass


def hamming_matrix(label_rows: Sequence[Sequence[str]]) -> np.ndarray:
    """``d[i, j]`` = number of languages whose labels differ between points i and j.

    ``label_rows[i][k]`` is the label of point i in language k; NOMATCH is an
    ordinary value.
    """
    rows = list(label_rows)
    n = len(rows)
    if n == 0:
        return np.zeros((0, 0))
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise MapError("every point needs a label for every language")
    # integer-code each language column, then count mismatches column by column
    codes = np.empty((n, width.pop()), dtype=np.int64)
    for k in range(codes.shape[1]):
        vocab: Dict[str, int] = {}
        codes[:, k] = [vocab.setdefault(r[k], len(vocab)) for r in rows]
    d = np.zeros((n, n))
    for k in range(codes.shape[1]):
        col = codes[:, k]
        d += col[:, None] != col[None, :]
    return d


def _power_iteration(B, start, found=(), tol=POWER_TOL, maxiter=POWER_MAXITER):
    """Dominant eigenpair of ``B`` restricted to the complement of ``found``."""
    scale = max(1.0, float(np.linalg.norm(B)))

    def project(x):
        for u in found:
            x = x - (u @ x) * u
        return x

    v = project(start)
    v /= np.linalg.norm(v)
    for it in range(maxiter):
        w = project(B @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0, v, it
        w /= nw
        if w @ v < 0:
            w = -w
        lam = float(w @ B @ w)
        if np.linalg.norm(w - v) < tol or np.linalg.norm(project(B @ w) - lam * w) < tol * scale:
            return lam, w, it + 1
        v = w
    log.warning("power iteration did not converge in %d iterations", maxiter)
    return float(v @ B @ v), v, maxiter


def top_eigenpairs(B: np.ndarray, k: int = 2, tol: float = POWER_TOL,
                   maxiter: int = POWER_MAXITER) -> Tuple[np.ndarray, np.ndarray]:
    """Largest (algebraic) eigenpairs of a symmetric matrix by deflated power iteration.

    Deflation projects out the eigenvectors already found.  When the
    dominant remaining eigenvalue is negative the iteration is repeated on
    ``B`` shifted by its Gershgorin bound, which makes the algebraically
    largest eigenvalue dominant.
    """
    n = B.shape[0]
    rng = np.random.default_rng(12345)
    bound = float(np.abs(B).sum(axis=1).max()) if n else 0.0
    vals, vecs = [], []
    for _ in range(k):
        start = rng.standard_normal(n)
        lam, v, _ = _power_iteration(B, start, vecs, tol, maxiter)
        if lam < 0:
            _, v, _ = _power_iteration(B + bound * np.eye(n), start, vecs, tol, maxiter)
            lam = float(v @ B @ v)
        vals.append(lam)
        vecs.append(v)
    return np.array(vals), np.column_stack(vecs)


def classical_mds(d: np.ndarray, dims: int = 2) -> np.ndarray:
    """Torgerson scaling of a distance matrix into ``dims`` coordinates.

    Each axis is flipped so its largest-magnitude coordinate is positive.
    Axes with non-positive eigenvalues are returned as zeros.
    """
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if n < 3:
        raise MapError("classical MDS needs at least 3 points")
    if d.shape != (n, n):
        raise MapError("distance matrix must be square")
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (d ** 2) @ J
    B = (B + B.T) / 2
    if not np.any(B):
        return np.zeros((n, dims))
    vals, vecs = top_eigenpairs(B, dims)
    X = np.zeros((n, dims))
    for a in range(dims):
        if vals[a] <= 0:
            log.warning("eigenvalue %d is %.3g; axis %d collapsed to 0", a + 1, vals[a], a + 1)
            continue
        col = vecs[:, a] * math.sqrt(vals[a])
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            col = -col
        X[:, a] = col
    return X


def kruskal_stress(d: np.ndarray, X: np.ndarray) -> float:
    """Stress-1 of an embedding against the target distances."""
    diff = X[:, None, :] - X[None, :, :]
    e = np.sqrt((diff ** 2).sum(-1))
    iu = np.triu_indices(d.shape[0], 1)
    den = float((d[iu] ** 2).sum())
    return 0.0 if den == 0 else math.sqrt(float(((d[iu] - e[iu]) ** 2).sum()) / den)


@dataclass
class SemanticMap:
    """Usage points placed in the plane, with their per-language labels."""

    upids: List[str]
    verse_ids: List[str]
    xy: np.ndarray
    languages: List[str]
    labels: Dict[str, List[str]] = field(default_factory=dict)  # code -> label per point

    def __len__(self):
        return len(self.upids)


def build_map(upids, verse_ids, languages, labels: Dict[str, Sequence[str]]) -> SemanticMap:
    languages = list(languages)
    rows = [[labels[code][i] for code in languages] for i in range(len(upids))]
    d = hamming_matrix(rows)
    xy = classical_mds(d)
    return SemanticMap(list(upids), list(verse_ids), xy, languages,
                       {c: list(labels[c]) for c in languages})


def write_map(path, m: SemanticMap) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\t".join(["usage_point_id", "verse_id", "x", "y"] + m.languages) + "\n")
        for i, upid in enumerate(m.upids):
            cells = [upid, m.verse_ids[i], f"{m.xy[i, 0]:.12g}", f"{m.xy[i, 1]:.12g}"]
            cells += [m.labels[c][i] for c in m.languages]
            f.write("\t".join(cells) + "\n")


def read_map(path) -> SemanticMap:
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split("\t")
        if header[:4] != ["usage_point_id", "verse_id", "x", "y"]:
            raise MapError(f"{path}: not a map export")
        languages = header[4:]
        upids, vids, xy = [], [], []
        labels = {c: [] for c in languages}
        for line in f:
            cells = line.rstrip("\n").split("\t")
            upids.append(cells[0])
            vids.append(cells[1])
            xy.append((float(cells[2]), float(cells[3])))
            for c, lab in zip(languages, cells[4:]):
                labels[c].append(lab)
    return SemanticMap(upids, vids, np.array(xy).reshape(-1, 2), languages, labels)
