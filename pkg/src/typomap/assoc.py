"""Chi-square association between the pivot and target-side units."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

log = logging.getLogger(__name__)

P_EPSILON = 1e-10


class UndefinedAssociation(ValueError):
    pass


@dataclass(frozen=True)
class ContingencyTable:
    a: int  # pivot present, unit present
    b: int  # pivot present, unit absent
    c: int  # pivot absent, unit present
    d: int  # pivot absent, unit absent

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d

    def marginals(self):
        return (self.a + self.b, self.c + self.d, self.a + self.c, self.b + self.d)


@dataclass(frozen=True)
class AssociationScore:
    unit: str
    chi2: float
    p_value: float
    cooccurrence: int
    table: Optional[ContingencyTable] = None


_SQRT_PI = math.sqrt(math.pi)


def _erf_series(x: float) -> float:
    # erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (1*3*...*(2n+1)); all terms positive
    term = x
    total = x
    x2 = x * x
    n = 0
    while True:
        n += 1
        term *= 2.0 * x2 / (2 * n + 1)
        total += term
        if term <= total * 1e-17:
            break
    return 2.0 / _SQRT_PI * math.exp(-x2) * total


def _erfc_cf(x: float) -> float:
    # erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz
    tiny = 1e-300
    f = x
    c = x
    d = 0.0
    k = 0
    while True:
        k += 1
        a = k / 2.0
        d = x + a * d
        d = tiny if d == 0.0 else d
        c = x + a / c
        c = tiny if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16 or k > 5000:
            break
    return math.exp(-x * x) / _SQRT_PI / f


def erfc(x: float) -> float:
    """Complementary error function for x >= 0 (series below 2, continued fraction above)."""
    if x < 0:
        return 2.0 - erfc(-x)
    if x < 2.0:
        return 1.0 - _erf_series(x)
    return _erfc_cf(x)


def chi2_sf_1dof(chi2: float) -> float:
    """Survival function of the chi-square distribution with one degree of freedom."""
    if chi2 <= 0.0:
        return 1.0
    return min(1.0, erfc(math.sqrt(chi2 / 2.0)))


def chi_square(t: ContingencyTable) -> Tuple[float, float]:
    """Plain 2x2 chi-square (no continuity correction) and its p-value."""
    if min(t.a, t.b, t.c, t.d) < 0:
        raise UndefinedAssociation(f"negative count in {t}")
    m = t.marginals()
    if min(m) <= 0:
        raise UndefinedAssociation(f"zero marginal in {t}")
    num = t.n * float(t.a * t.d - t.b * t.c) ** 2
    chi2 = num / (float(m[0]) * m[1] * m[2] * m[3])
    return chi2, chi2_sf_1dof(chi2)


# -- usage-event counting ---------------------------------------------------

@dataclass(frozen=True)
class Event:
    """One source-side token occurrence with the target words standing for it.

    ``pivot`` marks pivot events.  ``words`` is empty when the source token is
    NULL-aligned.
    """
    pivot: bool
    words: Tuple[str, ...]


def _present(words, unit, counting):
    if counting == "token":
        return unit in words
    if counting == "substring":
        return any(unit in w for w in words)
    raise ValueError(f"unknown counting mode {counting!r}")


def table_for(events: Sequence[Event], unit: str, counting: str = "token") -> ContingencyTable:
    a = b = c = d = 0
    for ev in events:
        hit = _present(ev.words, unit, counting)
        if ev.pivot:
            if hit:
                a += 1
            else:
                b += 1
        elif hit:
            c += 1
        else:
            d += 1
    return ContingencyTable(a, b, c, d)


def _unit_counts(events, units, counting):
    """Return per-unit (pivot hits, non-pivot hits) with one pass over events."""
    units = list(units)
    hits = {u: [0, 0] for u in units}
    if counting == "token":
        for ev in events:
            slot = 0 if ev.pivot else 1
            for w in set(ev.words):
                h = hits.get(w)
                if h is not None:
                    h[slot] += 1
        return hits
    if counting != "substring":
        raise ValueError(f"unknown counting mode {counting!r}")
    lengths = sorted({len(u) for u in units})
    for ev in events:
        slot = 0 if ev.pivot else 1
        seen = set()
        for w in ev.words:
            for n in lengths:
                for i in range(len(w) - n + 1):
                    seen.add(w[i:i + n])
        for g in seen:
            h = hits.get(g)
            if h is not None:
                h[slot] += 1
    return hits


def score_units(events: Sequence[Event], units: Iterable[str], counting: str = "token") -> List[AssociationScore]:
    """Chi-square of every unit against the pivot over ``events``.

    Units whose table has a zero marginal are skipped and logged.
    """
    units = list(dict.fromkeys(units))
    if not units:
        return []
    n_pivot = sum(1 for ev in events if ev.pivot)
    n_other = len(events) - n_pivot
    hits = _unit_counts(events, units, counting)
    out = []
    for u in units:
        a, c = hits[u]
        t = ContingencyTable(a, n_pivot - a, c, n_other - c)
        try:
            chi2, p = chi_square(t)
        except UndefinedAssociation:
            log.debug("skipping %r: zero marginal %s", u, t)
            continue
        out.append(AssociationScore(u, chi2, p, a, t))
    return out


def write_report(path, scores: Sequence[AssociationScore]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("unit\ta\tb\tc\td\tchi2\tp\n")
        for s in scores:
            t = s.table
            f.write(f"{s.unit}\t{t.a}\t{t.b}\t{t.c}\t{t.d}\t{s.chi2!r}\t{s.p_value!r}\n")
