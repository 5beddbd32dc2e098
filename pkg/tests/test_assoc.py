import mpmath
import pytest
from hypothesis import given, strategies as st

from typomap.assoc import (ContingencyTable, Event, UndefinedAssociation, chi2_sf_1dof, chi_square, erfc,
                           score_units, table_for, write_report)


def oracle_chi2(a, b, c, d):
    # expected-count form, independent of the cross-product shortcut
    n = a + b + c + d
    obs = [[a, b], [c, d]]
    rows = [a + b, c + d]
    cols = [a + c, b + d]
    return sum((obs[i][j] - rows[i] * cols[j] / n) ** 2 / (rows[i] * cols[j] / n)
               for i in range(2) for j in range(2))


def test_perfect_association():
    chi2, p = chi_square(ContingencyTable(10, 0, 0, 10))
    assert chi2 == 20.0
    assert p == pytest.approx(7.744e-6, rel=1e-3)
    assert p == pytest.approx(float(mpmath.erfc(mpmath.sqrt(10))), rel=1e-12)


def test_independence():
    assert chi_square(ContingencyTable(5, 5, 5, 5)) == (0.0, 1.0)


def test_zero_marginal():
    with pytest.raises(UndefinedAssociation):
        chi_square(ContingencyTable(10, 0, 10, 0))


@given(st.integers(1, 500), st.integers(0, 500), st.integers(0, 500), st.integers(1, 500))
def test_chi2_matches_expected_count_formula(a, b, c, d):
    chi2, p = chi_square(ContingencyTable(a, b, c, d))
    ref = oracle_chi2(a, b, c, d)
    assert chi2 == pytest.approx(ref, rel=1e-9, abs=1e-12)
    assert 0.0 <= p <= 1.0


@given(st.floats(0, 30))
def test_erfc_against_mpmath(x):
    ref = float(mpmath.erfc(x))
    assert erfc(x) == pytest.approx(ref, rel=1e-12, abs=1e-300)


@given(st.floats(-5, 0))
def test_erfc_negative_argument(x):
    assert erfc(x) == pytest.approx(2 - float(mpmath.erfc(-x)), rel=1e-12)


def test_p_value_continuity_at_switch():
    # series and continued fraction meet at x = 2 (chi2 = 8)
    for x in (8 - 1e-9, 8.0, 8 + 1e-9):
        assert chi2_sf_1dof(x) == pytest.approx(float(mpmath.erfc(mpmath.sqrt(x / 2))), rel=1e-13)
    assert chi2_sf_1dof(40) == pytest.approx(2.539628589e-10, rel=1e-8)


@given(st.floats(0, 200), st.floats(0, 200))
def test_p_value_monotone(x, y):
    lo, hi = sorted((x, y))
    assert chi2_sf_1dof(lo) >= chi2_sf_1dof(hi)


def _events():
    ev = []
    for i in range(20):
        ev.append(Event(True, ("quepaucua",) if i < 18 else ("axüacu",)))
    for i in range(60):
        ev.append(Event(False, ("wa" + str(i % 7),) if i % 5 else ("quepaucua",) if i == 5 else ()))
    ev += [Event(False, ("axüacu",)), Event(False, ("maxüaca",))]
    return ev


def test_co_distributed_unit_has_max_chi2():
    ev = _events()
    units = sorted({w for e in ev for w in e.words})
    scores = score_units(ev, units, "token")
    best = max(scores, key=lambda s: s.chi2)
    assert best.unit == "quepaucua"
    # brute force over all candidates
    brute = {u: oracle_chi2(*[getattr(table_for(ev, u), k) for k in "abcd"]) for u in units
             if min(table_for(ev, u).marginals()) > 0}
    assert max(brute, key=brute.get) == "quepaucua"


def test_never_occurring_unit_skipped():
    scores = score_units(_events(), ["zz", "quepaucua"], "token")
    assert [s.unit for s in scores] == ["quepaucua"]


def test_empty_units():
    assert score_units(_events(), [], "token") == []


def test_substring_containment():
    ev = [Event(True, ("axüacu",)), Event(False, ("ta",))]
    t = score_units(ev, ["cu"], "substring")[0].table
    assert t.a == 1 and t.c == 0


words = st.text(alphabet="abcku", min_size=0, max_size=6)
events = st.lists(st.builds(Event, st.booleans(), st.lists(words, max_size=3).map(tuple)), min_size=1, max_size=40)


@given(events, st.lists(st.text(alphabet="abcku", min_size=1, max_size=3), min_size=1, max_size=6),
       st.sampled_from(["token", "substring"]))
def test_fast_counting_matches_brute_force(ev, units, counting):
    for s in score_units(ev, units, counting):
        assert s.table == table_for(ev, s.unit, counting)
        assert s.cooccurrence == s.table.a
        assert s.table.n == len(ev)


def test_report_format(tmp_path):
    write_report(tmp_path / "r.tsv", score_units(_events(), ["quepaucua"], "token"))
    lines = (tmp_path / "r.tsv").read_text().splitlines()
    assert lines[0] == "unit\ta\tb\tc\td\tchi2\tp"
    assert lines[1].startswith("quepaucua\t18\t2\t1\t61\t")
