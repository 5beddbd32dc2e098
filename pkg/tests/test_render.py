import numpy as np
import pytest

from typomap.aligner import NOMATCH
from typomap.kriging import GridSpec, krige_language
from typomap.render import RenderError, colors_for, legend_order, render_svg


def test_three_point_map():
    svg = render_svg(np.array([[0, 0], [1, 0], [0, 1]]), ["a", "b", NOMATCH])
    assert svg.count("<circle") == 3 + 3
    assert svg.startswith("<?xml")


def test_legend_order():
    assert legend_order(["ngram_10", NOMATCH, "ngram_2", "quepaucua"]) == ["quepaucua", "ngram_2", "ngram_10",
                                                                          NOMATCH]


def test_huichol_like_legend():
    labels = ["quepaucua", "ngram_1", "ngram_2", NOMATCH] * 3
    xy = np.random.default_rng(0).normal(size=(12, 2))
    svg = render_svg(xy, labels)
    legend = svg.split('<g class="legend"')[1]
    assert legend.count("<text") == 4
    assert colors_for(labels)[NOMATCH] != colors_for(labels)["ngram_1"]


def test_empty_map():
    with pytest.raises(RenderError):
        render_svg(np.zeros((0, 2)), [])


def test_deterministic_with_contours():
    rng = np.random.default_rng(2)
    xy = rng.normal(size=(20, 2))
    labels = ["a" if x > 0 else "b" for x in xy[:, 0]]
    contours = {s.label: s.contours for s in krige_language(xy, labels, GridSpec(30, 30))}
    one = render_svg(xy, labels, contours, title="WHEN - x")
    two = render_svg(xy.copy(), list(labels), contours, title="WHEN - x")
    assert one == two
    assert "<polyline" in one
