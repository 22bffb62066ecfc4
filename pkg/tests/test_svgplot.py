import pytest

from logitmargins.svgplot import PlotError, PlotSpec, Series, nice_ticks, render


def series(name="s", n=5):
    xs = tuple(float(i) for i in range(n))
    est = tuple(0.2 + 0.1 * i for i in range(n))
    return Series(name=name, x=xs, estimate=est,
                  low=tuple(e - 0.05 for e in est),
                  high=tuple(e + 0.05 for e in est))


def test_render_is_deterministic():
    spec = PlotSpec("x", "y", (series(), series("t")))
    assert render(spec) == render(spec)


def test_render_contains_band_and_line():
    svg = render(PlotSpec("jif", "adjusted prediction", (series(),)))
    assert svg.startswith("<svg")
    assert 'viewBox="0 0 800 600"' in svg
    assert "<polygon" in svg and "<polyline" in svg
    assert 'fill-opacity="0.25"' in svg
    assert "jif" in svg


def test_band_must_bracket_estimate():
    with pytest.raises(PlotError, match="bracket"):
        Series("bad", (0.0, 1.0), (0.5, 0.5), (0.6, 0.4), (0.7, 0.7))


def test_unequal_lengths_rejected():
    with pytest.raises(PlotError, match="unequal"):
        Series("bad", (0.0, 1.0), (0.5,), (0.4, 0.4), (0.6, 0.6))


def test_empty_series_rejected():
    with pytest.raises(PlotError, match="empty"):
        Series("bad", (), (), (), ())
    with pytest.raises(PlotError, match="at least one"):
        PlotSpec("x", "y", ())


def test_legend_only_for_multiple_series():
    one = render(PlotSpec("x", "y", (series("alpha"),)))
    two = render(PlotSpec("x", "y", (series("alpha"), series("beta"))))
    assert "alpha" not in one
    assert "alpha" in two and "beta" in two


def test_nice_ticks_are_round():
    assert nice_ticks(0.0, 35.0) == [0.0, 10.0, 20.0, 30.0]
    assert nice_ticks(0.0, 1.0) == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    ticks = nice_ticks(1.0, 120.0)
    assert all(t % 25 == 0 for t in ticks)
