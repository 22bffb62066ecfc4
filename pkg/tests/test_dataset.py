import numpy as np
import pytest

import logitmargins as lm
from logitmargins.dataset import CategoricalColumn, DataError

SCHEMA = [("top10", "binary"), ("univ", "categorical"), ("jif", "continuous")]


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_clean_file(tmp_path):
    p = write(tmp_path, "top10,univ,jif\n1,u1,2.5\n0,u2,1.0\n0,u1,4.0\n")
    ds = lm.load_csv(p, SCHEMA)
    assert ds.n_rows == 3
    assert ds.n_dropped == 0
    assert ds.column("univ").levels == ("u1", "u2")


def test_listwise_deletion(tmp_path):
    p = write(tmp_path, "top10,univ,jif\n1,u1,2.5\n0,u2,\n0,u1,NA\n1,u2,4.0\n")
    ds = lm.load_csv(p, SCHEMA)
    assert ds.n_rows == 2
    assert ds.n_dropped == 2


def test_invalid_binary_value(tmp_path):
    p = write(tmp_path, "top10,univ,jif\n2,u1,2.5\n")
    with pytest.raises(DataError, match="invalid binary"):
        lm.load_csv(p, SCHEMA)


def test_non_numeric_continuous(tmp_path):
    p = write(tmp_path, "top10,univ,jif\n1,u1,oops\n")
    with pytest.raises(DataError, match="non-numeric"):
        lm.load_csv(p, SCHEMA)


def test_missing_file(tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        lm.load_csv(tmp_path / "gone.csv", SCHEMA)


def test_header_must_cover_schema(tmp_path):
    p = write(tmp_path, "top10,jif\n1,2.0\n")
    with pytest.raises(DataError, match="missing column"):
        lm.load_csv(p, SCHEMA)


def test_empty_after_filtering(tmp_path):
    p = write(tmp_path, "top10,univ,jif\n1,u1,\n")
    with pytest.raises(DataError, match="no rows left"):
        lm.load_csv(p, SCHEMA)


def test_declared_levels_pin_order_and_reject_unknown(tmp_path):
    p = write(tmp_path, "top10,univ,jif\n1,u2,2.0\n0,u1,3.0\n")
    spec = [("top10", "binary"),
            lm.ColumnSpec("univ", "categorical", levels=("u1", "u2")),
            ("jif", "continuous")]
    ds = lm.load_csv(p, spec)
    assert ds.column("univ").levels == ("u1", "u2")
    bad = [("top10", "binary"),
           lm.ColumnSpec("univ", "categorical", levels=("u1",)),
           ("jif", "continuous")]
    with pytest.raises(DataError, match="unknown level"):
        lm.load_csv(p, bad)


def test_summarize_binary_percentage():
    from logitmargins.dataset import BinaryColumn
    ds = lm.Dataset("b", (BinaryColumn("y", np.array([1, 0, 0, 0, 1.0])),))
    row = lm.summarize(ds).rows[0]
    assert row.value == pytest.approx(40.0)


def test_summarize_continuous_moments():
    from logitmargins.dataset import ContinuousColumn
    ds = lm.Dataset("c", (ContinuousColumn("x", np.array([1.0, 2.0, 3.0])),))
    row = lm.summarize(ds).rows[0]
    assert (row.value, row.sd, row.vmin, row.vmax) == (2.0, 1.0, 1.0, 3.0)


def test_summarize_single_row_has_no_sd():
    from logitmargins.dataset import ContinuousColumn
    ds = lm.Dataset("c", (ContinuousColumn("x", np.array([4.2])),))
    assert lm.summarize(ds).rows[0].sd is None


def test_categorical_percentages_sum_to_100(toy_ds):
    table = lm.summarize(toy_ds)
    shares = [r.value for r in table.rows if r.variable == "g"]
    assert sum(shares) == pytest.approx(100.0, abs=0.1)


def test_summarize_permutation_invariant(toy_ds, tmp_path):
    perm = np.random.default_rng(5).permutation(toy_ds.n_rows)
    cols = []
    for c in toy_ds.columns:
        if isinstance(c, CategoricalColumn):
            cols.append(CategoricalColumn(c.name, c.levels, c.codes[perm].copy()))
        else:
            cols.append(type(c)(c.name, c.values[perm].copy()))
    shuffled = lm.Dataset("toy", tuple(cols))
    a = lm.summarize(toy_ds).rows
    b = lm.summarize(shuffled).rows
    for ra, rb in zip(a, b):
        assert ra.variable == rb.variable and ra.level == rb.level
        assert ra.value == pytest.approx(rb.value, abs=1e-12)


def test_csv_round_trip(toy_ds, tmp_path):
    p = tmp_path / "rt.csv"
    lm.to_csv(toy_ds, p)
    back = lm.load_csv(p, lm.schema_of(toy_ds), name="toy")
    assert back == toy_ds


def test_filter_levels(toy_ds):
    kept = lm.filter_levels(toy_ds, "g", ["a", "c"])
    assert kept.column("g").levels == ("a", "c")
    assert kept.n_rows == sum(1 for lv in toy_ds.column("g").codes if lv != 1)
    with pytest.raises(DataError, match="unknown level"):
        lm.filter_levels(toy_ds, "g", ["nope"])
    with pytest.raises(DataError, match="not categorical"):
        lm.filter_levels(toy_ds, "x", ["a"])


def test_sniff_schema(tmp_path):
    p = write(tmp_path, "y,g,x\n1,u1,2.5\n0,u2,1\n1,u1,NA\n")
    kinds = {s.name: s.kind for s in lm.sniff_schema(p)}
    assert kinds == {"y": "binary", "g": "categorical", "x": "continuous"}


def test_synthetic_university_shares_near_targets(corpus15k):
    # generator targets: 7.4 / 3.3 / 55.4 / 33.9 percent
    _, ds = corpus15k
    univ = ds.column("univ")
    targets = {"univ1": 7.4, "univ2": 3.3, "univ3": 55.4, "univ4": 33.9}
    for level, pct in targets.items():
        share = 100.0 * np.mean(univ.codes == univ.levels.index(level))
        assert abs(share - pct) <= 1.5, (level, share)
