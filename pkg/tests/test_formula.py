import numpy as np
import pytest

import logitmargins as lm
from logitmargins.formula import (Factor, FormulaError, Linear, Power, build_design,
                                  parse_formula, substitute, substitute_matrix)
from oracles import ToyModel


def test_parse_basic():
    spec = parse_formula("top10 ~ C(univ) + jif + jif^2")
    assert spec.response == "top10"
    assert spec.terms == (Factor("univ"), Linear("jif"), Power("jif", 2))


def test_parse_whitespace_insignificant():
    a = parse_formula("y~C(g)+x+x^2")
    b = parse_formula("  y  ~  C( g )  +  x  + x ^ 2 ")
    assert a == b


def test_square_without_base_rejected():
    with pytest.raises(FormulaError, match="no bare"):
        parse_formula("top10 ~ jif^2")


def test_unsupported_exponent():
    with pytest.raises(FormulaError, match="unsupported exponent"):
        parse_formula("y ~ x + x^3")


def test_response_reuse_rejected():
    with pytest.raises(FormulaError, match="reused"):
        parse_formula("y ~ x + y")


def test_duplicate_term_rejected():
    with pytest.raises(FormulaError, match="duplicate"):
        parse_formula("y ~ x + x")


def test_syntax_error_carries_position():
    with pytest.raises(FormulaError) as exc:
        parse_formula("y ~ x + + z")
    assert exc.value.position == 8
    with pytest.raises(FormulaError) as exc:
        parse_formula("y ~ x ? z")
    assert exc.value.position == 6


def test_full_model_has_15_columns(corpus15k):
    cfg, ds = corpus15k
    spec = parse_formula(cfg.formula)
    assert len(spec.terms) == 9
    design = build_design(ds, spec)
    assert design.k == 15  # 1 + 3 + 2 + 3 + 6


def test_dummy_coding_and_squares(toy_ds):
    design = build_design(toy_ds, parse_formula("y ~ C(g) + x + x^2"))
    tm = design.term_map
    assert tm.labels == ("intercept", "g=b", "g=c", "x", "x^2")
    assert tm.reference["g"] == "a"
    # row 2 has g=c, x=2.0
    assert design.X[2].tolist() == [1.0, 0.0, 1.0, 2.0, 4.0]
    assert (design.X[:, 0] == 1.0).all()
    # per factor at most one indicator active
    assert (design.X[:, 1] + design.X[:, 2] <= 1.0).all()


def test_reference_override(toy_ds):
    design = build_design(toy_ds, parse_formula("y ~ C(g) + x"),
                          reference={"g": "c"})
    assert design.term_map.reference["g"] == "c"
    assert design.term_map.labels == ("intercept", "g=a", "g=b", "x")


def test_level_order_override(toy_ds):
    design = build_design(toy_ds, parse_formula("y ~ C(g) + x"),
                          levels={"g": ("c", "b", "a")})
    assert design.term_map.labels == ("intercept", "g=b", "g=a", "x")
    assert design.term_map.reference["g"] == "c"


def test_build_design_errors(toy_ds):
    with pytest.raises(lm.DataError, match="no column"):
        build_design(toy_ds, parse_formula("y ~ nope"))
    with pytest.raises(FormulaError, match="requires a categorical"):
        build_design(toy_ds, parse_formula("y ~ C(x)"))
    with pytest.raises(FormulaError, match="wrapped in C"):
        build_design(toy_ds, parse_formula("y ~ g"))
    single = lm.filter_levels(toy_ds, "g", ["a"])
    with pytest.raises(FormulaError, match="fewer than 2"):
        build_design(single, parse_formula("y ~ C(g) + x"))


def test_substitute_factor(toy_ds):
    design = build_design(toy_ds, parse_formula("y ~ C(g) + x + x^2"))
    tm = design.term_map
    row = design.X[1]  # g=b
    out = substitute(row, tm, "g", "a")
    assert out[1] == 0.0 and out[2] == 0.0          # reference: all indicators 0
    assert out[3] == row[3] and out[4] == row[4]    # x columns untouched
    assert substitute(row, tm, "g", "c").tolist()[1:3] == [0.0, 1.0]


def test_substitute_linked_square(toy_ds):
    design = build_design(toy_ds, parse_formula("y ~ C(g) + x + x^2"))
    out = substitute(design.X[0], design.term_map, "x", 10.0)
    assert out[3] == 10.0 and out[4] == 100.0
    assert out[1] == design.X[0][1] and out[2] == design.X[0][2]


def test_substitute_round_trip(toy_ds):
    design = build_design(toy_ds, parse_formula("y ~ C(g) + x + x^2"))
    tm = design.term_map
    row = design.X[5]
    back = substitute(substitute(row, tm, "x", 42.0), tm, "x", float(row[3]))
    assert np.array_equal(back, row)
    lv = "c" if row[2] == 1.0 else ("b" if row[1] == 1.0 else "a")
    back = substitute(substitute(row, tm, "g", "a"), tm, "g", lv)
    assert np.array_equal(back, row)


def test_substitute_contract_errors(toy_ds):
    design = build_design(toy_ds, parse_formula("y ~ C(g) + x"))
    tm = design.term_map
    with pytest.raises(KeyError):
        substitute(design.X[0], tm, "z", 1.0)
    with pytest.raises(KeyError):
        substitute(design.X[0], tm, "g", "unknown")
    with pytest.raises(ValueError):
        substitute(design.X[0], tm, "x", float("nan"))


def test_substitute_matrix_matches_rowwise(toy_ds):
    design = build_design(toy_ds, parse_formula("y ~ C(g) + x + x^2"))
    tm = design.term_map
    full = substitute_matrix(design.X, tm, "x", 3.5)
    for i in range(design.n):
        assert np.array_equal(full[i], substitute(design.X[i], tm, "x", 3.5))


def test_design_matches_naive_row_evaluator(toy_ds):
    design = build_design(toy_ds, parse_formula("y ~ C(g) + x + x^2"))
    g = toy_ds.column("g")
    oracle = ToyModel(
        factors={"g": ("b", "c")},
        continuous={"x": True},
        raw={"g": [g.levels[c] for c in g.codes],
             "x": list(toy_ds.column("x").values)},
    )
    for i in range(design.n):
        assert design.X[i].tolist() == oracle.row(i, {})


def test_term_map_serialization_round_trip(toy_ds):
    design = build_design(toy_ds, parse_formula("y ~ C(g) + x + x^2"))
    tm = design.term_map
    back = lm.TermMap.from_dict(tm.to_dict())
    assert back == tm
