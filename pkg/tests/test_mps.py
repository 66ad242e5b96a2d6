from pathlib import Path

import numpy as np
import pytest

from mirlab.errors import ParseError, UnsupportedFeature
from mirlab.instances import random_tiny_mip, synthetic_base
from mirlab.model import to_standard_form
from mirlab.mps import parse_mps, parse_mps_text, write_mps

FIX = Path(__file__).parent / "fixtures"


def test_minimal_file():
    g = parse_mps(FIX / "minimal.mps")
    assert g.name == "MINIMAL"
    assert g.num_rows == 1 and g.num_cols == 1
    np.testing.assert_array_equal(g.A, [[2.0]])
    np.testing.assert_array_equal(g.obj, [-1.0])
    np.testing.assert_array_equal(g.rhs, [3.0])
    assert g.senses == ["L"]
    assert not g.integer[0]


def test_fixed_format_with_markers_and_bounds():
    g = parse_mps(FIX / "fixed_mixed.mps")
    assert g.col_names == ["X1", "X2", "Y1", "Y2", "B1"]
    assert g.row_names == ["C1", "C2", "C3"]
    assert g.senses == ["L", "G", "E"]
    np.testing.assert_array_equal(g.integer, [True, True, False, False, True])
    np.testing.assert_array_equal(g.A, [[1, 1, 0, 3, 0], [2, 0, 1, 0, -1], [0, 1, 0, 1, 0]])
    np.testing.assert_array_equal(g.rhs, [10.0, 1.0, 4.0])
    np.testing.assert_array_equal(g.obj, [1.0, -2.0, 0.5, 0.0, -1.0])
    np.testing.assert_array_equal(g.upper, [4.0, np.inf, 2.0, np.inf, 1.0])
    np.testing.assert_array_equal(g.lower, [0.0, 0.0, 2.0, 0.0, 0.0])


def test_bv_becomes_bound_row_on_conversion():
    text = (FIX / "fixed_mixed.mps").read_text().replace(" FX BND       Y1                  2.0\n", "")
    inst = to_standard_form(parse_mps_text(text))
    bound_rows = [r.bound_of for r in inst.row_meta if r.is_bound_row]
    # X1 <= 4 and B1 <= 1 (B1 is the third integer column)
    assert ("x", 0) in bound_rows and ("x", 2) in bound_rows
    j = [r.bound_of for r in inst.row_meta].index(("x", 2))
    assert inst.b[j] == 1.0


def test_free_format_and_maximize():
    g = parse_mps(FIX / "free_format.mps")
    assert g.name == "knap"
    np.testing.assert_array_equal(g.obj, [-1.0, -1.0])
    np.testing.assert_array_equal(g.integer, [True, True])
    assert g.upper[0] == 5.0 and np.isinf(g.upper[1])


def test_ranges_rejected_with_line():
    with pytest.raises(UnsupportedFeature) as exc:
        parse_mps(FIX / "ranges.mps")
    assert exc.value.line == 9
    assert "line 9" in str(exc.value)


def test_free_variable_rejected():
    with pytest.raises(UnsupportedFeature, match="free variable"):
        parse_mps(FIX / "free_var.mps")


def test_mi_then_lo_zero_is_accepted():
    text = (FIX / "free_var.mps").read_text().replace(" MI BND       X2\n", " MI BND       X2\n LO BND       X2  0.0\n")
    g = parse_mps_text(text)
    assert g.lower[1] == 0.0


@pytest.mark.parametrize(
    "text,line",
    [
        ("NAME x\nROWS\n N obj\n Q r1\nENDATA\n", 4),
        ("NAME x\nROWS\n N obj\n L r1\nCOLUMNS\n x1 r2 1.0\nENDATA\n", 6),
        ("NAME x\nROWS\n N obj\n L r1\nCOLUMNS\n x1 r1 abc\nENDATA\n", 6),
        ("NAME x\nBOGUS\nENDATA\n", 2),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ParseError) as exc:
        parse_mps_text(text)
    assert exc.value.line == line


def test_missing_endata_and_unreadable_file(tmp_path):
    with pytest.raises(ParseError):
        parse_mps_text("NAME x\nROWS\n N obj\n")
    with pytest.raises(ParseError):
        parse_mps(tmp_path / "missing.mps")


def test_write_then_parse_round_trip(tmp_path):
    for g in [synthetic_base(3), random_tiny_mip(np.random.default_rng(8))]:
        write_mps(g, tmp_path / "g.mps")
        back = parse_mps(tmp_path / "g.mps")
        np.testing.assert_array_equal(back.A, g.A)
        np.testing.assert_array_equal(back.obj, g.obj)
        np.testing.assert_array_equal(back.rhs, g.rhs)
        np.testing.assert_array_equal(back.upper, g.upper)
        np.testing.assert_array_equal(back.integer, g.integer)
        assert list(back.senses) == list(g.senses)
